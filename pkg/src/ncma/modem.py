"""BPSK / QPSK mapping, standard and symbol-splitting, plus the PNC bit mapping.

Constellations are unnormalized: BPSK in {+1, -1}, QPSK in {+-1 +-1j}.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .fec import as_bits


class Modulation(enum.Enum):
    BPSK = "bpsk"
    QPSK_STANDARD = "qpsk_standard"
    QPSK_SPLIT = "qpsk_split"

    @property
    def is_qpsk(self) -> bool:
        return self is not Modulation.BPSK

    @property
    def energy(self) -> float:
        return 2.0 if self.is_qpsk else 1.0


@dataclass(frozen=True)
class SymbolStream:
    symbols: np.ndarray
    scheme: Modulation

    def __len__(self) -> int:
        return self.symbols.shape[-1]


def _rail(bits: np.ndarray) -> np.ndarray:
    return 1.0 - 2.0 * bits


def bpsk_modulate(cw) -> np.ndarray:
    return _rail(as_bits(cw)).astype(np.complex128)


def qpsk_modulate_standard(cw) -> np.ndarray:
    """Odd codeword bits (1-based) to the in-phase rail, even bits to quadrature."""
    cw = as_bits(cw)
    if cw.shape[-1] % 2:
        raise ValueError("standard QPSK needs an even number of coded bits")
    return _rail(cw[..., 0::2]) + 1j * _rail(cw[..., 1::2])


def qpsk_modulate_split(cw_i, cw_q) -> np.ndarray:
    """Symbol-splitting QPSK: two independently coded half-packets on I and Q."""
    cw_i, cw_q = as_bits(cw_i), as_bits(cw_q)
    if cw_i.shape != cw_q.shape:
        raise ValueError(f"I/Q codewords differ in shape: {cw_i.shape} vs {cw_q.shape}")
    return _rail(cw_i) + 1j * _rail(cw_q)


def pnc_bpsk_map(xa, xb):
    """XOR bit carried by two antipodal symbols: (1 - xa*xb) / 2."""
    bit = np.rint((1 - np.real(np.asarray(xa) * np.asarray(xb))) / 2)
    return bit.astype(np.uint8) if np.ndim(bit) else int(bit)


def hard_demap(symbols, scheme: Modulation) -> np.ndarray:
    """Inverse of the modulators for noiseless symbols.

    BPSK gives one bit per symbol; standard QPSK gives the interleaved codeword;
    split QPSK gives an array stacked as ``(2, ..., n)`` holding (I bits, Q bits).
    """
    symbols = np.asarray(symbols)
    i_bits = (symbols.real < 0).astype(np.uint8)
    if scheme is Modulation.BPSK:
        return i_bits
    q_bits = (symbols.imag < 0).astype(np.uint8)
    if scheme is Modulation.QPSK_SPLIT:
        return np.stack([i_bits, q_bits])
    out = np.empty(symbols.shape[:-1] + (2 * symbols.shape[-1],), dtype=np.uint8)
    out[..., 0::2] = i_bits
    out[..., 1::2] = q_bits
    return out
