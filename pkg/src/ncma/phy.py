"""Per-slot PHY: packet framing per decoder mode, the MUD/PNC decoder bank, and
PHY-layer bridging by GF(2) elimination.

Every slot carries a fixed set of *unknowns*, the native packets the decoders
solve for. In symbol-splitting mode (SR) those are A, B, C_I and C_Q, each a
``payload_bits`` packet. In the other modes they are A, B and C, where a
standard-QPSK user's packet holds ``2 * payload_bits`` bits so that one QPSK
packet has the airtime of one BPSK packet.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fec
from .channel import RxSlot
from .demod import DEFAULT_LLR_CLIP, DecodeTarget, demod_batch
from .modem import Modulation, SymbolStream, bpsk_modulate, qpsk_modulate_split, qpsk_modulate_standard

log = logging.getLogger(__name__)

_B, _QS, _QP = Modulation.BPSK, Modulation.QPSK_STANDARD, Modulation.QPSK_SPLIT

# zero bits appended to a whole-QPSK packet so its symbol count matches a BPSK packet:
# 2K + 32 + PAD + 6 = 2 (K + 32 + 6)
QPSK_PAD_BITS = fec.CRC_BITS + fec.TAIL_BITS


def _t(coeffs, component=None) -> DecodeTarget:
    return DecodeTarget(tuple(coeffs), component)


_MUD3 = (_t((1, 0, 0)), _t((0, 1, 0)), _t((0, 0, 1)))
_PNC3 = (_t((1, 1, 0)), _t((1, 0, 1)), _t((0, 1, 1)), _t((1, 1, 1)))

_SR_BANK = (
    _t((1, 0, 0)), _t((0, 1, 0)), _t((0, 0, 1), "I"), _t((0, 0, 1), "Q"),
    _t((1, 1, 0)),
    _t((1, 0, 1), "I"), _t((1, 0, 1), "Q"),
    _t((0, 1, 1), "I"), _t((0, 1, 1), "Q"),
    _t((1, 1, 1), "I"), _t((1, 1, 1), "Q"),
)


class DecoderMode(enum.Enum):
    RATE_IDENTICAL_BPSK = "ri_bpsk"
    RATE_IDENTICAL_QPSK = "ri_qpsk"
    DR_NCMA = "dr"
    SR_NCMA = "sr"

    @property
    def modulations(self) -> tuple[Modulation, Modulation, Modulation]:
        return {
            DecoderMode.RATE_IDENTICAL_BPSK: (_B, _B, _B),
            DecoderMode.RATE_IDENTICAL_QPSK: (_QS, _QS, _QS),
            DecoderMode.DR_NCMA: (_B, _B, _QS),
            DecoderMode.SR_NCMA: (_B, _B, _QP),
        }[self]

    @property
    def bank(self) -> tuple[DecodeTarget, ...]:
        if self is DecoderMode.SR_NCMA:
            return _SR_BANK
        if self is DecoderMode.DR_NCMA:
            return _MUD3 + (_PNC3[0],)
        return _MUD3 + _PNC3

    @property
    def unknowns(self) -> tuple[str, ...]:
        return ("A", "B", "C_I", "C_Q") if self is DecoderMode.SR_NCMA else ("A", "B", "C")

    def unknown_user(self, j: int) -> int:
        return min(j, 2)

    def halves(self, j: int) -> int:
        """MAC half-packets carried by unknown j (2 for a whole standard-QPSK packet)."""
        return 2 if self.modulations[self.unknown_user(j)] is _QS else 1

    def coeff_mask(self, target: DecodeTarget) -> int:
        """Bitmask over this mode's unknowns; bit j set when unknown j is in the target."""
        a, b, c = target.coeffs
        mask = a | (b << 1)
        if c:
            mask |= 1 << (3 if target.component == "Q" else 2)
        return mask

    def payload_lengths(self, payload_bits: int) -> tuple[int, ...]:
        return tuple(payload_bits * self.halves(j) for j in range(len(self.unknowns)))


def mask_to_coeffs(mask: int, n: int) -> tuple[int, ...]:
    return tuple((mask >> j) & 1 for j in range(n))


def coeffs_to_mask(coeffs: Sequence[int]) -> int:
    return sum(int(c) << j for j, c in enumerate(coeffs))


def mask_label(mask: int, names: Sequence[str]) -> str:
    return "^".join(n for j, n in enumerate(names) if (mask >> j) & 1)


# ---------------------------------------------------------------------------
# transmit side

def frame_packet(payload: np.ndarray, whole_qpsk: bool) -> np.ndarray:
    """payload -> CRC-protected info bits (plus zero padding for whole-QPSK packets)."""
    info = fec.crc_attach(payload)
    if whole_qpsk:
        pad = np.zeros(info.shape[:-1] + (QPSK_PAD_BITS,), dtype=np.uint8)
        info = np.concatenate([info, pad], axis=-1)
    return info


def modulate_unknowns(payloads: Sequence[np.ndarray], mode: DecoderMode) -> list[np.ndarray]:
    """Per-user symbol arrays for one slot (or a batch) of unknown payloads."""
    mods = mode.modulations
    if mode is DecoderMode.SR_NCMA:
        a, b, ci, cq = (fec.conv_encode(frame_packet(p, False)) for p in payloads)
        return [bpsk_modulate(a), bpsk_modulate(b), qpsk_modulate_split(ci, cq)]
    out = []
    for p, m in zip(payloads, mods):
        cw = fec.conv_encode(frame_packet(p, m is _QS))
        out.append(qpsk_modulate_standard(cw) if m is _QS else bpsk_modulate(cw))
    return out


def symbol_streams(payloads: Sequence[np.ndarray], mode: DecoderMode) -> tuple[SymbolStream, ...]:
    return tuple(SymbolStream(x, m) for x, m in zip(modulate_unknowns(payloads, mode), mode.modulations))


# ---------------------------------------------------------------------------
# receive side

@dataclass(frozen=True)
class DecodedEquation:
    coeffs: tuple[int, ...]
    payload: np.ndarray = field(repr=False)
    slot: int = 0
    source: str = ""

    def __post_init__(self):
        if not any(self.coeffs):
            raise ValueError("an equation needs a nonzero coefficient")

    @property
    def mask(self) -> int:
        return coeffs_to_mask(self.coeffs)


@dataclass
class SlotOutcome:
    natives: dict[int, np.ndarray]
    unresolved: list[DecodedEquation]
    anomalies: list[DecodedEquation] = field(default_factory=list)


def unframe(info: np.ndarray, whole_qpsk: bool) -> tuple[np.ndarray, np.ndarray]:
    """Viterbi output -> (validity, payload). Validity needs a CRC match and zero padding."""
    if whole_qpsk:
        pad_ok = ~np.any(info[..., -QPSK_PAD_BITS:], axis=-1)
        info = info[..., :-QPSK_PAD_BITS]
    else:
        pad_ok = np.ones(info.shape[:-1], dtype=bool)
    ok = np.logical_and(fec.crc_check(info), pad_ok)
    return ok, info[..., : -fec.CRC_BITS]


def decode_bank_batch(y: np.ndarray, gains: np.ndarray, noise_var: np.ndarray, mode: DecoderMode,
                      targets: Sequence[DecodeTarget] | None = None, exact: bool = False,
                      clip: float | None = DEFAULT_LLR_CLIP) -> list[tuple[np.ndarray, np.ndarray]]:
    """Run every target over a batch of slots: y (B, 2, n), gains (B, 3, 2), noise_var (B, 2).

    Returns one ``(passed (B,), payload (B, len))`` pair per target.
    """
    targets = mode.bank if targets is None else targets
    llrs = demod_batch(y, gains, noise_var, mode.modulations, targets, exact=exact, clip=clip)
    out = []
    for target, llr in zip(targets, llrs):
        info = fec.viterbi_decode(llr)
        whole = any(mode.modulations[s] is _QS for s in target.users())
        out.append(unframe(info, whole))
    return out


def run_decoder_bank(rx: RxSlot, mode: DecoderMode, slot: int = 0, exact: bool = False,
                     clip: float | None = DEFAULT_LLR_CLIP) -> list[DecodedEquation]:
    if rx.truth and rx.modulations != mode.modulations:
        raise ValueError(f"slot modulations {rx.modulations} do not match mode {mode.value}")
    n = len(mode.unknowns)
    results = decode_bank_batch(rx.y[None], rx.realization.gains[None], rx.realization.noise_var[None],
                                mode, exact=exact, clip=clip)
    eqs = []
    for target, (ok, payload) in zip(mode.bank, results):
        if ok[0]:
            eqs.append(DecodedEquation(mask_to_coeffs(mode.coeff_mask(target), n), payload[0],
                                       slot=slot, source=target.label))
    return eqs


def phy_bridge(eqs: Sequence[DecodedEquation]) -> SlotOutcome:
    """GF(2) elimination over one slot's equations, XORing payloads in lockstep.

    Rows are kept in fully reduced echelon form, so an unknown is recoverable
    exactly when some row is its unit vector. Remaining rows come back as
    unresolved equations with every recovered native already removed.
    """
    if not eqs:
        return SlotOutcome({}, [])
    n = len(eqs[0].coeffs)
    slot = eqs[0].slot
    seen: dict[int, np.ndarray] = {}
    basis: dict[int, list] = {}  # pivot -> [mask, payload, sources]
    anomalies = []
    for eq in eqs:
        if eq.slot != slot or len(eq.coeffs) != n:
            raise ValueError("phy_bridge needs equations from one slot over the same unknowns")
        mask, payload = eq.mask, np.asarray(eq.payload)
        if mask in seen:
            if not np.array_equal(seen[mask], payload):
                log.warning("slot %d: conflicting payloads for %s, dropping %s", slot, eq.coeffs, eq.source)
                anomalies.append(eq)
            continue
        seen[mask] = payload
        sources = [eq.source]
        for pivot, (bmask, bpay, bsrc) in basis.items():
            if (mask >> pivot) & 1:
                mask ^= bmask
                payload = payload ^ bpay
                sources = sources + bsrc
        if mask == 0:
            if np.any(payload):
                log.warning("slot %d: %s contradicts earlier equations, dropping it", slot, eq.source)
                anomalies.append(eq)
            continue
        pivot = (mask & -mask).bit_length() - 1
        for row in basis.values():
            if (row[0] >> pivot) & 1:
                row[0] ^= mask
                row[1] = row[1] ^ payload
                row[2] = row[2] + sources
        basis[pivot] = [mask, payload, sources]

    natives, unresolved = {}, []
    for pivot in sorted(basis):
        mask, payload, sources = basis[pivot]
        source = "+".join(dict.fromkeys(sources))
        if mask & (mask - 1) == 0:
            natives[pivot] = payload
        else:
            unresolved.append(DecodedEquation(mask_to_coeffs(mask, n), payload, slot=slot, source=source))
    return SlotOutcome(natives, unresolved, anomalies)
