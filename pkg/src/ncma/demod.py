"""Soft demodulation of MUD and PNC targets over the joint three-user constellation.

Every LLR is computed by enumerating all transmit combinations
``(x_A, x_B, x_C)`` and comparing the received pair ``(y1, y2)`` against each
image ``sum_s h_{s,r} x_s``. The default path is the log-max approximation,
which only needs distances: ``LLR = min_{bit=1} d - min_{bit=0} d``. The exact
log-sum-exp form needs the noise variance and is kept as a reference.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .channel import USERS, ChannelRealization, RxSlot
from .modem import Modulation

DEFAULT_LLR_CLIP = 50.0
RAILS = ("I", "Q")


@dataclass(frozen=True)
class DecodeTarget:
    """Linear combination ``a*A + b*B + c*C`` the decoder aims at.

    ``component`` selects the rail ("I" or "Q") of symbol-split QPSK users.
    """

    coeffs: tuple[int, int, int]
    component: str | None = None
    label: str = ""

    def __post_init__(self):
        if len(self.coeffs) != 3 or any(c not in (0, 1) for c in self.coeffs):
            raise ValueError(f"coefficients must be three bits, got {self.coeffs}")
        if not any(self.coeffs):
            raise ValueError("a target needs at least one nonzero coefficient")
        if self.component not in (None, "I", "Q"):
            raise ValueError(f"bad component {self.component!r}")
        if self.component is not None and not self.coeffs[2]:
            raise ValueError("component only applies to targets involving user C")
        if not self.label:
            names = [u + (f"_{self.component}" if u == "C" and self.component else "")
                     for u, c in zip(USERS, self.coeffs) if c]
            object.__setattr__(self, "label", "^".join(names))

    def users(self) -> list[int]:
        return [s for s, c in enumerate(self.coeffs) if c]


def _rails_for(target: DecodeTarget, modulations: Sequence[Modulation]) -> tuple[str, ...]:
    """Which rail each involved user contributes, one tuple entry per output LLR."""
    kinds = {modulations[s] for s in target.users()}
    if Modulation.QPSK_STANDARD in kinds:
        if kinds != {Modulation.QPSK_STANDARD}:
            # bits on one index come from different generators: no linear PNC map
            raise ValueError(f"{target.label}: cannot combine standard QPSK with other schemes")
        if target.component is not None:
            raise ValueError(f"{target.label}: standard QPSK targets decode both rails")
        return RAILS
    if Modulation.QPSK_SPLIT in kinds:
        if target.component is None:
            raise ValueError(f"{target.label}: symbol-split targets need a component")
        return (target.component,)
    if target.component is not None:
        raise ValueError(f"{target.label}: component given but no QPSK user involved")
    return ("I",)


@dataclass(frozen=True)
class JointConstellation:
    """All transmit combinations for one modulation scenario.

    ``bits[p, s, r]`` is user s's coded bit on rail r at point p; BPSK users
    carry the same bit on both rails.
    """

    modulations: tuple[Modulation, ...]
    points: np.ndarray  # (P, 3) complex
    bits: np.ndarray  # (P, 3, 2) uint8

    def __len__(self) -> int:
        return self.points.shape[0]

    def target_bits(self, target: DecodeTarget) -> np.ndarray:
        """(P, n_rails) bit value of the target at every point."""
        rails = _rails_for(target, self.modulations)
        cols = []
        for rail in rails:
            r = RAILS.index(rail)
            acc = np.zeros(len(self), dtype=np.uint8)
            for s in target.users():
                acc ^= self.bits[:, s, r]
            cols.append(acc)
        return np.stack(cols, axis=1)


@lru_cache(maxsize=None)
def joint_constellation(modulations: tuple[Modulation, ...]) -> JointConstellation:
    per_user = []
    for m in modulations:
        if m.is_qpsk:
            per_user.append([((bi, bq), (1 - 2 * bi) + 1j * (1 - 2 * bq)) for bi in (0, 1) for bq in (0, 1)])
        else:
            per_user.append([((b, b), complex(1 - 2 * b)) for b in (0, 1)])
    combos = list(itertools.product(*per_user))
    points = np.array([[x for _, x in combo] for combo in combos], dtype=np.complex128)
    bits = np.array([[b for b, _ in combo] for combo in combos], dtype=np.uint8)
    return JointConstellation(modulations=tuple(modulations), points=points, bits=bits)


def _check_gains(gains: np.ndarray) -> None:
    if not np.any(np.abs(gains) > 0):
        raise ValueError("degenerate channel: all gains are zero")


def distances(y: np.ndarray, gains: np.ndarray, noise_var: np.ndarray,
              constellation: JointConstellation, weighted: bool) -> np.ndarray:
    """Squared distances from received samples to every constellation image.

    y: (..., 2, n); gains: (..., 3, 2); noise_var: (..., 2). Returns (..., n, P).
    Unweighted distances scale antenna r by mean(noise)/noise[r], which is 1
    when the antennas share a noise variance.
    """
    images = np.einsum("...sr,ps->...pr", gains, constellation.points)
    diff = y[..., None, :, :] - images[..., :, :, None]  # (..., P, 2, n)
    sq = diff.real ** 2 + diff.imag ** 2
    noise_var = np.asarray(noise_var, dtype=float)
    if weighted:
        w = 1.0 / noise_var
    else:
        w = noise_var.mean(axis=-1, keepdims=True) / noise_var
    d = np.einsum("...prn,...r->...np", sq, w)
    return d


def llrs_from_distances(d: np.ndarray, target_bits: np.ndarray, exact: bool) -> np.ndarray:
    """(..., n, P) distances and (P, R) target bits -> (..., n, R) LLRs."""
    out = []
    for r in range(target_bits.shape[1]):
        ones = target_bits[:, r].astype(bool)
        d0, d1 = d[..., ~ones], d[..., ones]
        if exact:
            out.append(logsumexp(-d0, axis=-1) - logsumexp(-d1, axis=-1))
        else:
            out.append(d1.min(axis=-1) - d0.min(axis=-1))
    return np.stack(out, axis=-1)


def llr_per_symbol(y1: complex, y2: complex, real: ChannelRealization, target: DecodeTarget,
                   modulations: Sequence[Modulation] = (Modulation.BPSK, Modulation.BPSK, Modulation.QPSK_SPLIT),
                   exact: bool = False) -> np.ndarray:
    """LLRs of one received sample pair, one value per rail the target spans."""
    _check_gains(real.gains)
    const = joint_constellation(tuple(modulations))
    y = np.array([[y1], [y2]], dtype=np.complex128)
    d = distances(y, real.gains, real.noise_var, const, weighted=exact)
    return llrs_from_distances(d, const.target_bits(target), exact)[0]


def _to_codeword_order(llr: np.ndarray) -> np.ndarray:
    # (..., n, R) -> (..., n*R); for two rails this interleaves I then Q per symbol
    return llr.reshape(llr.shape[:-2] + (-1,))


def demod_stream(rx: RxSlot, target: DecodeTarget, exact: bool = False,
                 clip: float | None = DEFAULT_LLR_CLIP) -> np.ndarray:
    modulations = rx.modulations
    for s in target.users():
        if not np.any(np.abs(rx.realization.gains[s]) > 0):
            raise ValueError(f"target {target.label} references inactive user {USERS[s]}")
    return demod_batch(rx.y, rx.realization.gains, rx.realization.noise_var, modulations,
                       [target], exact=exact, clip=clip)[0]


def demod_batch(y: np.ndarray, gains: np.ndarray, noise_var: np.ndarray,
                modulations: Sequence[Modulation], targets: Sequence[DecodeTarget],
                exact: bool = False, clip: float | None = DEFAULT_LLR_CLIP) -> list[np.ndarray]:
    """Codeword-ordered LLRs for several targets from the same received samples.

    Shapes: y (..., 2, n), gains (..., 3, 2), noise_var (..., 2). The distance
    table is shared across targets.
    """
    _check_gains(gains)
    const = joint_constellation(tuple(modulations))
    d = distances(y, gains, noise_var, const, weighted=exact)
    result = []
    for target in targets:
        llr = _to_codeword_order(llrs_from_distances(d, const.target_bits(target), exact))
        if clip is not None:
            llr = np.clip(llr, -clip, clip)
        result.append(llr)
    return result
