"""Three-user, two-antenna block-fading uplink with AWGN.

Gain magnitudes are fixed by the per-user SNR; phases are uniform on [0, 2pi)
and drawn independently per (user, antenna). SNR is per antenna and per
transmitted symbol, so a QPSK user (symbol energy 2) gets
``|h|**2 = snr * noise_var / 2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .modem import Modulation, SymbolStream

USERS = ("A", "B", "C")
N_ANTENNAS = 2


def db_to_linear(db) -> np.ndarray:
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def slot_rng(run_seed: int, slot: int) -> np.random.Generator:
    """Independent stream per slot so results do not depend on batching or job count."""
    return np.random.default_rng(np.random.SeedSequence([run_seed, slot]))


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray  # (3 users, 2 antennas) complex
    noise_var: np.ndarray  # (2,) per antenna

    def __post_init__(self):
        if self.gains.shape != (len(USERS), N_ANTENNAS):
            raise ValueError(f"gains must have shape (3, 2), got {self.gains.shape}")
        if np.shape(self.noise_var) != (N_ANTENNAS,):
            raise ValueError("noise_var must hold one variance per antenna")

    def snr_db(self, user: int, modulation: Modulation = Modulation.BPSK) -> np.ndarray:
        return 10 * np.log10(modulation.energy * np.abs(self.gains[user]) ** 2 / self.noise_var)


@dataclass(frozen=True)
class RxSlot:
    y: np.ndarray  # (2, n) received samples per antenna
    realization: ChannelRealization
    truth: tuple[SymbolStream, ...] = field(default=(), repr=False)

    @property
    def y1(self) -> np.ndarray:
        return self.y[0]

    @property
    def y2(self) -> np.ndarray:
        return self.y[1]

    @property
    def modulations(self) -> tuple[Modulation, ...]:
        return tuple(s.scheme for s in self.truth)


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def draw_realization(snrs_db: Sequence[float], rng_seed,
                     modulations: Sequence[Modulation] = (Modulation.BPSK,) * 3,
                     noise_var: float | Sequence[float] = 1.0) -> ChannelRealization:
    snrs_db = np.asarray(snrs_db, dtype=float)
    if snrs_db.shape != (len(USERS),) or not np.all(np.isfinite(snrs_db)):
        raise ValueError(f"need three finite SNRs, got {snrs_db}")
    noise = np.broadcast_to(np.asarray(noise_var, dtype=float), (N_ANTENNAS,)).copy()
    if np.any(noise <= 0):
        raise ValueError("noise variance must be positive")
    rng = _as_rng(rng_seed)
    energy = np.array([m.energy for m in modulations])
    mag = np.sqrt(db_to_linear(snrs_db)[:, None] * noise[None, :] / energy[:, None])
    phase = rng.uniform(0.0, 2 * np.pi, size=(len(USERS), N_ANTENNAS))
    return ChannelRealization(gains=mag * np.exp(1j * phase), noise_var=noise)


def complex_noise(rng: np.random.Generator, noise_var: np.ndarray, n: int) -> np.ndarray:
    """Circularly-symmetric Gaussian noise, shape (2, n), variance noise_var[r] per antenna."""
    scale = np.sqrt(np.asarray(noise_var, dtype=float) / 2.0)[:, None]
    return scale * (rng.standard_normal((N_ANTENNAS, n)) + 1j * rng.standard_normal((N_ANTENNAS, n)))


def transmit(xa: SymbolStream, xb: SymbolStream, xc: SymbolStream,
             real: ChannelRealization, rng) -> RxSlot:
    streams = (xa, xb, xc)
    lengths = {len(s) for s in streams}
    if len(lengths) != 1:
        raise ValueError(f"symbol streams must share one length, got {sorted(lengths)}")
    x = np.stack([np.asarray(s.symbols, dtype=np.complex128) for s in streams])
    y = real.gains.T @ x  # (2, 3) @ (3, n)
    y = y + complex_noise(_as_rng(rng), real.noise_var, x.shape[1])
    return RxSlot(y=y, realization=real, truth=streams)
