"""Monte Carlo throughput harness.

A sweep point runs in two stages:

1. PHY: ``n_beacons`` slots go through modulation, the channel and the full
   decoder bank. Each slot draws its payloads, channel phases and noise from
   its own seeded stream, so results do not depend on batching or job count.
   The stage records which decoders passed their CRC.
2. MAC: the pass pattern is replayed three times (MUD decoders only; plus PNC
   with PHY bridging; plus MAC bridging). Every replay tracks real RS-coded
   message packets, so the three tiers share one channel history and differ
   only in what the receiver does with it.

Throughput per user is ``L_s * N_s / N_beacon`` in normalized BPSK packets per
slot, and the system throughput is the sum over users.
"""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .channel import USERS, RxSlot, complex_noise, draw_realization, slot_rng, transmit
from .config import ScenarioConfig
from .mac import Coord, EquationStore, Message, mac_bridge, rs_encode_all
from .phy import (DecodedEquation, DecoderMode, decode_bank_batch, mask_to_coeffs, modulate_unknowns, phy_bridge,
                  symbol_streams)

log = logging.getLogger(__name__)

TIERS = ("mud", "phy", "mac")
SERIES = ("A", "B", "C", "sys")
CSV_HEADER = ("mode", "snr_a_db", "snr_b_db", "snr_c_db", "tier", "series", "throughput",
              "ci_low", "ci_high", "n_beacons", "seed")
CI_LEVEL = 0.95


@dataclass
class PhyTrace:
    labels: tuple[str, ...]
    masks: tuple[int, ...]
    passed: np.ndarray  # (n_slots, n_targets) bool
    undetected: int = 0

    def pass_rates(self) -> dict[str, float]:
        return {lab: float(r) for lab, r in zip(self.labels, self.passed.mean(axis=0))}


def _chunk_size(mode: DecoderMode) -> int:
    return 64 if mode is DecoderMode.RATE_IDENTICAL_QPSK else 256


def draw_slot(cfg: ScenarioConfig, snr_c: float, slot: int) -> tuple[list[np.ndarray], RxSlot]:
    """One slot's payloads and received samples, drawn exactly as ``simulate_phy`` does."""
    mode = cfg.mode
    rng = slot_rng(cfg.seed, slot)
    payloads = [rng.integers(0, 2, n, dtype=np.uint8) for n in mode.payload_lengths(cfg.payload_bits)]
    real = draw_realization((cfg.snr_a_db, cfg.snr_b_db, snr_c), rng, mode.modulations, cfg.noise_var)
    streams = symbol_streams(payloads, mode)
    return payloads, transmit(*streams, real, rng)


def simulate_phy(cfg: ScenarioConfig, snr_c: float, slots: range | None = None) -> PhyTrace:
    mode = cfg.mode
    slots = range(cfg.n_beacons) if slots is None else slots
    snrs = (cfg.snr_a_db, cfg.snr_b_db, snr_c)
    lens = mode.payload_lengths(cfg.payload_bits)
    bank = mode.bank
    masks = tuple(mode.coeff_mask(t) for t in bank)
    passed = np.zeros((len(slots), len(bank)), dtype=bool)
    undetected = 0
    step = _chunk_size(mode)
    for lo in range(0, len(slots), step):
        chunk = slots[lo: lo + step]
        rngs = [slot_rng(cfg.seed, s) for s in chunk]
        payloads = [np.stack([r.integers(0, 2, n, dtype=np.uint8) for r in rngs]) for n in lens]
        reals = [draw_realization(snrs, r, mode.modulations, cfg.noise_var) for r in rngs]
        x = np.stack(modulate_unknowns(payloads, mode), axis=1)  # (B, 3, n)
        gains = np.stack([r.gains for r in reals])
        noise = np.stack([r.noise_var for r in reals])
        y = np.einsum("bsr,bsn->brn", gains, x)
        y += np.stack([complex_noise(r, re.noise_var, x.shape[2]) for r, re in zip(rngs, reals)])
        results = decode_bank_batch(y, gains, noise, mode, exact=cfg.exact_llr, clip=cfg.llr_clip)
        for t, (mask, (ok, decoded)) in enumerate(zip(masks, results)):
            truth = np.zeros_like(decoded)
            for j, p in enumerate(payloads):
                if (mask >> j) & 1:
                    truth ^= p
            correct = np.all(decoded == truth, axis=1)
            undetected += int(np.sum(ok & ~correct))
            passed[lo: lo + len(chunk), t] = ok & correct
    if undetected:
        log.warning("%d CRC-passing decodes carried wrong payloads", undetected)
    return PhyTrace(tuple(t.label for t in bank), masks, passed, undetected)


def message_content(cfg: ScenarioConfig, user: str, msg_id: int) -> Message:
    L = cfg.L[user]
    rng = np.random.default_rng([cfg.seed, USERS.index(user), msg_id, 0x4D5347])
    data = rng.integers(0, 256, L * cfg.payload_bits // 8, dtype=np.uint8).tobytes()
    return Message(user, msg_id, data, L)


@dataclass
class TierResult:
    decoded: np.ndarray  # (3 users, n_batches) messages decoded per batch
    lost: np.ndarray  # (3,) messages abandoned
    integrity_errors: int = 0
    stored_peak: int = 0


def _slot_coords(mode: DecoderMode, msg_ids: dict, slot_in_msg: dict) -> tuple[Coord, ...]:
    coords = []
    for j in range(len(mode.unknowns)):
        u = USERS[mode.unknown_user(j)]
        k = slot_in_msg[u] + 1
        if mode is DecoderMode.SR_NCMA and j >= 2:
            idx = (2 * k - 1,) if j == 2 else (2 * k,)
        elif mode.halves(j) == 2:
            idx = (2 * k - 1, 2 * k)
        else:
            idx = (k,)
        coords.append(Coord(u, msg_ids[u], idx))
    return tuple(coords)


def replay_mac(cfg: ScenarioConfig, trace: PhyTrace, tier: str) -> TierResult:
    if tier not in TIERS:
        raise ValueError(f"unknown tier {tier!r}")
    mode = cfg.mode
    n_slots = trace.passed.shape[0]
    n_unknowns = len(mode.unknowns)
    use = [t for t, m in enumerate(trace.masks) if tier != "mud" or m & (m - 1) == 0]
    halves = {u: (2 if m.is_qpsk else 1) for u, m in zip(USERS, mode.modulations)}
    edges = np.linspace(0, n_slots, cfg.n_batches + 1).astype(int)
    batch_of = np.searchsorted(edges, np.arange(n_slots), side="right") - 1

    store = EquationStore({u: (cfg.L[u], cfg.n_max(u)) for u in USERS})
    msg_ids = {u: 0 for u in USERS}
    slot_in_msg = {u: 0 for u in USERS}
    packets = {}
    truth = {}
    for u in USERS:
        store.start_message(u, 0)
        truth[u] = message_content(cfg, u, 0)
        packets[u] = rs_encode_all(truth[u], cfg.n_max(u))

    res = TierResult(np.zeros((3, cfg.n_batches), dtype=np.int64), np.zeros(3, dtype=np.int64))
    for slot in range(n_slots):
        coords = _slot_coords(mode, msg_ids, slot_in_msg)
        unknown_payload = [np.concatenate([packets[c.user][i - 1] for i in c.indices]) for c in coords]
        eqs = []
        for t in use:
            if not trace.passed[slot, t]:
                continue
            mask = trace.masks[t]
            payload = None
            for j in range(n_unknowns):
                if (mask >> j) & 1:
                    payload = unknown_payload[j] if payload is None else payload ^ unknown_payload[j]
            eqs.append(DecodedEquation(mask_to_coeffs(mask, n_unknowns), payload, slot, trace.labels[t]))
        outcome = phy_bridge(eqs)
        if tier == "mac":
            store.store(slot, coords, outcome.unresolved)
        n_logged = len(store.decoded_log)
        done = []
        for j, payload in outcome.natives.items():
            done.extend(store.deliver_unknown(coords[j], payload)[1])
        if tier == "mac":
            for msg in done:
                mac_bridge(store, msg)
            res.stored_peak = max(res.stored_peak, store.n_equations())

        for msg in store.decoded_log[n_logged:]:
            s = USERS.index(msg.user)
            res.decoded[s, batch_of[slot]] += 1
            if msg.data != message_content(cfg, msg.user, msg.msg_id).data:
                res.integrity_errors += 1

        for s, u in enumerate(USERS):
            slot_in_msg[u] += 1
            finished = msg_ids[u] in store.users[u].decoded
            if not finished and slot_in_msg[u] * halves[u] >= cfg.n_max(u):
                res.lost[s] += 1
                store.purge(u, msg_ids[u])
                finished = True
            if finished:
                msg_ids[u] += 1
                slot_in_msg[u] = 0
                store.start_message(u, msg_ids[u])
                truth[u] = message_content(cfg, u, msg_ids[u])
                packets[u] = rs_encode_all(truth[u], cfg.n_max(u))
    if res.integrity_errors:
        log.error("%d decoded messages differ from what was sent", res.integrity_errors)
    return res


@dataclass
class ThroughputRecord:
    mode: DecoderMode
    snr_a_db: float
    snr_b_db: float
    snr_c_db: float
    n_beacons: int
    seed: int
    throughput: dict[str, dict[str, float]]
    ci: dict[str, dict[str, tuple[float, float]]]
    decoded: dict[str, dict[str, int]]
    lost: dict[str, dict[str, int]]
    pass_rates: dict[str, float] = field(default_factory=dict)
    undetected: int = 0
    integrity_errors: int = 0

    @property
    def breakdown(self) -> dict[str, float]:
        return {"mud_only": self.throughput["mud"]["sys"],
                "plus_phy_bridge": self.throughput["phy"]["sys"],
                "plus_mac_bridge": self.throughput["mac"]["sys"]}


def _batch_ci(per_batch: np.ndarray, level: float = CI_LEVEL) -> tuple[float, float]:
    n = per_batch.size
    mean = per_batch.mean()
    half = stats.t.ppf(0.5 + level / 2, n - 1) * per_batch.std(ddof=1) / np.sqrt(n)
    return float(mean - half), float(mean + half)


def summarize(cfg: ScenarioConfig, snr_c: float, trace: PhyTrace,
              tiers: dict[str, TierResult]) -> ThroughputRecord:
    n = trace.passed.shape[0]
    edges = np.linspace(0, n, cfg.n_batches + 1).astype(int)
    batch_len = np.diff(edges)
    L = np.array([cfg.L[u] for u in USERS], dtype=float)
    th, ci, dec, lost = {}, {}, {}, {}
    for tier, r in tiers.items():
        per_batch = L[:, None] * r.decoded / batch_len[None, :]
        totals = L * r.decoded.sum(axis=1) / n
        th[tier] = {u: float(totals[s]) for s, u in enumerate(USERS)}
        th[tier]["sys"] = float(totals.sum())
        ci[tier] = {u: _batch_ci(per_batch[s]) for s, u in enumerate(USERS)}
        ci[tier]["sys"] = _batch_ci(per_batch.sum(axis=0))
        dec[tier] = {u: int(r.decoded[s].sum()) for s, u in enumerate(USERS)}
        lost[tier] = {u: int(r.lost[s]) for s, u in enumerate(USERS)}
    return ThroughputRecord(cfg.mode, cfg.snr_a_db, cfg.snr_b_db, snr_c, n, cfg.seed, th, ci, dec, lost,
                            pass_rates=trace.pass_rates(), undetected=trace.undetected,
                            integrity_errors=sum(r.integrity_errors for r in tiers.values()))


def run_point(cfg: ScenarioConfig, snr_c: float) -> ThroughputRecord:
    trace = simulate_phy(cfg, snr_c)
    tiers = {tier: replay_mac(cfg, trace, tier) for tier in TIERS}
    rec = summarize(cfg, snr_c, trace, tiers)
    log.info("%s C=%.1f dB: sys %.3f / %.3f / %.3f", cfg.mode.value, snr_c,
             *(rec.throughput[t]["sys"] for t in TIERS))
    return rec


def _run_point_args(args):
    return run_point(*args)


def run_scenario(cfg: ScenarioConfig, jobs: int = 1) -> list[ThroughputRecord]:
    """One record per user-C SNR in the sweep, in sweep order."""
    work = [(cfg, snr_c) for snr_c in cfg.snr_c_db]
    return run_many(work, jobs)


def run_many(work: Sequence[tuple[ScenarioConfig, float]], jobs: int = 1) -> list[ThroughputRecord]:
    if jobs <= 1 or len(work) <= 1:
        return [run_point(c, s) for c, s in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_point_args, work))


def result_rows(records: Iterable[ThroughputRecord]) -> list[tuple]:
    rows = []
    for rec in records:
        for tier in TIERS:
            for series in SERIES:
                lo, hi = rec.ci[tier][series]
                rows.append((rec.mode.value, f"{rec.snr_a_db:g}", f"{rec.snr_b_db:g}", f"{rec.snr_c_db:g}",
                             tier, series, f"{rec.throughput[tier][series]:.6f}", f"{lo:.6f}", f"{hi:.6f}",
                             rec.n_beacons, rec.seed))
    return rows


def emit_results(records: Iterable[ThroughputRecord], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(result_rows(records))
    return path


def write_trace(trace: PhyTrace, path: str | Path, first_slot: int = 0) -> Path:
    """Per-slot decoder outcomes: ``slot,decoder,passed``."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("slot", "decoder", "passed"))
        for i, row in enumerate(trace.passed):
            for label, ok in zip(trace.labels, row):
                writer.writerow((first_slot + i + 1, label, int(ok)))
    return path
