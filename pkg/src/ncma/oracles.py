"""Slow, independent reference implementations checked against the fast code.

Each oracle recomputes a result from first principles (exhaustive search,
bit-serial registers, scalar field arithmetic) and compares. A failure keeps
the smallest counterexample it found so the report can show it.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fec
from .channel import ChannelRealization, N_ANTENNAS, draw_realization
from .demod import DecodeTarget, llr_per_symbol
from .mac import Message, rs_decode, rs_encode
from .modem import Modulation
from .phy import DecodedEquation, DecoderMode, mask_to_coeffs, phy_bridge

Decoder = Callable[[np.ndarray], np.ndarray]


@dataclass
class OracleResult:
    name: str
    checked: int = 0
    mismatches: int = 0
    counterexample: str = ""
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.mismatches == 0 and self.checked > 0

    def fail(self, example: str) -> None:
        if not self.mismatches or len(example) < len(self.counterexample):
            self.counterexample = example
        self.mismatches += 1

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status} {self.name}: {self.checked - self.mismatches}/{self.checked} ({self.seconds:.2f}s)"
        if not self.passed and self.counterexample:
            text += f"\n    counterexample: {self.counterexample}"
        return text


@dataclass
class OracleReport:
    seed: int
    results: list[OracleResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failing(self) -> list[str]:
        return [r.name for r in self.results if not r.passed]

    def __getitem__(self, name: str) -> OracleResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def __str__(self) -> str:
        head = f"oracle suite, seed {self.seed}: {'PASS' if self.passed else 'FAIL'}"
        return "\n".join([head] + [r.line() for r in self.results])


def _bits(a) -> str:
    return "".join(str(int(b)) for b in np.ravel(a))


# ---------------------------------------------------------------------------
# convolutional code and CRC

def reference_encode(info) -> np.ndarray:
    """Bit-serial shift register encoder, one input at a time."""
    reg = [0] * fec.CONSTRAINT_LENGTH
    out = []
    for b in list(np.asarray(info, dtype=int)) + [0] * fec.TAIL_BITS:
        reg = [int(b)] + reg[:-1]
        for g in fec.GENERATORS:
            taps = [(g >> (fec.CONSTRAINT_LENGTH - 1 - d)) & 1 for d in range(fec.CONSTRAINT_LENGTH)]
            out.append(sum(t & r for t, r in zip(taps, reg)) % 2)
    return np.array(out, dtype=np.uint8)


def reference_crc(payload) -> np.ndarray:
    """Remainder of payload(x) * x^32 modulo the generator, by long division."""
    poly = [1] + [(fec.CRC32_POLY >> (31 - i)) & 1 for i in range(32)]
    work = list(np.asarray(payload, dtype=int)) + [0] * fec.CRC_BITS
    for i in range(len(work) - fec.CRC_BITS):
        if work[i]:
            for j, p in enumerate(poly):
                work[i + j] ^= p
    return np.array(work[-fec.CRC_BITS:], dtype=np.uint8)


def _path_metric(llrs: np.ndarray, codeword: np.ndarray) -> np.ndarray:
    return (llrs * (1.0 - 2.0 * codeword)).sum(axis=-1)


def oracle_viterbi_ml(rng: np.random.Generator, decoder: Decoder, trials: int = 60) -> OracleResult:
    """Viterbi output must reach the best metric found by enumerating every message."""
    res = OracleResult("viterbi_exhaustive_ml")
    for _ in range(trials):
        k = int(rng.integers(1, 11))
        msgs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8)
        book = fec.conv_encode(msgs)
        sent = msgs[rng.integers(len(msgs))]
        llrs = (1.0 - 2.0 * fec.conv_encode(sent)) * 2.0 + rng.normal(0, 2.0, book.shape[1])
        if rng.random() < 0.3:
            llrs = np.round(llrs)  # integer LLRs make ties possible
        metrics = _path_metric(llrs, book)
        got = decoder(llrs)
        res.checked += 1
        got_metric = _path_metric(llrs, fec.conv_encode(got))
        if got.shape != (k,) or got_metric < metrics.max() - 1e-9:
            res.fail(f"k={k} llrs={np.round(llrs, 2).tolist()} best={_bits(msgs[metrics.argmax()])} "
                     f"got={_bits(got)}")
    return res


def oracle_viterbi_ties(rng: np.random.Generator, decoder: Decoder) -> OracleResult:
    """All-zero LLRs must give the all-zero message; partially erased LLRs must
    still land on a maximum-metric message."""
    res = OracleResult("viterbi_tie_rule")
    for k in (1, 2, 5, 8, 16, 40, 64):
        got = decoder(np.zeros(2 * (k + fec.TAIL_BITS)))
        res.checked += 1
        if np.any(got):
            res.fail(f"zero LLRs, k={k} decoded to {_bits(got)}")
    # erase everything except the bits that single out one message: the
    # decoder must stay on the zero path wherever the LLRs carry no evidence
    for _ in range(20):
        k = int(rng.integers(2, 10))
        msg = rng.integers(0, 2, k, dtype=np.uint8)
        cw = fec.conv_encode(msg).astype(float)
        llrs = np.where(rng.random(cw.size) < 0.5, 0.0, 1.0 - 2.0 * cw)
        msgs = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.uint8)
        metrics = _path_metric(llrs, fec.conv_encode(msgs))
        best = np.flatnonzero(metrics >= metrics.max() - 1e-12)
        got = decoder(llrs)
        res.checked += 1
        if len(best) == 1 and not np.array_equal(got, msgs[best[0]]):
            res.fail(f"unique ML {_bits(msgs[best[0]])} but got {_bits(got)}")
        elif len(best) > 1 and not any(np.array_equal(got, msgs[b]) for b in best):
            res.fail(f"tied set {[_bits(msgs[b]) for b in best]} does not contain {_bits(got)}")
    return res


def oracle_encoder(rng: np.random.Generator) -> OracleResult:
    res = OracleResult("encoder_shift_register")
    impulse = reference_encode([1])
    res.checked += 1
    if not np.array_equal(fec.conv_encode([1]), impulse):
        res.fail(f"impulse {_bits(fec.conv_encode([1]))} != {_bits(impulse)}")
    for _ in range(50):
        msg = rng.integers(0, 2, int(rng.integers(1, 80)), dtype=np.uint8)
        res.checked += 1
        if not np.array_equal(fec.conv_encode(msg), reference_encode(msg)):
            res.fail(f"msg={_bits(msg)}")
    return res


def oracle_crc(rng: np.random.Generator) -> OracleResult:
    res = OracleResult("crc_long_division")
    for _ in range(60):
        payload = rng.integers(0, 2, int(rng.integers(1, 200)), dtype=np.uint8)
        res.checked += 1
        if not np.array_equal(fec.crc32_linear(payload), reference_crc(payload)):
            res.fail(f"payload={_bits(payload)}")
    return res


# ---------------------------------------------------------------------------
# demodulation

_SR_MODS = (Modulation.BPSK, Modulation.BPSK, Modulation.QPSK_SPLIT)


def reference_llr(y: np.ndarray, real: ChannelRealization, target: DecodeTarget,
                  modulations=_SR_MODS, exact: bool = True) -> np.ndarray:
    """Per-rail LLR by looping over every transmit combination in plain Python."""
    def symbols(m):
        if m is Modulation.BPSK:
            return [((b, b), complex(1 - 2 * b)) for b in (0, 1)]
        return [((bi, bq), complex(1 - 2 * bi, 1 - 2 * bq)) for bi in (0, 1) for bq in (0, 1)]

    rails = [0, 1] if Modulation.QPSK_STANDARD in [modulations[s] for s in target.users()] else \
        [0 if target.component in (None, "I") else 1]
    out = []
    for rail in rails:
        like = {0: [], 1: []}
        for combo in itertools.product(*(symbols(m) for m in modulations)):
            metric = 0.0
            for r in range(N_ANTENNAS):
                image = sum(real.gains[s, r] * combo[s][1] for s in range(3))
                w = 1.0 / real.noise_var[r] if exact else 1.0
                metric += w * abs(y[r] - image) ** 2
            bit = 0
            for s in target.users():
                bit ^= combo[s][0][rail]
            like[bit].append(-metric)
        if exact:
            out.append(_lse(like[0]) - _lse(like[1]))
        else:
            out.append(max(like[0]) - max(like[1]))
    return np.array(out)


def _lse(values) -> float:
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


def oracle_llr(rng: np.random.Generator, n: int = 40) -> OracleResult:
    """Vectorized LLRs against the loop reference, plus sign agreement with no noise."""
    res = OracleResult("llr_exact_and_logmax")
    bank = DecoderMode.SR_NCMA.bank
    for i in range(n):
        real = draw_realization(rng.uniform(0, 15, 3), rng, _SR_MODS)
        y = rng.normal(size=2) * 3 + 1j * rng.normal(size=2) * 3
        target = bank[i % len(bank)]
        for exact in (True, False):
            ref = reference_llr(y, real, target, exact=exact)
            got = llr_per_symbol(y[0], y[1], real, target, _SR_MODS, exact=exact)
            res.checked += 1
            if not np.allclose(got, ref, rtol=1e-9, atol=1e-9):
                res.fail(f"target={target.label} exact={exact} got={got} ref={ref}")
        # noiseless sample: both forms must agree in sign with the true bit
        bits = rng.integers(0, 2, (3, 2))
        x = np.array([1 - 2 * bits[0, 0], 1 - 2 * bits[1, 0], complex(1 - 2 * bits[2, 0], 1 - 2 * bits[2, 1])])
        y0 = real.gains.T @ x
        rail = 1 if target.component == "Q" else 0
        true_bit = 0
        for s in target.users():
            true_bit ^= int(bits[s, rail] if s == 2 else bits[s, 0])
        for exact in (True, False):
            llr = llr_per_symbol(y0[0], y0[1], real, target, _SR_MODS, exact=exact)[0]
            res.checked += 1
            if llr == 0 or (llr < 0) != bool(true_bit):
                res.fail(f"noiseless target={target.label} exact={exact} bit={true_bit} llr={llr}")
    return res


# ---------------------------------------------------------------------------
# bridging

def recoverable_by_search(masks: list[int], n: int) -> set[int]:
    """Unknowns whose unit vector is the XOR of some subset of the given masks."""
    span = {0}
    for m in masks:
        span |= {s ^ m for s in span}
    return {j for j in range(n) if (1 << j) in span}


def oracle_bridging(rng: np.random.Generator, payload_bits: int = 16) -> OracleResult:
    """Every subset of the 11 SR equations: phy_bridge recovers exactly what search finds."""
    res = OracleResult("bridging_bruteforce")
    mode = DecoderMode.SR_NCMA
    n = len(mode.unknowns)
    truth = rng.integers(0, 2, (n, payload_bits), dtype=np.uint8)
    masks = [mode.coeff_mask(t) for t in mode.bank]
    payloads = []
    for m in masks:
        p = np.zeros(payload_bits, dtype=np.uint8)
        for j in range(n):
            if (m >> j) & 1:
                p ^= truth[j]
        payloads.append(p)
    for subset in range(1 << len(masks)):
        chosen = [i for i in range(len(masks)) if (subset >> i) & 1]
        eqs = [DecodedEquation(mask_to_coeffs(masks[i], n), payloads[i], slot=0) for i in chosen]
        out = phy_bridge(eqs)
        expect = recoverable_by_search([masks[i] for i in chosen], n)
        res.checked += 1
        wrong = [j for j, p in out.natives.items() if not np.array_equal(p, truth[j])]
        if set(out.natives) != expect or wrong or out.anomalies:
            res.fail(f"subset={[mode.bank[i].label for i in chosen]} expected={sorted(expect)} "
                     f"got={sorted(out.natives)} wrong_payloads={wrong}")
    return res


# ---------------------------------------------------------------------------
# Reed-Solomon

def _gf_mul(a: int, b: int) -> int:
    r = 0
    while b:
        if b & 1:
            r ^= a
        a <<= 1
        if a & 0x100:
            a ^= 0x11D
        b >>= 1
    return r


def _gf_inv(a: int) -> int:
    r = 1
    for _ in range(254):
        r = _gf_mul(r, a)
    return r


def lagrange_eval(xs: list[int], ys: list[int], x: int) -> int:
    """Value at x of the polynomial through (xs, ys) over GF(256)."""
    total = 0
    for j, (xj, yj) in enumerate(zip(xs, ys)):
        num = den = 1
        for m, xm in enumerate(xs):
            if m != j:
                num = _gf_mul(num, x ^ xm)
                den = _gf_mul(den, xj ^ xm)
        total ^= _gf_mul(yj, _gf_mul(num, _gf_inv(den)))
    return total


def oracle_rs(rng: np.random.Generator, trials: int = 25) -> OracleResult:
    """Encode and decode against scalar Lagrange interpolation; packet i sits at x = i - 1."""
    res = OracleResult("rs_lagrange_solve")
    for _ in range(trials):
        L = int(rng.integers(1, 7))
        n_max = 2 * L + int(rng.integers(0, 4))
        width = int(rng.integers(1, 5))
        data = rng.integers(0, 256, L * width, dtype=np.uint8)
        msg = Message("A", 0, data.tobytes(), L)
        chunks = data.reshape(L, width)
        xs = list(range(L))
        for i in range(1, n_max + 1):
            ref = [lagrange_eval(xs, [int(v) for v in chunks[:, c]], i - 1) for c in range(width)]
            res.checked += 1
            if rs_encode(msg, i, n_max).tolist() != ref:
                res.fail(f"L={L} index={i} data={data.tolist()}")
        idx = sorted(rng.choice(np.arange(1, n_max + 1), L, replace=False).tolist())
        pk = {i: rs_encode(msg, i, n_max) for i in idx}
        ref_chunks = [[lagrange_eval([i - 1 for i in idx], [int(pk[i][c]) for i in idx], x)
                       for c in range(width)] for x in range(L)]
        got = rs_decode(pk, L, n_max)
        res.checked += 1
        if got is None or np.frombuffer(got.data, dtype=np.uint8).reshape(L, width).tolist() != ref_chunks:
            res.fail(f"L={L} n_max={n_max} indices={idx} data={data.tolist()}")
    return res


def oracle_suite(seed: int = 0, decoder: Decoder = fec.viterbi_decode) -> OracleReport:
    """Run every oracle; ``decoder`` can be swapped to check that faults are caught."""
    rng = np.random.default_rng(seed)
    report = OracleReport(seed)
    runs = [
        lambda: oracle_viterbi_ml(rng, decoder),
        lambda: oracle_viterbi_ties(rng, decoder),
        lambda: oracle_encoder(rng),
        lambda: oracle_crc(rng),
        lambda: oracle_llr(rng),
        lambda: oracle_bridging(rng),
        lambda: oracle_rs(rng),
    ]
    for run in runs:
        t0 = time.perf_counter()
        result = run()
        result.seconds = time.perf_counter() - t0
        report.results.append(result)
    return report
