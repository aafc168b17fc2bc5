import numpy as np
import pytest

from ncma.config import ScenarioConfig
from ncma.phy import DecoderMode
from ncma.sim import (CSV_HEADER, PhyTrace, TIERS, emit_results, replay_mac, run_point, run_scenario,
                      simulate_phy, summarize, write_trace)


def small(mode=DecoderMode.SR_NCMA, **kw):
    base = dict(mode=mode, snr_a_db=3, snr_b_db=3, snr_c_db=(5,), n_beacons=200, seed=3,
                L={"A": 2, "B": 4, "C": 8}, payload_bits=32)
    base.update(kw)
    return ScenarioConfig(**base)


def test_throughput_arithmetic():
    # N_s = 10 messages of L_s = 8 over 100 beacons
    trace = PhyTrace(("A",), (1,), np.zeros((100, 1), dtype=bool))
    decoded = np.zeros((3, 10), dtype=np.int64)
    decoded[0, :] = 1
    from ncma.sim import TierResult
    tiers = {t: TierResult(decoded, np.zeros(3, dtype=np.int64)) for t in TIERS}
    rec = summarize(small(n_beacons=100, L={"A": 8, "B": 4, "C": 8}), 5.0, trace, tiers)
    assert rec.throughput["mac"]["A"] == pytest.approx(0.8)
    assert rec.throughput["mac"]["sys"] == pytest.approx(0.8)
    assert rec.ci["mac"]["A"] == pytest.approx((0.8, 0.8))


def test_noiseless_limit_one_packet_per_slot():
    cfg = ScenarioConfig(mode=DecoderMode.RATE_IDENTICAL_BPSK, snr_a_db=30, snr_b_db=30, snr_c_db=(30,),
                         n_beacons=800, seed=1, payload_bits=32)
    rec = run_point(cfg, 30.0)
    for u in "ABC":
        assert rec.throughput["mac"][u] == pytest.approx(1.0)


@pytest.mark.parametrize("mode", list(DecoderMode), ids=lambda m: m.value)
def test_invariants(mode):
    rec = run_point(small(mode), 5.0)
    qpsk = mode.modulations[2].is_qpsk
    for tier in TIERS:
        th = rec.throughput[tier]
        assert th["sys"] == pytest.approx(th["A"] + th["B"] + th["C"])
        assert th["C"] <= (2.0 if qpsk else 1.0)
        lo, hi = rec.ci[tier]["sys"]
        assert lo <= th["sys"] <= hi
    cap = {DecoderMode.RATE_IDENTICAL_BPSK: 3, DecoderMode.RATE_IDENTICAL_QPSK: 6}.get(mode, 4)
    assert rec.throughput["mac"]["sys"] <= cap
    b = rec.breakdown
    assert b["mud_only"] <= b["plus_phy_bridge"] <= b["plus_mac_bridge"]
    assert rec.integrity_errors == 0 and rec.undetected == 0


def test_bridging_helps_at_low_snr():
    rec = run_point(small(n_beacons=400), 5.0)
    b = rec.breakdown
    assert b["mud_only"] < b["plus_mac_bridge"]


def test_dr_quadrature_user_gets_no_bridging():
    rec = run_point(small(DecoderMode.DR_NCMA), 5.0)
    assert rec.throughput["mud"]["C"] == rec.throughput["mac"]["C"]


def test_messages_abandoned_when_hopeless():
    cfg = small(DecoderMode.RATE_IDENTICAL_BPSK, snr_a_db=-10, snr_b_db=-10, n_beacons=100)
    rec = run_point(cfg, -10.0)
    assert rec.throughput["mac"]["sys"] == 0
    assert rec.lost["mac"]["A"] == 100 // cfg.n_max("A")


def test_replay_rejects_unknown_tier():
    cfg = small(n_beacons=20)
    with pytest.raises(ValueError):
        replay_mac(cfg, simulate_phy(cfg, 5.0), "bogus")


def test_trace_is_independent_of_slot_range():
    cfg = small(n_beacons=60)
    whole = simulate_phy(cfg, 5.0)
    part = simulate_phy(cfg, 5.0, slots=range(20, 40))
    assert np.array_equal(whole.passed[20:40], part.passed)


def test_csv_schema_and_determinism(tmp_path):
    cfg = small(snr_c_db=(4, 6), n_beacons=60)
    a = emit_results(run_scenario(cfg), tmp_path / "a.csv")
    b = emit_results(run_scenario(cfg), tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 2 * 3 * 4
    assert lines[1].startswith("sr,3,3,4,mud,A,")


def test_parallel_matches_serial():
    cfg = small(snr_c_db=(4, 6), n_beacons=40)
    serial = run_scenario(cfg, jobs=1)
    parallel = run_scenario(cfg, jobs=2)
    assert [r.throughput for r in serial] == [r.throughput for r in parallel]


def test_empty_records_header_only(tmp_path):
    path = emit_results([], tmp_path / "e.csv")
    assert path.read_text() == ",".join(CSV_HEADER) + "\n"


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_results([], tmp_path / "missing" / "x.csv")


def test_trace_csv(tmp_path):
    cfg = small(n_beacons=10)
    path = write_trace(simulate_phy(cfg, 5.0), tmp_path / "t.csv")
    rows = path.read_text().splitlines()
    assert rows[0] == "slot,decoder,passed"
    assert len(rows) == 1 + 10 * 11
    assert rows[1].startswith("1,A,")
