import pytest

from ncma.config import ConfigError, ScenarioConfig, config_from_dict, load_config, parse_mode
from ncma.phy import DecoderMode


def test_defaults():
    cfg = ScenarioConfig()
    assert cfg.L == {"A": 8, "B": 16, "C": 32}
    assert cfg.n_max("C") == 128


def test_yaml_roundtrip(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("mode: dr\nn_beacons: 50\nseed: 4\nsnr_db: {a: 8, b: 8, c: [9, 10]}\n"
                    "mac: {L: {A: 4}}\nphy: {payload_bits: 64, exact_llr: true, modulations: [bpsk, bpsk, qpsk]}\n")
    cfg = load_config(path)
    assert cfg.mode is DecoderMode.DR_NCMA
    assert cfg.snr_c_db == (9.0, 10.0)
    assert cfg.L == {"A": 4, "B": 16, "C": 32}
    assert cfg.payload_bits == 64 and cfg.exact_llr


@pytest.mark.parametrize("data", [
    {"bogus": 1},
    {"snr_db": {"d": 3}},
    {"phy": {"llr": 3}},
    {"mac": {"L": {"D": 3}}},
    {"n_beacons": 0},
    {"snr_db": {"c": []}},
    {"snr_db": {"a": float("inf")}},
    {"mode": "sr", "phy": {"modulations": ["bpsk", "bpsk", "bpsk"]}},
    {"mode": "ri_bpsk", "phy": {"modulations": ["bpsk", "bpsk", "qpsk_split"]}},
    {"phy": {"payload_bits": 12}},
    {"mac": {"L": {"C": 100}}},
    {"mode": "xyz"},
])
def test_rejects_bad_configs(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_parse_mode_aliases():
    assert parse_mode("SR_NCMA") is DecoderMode.SR_NCMA
    assert parse_mode("ri_qpsk") is DecoderMode.RATE_IDENTICAL_QPSK


def test_point_selects_one_snr():
    cfg = ScenarioConfig(snr_c_db=(8, 9, 10))
    assert cfg.point(9).snr_c_db == (9.0,)
