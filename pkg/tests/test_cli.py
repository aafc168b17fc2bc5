from ncma.cli import FIG_SWEEP, main, preset_configs
from ncma.phy import DecoderMode


def test_presets():
    assert FIG_SWEEP[0] == 7.5 and FIG_SWEEP[-1] == 15.0
    fig7 = preset_configs("fig7")
    assert [c.mode for c in fig7] == [DecoderMode.DR_NCMA, DecoderMode.SR_NCMA]
    exp = preset_configs("exp")
    assert len(exp) == 4 and exp[0].n_beacons == 1000 and exp[0].snr_a_db == 8.0


def test_run_command(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("mode: sr\nn_beacons: 20\nsnr_db: {a: 8, b: 8, c: 12}\nphy: {payload_bits: 32}\n")
    out, trace = tmp_path / "r.csv", tmp_path / "t.csv"
    assert main(["--seed", "2", "run", "--config", str(cfg), "--out", str(out), "--trace", str(trace)]) == 0
    rows = out.read_text().splitlines()
    assert len(rows) == 13 and rows[1].endswith(",20,2")
    assert trace.read_text().startswith("slot,decoder,passed")
    assert "sr" in capsys.readouterr().out
    # global options also work after the subcommand
    assert main(["run", "--config", str(cfg), "--out", str(out), "--seed", "3"]) == 0
    assert out.read_text().splitlines()[1].endswith(",20,3")


def test_sweep_command(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--preset", "fig4", "--beacons", "10", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 1 + 2 * len(FIG_SWEEP) * 12


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("mode: sr\nwhatever: 1\n")
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_oracle_command(capsys):
    assert main(["oracle", "--seed", "5"]) == 0
    assert "PASS bridging_bruteforce: 2048/2048" in capsys.readouterr().out
