import numpy as np
import pytest

from ncma.channel import ChannelRealization, draw_realization, slot_rng, transmit
from ncma.modem import Modulation, SymbolStream

QPSK = Modulation.QPSK_SPLIT


def test_gain_magnitudes_follow_snr():
    real = draw_realization([7.0, 10.0, 15.0], 3, (Modulation.BPSK, Modulation.BPSK, QPSK), noise_var=0.5)
    assert np.allclose(real.snr_db(0), 7.0)
    assert np.allclose(real.snr_db(1), 10.0)
    assert np.allclose(real.snr_db(2, QPSK), 15.0)
    # the QPSK user's per-symbol energy is 2, so its gain is 3 dB below a BPSK user at equal SNR
    assert np.allclose(2 * np.abs(real.gains[2]) ** 2 / 0.5, 10 ** 1.5)


def test_phases_vary_across_seeds():
    a = draw_realization([7, 7, 7], 1).gains
    b = draw_realization([7, 7, 7], 2).gains
    assert not np.allclose(np.angle(a), np.angle(b))


@pytest.mark.parametrize("snrs", [[7, 7], [7, 7, np.inf], [7, np.nan, 1]])
def test_bad_snrs_rejected(snrs):
    with pytest.raises(ValueError):
        draw_realization(snrs, 0)


def test_nonpositive_noise_rejected():
    with pytest.raises(ValueError):
        draw_realization([7, 7, 7], 0, noise_var=0.0)


def test_noiseless_superposition():
    gains = np.array([[1, 1j], [2, -1], [0.5j, 0.5]])
    real = ChannelRealization(gains, np.zeros(2))
    xs = [SymbolStream(np.array([1, -1], dtype=complex), Modulation.BPSK),
          SymbolStream(np.array([-1, -1], dtype=complex), Modulation.BPSK),
          SymbolStream(np.array([1 + 1j, 1 - 1j]), QPSK)]
    rx = transmit(*xs, real, 0)
    expect = gains.T @ np.stack([x.symbols for x in xs])
    assert np.allclose(rx.y, expect)
    assert rx.modulations == (Modulation.BPSK, Modulation.BPSK, QPSK)


def test_noise_variance(rng):
    real = ChannelRealization(np.zeros((3, 2), dtype=complex), np.array([0.5, 2.0]))
    x = SymbolStream(np.zeros(200_000, dtype=complex), Modulation.BPSK)
    rx = transmit(x, x, x, real, rng)
    assert np.allclose(np.var(rx.y, axis=1), [0.5, 2.0], rtol=0.02)


def test_length_mismatch_rejected():
    real = draw_realization([7, 7, 7], 0)
    a = SymbolStream(np.ones(4, dtype=complex), Modulation.BPSK)
    b = SymbolStream(np.ones(5, dtype=complex), Modulation.BPSK)
    with pytest.raises(ValueError):
        transmit(a, a, b, real, 0)


def test_slot_streams_are_reproducible_and_distinct():
    assert slot_rng(5, 3).random() == slot_rng(5, 3).random()
    assert slot_rng(5, 3).random() != slot_rng(5, 4).random()
    assert slot_rng(5, 3).random() != slot_rng(6, 3).random()
