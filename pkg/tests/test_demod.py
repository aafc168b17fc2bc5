import numpy as np
import pytest

from ncma.channel import ChannelRealization, draw_realization, transmit
from ncma.demod import DecodeTarget, demod_stream, joint_constellation, llr_per_symbol
from ncma.modem import Modulation, SymbolStream, qpsk_modulate_split
from ncma.oracles import reference_llr
from ncma.phy import DecoderMode

B, QS, QP = Modulation.BPSK, Modulation.QPSK_STANDARD, Modulation.QPSK_SPLIT
SR = (B, B, QP)

GAINS = np.array([[1.0, 0.5j], [np.exp(1j * 0.7), -0.8], [0.6 * np.exp(-2j), 0.9j]])
REAL = ChannelRealization(GAINS, np.array([0.5, 0.5]))
Y = np.array([0.3 + 0.4j, -1.1 + 0.2j])

# frozen from the looped reference demodulator
FROZEN = {
    "A": (-3.210924437696425, -1.692609784075539),
    "B": (3.4028334205446216, 1.692609784075539),
    "C_I": (3.1968771652732695, 1.692609784075539),
    "C_Q": (4.331018959776515, 2.4917952960496788),
    "A^B": (-5.007477459469936, -2.570097813092854),
    "A^C_I": (-4.413541576474916, -2.5184694810612074),
}


@pytest.mark.parametrize("target", DecoderMode.SR_NCMA.bank[:6], ids=lambda t: t.label)
def test_frozen_llrs(target):
    exact, logmax = FROZEN[target.label]
    assert llr_per_symbol(*Y, REAL, target, SR, exact=True)[0] == pytest.approx(exact, rel=1e-12)
    assert llr_per_symbol(*Y, REAL, target, SR, exact=False)[0] == pytest.approx(logmax, rel=1e-12)


@pytest.mark.parametrize("mode", list(DecoderMode), ids=lambda m: m.value)
def test_matches_reference_for_every_bank(mode, rng):
    for _ in range(5):
        real = draw_realization(rng.uniform(0, 12, 3), rng, mode.modulations)
        y = rng.normal(size=2) + 1j * rng.normal(size=2)
        for target in mode.bank:
            for exact in (True, False):
                got = llr_per_symbol(y[0], y[1], real, target, mode.modulations, exact=exact)
                ref = reference_llr(y, real, target, mode.modulations, exact=exact)
                assert np.allclose(got, ref)


def test_constellation_sizes():
    assert len(joint_constellation((B, B, B))) == 8
    assert len(joint_constellation(SR)) == 16
    assert len(joint_constellation((QS, QS, QS))) == 64


def test_target_validation():
    with pytest.raises(ValueError):
        DecodeTarget((0, 0, 0))
    with pytest.raises(ValueError):
        DecodeTarget((1, 0, 0), "I")
    with pytest.raises(ValueError):
        DecodeTarget((1, 1), None)
    assert DecodeTarget((1, 0, 1), "Q").label == "A^C_Q"


def test_standard_qpsk_cannot_mix_with_bpsk():
    with pytest.raises(ValueError):
        joint_constellation((B, B, QS)).target_bits(DecodeTarget((1, 0, 1)))


def test_split_target_needs_component():
    with pytest.raises(ValueError):
        joint_constellation(SR).target_bits(DecodeTarget((0, 0, 1)))


def test_noiseless_signs_match_bits(rng):
    real = draw_realization([8, 8, 12], rng, SR)
    bits = rng.integers(0, 2, (4, 64), dtype=np.uint8)
    streams = [SymbolStream(1.0 - 2.0 * bits[0] + 0j, B), SymbolStream(1.0 - 2.0 * bits[1] + 0j, B),
               SymbolStream(qpsk_modulate_split(bits[2], bits[3]), QP)]
    rx = transmit(*streams, ChannelRealization(real.gains, np.zeros(2)), rng)
    rx = type(rx)(rx.y, real, rx.truth)  # decode with the nominal noise level
    for target in DecoderMode.SR_NCMA.bank:
        truth = np.zeros(64, dtype=np.uint8)
        for s in target.users():
            truth ^= bits[3] if (s == 2 and target.component == "Q") else bits[s if s < 2 else 2]
        for exact in (True, False):
            llr = demod_stream(rx, target, exact=exact)
            assert np.array_equal(llr < 0, truth.astype(bool))


def test_clip_bounds_llrs():
    real = ChannelRealization(GAINS * 30, np.array([1.0, 1.0]))
    y = (real.gains.T @ np.array([1, 1, 1 + 1j]))[:, None]
    rx_truth = (SymbolStream(np.ones(1, complex), B), SymbolStream(np.ones(1, complex), B),
                SymbolStream(np.array([1 + 1j]), QP))
    from ncma.channel import RxSlot
    llr = demod_stream(RxSlot(y, real, rx_truth), DecodeTarget((1, 0, 0)), clip=50.0)
    assert llr.max() == 50.0


def test_inactive_user_rejected():
    gains = GAINS.copy()
    gains[1] = 0
    from ncma.channel import RxSlot
    truth = (SymbolStream(np.ones(1, complex), B),) * 2 + (SymbolStream(np.array([1 + 1j]), QP),)
    with pytest.raises(ValueError):
        demod_stream(RxSlot(np.zeros((2, 1), complex), ChannelRealization(gains, np.ones(2)), truth),
                     DecodeTarget((0, 1, 0)))
