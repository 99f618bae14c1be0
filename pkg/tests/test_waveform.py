import csv
import json

import numpy as np
import pytest
from scipy.signal import freqz

from bsmimo.network import DIODE_STATE, state_pair
from bsmimo.pattern import basis_from_states
from bsmimo.waveform import (STATE_I, STATE_II, PulseShape, TransitionProfile, multiplex_timeseries,
                             oob_power_ratio, psd_estimate, pulse_shape, random_streams, read_envelope,
                             rrc_taps, state_sequence, state_values, switching_events,
                             switching_waveform, unchanged_fraction, write_envelope, write_psd_csv)

RS = 500e3
SHAPE = PulseShape(0.5, 16, 16)
FS = RS * SHAPE.sps


@pytest.fixture(scope="module")
def states_pair(default_net):
    sa, sb = state_pair(default_net, 1.95e9, DIODE_STATE)
    return sa.pattern, sb.pattern


@pytest.mark.parametrize("beta", [0.0, 0.1, 0.25, 0.5, 1.0])
def test_taps_unit_energy_and_symmetric(beta):
    t = rrc_taps(PulseShape(beta, 8, 8))
    assert t.size == 8 * 8 + 1
    assert np.sum(t ** 2) == pytest.approx(1.0, abs=1e-9)
    assert np.array_equal(t, t[::-1])
    assert np.all(np.isfinite(t))


def test_beta_zero_is_sinc():
    t = rrc_taps(PulseShape(0.0, 8, 4))
    ref = np.sinc(np.arange(-16, 17) / 4)
    assert np.allclose(t, ref / np.sqrt(np.sum(ref ** 2)), rtol=0, atol=1e-15)


def test_singular_point_is_continuous():
    # beta = 0.25 puts the singular point t = 1/(4 beta) = 1 symbol on a sample
    sh = PulseShape(0.25, 4, 64)
    t = rrc_taps(sh)
    mid = t.size // 2
    at = t[mid + 64]
    neighbours = t[mid + 63], t[mid + 65]
    assert min(neighbours) - 1e-3 < at < max(neighbours) + 1e-3


def test_matched_cascade_isi():
    t = rrc_taps(SHAPE)
    c = np.convolve(t, t)
    mid = c.size // 2
    samples = c[mid % SHAPE.sps::SHAPE.sps]
    main = c[mid]
    isi = np.delete(samples, mid // SHAPE.sps)
    assert np.max(np.abs(isi)) < 1e-3 * main


def test_state_sequence_conventions():
    s = np.array([1, -1, 1, 1, -1.0])
    assert np.all(state_sequence(s, s) == STATE_II)
    assert np.all(state_sequence(s, -s) == STATE_I)
    assert list(state_sequence([1, 1], [-1, 1])) == [STATE_I, STATE_II]
    with pytest.raises(ValueError):
        state_sequence([1, 1], [1])
    with pytest.raises(ValueError):
        state_sequence([1, 0], [1, 1])


def test_unchanged_fraction_half():
    s1, s2 = random_streams(100_000, 5)
    assert abs(unchanged_fraction(state_sequence(s1, s2)) - 0.5) <= 0.01


def test_constant_state_envelope_is_scaled_rrc(states_pair):
    s1, _ = random_streams(2048, 1)
    d = (np.pi / 2, 0.3)
    y = multiplex_timeseries(s1, s1, states_pair, d, SHAPE)
    g2 = state_values(states_pair, d)[1]
    assert np.array_equal(y, pulse_shape(s1, SHAPE) * g2)
    a = psd_estimate(y, FS, 1024)
    b = psd_estimate(pulse_shape(s1, SHAPE), FS, 1024)
    assert np.allclose(a.psd_db, b.psd_db, atol=1e-9)


def test_data_transitions_without_switching(states_pair):
    s1, _ = random_streams(512, 2)
    states = state_sequence(s1, s1)
    assert switching_events(states) == 0
    g = switching_waveform(states, (1 + 1j, 2 - 1j), 16, TransitionProfile())
    assert np.all(g == 2 - 1j)


def test_switch_count_matches_transitions():
    s1, s2 = random_streams(300, 9)
    states = state_sequence(s1, s2)
    g = switching_waveform(states, (1.0, -1.0), 8, TransitionProfile())
    assert np.count_nonzero(np.diff(g)) == switching_events(states)
    # switching happens halfway between symbol centers
    jumps = np.nonzero(np.diff(g))[0] + 1
    assert np.all(jumps % 8 == 4)


def test_ramp_blends_between_states():
    states = np.array([STATE_I, STATE_II, STATE_II])
    g = switching_waveform(states, (0.0, 1.0), 16, TransitionProfile.ramp(0.5))
    seg = g[4:13].real  # boundary at sample 8, ramp spans samples 4..12
    assert np.all(np.diff(seg) >= 0)
    assert g[8] == pytest.approx(0.5)
    assert g[0] == 0 and g[16] == 1


def test_ramp_lowers_oob(states_pair):
    s1, s2 = random_streams(4096, 3)
    d = (np.pi / 2, 0.0)
    rect = multiplex_timeseries(s1, s2, states_pair, d, SHAPE, TransitionProfile())
    ramp = multiplex_timeseries(s1, s2, states_pair, d, SHAPE, TransitionProfile.ramp(0.25))
    o_rect = oob_power_ratio(psd_estimate(rect, FS), 500e3)
    o_ramp = oob_power_ratio(psd_estimate(ramp, FS), 500e3)
    assert o_ramp < o_rect


def test_basis_input_equivalent(states_pair):
    s1, s2 = random_streams(256, 4)
    d = (np.pi / 2, 1.0)
    a = multiplex_timeseries(s1, s2, states_pair, d, SHAPE)
    b = multiplex_timeseries(s1, s2, basis_from_states(*states_pair), d, SHAPE)
    assert np.allclose(a, b, rtol=1e-13, atol=1e-16)


def test_tone_peak():
    n = 1 << 15
    f0 = 37 * FS / 4096 + 100.0
    y = np.exp(2j * np.pi * f0 * np.arange(n) / FS)
    est = psd_estimate(y, FS)
    assert abs(est.freqs[np.argmax(est.psd_db)] - f0) <= FS / 4096
    assert np.max(est.psd_db) == 0.0


def test_in_band_tone_has_no_oob():
    n = 1 << 15
    f0 = 20 * FS / 4096  # bin-centred, so the Hann leakage stays in 3 bins
    y = np.exp(2j * np.pi * f0 * np.arange(n) / FS)
    assert oob_power_ratio(psd_estimate(y, FS), 500e3) == float("-inf")


def test_white_noise_flat():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(1 << 18) + 1j * rng.standard_normal(1 << 18)
    est = psd_estimate(y, FS, 1024)
    lin = 10 ** (est.psd_db / 10)
    rel = 10 * np.log10(lin / lin.mean())
    assert np.all(np.abs(rel) <= 1.5)


def test_psd_scale_covariance():
    s1, _ = random_streams(1024, 8)
    y = pulse_shape(s1, SHAPE)
    a, b = psd_estimate(y, FS, 1024), psd_estimate(3.0 * y, FS, 1024)
    assert np.allclose(a.psd_db, b.psd_db, atol=1e-12)
    assert 10 * np.log10(b.peak_density / a.peak_density) == pytest.approx(20 * np.log10(3.0), abs=1e-9)


def test_single_state_rrc_floor_40db():
    s1, _ = random_streams(1 << 14, 1)
    est = psd_estimate(pulse_shape(s1, SHAPE), FS)
    assert np.max(est.psd_db[np.abs(est.freqs) > 375e3]) <= -40.0


def test_single_state_psd_tracks_truncated_rrc_oracle():
    # exact spectrum of the span-16 taps: -40 dB is reached a little past the nominal edge
    taps = rrc_taps(SHAPE)
    w, h = freqz(taps, worN=np.linspace(0, np.pi, 40001))
    f = w / np.pi * FS / 2
    p = 20 * np.log10(np.abs(h) / np.abs(h).max())
    edge = f[np.argmax((f > 375e3) & (np.maximum.accumulate(p[::-1])[::-1] <= -40.0))]
    assert 375e3 < edge < 385e3
    s1, _ = random_streams(1 << 14, 1)
    est = psd_estimate(pulse_shape(s1, SHAPE), FS)
    assert np.max(est.psd_db[np.abs(est.freqs) > edge + 3 * est.rbw]) <= -40.0


def test_estimator_validation():
    with pytest.raises(ValueError):
        psd_estimate(np.ones(100), FS, 4096)
    est = psd_estimate(np.exp(1j * np.arange(8192)), FS)
    with pytest.raises(ValueError):
        oob_power_ratio(est, FS)


def test_profile_validation():
    with pytest.raises(ValueError):
        TransitionProfile("raised-cosine-ramp", 1.0)
    with pytest.raises(ValueError):
        TransitionProfile("rectangular", 0.1)
    with pytest.raises(ValueError):
        PulseShape(1.5)


def test_outputs(tmp_path):
    y = np.exp(1j * np.arange(4096) / 7.0)
    write_envelope(tmp_path / "env.bin", y, FS)
    raw = np.fromfile(tmp_path / "env.bin", dtype="<f8")
    assert raw[0] == y[0].real and raw[1] == y[0].imag
    back, fs = read_envelope(tmp_path / "env.bin")
    assert np.array_equal(back, y) and fs == FS
    meta = json.loads((tmp_path / "env.bin.json").read_text())
    assert meta["length"] == 4096
    est = psd_estimate(y, FS, 1024)
    write_psd_csv(tmp_path / "psd.csv", est)
    rows = list(csv.reader(open(tmp_path / "psd.csv")))
    assert rows[0] == ["freq_hz", "psd_db"] and len(rows) == 1025
