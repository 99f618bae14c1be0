"""Acceptance criteria AC1 to AC10.

Each test carries an ``acN`` marker; ``conftest.py`` folds the outcomes into
one PASS/FAIL line per criterion at the end of the run.
"""
import json
import time
from pathlib import Path

import numpy as np
import pytest

from bsmimo.antenna import C0, ETA0, self_impedance, sine_cosine_integrals, sine_integral
from bsmimo.capacity import ChannelConfig, bpsk_mutual_information, ideal_reference
from bsmimo.cli import main
from bsmimo.network import DIODE_STATE, LoadState, reduce_currents, reduce_loaded, state_pair
from bsmimo.optimizer import ReactanceGrid, evaluate_loads, optimize_band, subband_quantize
from bsmimo.pattern import basis_from_states, normalized_cross_correlation, power
from bsmimo.touchstone import read_touchstone, write_touchstone
from bsmimo.waveform import (PulseShape, TransitionProfile, multiplex_timeseries, oob_power_ratio,
                             psd_estimate, pulse_shape, random_streams, state_sequence, state_values,
                             unchanged_fraction)

from oracles import bpsk_awgn_capacity, ci_oracle, emf_oracle, full_system_solve, si_oracle

DATA = Path(__file__).parent / "data"
F0 = 1.95e9


# -- AC1: ideal-reference anchor -------------------------------------------------


@pytest.mark.ac1
def test_ac1_ideal_reference_10db_and_runtime():
    t0 = time.perf_counter()
    est = ideal_reference(ChannelConfig(10.0, n_channels=2000, n_noise=200, seed=0))
    elapsed = time.perf_counter() - t0
    print(f"AC1 ideal 10 dB: {est.bits_per_symbol:.4f} +- {est.std_error:.4f} b/s/Hz in {elapsed:.1f} s")
    assert abs(est.bits_per_symbol - 1.69) <= 0.10
    assert elapsed < 60.0


@pytest.mark.ac1
def test_ac1_ideal_reference_20db():
    est = ideal_reference(ChannelConfig(20.0, n_channels=2000, n_noise=200, seed=0))
    assert est.bits_per_symbol >= 1.95


# -- AC2: rank-one channel vs scalar quadrature -----------------------------------


@pytest.mark.ac2
@pytest.mark.parametrize("snr_db", [0, 5, 10, 15, 20])
def test_ac2_rank_one_scalar_oracle(snr_db):
    snr = 10 ** (snr_db / 10)
    ref = bpsk_awgn_capacity(snr)
    h = np.diag([np.sqrt(snr), 0.0])
    assert abs(bpsk_mutual_information(h, 1.0, 100_000, snr_db) - ref) < 0.01
    # a unitary on the receive side leaves circular noise unchanged
    u = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
    assert abs(bpsk_mutual_information(u @ h, 1.0, 100_000, snr_db + 50) - ref) < 0.01


# -- AC3: orthogonality suite -----------------------------------------------------


def _ortho_checks(net, f, state):
    sa, sb = state_pair(net, f, state)
    basis = basis_from_states(sa.pattern, sb.pattern)
    assert normalized_cross_correlation(basis) < 1e-10
    p_g1 = power(sa.pattern)
    assert abs(basis.p_b1 + basis.p_b2 - 2 * p_g1) <= 1e-12 * 2 * p_g1


@pytest.mark.ac3
@pytest.mark.parametrize("fi", [0, 5, 10, 15, 20])
def test_ac3_diode_fixture(default_net, fi):
    _ortho_checks(default_net, default_net.frequencies[fi], DIODE_STATE)


@pytest.mark.ac3
def test_ac3_random_reactive_pairs(default_net):
    rng = np.random.default_rng(303)
    for _ in range(20):
        x1, x2 = rng.uniform(-400, 400, 2)
        _ortho_checks(default_net, F0, LoadState.reactive(x1, x2))


# -- AC4: network reduction vs dense solve ----------------------------------------


def _random_passive_z(rng, n=3):
    a = rng.standard_normal((n, n))
    r = a @ a.T + 0.1 * np.eye(n)
    x = rng.standard_normal((n, n)) * 100
    return 50 * r + 1j * (x + x.T) / 2


@pytest.mark.ac4
def test_ac4_reduction_matches_full_solve():
    rng = np.random.default_rng(404)
    worst_i = worst_z = 0.0
    for _ in range(100):
        z = _random_passive_z(rng)
        loads = rng.uniform(0, 20, 2) + 1j * rng.uniform(-500, 500, 2)
        cur, z_in = reduce_currents(z, loads)
        i_ref, zin_ref = full_system_solve(z, loads)
        worst_i = max(worst_i, np.max(np.abs(cur - i_ref)) / np.max(np.abs(i_ref)))
        worst_z = max(worst_z, abs(z_in - zin_ref) / abs(zin_ref))
    assert worst_i <= 1e-12 and worst_z <= 1e-12


# -- AC5: power bookkeeping -------------------------------------------------------


@pytest.mark.ac5
def test_ac5_power_bookkeeping(default_net):
    worst = 0.0
    for f in default_net.frequencies:
        for state in (DIODE_STATE, DIODE_STATE.swapped(), LoadState.reactive(-40, 280)):
            sol = reduce_loaded(default_net, f, state)
            worst = max(worst, abs(sol.p_rad + sol.p_load + abs(sol.gamma) ** 2 - 1.0))
    assert worst <= 0.01


# -- AC6: optimizer properties ----------------------------------------------------

AC6_CFG = ChannelConfig(10.0, n_channels=400, n_noise=100, seed=6)
AC6_GRID = ReactanceGrid.uniform(-400, 400, 21)


@pytest.fixture(scope="module")
def ac6_band(default_net):
    return optimize_band(default_net, default_net.frequencies, AC6_GRID, AC6_CFG)


@pytest.mark.ac6
def test_ac6_swap_symmetry_and_diagonal(ac6_band):
    for r in ac6_band:
        assert np.array_equal(r.capacity_map, r.capacity_map.T, equal_nan=True)
        d, s = np.diag(r.capacity_map), np.diag(r.std_error_map)
        assert np.all(d <= 1.0 + 3 * s)


@pytest.mark.ac6
def test_ac6_dominates_fixed_load_curves(default_net, ac6_band):
    xs = AC6_GRID.x1_values
    fixed = [LoadState.reactive(xs[i], xs[j]) for i, j in [(0, 20), (3, 12), (9, 17), (15, 2)]]
    for r in ac6_band:
        for st in fixed:
            cap, _ = evaluate_loads(default_net, r.frequency, st, AC6_CFG)
            assert r.best.capacity >= cap
        cap, se = evaluate_loads(default_net, r.frequency, DIODE_STATE, AC6_CFG)
        assert r.best.capacity >= cap - 2 * se  # off-grid lossy fixture: noise-level slack


@pytest.mark.ac6
def test_ac6_subbands_monotone_and_k1_exhaustive(ac6_band):
    prev = -np.inf
    for k in range(1, 6):
        w = subband_quantize(ac6_band, k).worst_case_capacity
        assert w >= prev
        prev = w
    best = max(min(q.capacity_map[r.best.index] for q in ac6_band) for r in ac6_band)
    assert subband_quantize(ac6_band, 1).worst_case_capacity == best


def _span(freqs, ratio, level=0.8):
    """Widest contiguous f_high/f_low with ``ratio >= level`` (linear crossing interpolation)."""
    best = (1.0, None, None)
    ok = ratio >= level
    i = 0
    while i < len(freqs):
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(freqs) and ok[j + 1]:
            j += 1
        lo, hi = freqs[i], freqs[j]
        if i > 0:
            lo = np.interp(level, [ratio[i - 1], ratio[i]], [freqs[i - 1], freqs[i]])
        if j + 1 < len(freqs):
            hi = np.interp(level, [ratio[j + 1], ratio[j]], [freqs[j + 1], freqs[j]])
        if hi / lo > best[0]:
            best = (hi / lo, lo, hi)
        i = j + 1
    return best


@pytest.fixture(scope="module")
def ac6_span(ac6_band):
    ideal = ideal_reference(AC6_CFG).bits_per_symbol
    freqs = np.array([r.frequency for r in ac6_band])
    ratio = np.array([r.best.capacity for r in ac6_band]) / ideal
    return _span(freqs, ratio), ratio


@pytest.mark.ac6
def test_ac6_span_within_20pct_of_ideal(ac6_span):
    (span, lo, hi), ratio = ac6_span
    print(f"AC6 span with capacity >= 0.8 ideal: {span:.3f}:1 ({lo / 1e9:.4f}-{hi / 1e9:.4f} GHz)")
    print("AC6 ratio per frequency:", np.round(ratio, 3).tolist())
    assert span >= 1.5


@pytest.mark.ac6
def test_ac6_span_regression_fixture(ac6_span):
    """Achieved span of the default model must not regress below the recorded value."""
    (span, lo, hi), ratio = ac6_span
    path = DATA / "ac6_span.json"
    if not path.exists():
        DATA.mkdir(exist_ok=True)
        path.write_text(json.dumps({"span": span, "f_low_hz": lo, "f_high_hz": hi,
                                    "ratio": ratio.tolist(), "snr_db": AC6_CFG.snr_db,
                                    "n_channels": AC6_CFG.n_channels, "n_noise": AC6_CFG.n_noise,
                                    "seed": AC6_CFG.seed, "grid_n": AC6_GRID.shape[0]}, indent=1) + "\n")
    rec = json.loads(path.read_text())
    assert span >= rec["span"] - 1e-9


# -- AC7: state-preserving transitions --------------------------------------------


@pytest.mark.ac7
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ac7_unchanged_fraction(seed):
    s1, s2 = random_streams(100_000, seed)
    assert abs(unchanged_fraction(state_sequence(s1, s2)) - 0.5) <= 0.01


# -- AC8: spectrum ordering ---------------------------------------------------------


@pytest.fixture(scope="module")
def ac8_oob(default_net):
    shape = PulseShape(0.5, 16, 16)
    fs = 500e3 * shape.sps
    sa, sb = state_pair(default_net, F0, DIODE_STATE)
    pats = (sa.pattern, sb.pattern)
    d = (np.pi / 2, 0.0)
    s1, s2 = random_streams(1 << 14, 8)
    g2 = state_values(pats, d)[1]
    out = {"single": oob_power_ratio(psd_estimate(pulse_shape(s1, shape) * g2, fs), 500e3)}
    for r in (0.0, 0.1, 0.25, 0.5):
        y = multiplex_timeseries(s1, s2, pats, d, shape, TransitionProfile.ramp(r))
        out[r] = oob_power_ratio(psd_estimate(y, fs), 500e3)
    print("AC8 OOB dB:", {k: round(v, 2) for k, v in out.items()})
    return out


@pytest.mark.ac8
def test_ac8_rectangular_vs_single_state(ac8_oob):
    assert ac8_oob[0.0] >= ac8_oob["single"] + 10.0


@pytest.mark.ac8
def test_ac8_monotone_in_ramp(ac8_oob):
    seq = [ac8_oob[r] for r in (0.0, 0.1, 0.25, 0.5)]
    assert all(a > b for a, b in zip(seq, seq[1:]))


# -- AC9: special functions and dipole fixtures --------------------------------------


@pytest.mark.ac9
def test_ac9_si_ci():
    xs = np.concatenate([np.geomspace(1e-3, 1, 12), np.linspace(1.5, 80, 25)])
    si, ci = sine_cosine_integrals(xs)
    for x, a, b in zip(xs, si, ci):
        assert abs(a - si_oracle(x)) < 1e-10
        assert abs(b - ci_oracle(x)) < 1e-10
    assert sine_integral(-3.0) == pytest.approx(-si_oracle(3.0), abs=1e-10)


@pytest.mark.ac9
def test_ac9_half_wave_self_impedance():
    f = 1e9
    lam = C0 / f
    z = self_impedance(lam / 2, 1e-5 * lam, f)
    ref = emf_oracle(2 * np.pi, 1e-5, 0.25, 0.25, ETA0)
    assert abs(z - ref) <= 0.02 * abs(ref)
    assert abs(z - (73.1 + 42.5j)) <= 0.02 * abs(73.1 + 42.5j)


# -- AC10: reproducibility -----------------------------------------------------------

SMALL = {
    "seed": 2024,
    "antenna": {"analytic": {"n_freq": 3, "span": [0.9, 1.1]}},
    "grid": {"n_theta": 16, "n_phi": 32},
    "channel": {"snr_db": [10.0], "n_channels": 60, "n_noise": 20},
    "sweep": {"n": 5, "subbands": [1, 2]},
    "waveform": {"n_symbols": 2048, "sps": 8, "nperseg": 1024, "ramps": [0.0, 0.25]},
}


@pytest.mark.ac10
@pytest.mark.parametrize("cmd", ["model", "analyze", "capacity", "optimize", "spectrum"])
def test_ac10_cli_byte_identical(tmp_path, cmd):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SMALL))
    for out in ("a", "b"):
        assert main([cmd, "--config", str(cfg), "--out", str(tmp_path / out)]) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names and names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


@pytest.mark.ac10
def test_ac10_touchstone_ri_value_exact(tmp_path):
    rng = np.random.default_rng(10)
    f = np.sort(rng.uniform(1e8, 6e9, 9))
    s = (rng.standard_normal((9, 3, 3)) + 1j * rng.standard_normal((9, 3, 3))) / 3
    s[0, 0, 0] = 1 / 3 + 1e-300j
    s[1, 1, 2] = -5e-17 + 0.1j
    p = tmp_path / "x.s3p"
    write_touchstone(p, f, s, 50.0, fmt="RI")
    f2, s2, z = read_touchstone(p)
    assert np.array_equal(f2, f) and np.array_equal(s2, s) and z == 50.0
