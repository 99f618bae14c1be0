"""Time-domain view of the switched antenna.

Stream ``s1`` is pulse shaped and drives the antenna; the ratio ``s2/s1``
picks the load state for each symbol.  Seen from a fixed direction the
received envelope is ``y = x1(t) g(t)``, where ``g`` is the complex pattern
value of the current state.  Abrupt switching makes ``g`` a step function,
which spreads energy far outside the pulse-shaped band.

Sample ``i`` of an envelope sits at ``t = i / fs``; symbol ``n`` is centered
on sample ``n * sps`` and owns the half-open interval
``[n - 1/2, n + 1/2)`` symbol periods around it.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .pattern import BasisPair, VectorPattern

__all__ = [
    "STATE_I",
    "STATE_II",
    "PulseShape",
    "TransitionProfile",
    "SpectrumEstimate",
    "rrc_taps",
    "random_streams",
    "state_sequence",
    "unchanged_fraction",
    "switching_events",
    "pulse_shape",
    "state_values",
    "switching_waveform",
    "multiplex_timeseries",
    "psd_estimate",
    "oob_power_ratio",
    "write_psd_csv",
    "write_envelope",
    "read_envelope",
]

STATE_I = 1
STATE_II = 2

# relative out-of-band floor below which the ratio is reported as -inf
OOB_FLOOR = 1e-14


@dataclass(frozen=True)
class PulseShape:
    rolloff: float = 0.5
    span: int = 16
    sps: int = 16
    kind: str = "root-raised-cosine"

    def __post_init__(self):
        if self.kind != "root-raised-cosine":
            raise ValueError(f"unsupported pulse kind {self.kind!r}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must be in [0, 1]")
        if self.span < 1 or self.sps < 2 or self.sps % 2:
            raise ValueError("span must be >= 1 and sps an even integer >= 2")


@dataclass(frozen=True)
class TransitionProfile:
    """How the pattern moves from one state to the next.

    ``duration`` is given as a fraction of the symbol period; 0 means an
    instantaneous switch.  A ramp blends the two complex pattern values
    linearly with a raised-cosine weight centered on the symbol boundary.
    """

    kind: str = "rectangular"
    duration: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rectangular", "raised-cosine-ramp"):
            raise ValueError(f"unknown transition kind {self.kind!r}")
        if self.kind == "rectangular" and self.duration != 0.0:
            raise ValueError("rectangular transitions have zero duration")
        if not 0.0 <= self.duration < 1.0:
            raise ValueError("duration must be in [0, 1) symbol periods")

    @classmethod
    def ramp(cls, fraction: float) -> "TransitionProfile":
        if fraction == 0:
            return cls()
        return cls("raised-cosine-ramp", float(fraction))


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    """Two-sided PSD on baseband offsets, in dB relative to its peak.

    ``peak_density`` is the absolute peak (power per Hz) so the normalized
    curve can be mapped back to absolute level.
    """

    freqs: np.ndarray
    psd_db: np.ndarray
    rbw: float
    fs: float
    peak_density: float


def rrc_taps(shape: PulseShape) -> np.ndarray:
    """Root-raised-cosine impulse response, ``span * sps + 1`` taps, unit energy."""
    b = shape.rolloff
    half = shape.span * shape.sps // 2
    t = np.arange(half + 1) / shape.sps  # symbol periods, t >= 0
    h = np.empty_like(t)
    h[0] = 1.0 - b + 4.0 * b / np.pi
    sing = np.zeros(t.shape, dtype=bool)
    if b > 0:
        sing = np.isclose(t, 1.0 / (4.0 * b), rtol=0, atol=1e-12)
        h[sing] = b / np.sqrt(2.0) * (
            (1 + 2 / np.pi) * np.sin(np.pi / (4 * b)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * b))
        )
    reg = ~sing
    reg[0] = False
    tr = t[reg]
    h[reg] = (np.sin(np.pi * tr * (1 - b)) + 4 * b * tr * np.cos(np.pi * tr * (1 + b))) / (
        np.pi * tr * (1 - (4 * b * tr) ** 2)
    )
    taps = np.concatenate([h[:0:-1], h])  # mirrored copy: exact even symmetry
    return taps / np.sqrt(np.sum(taps ** 2))


def random_streams(n_symbols: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two independent equiprobable +-1 streams."""
    rng = np.random.default_rng(seed)
    s = rng.integers(0, 2, size=(2, n_symbols)) * 2 - 1
    return s[0].astype(float), s[1].astype(float)


def state_sequence(s1, s2) -> np.ndarray:
    """``STATE_I`` where ``s2/s1 = -1``, ``STATE_II`` where ``s2/s1 = +1``."""
    s1 = np.asarray(s1)
    s2 = np.asarray(s2)
    if s1.shape != s2.shape or s1.ndim != 1:
        raise ValueError("s1 and s2 must be 1-D streams of equal length")
    if not (np.all(np.abs(s1) == 1) and np.all(np.abs(s2) == 1)):
        raise ValueError("streams must contain only +1 and -1")
    return np.where(s1 * s2 < 0, STATE_I, STATE_II).astype(np.int8)


def switching_events(states) -> int:
    states = np.asarray(states)
    return int(np.count_nonzero(states[1:] != states[:-1]))


def unchanged_fraction(states) -> float:
    """Fraction of symbol transitions that keep the load state."""
    states = np.asarray(states)
    if states.size < 2:
        raise ValueError("need at least two symbols")
    return 1.0 - switching_events(states) / (states.size - 1)


def pulse_shape(symbols, shape: PulseShape) -> np.ndarray:
    """Shaped waveform with symbol ``n`` peaking at sample ``n * sps``."""
    symbols = np.asarray(symbols, dtype=float)
    taps = rrc_taps(shape)
    full = signal.upfirdn(taps, symbols, up=shape.sps)
    delay = (taps.size - 1) // 2
    n_out = symbols.size * shape.sps
    out = np.zeros(n_out)
    seg = full[delay:delay + n_out]
    out[:seg.size] = seg
    return out


def state_values(states_or_basis, direction, polarization: str = "theta") -> tuple[complex, complex]:
    """Complex pattern values of states I and II at the nearest grid node.

    ``states_or_basis`` is a :class:`BasisPair` or a ``(G1, G2)`` pair of
    patterns.
    """
    if isinstance(states_or_basis, BasisPair):
        g1, g2 = states_or_basis.states()
    else:
        g1, g2 = states_or_basis
    comp = {"theta": 0, "phi": 1}.get(polarization)
    if comp is None:
        raise ValueError("polarization must be 'theta' or 'phi'")
    theta, phi = direction
    return complex(g1.at(theta, phi)[comp]), complex(g2.at(theta, phi)[comp])


def switching_waveform(states, values, sps: int, profile: TransitionProfile) -> np.ndarray:
    """Per-sample pattern value ``g`` for a state sequence.

    ``values`` maps ``(STATE_I, STATE_II)`` to complex pattern values.
    """
    states = np.asarray(states)
    n = states.size
    v = np.where(states == STATE_I, complex(values[0]), complex(values[1]))
    i = np.arange(n * sps)
    sym = (i + sps // 2) // sps
    last = sym >= n
    sym = np.minimum(sym, n - 1)
    tau = (i - sym * sps) / sps  # offset from symbol center, in symbols
    tau[last] = 0.0  # trailing half symbol: no next state to blend into
    g = v[sym].copy()
    d = profile.duration
    if d > 0:
        vp = np.concatenate([v[:1], v, v[-1:]])  # vp[k + 1] = v[k], edges held
        # approaching the next boundary (tau near +1/2) or leaving the previous one
        up = tau >= 0.5 - d / 2
        lo = tau < -0.5 + d / 2
        u = np.empty_like(tau)
        u[up] = (tau[up] - (0.5 - d / 2)) / d
        u[lo] = (tau[lo] + 0.5 + d / 2) / d
        w = 0.5 * (1.0 - np.cos(np.pi * u))
        a = np.where(up, vp[sym + 1], vp[sym])  # state before the boundary
        b = np.where(up, vp[sym + 2], vp[sym + 1])  # state after
        m = up | lo
        g[m] = (1.0 - w[m]) * a[m] + w[m] * b[m]
    return g


def multiplex_timeseries(s1, s2, states_or_basis, direction, shape: PulseShape | None = None,
                         profile: TransitionProfile | None = None, polarization: str = "theta") -> np.ndarray:
    """Received complex envelope ``x1(t) g(t)`` in one direction."""
    shape = shape or PulseShape()
    profile = profile or TransitionProfile()
    states = state_sequence(s1, s2)
    vals = state_values(states_or_basis, direction, polarization)
    return pulse_shape(s1, shape) * switching_waveform(states, vals, shape.sps, profile)


def psd_estimate(y, fs: float, nperseg: int = 4096, overlap: float = 0.5) -> SpectrumEstimate:
    """Welch PSD (Hann window), two-sided, normalized to a 0 dB peak."""
    y = np.asarray(y)
    if nperseg < 8 or nperseg > y.size:
        raise ValueError(f"segment length {nperseg} invalid for a signal of {y.size} samples")
    if not 0.0 <= overlap < 1.0:
        raise ValueError("overlap must be in [0, 1)")
    f, p = signal.welch(
        y, fs=fs, window="hann", nperseg=nperseg, noverlap=int(round(overlap * nperseg)),
        detrend=False, return_onesided=False, scaling="density",
    )
    f = np.fft.fftshift(f)
    p = np.fft.fftshift(p)
    peak = float(np.max(p))
    if not peak > 0:
        raise ValueError("signal has zero power")
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(p / peak)
    win = signal.get_window("hann", nperseg)
    rbw = fs * np.sum(win ** 2) / np.sum(win) ** 2
    for a in (f, db):
        a.flags.writeable = False
    return SpectrumEstimate(f, db, float(rbw), float(fs), peak)


def oob_power_ratio(spec: SpectrumEstimate, band_edge: float) -> float:
    """Power beyond ``+-band_edge`` relative to the total, in dB."""
    if not 0 < band_edge < spec.fs / 2:
        raise ValueError("band_edge must lie between 0 and Nyquist")
    lin = 10.0 ** (spec.psd_db / 10.0)
    total = np.sum(lin)
    oob = np.sum(lin[np.abs(spec.freqs) > band_edge])
    ratio = oob / total
    if ratio < OOB_FLOOR:
        return float("-inf")
    return float(10.0 * np.log10(ratio))


def write_psd_csv(path, spec: SpectrumEstimate) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["freq_hz", "psd_db"])
        for f, p in zip(spec.freqs, spec.psd_db):
            w.writerow([repr(float(f)), repr(float(p))])


def write_envelope(path, y, fs: float, extra: dict | None = None) -> None:
    """Interleaved little-endian float64 I/Q plus a ``.json`` sidecar.

    ``extra`` entries are merged into the sidecar.
    """
    y = np.ascontiguousarray(y, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(y.tobytes())
    meta = dict(extra or {})
    meta.update({"fs_hz": float(fs), "length": int(y.size), "format": "interleaved little-endian float64 I/Q"})
    with open(str(path) + ".json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_envelope(path) -> tuple[np.ndarray, float]:
    with open(str(path) + ".json") as fh:
        meta = json.load(fh)
    y = np.fromfile(path, dtype="<c16")
    if y.size != meta["length"]:
        raise ValueError(f"{path}: expected {meta['length']} samples, found {y.size}")
    return y.astype(complex), float(meta["fs_hz"])
