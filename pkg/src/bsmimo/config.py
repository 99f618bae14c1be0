"""Run configuration for the command-line front end.

A run is described by one JSON object.  Unknown keys are rejected so typos
surface as configuration errors instead of silently falling back to
defaults.  Example::

    {
      "seed": 7,
      "antenna": {"analytic": {"f0_hz": 1.95e9}},
      "channel": {"snr_db": [0, 10, 20]},
      "sweep": {"n": 21, "subbands": [1, 2, 3]}
    }

:meth:`RunConfig.to_dict` returns the fully resolved configuration minus
the output directory.  It is echoed into every output sidecar and can be fed
back in as a config file.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError

__all__ = [
    "AnalyticAntenna",
    "ImportedAntenna",
    "LoadConfig",
    "SweepConfig",
    "ChannelSection",
    "WaveformSection",
    "RunConfig",
    "load_config",
]


def _number(section, key, value, *, integer=False, positive=False, nonneg=False):
    ok_type = isinstance(value, int) if integer else isinstance(value, (int, float))
    if isinstance(value, bool) or not ok_type:
        kind = "an integer" if integer else "a number"
        raise ConfigError(f"{section}.{key}", f"must be {kind}, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{section}.{key}", "must be > 0")
    if nonneg and value < 0:
        raise ConfigError(f"{section}.{key}", "must be >= 0")
    return value


def _build(cls, section, data):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(section, "must be an object")
    names = {f.name for f in fields(cls)}
    extra = sorted(set(data) - names)
    if extra:
        raise ConfigError(f"{section}.{extra[0]}", "unknown key")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(section, str(exc)) from None


@dataclass
class AnalyticAntenna:
    """Three-dipole array; lengths and distances in wavelengths at ``f0_hz``."""

    f0_hz: float = 1.95e9
    driven_length: float = 0.48
    parasitic_length: float = 0.48
    spacing: float = 0.25
    wire_radius: float = 1e-3
    span: list = field(default_factory=lambda: [0.5, 1.5])
    n_freq: int = 21

    def __post_init__(self):
        s = "antenna.analytic"
        for k in ("f0_hz", "driven_length", "parasitic_length", "spacing", "wire_radius", "n_freq"):
            _number(s, k, getattr(self, k), integer=(k == "n_freq"), positive=True)
        if not (isinstance(self.span, list) and len(self.span) == 2
                and 0 < self.span[0] <= self.span[1]):
            raise ConfigError(f"{s}.span", "must be [low, high] multiples of f0 with 0 < low <= high")


@dataclass
class ImportedAntenna:
    touchstone: str = ""
    patterns: list = field(default_factory=list)
    normalization: str = "power"

    def __post_init__(self):
        s = "antenna.imported"
        if not isinstance(self.touchstone, str) or not self.touchstone:
            raise ConfigError(f"{s}.touchstone", "path required")
        if not isinstance(self.patterns, list) or not self.patterns:
            raise ConfigError(f"{s}.patterns", "list of per-port pattern CSV paths required")
        if self.normalization not in ("power", "field"):
            raise ConfigError(f"{s}.normalization", "must be 'power' or 'field'")


@dataclass
class LoadConfig:
    """State-A loads on ports 1 and 2 as ``[re, im]`` ohms; state B swaps them."""

    state_a: list = field(default_factory=lambda: [[1.9, 17.0], [35.4, -407.0]])

    def __post_init__(self):
        ok = isinstance(self.state_a, list) and len(self.state_a) == 2 and all(
            isinstance(v, list) and len(v) == 2 and all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)
            for v in self.state_a
        )
        if not ok:
            raise ConfigError("loads.state_a", "must be [[re, im], [re, im]] in ohms")
        if any(v[0] < 0 for v in self.state_a):
            raise ConfigError("loads.state_a", "load resistance must be >= 0 (passive)")

    @property
    def loads(self) -> tuple:
        return tuple(complex(r, x) for r, x in self.state_a)


@dataclass
class SweepConfig:
    x_min: float = -400.0
    x_max: float = 400.0
    n: int = 41
    series_resistance: float = 0.0
    subbands: list = field(default_factory=lambda: [1, 2, 3])
    contour_hz: float | None = None

    def __post_init__(self):
        _number("sweep", "x_min", self.x_min)
        _number("sweep", "x_max", self.x_max)
        if not self.x_max > self.x_min:
            raise ConfigError("sweep.x_max", "must exceed sweep.x_min")
        _number("sweep", "n", self.n, integer=True, positive=True)
        _number("sweep", "series_resistance", self.series_resistance, nonneg=True)
        if not isinstance(self.subbands, list) or not all(
                isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in self.subbands):
            raise ConfigError("sweep.subbands", "must be a list of integers >= 1")
        if self.contour_hz is not None:
            _number("sweep", "contour_hz", self.contour_hz, positive=True)


@dataclass
class ChannelSection:
    snr_db: list = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    n_channels: int = 2000
    n_noise: int = 200
    ideal_only: bool = False

    def __post_init__(self):
        if not isinstance(self.snr_db, list) or not self.snr_db:
            raise ConfigError("channel.snr_db", "must be a nonempty list")
        for v in self.snr_db:
            _number("channel", "snr_db", v)
        _number("channel", "n_channels", self.n_channels, integer=True, positive=True)
        _number("channel", "n_noise", self.n_noise, integer=True, positive=True)
        if not isinstance(self.ideal_only, bool):
            raise ConfigError("channel.ideal_only", "must be true or false")


@dataclass
class WaveformSection:
    n_symbols: int = 1 << 14
    symbol_rate_hz: float = 500e3
    rolloff: float = 0.5
    span: int = 16
    sps: int = 16
    nperseg: int = 4096
    overlap: float = 0.5
    ramps: list = field(default_factory=lambda: [0.0, 0.1, 0.25, 0.5])
    band_edge_hz: float = 500e3
    direction_deg: list = field(default_factory=lambda: [90.0, 0.0])
    polarization: str = "theta"
    frequency_hz: float | None = None
    dump_envelope: bool = False

    def __post_init__(self):
        s = "waveform"
        for k in ("n_symbols", "span", "sps", "nperseg"):
            _number(s, k, getattr(self, k), integer=True, positive=True)
        if self.sps % 2:
            raise ConfigError(f"{s}.sps", "must be even")
        for k in ("symbol_rate_hz", "band_edge_hz"):
            _number(s, k, getattr(self, k), positive=True)
        _number(s, "rolloff", self.rolloff, nonneg=True)
        if self.rolloff > 1:
            raise ConfigError(f"{s}.rolloff", "must be in [0, 1]")
        _number(s, "overlap", self.overlap, nonneg=True)
        if self.overlap >= 1:
            raise ConfigError(f"{s}.overlap", "must be < 1")
        if not isinstance(self.ramps, list) or not all(
                isinstance(r, (int, float)) and 0 <= r < 1 for r in self.ramps):
            raise ConfigError(f"{s}.ramps", "must be a list of fractions in [0, 1)")
        if not (isinstance(self.direction_deg, list) and len(self.direction_deg) == 2):
            raise ConfigError(f"{s}.direction_deg", "must be [theta_deg, phi_deg]")
        if self.polarization not in ("theta", "phi"):
            raise ConfigError(f"{s}.polarization", "must be 'theta' or 'phi'")
        if self.nperseg > self.n_symbols * self.sps:
            raise ConfigError(f"{s}.nperseg", "longer than the simulated signal")
        if self.frequency_hz is not None:
            _number(s, "frequency_hz", self.frequency_hz, positive=True)


@dataclass
class RunConfig:
    seed: int
    antenna_kind: str
    analytic: AnalyticAntenna | None = None
    imported: ImportedAntenna | None = None
    frequencies_hz: list | None = None
    n_theta: int = 64
    n_phi: int = 128
    active_port: int = 0
    loads: LoadConfig = field(default_factory=LoadConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    channel: ChannelSection = field(default_factory=ChannelSection)
    waveform: WaveformSection = field(default_factory=WaveformSection)
    output_dir: str | None = None

    _TOP = ("seed", "antenna", "frequencies_hz", "grid", "active_port", "loads",
            "sweep", "channel", "waveform", "output_dir")

    @classmethod
    def from_dict(cls, d: dict, seed: int | None = None, output_dir: str | None = None) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config", "top level must be a JSON object")
        extra = sorted(set(d) - set(cls._TOP))
        if extra:
            raise ConfigError(extra[0], "unknown key")
        if seed is None:
            seed = d.get("seed")
        if seed is None:
            raise ConfigError("seed", "required (set it in the config or pass --seed)")
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")

        ant = d.get("antenna")
        if not isinstance(ant, dict) or len(ant) != 1 or next(iter(ant)) not in ("analytic", "imported"):
            raise ConfigError("antenna", "needs exactly one source: {'analytic': {...}} or {'imported': {...}}")
        kind, body = next(iter(ant.items()))
        analytic = _build(AnalyticAntenna, "antenna.analytic", body) if kind == "analytic" else None
        imported = _build(ImportedAntenna, "antenna.imported", body) if kind == "imported" else None

        freqs = d.get("frequencies_hz")
        if freqs is not None:
            if not isinstance(freqs, list) or not freqs:
                raise ConfigError("frequencies_hz", "must be a nonempty list")
            for f in freqs:
                _number("config", "frequencies_hz", f, positive=True)
            freqs = [float(f) for f in freqs]

        grid = d.get("grid") or {}
        if not isinstance(grid, dict) or set(grid) - {"n_theta", "n_phi"}:
            raise ConfigError("grid", "only n_theta and n_phi are allowed")
        n_theta = _number("grid", "n_theta", grid.get("n_theta", 64), integer=True, positive=True)
        n_phi = _number("grid", "n_phi", grid.get("n_phi", 128), integer=True, positive=True)
        if n_phi % 2:
            raise ConfigError("grid.n_phi", "must be even so mirrored directions are grid nodes")

        ap = d.get("active_port", 0)
        _number("config", "active_port", ap, integer=True, nonneg=True)

        out = output_dir if output_dir is not None else d.get("output_dir")
        if out is not None and not isinstance(out, str):
            raise ConfigError("output_dir", "must be a path string")

        return cls(
            seed=int(seed),
            antenna_kind=kind,
            analytic=analytic,
            imported=imported,
            frequencies_hz=freqs,
            n_theta=n_theta,
            n_phi=n_phi,
            active_port=ap,
            loads=_build(LoadConfig, "loads", d.get("loads")),
            sweep=_build(SweepConfig, "sweep", d.get("sweep")),
            channel=_build(ChannelSection, "channel", d.get("channel")),
            waveform=_build(WaveformSection, "waveform", d.get("waveform")),
            output_dir=out,
        )

    def to_dict(self) -> dict:
        ant = asdict(self.analytic) if self.antenna_kind == "analytic" else asdict(self.imported)
        return {
            "seed": self.seed,
            "antenna": {self.antenna_kind: ant},
            "frequencies_hz": self.frequencies_hz,
            "grid": {"n_theta": self.n_theta, "n_phi": self.n_phi},
            "active_port": self.active_port,
            "loads": asdict(self.loads),
            "sweep": asdict(self.sweep),
            "channel": asdict(self.channel),
            "waveform": asdict(self.waveform),
        }


def load_config(path, seed: int | None = None, output_dir: str | None = None) -> RunConfig:
    """Read a JSON config file.  An output sidecar is accepted as well."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
    if isinstance(data, dict) and "artifact" in data and "config" in data:
        data = data["config"]
    return RunConfig.from_dict(data, seed=seed, output_dir=output_dir)
