"""Antenna models that produce :class:`~bsmimo.network.PortNetwork` objects.

The analytic model is a symmetric array of three parallel z-directed thin
dipoles lying on the x axis: the driven element (port 0) at the origin and
two parasitic elements (ports 1 and 2) at ``x = -spacing`` and
``x = +spacing``.  The symmetry plane is ``x = 0`` (``phi = +-90 deg``), so
exchanging the loads on ports 1 and 2 mirrors the pattern.

Impedances come from the induced-EMF method with sinusoidal currents and
are referred to the feed-point (base) currents.  The near field of a
sinusoidal filament is known in closed form, and integrating it against a
sinusoidal current reduces to differences of ``E(x) = Ci(x) - j Si(x)``.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import constants, special

from .errors import IngestError
from .network import PortNetwork, s_to_z, z_to_s
from .pattern import SphericalGrid, VectorPattern, make_grid, read_pattern_csv, write_pattern_csv
from .touchstone import read_touchstone, write_touchstone

C0 = constants.c
ETA0 = constants.mu_0 * constants.c

__all__ = [
    "DipoleArraySpec",
    "sine_cosine_integrals",
    "sine_integral",
    "cosine_integral",
    "self_impedance",
    "mutual_impedance",
    "emf_impedance",
    "dipole_factor",
    "element_pattern",
    "build_network",
    "load_imported",
    "write_network",
    "ETA0",
]


def sine_cosine_integrals(x):
    """``(Si(x), Ci(x))``.  ``Ci`` is only defined for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("Ci(x) requires x > 0")
    si, ci = special.sici(x)
    if si.ndim == 0:
        return float(si), float(ci)
    return si, ci


def sine_integral(x):
    """``Si(x)``, any real ``x`` (odd function, ``Si(0) = 0``)."""
    si = special.sici(np.asarray(x, dtype=float))[0]
    return float(si) if np.ndim(si) == 0 else si


def cosine_integral(x):
    """``Ci(x)`` for ``x > 0``."""
    return sine_cosine_integrals(x)[1]


def _expint_e(x):
    """Antiderivative of ``exp(-j t)/t``: ``Ci(x) - j Si(x)``, ``x > 0``."""
    si, ci = special.sici(x)
    return ci - 1j * si


@dataclass(frozen=True)
class DipoleArraySpec:
    """Geometry of the three-dipole parasitic array (SI units).

    ``element_length`` is ``(driven, parasitic)``; a scalar means all three
    elements share one length.
    """

    element_length: tuple
    wire_radius: float
    spacing: float
    frequencies: tuple

    def __post_init__(self):
        el = self.element_length
        if np.ndim(el) == 0:
            el = (float(el), float(el))
        el = tuple(float(v) for v in el)
        if len(el) != 2 or min(el) <= 0:
            raise ValueError("element_length must be (driven, parasitic) > 0")
        object.__setattr__(self, "element_length", el)
        object.__setattr__(self, "frequencies", tuple(float(f) for f in np.atleast_1d(self.frequencies)))
        if self.wire_radius <= 0:
            raise ValueError("wire_radius must be positive")
        if self.spacing <= 2 * self.wire_radius:
            raise ValueError("spacing must exceed two wire radii")
        if not self.frequencies or min(self.frequencies) <= 0:
            raise ValueError("need at least one positive frequency")
        lam_min = C0 / max(self.frequencies)
        if self.wire_radius > lam_min / 100:
            warnings.warn(
                f"wire radius {self.wire_radius:g} m exceeds lambda/100 at "
                f"{max(self.frequencies):g} Hz; thin-wire model is unreliable",
                stacklevel=2,
            )

    @classmethod
    def default(cls, f0: float = 1.95e9, n_freq: int = 21, span=(0.5, 1.5)):
        lam = C0 / f0
        return cls(
            element_length=(0.48 * lam, 0.48 * lam),
            wire_radius=1e-3 * lam,
            spacing=0.25 * lam,
            frequencies=tuple(np.linspace(span[0], span[1], n_freq) * f0),
        )

    @property
    def lengths(self) -> tuple:
        """Per-port lengths ``(L0, L1, L2)``."""
        d, p = self.element_length
        return (d, p, p)

    @property
    def positions(self) -> np.ndarray:
        """Per-port x offsets (m)."""
        return np.array([0.0, -self.spacing, self.spacing])

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "DipoleArraySpec":
        return cls(
            element_length=d["element_length"],
            wire_radius=float(d["wire_radius"]),
            spacing=float(d["spacing"]),
            frequencies=tuple(d["frequencies"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "DipoleArraySpec":
        return cls.from_dict(json.loads(text))


def _segment_integral(k, d, z0, za, zb, sigma):
    """``int_za^zb exp(-jkR)/R * exp(j*sigma*k*z) dz``, ``R = sqrt(d^2 + (z-z0)^2)``."""

    def u_plus(s):  # R + s, without cancellation for s < 0
        r = np.hypot(d, s)
        return d * d / (r - s) if s < 0 else r + s

    def u_minus(s):  # R - s
        r = np.hypot(d, s)
        return d * d / (r + s) if s > 0 else r - s

    sa, sb = za - z0, zb - z0
    phase = np.exp(1j * sigma * k * z0)
    if sigma < 0:
        val = _expint_e(k * u_plus(sb)) - _expint_e(k * u_plus(sa))
    else:
        val = -(_expint_e(k * u_minus(sb)) - _expint_e(k * u_minus(sa)))
    return phase * val


def emf_impedance(k: float, d: float, h_src: float, h_obs: float, eta: float = ETA0) -> complex:
    """Induced-EMF impedance between parallel side-by-side dipoles.

    Parameters
    ----------
    k : wavenumber (rad/m)
    d : lateral separation (m); pass the wire radius for self impedance
    h_src, h_obs : half-lengths of the radiating and receiving dipoles (m)

    Returns
    -------
    complex
        Impedance referred to the base currents of both dipoles.
    """
    sources = ((h_src, 1.0), (-h_src, 1.0), (0.0, -2.0 * np.cos(k * h_src)))
    h = h_obs
    ejp, ejm = np.exp(1j * k * h), np.exp(-1j * k * h)
    total = 0.0j
    for z0, c in sources:
        # sin(k(h - |z|)) split into exponentials on each half of the receiver
        upper = ejp * _segment_integral(k, d, z0, 0.0, h, -1) - ejm * _segment_integral(k, d, z0, 0.0, h, +1)
        lower = ejp * _segment_integral(k, d, z0, -h, 0.0, +1) - ejm * _segment_integral(k, d, z0, -h, 0.0, -1)
        total += c * (upper + lower) / 2j
    z_max = 1j * eta / (4 * np.pi) * total
    return complex(z_max / (np.sin(k * h_src) * np.sin(k * h_obs)))


def self_impedance(length: float, radius: float, f: float) -> complex:
    k = 2 * np.pi * f / C0
    return emf_impedance(k, radius, length / 2, length / 2)


def mutual_impedance(spec: DipoleArraySpec, i: int, j: int, f: float) -> complex:
    """Entry ``Z[i, j]`` of the array impedance matrix at ``f``."""
    k = 2 * np.pi * f / C0
    lengths = spec.lengths
    if i == j:
        return emf_impedance(k, spec.wire_radius, lengths[i] / 2, lengths[i] / 2)
    a, b = min(i, j), max(i, j)
    d = abs(spec.positions[a] - spec.positions[b])
    return emf_impedance(k, d, lengths[a] / 2, lengths[b] / 2)


def dipole_factor(theta, kh):
    """``[cos(kh cos(theta)) - cos(kh)] / sin(theta)``, zero on the axis."""
    theta = np.asarray(theta, dtype=float)
    st = np.sin(theta)
    on_axis = np.abs(st) < 1e-12
    safe = np.where(on_axis, 1.0, st)
    return np.where(on_axis, 0.0, (np.cos(kh * np.cos(theta)) - np.cos(kh)) / safe)


def element_pattern(spec: DipoleArraySpec, k_port: int, grid: SphericalGrid, f: float) -> VectorPattern:
    """Far field of port ``k_port`` driven with unit base current.

    Normalized so that the spherical integral of ``|E|^2`` is the radiated
    power in watts.
    """
    k = 2 * np.pi * f / C0
    kh = k * spec.lengths[k_port] / 2
    th = grid.theta[:, None]
    ph = grid.phi[None, :]
    amp = 1j * np.sqrt(ETA0 / (8 * np.pi ** 2)) / np.sin(kh)
    phase = np.exp(1j * k * spec.positions[k_port] * np.sin(th) * np.cos(ph))
    e_theta = amp * dipole_factor(th, kh) * phase
    return VectorPattern(grid, e_theta, np.zeros(grid.shape, dtype=complex), f)


def _z_matrix(spec, f):
    z = np.empty((3, 3), dtype=complex)
    for i in range(3):
        for j in range(i, 3):
            z[i, j] = z[j, i] = mutual_impedance(spec, i, j, f)
    pos = spec.positions
    if pos[2] == -pos[1] and spec.lengths[1] == spec.lengths[2]:
        # mirror-symmetric geometry: make the parasitic pair exactly exchangeable
        z[2, 2] = z[1, 1]
        z[0, 2] = z[2, 0] = z[0, 1]
    return z


def build_network(spec: DipoleArraySpec, grid: SphericalGrid | None = None, z_ref: float = 50.0) -> PortNetwork:
    grid = grid or make_grid()
    freqs = np.array(spec.frequencies)
    z = np.empty((freqs.size, 3, 3), dtype=complex)
    et = np.empty((freqs.size, 3) + grid.shape, dtype=complex)
    ep = np.zeros_like(et)
    for fi, f in enumerate(freqs):
        z[fi] = _z_matrix(spec, f)
        for kp in range(3):
            et[fi, kp] = element_pattern(spec, kp, grid, f).e_theta
    meta = {"source": "analytic_dipole_array", "spec": json.loads(spec.to_json())}
    return PortNetwork(freqs, z, grid, et, ep, z_ref, meta)


# -- imported antennas ---------------------------------------------------------

# relative Z asymmetry tolerated in imported data before symmetrizing
RECIPROCITY_TOL = 1e-6

NORMALIZATIONS = {
    # samples already integrate to watts per unit port current
    "power": 1.0,
    # samples are r*E in volts per unit port current
    "field": 1.0 / np.sqrt(2.0 * ETA0),
}


def load_imported(touchstone_path, pattern_paths: Sequence, normalization: str = "power") -> PortNetwork:
    """Build a network from a Touchstone file plus one pattern CSV per port."""
    if normalization not in NORMALIZATIONS:
        raise IngestError(f"unknown pattern normalization {normalization!r}", touchstone_path)
    freqs, s, z_ref = read_touchstone(touchstone_path)
    n = s.shape[1]
    if len(pattern_paths) != n:
        raise IngestError(
            f"{n}-port network needs {n} pattern files, got {len(pattern_paths)}", touchstone_path
        )
    try:
        z = s_to_z(s, z_ref)
    except Exception as exc:  # singular I - S
        raise IngestError(str(exc), touchstone_path) from None
    scale = NORMALIZATIONS[normalization]
    grid = None
    et = ep = None
    for k, p in enumerate(pattern_paths):
        pats = read_pattern_csv(p, scale)
        pf = np.array([q.frequency for q in pats])
        if pf.size != freqs.size or not np.allclose(pf, freqs, rtol=1e-9, atol=0):
            raise IngestError(
                f"pattern frequencies {pf.tolist()} do not match Touchstone frequencies", p
            )
        if grid is None:
            grid = pats[0].grid
            et = np.empty((freqs.size, n) + grid.shape, dtype=complex)
            ep = np.empty_like(et)
        elif not grid.same_as(pats[0].grid):
            raise IngestError("pattern grid differs from port 0", p)
        for fi, q in enumerate(pats):
            et[fi, k] = q.e_theta
            ep[fi, k] = q.e_phi
    meta = {
        "source": "imported",
        "touchstone": str(touchstone_path),
        "patterns": [str(p) for p in pattern_paths],
        "normalization": normalization,
    }
    # measured/simulated data is only reciprocal to file precision
    zt = np.swapaxes(z, 1, 2)
    asym = np.max(np.abs(z - zt)) / max(np.max(np.abs(z)), 1e-300)
    if asym > RECIPROCITY_TOL:
        raise IngestError(f"network is not reciprocal (relative asymmetry {asym:.3g})", touchstone_path)
    z = 0.5 * (z + zt)
    return PortNetwork(freqs, z, grid, et, ep, z_ref, meta)


def write_network(net: PortNetwork, directory, stem: str = "antenna") -> tuple[Path, list[Path]]:
    """Write ``<stem>.sNp`` plus ``<stem>_port<k>.csv`` pattern files."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = net.n_ports
    ts = directory / f"{stem}.s{n}p"
    write_touchstone(ts, net.frequencies, z_to_s(net.z, net.z_ref), net.z_ref,
                     comments=[f"source: {net.metadata.get('source', 'unknown')}"])
    paths = []
    for k in range(n):
        p = directory / f"{stem}_port{k}.csv"
        write_pattern_csv(p, [net.port_pattern(fi, k) for fi in range(net.frequencies.size)])
        paths.append(p)
    return ts, paths
