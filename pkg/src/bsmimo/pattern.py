"""Spherical quadrature grids and complex vector far-field patterns.

Patterns are sampled on a Gauss-Legendre (in cos theta) by uniform-phi
product grid.  The phi nodes are ``-pi + 2*pi*k/n_phi`` with ``n_phi`` even,
so the reflection ``phi -> pi - phi`` maps nodes onto nodes and mirroring a
pattern is an exact permutation of its samples.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateError, GridError, IngestError

__all__ = [
    "SphericalGrid",
    "VectorPattern",
    "BasisPair",
    "make_grid",
    "inner_product",
    "power",
    "mirror",
    "basis_from_states",
    "synthesize_total",
    "imbalance_db",
    "normalized_cross_correlation",
    "write_pattern_csv",
    "read_pattern_csv",
    "PATTERN_CSV_HEADER",
]

DEFAULT_N_THETA = 64
DEFAULT_N_PHI = 128

PATTERN_CSV_HEADER = (
    "freq_hz", "theta_deg", "phi_deg",
    "re_etheta", "im_etheta", "re_ephi", "im_ephi",
)


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Product quadrature grid on the unit sphere.

    ``weights[i, j]`` is the solid angle (sr) attached to node
    ``(theta[i], phi[j])``.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray

    @property
    def shape(self):
        return (self.theta.size, self.phi.size)

    def mirror_index(self) -> np.ndarray:
        """Index map ``j -> j'`` with ``phi[j'] = pi - phi[j]`` (wrapped)."""
        n = self.phi.size
        if n % 2:
            raise GridError("phi grid with odd node count is not mirror-closed")
        idx = (n // 2 - np.arange(n)) % n
        target = np.angle(np.exp(1j * (np.pi - self.phi)))
        err = np.abs(np.angle(np.exp(1j * (self.phi[idx] - target))))
        if err.max() > 1e-9:
            raise GridError("phi grid is not closed under phi -> pi - phi")
        return idx

    def same_as(self, other: "SphericalGrid") -> bool:
        if self is other:
            return True
        return (
            self.shape == other.shape
            and np.array_equal(self.theta, other.theta)
            and np.array_equal(self.phi, other.phi)
        )

    def integrate(self, values) -> complex | float:
        return np.sum(np.asarray(values) * self.weights)


def make_grid(n_theta: int = DEFAULT_N_THETA, n_phi: int = DEFAULT_N_PHI) -> SphericalGrid:
    """Gauss-Legendre nodes in cos(theta) times a uniform periodic phi grid.

    Exact for integrands that are polynomials of degree ``< 2*n_theta`` in
    cos(theta) and trigonometric polynomials of degree ``< n_phi`` in phi.
    """
    if n_theta < 2 or n_phi < 2:
        raise GridError("need n_theta >= 2 and n_phi >= 2")
    if n_phi % 2:
        raise GridError(f"n_phi must be even for mirror closure, got {n_phi}")
    x, wx = np.polynomial.legendre.leggauss(n_theta)
    # descending cos(theta) gives ascending theta
    x, wx = x[::-1], wx[::-1]
    theta = np.arccos(x)
    phi = -np.pi + 2.0 * np.pi * np.arange(n_phi) / n_phi
    weights = np.outer(wx, np.full(n_phi, 2.0 * np.pi / n_phi))
    return SphericalGrid(_frozen(theta), _frozen(phi), _frozen(weights))


@dataclass(frozen=True, eq=False)
class VectorPattern:
    """Complex far field ``(E_theta, E_phi)`` sampled on ``grid``.

    The field normalization is set by whoever produces the pattern.  Patterns
    built by :mod:`bsmimo.network` are scaled so that :func:`power` returns
    the radiated fraction of the incident power.
    """

    grid: SphericalGrid
    e_theta: np.ndarray
    e_phi: np.ndarray
    frequency: float

    def __post_init__(self):
        et = _frozen(self.e_theta, complex)
        ep = _frozen(self.e_phi, complex)
        if et.shape != self.grid.shape or ep.shape != self.grid.shape:
            raise GridError(
                f"pattern samples {et.shape}/{ep.shape} do not match grid {self.grid.shape}"
            )
        if not (np.all(np.isfinite(et)) and np.all(np.isfinite(ep))):
            raise GridError("pattern contains non-finite samples")
        object.__setattr__(self, "e_theta", et)
        object.__setattr__(self, "e_phi", ep)
        object.__setattr__(self, "frequency", float(self.frequency))

    def _like(self, e_theta, e_phi):
        return VectorPattern(self.grid, e_theta, e_phi, self.frequency)

    def __add__(self, other):
        _check_compatible(self, other)
        return self._like(self.e_theta + other.e_theta, self.e_phi + other.e_phi)

    def __sub__(self, other):
        _check_compatible(self, other)
        return self._like(self.e_theta - other.e_theta, self.e_phi - other.e_phi)

    def __mul__(self, c):
        return self._like(self.e_theta * c, self.e_phi * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.e_theta, -self.e_phi)

    def at(self, theta: float, phi: float) -> tuple[complex, complex]:
        """Field at the grid node nearest to ``(theta, phi)`` (radians)."""
        i = int(np.argmin(np.abs(self.grid.theta - theta)))
        dphi = np.abs(np.angle(np.exp(1j * (self.grid.phi - phi))))
        j = int(np.argmin(dphi))
        return complex(self.e_theta[i, j]), complex(self.e_phi[i, j])


def _check_compatible(a: VectorPattern, b: VectorPattern):
    if not a.grid.same_as(b.grid):
        raise GridError("patterns live on different grids")
    if a.frequency != b.frequency:
        raise GridError(f"frequency mismatch: {a.frequency} Hz vs {b.frequency} Hz")


def inner_product(a: VectorPattern, b: VectorPattern) -> complex:
    """Spherical inner product ``<a, b> = int (a . b*) dOmega``."""
    _check_compatible(a, b)
    w = a.grid.weights
    return complex(np.sum((a.e_theta * b.e_theta.conj() + a.e_phi * b.e_phi.conj()) * w))


def power(p: VectorPattern) -> float:
    w = p.grid.weights
    return float(np.sum((np.abs(p.e_theta) ** 2 + np.abs(p.e_phi) ** 2) * w))


def mirror(p: VectorPattern, convention: str = "physical") -> VectorPattern:
    """Reflect a pattern in the ``phi = +-90 deg`` plane.

    ``scalar_remap`` only remaps the angle, ``phi -> pi - phi``.
    ``physical`` additionally flips the sign of the phi component, which is
    what reflecting the radiating structure does to the E field.
    """
    idx = p.grid.mirror_index()
    et = p.e_theta[:, idx]
    ep = p.e_phi[:, idx]
    if convention == "physical":
        ep = -ep
    elif convention != "scalar_remap":
        raise ValueError(f"unknown mirror convention {convention!r}")
    return p._like(et, ep)


@dataclass(frozen=True, eq=False)
class BasisPair:
    b1: VectorPattern
    b2: VectorPattern
    p_b1: float
    p_b2: float
    cross_corr: complex

    @property
    def normalized_cross_corr(self) -> float:
        return normalized_cross_correlation(self)

    def states(self) -> tuple[VectorPattern, VectorPattern]:
        """Recover ``(G1, G2)`` from the basis."""
        return synthesize_total(self, 1, -1), synthesize_total(self, 1, 1)


_SQRT1_2 = np.sqrt(0.5)


def basis_from_states(g1: VectorPattern, g2: VectorPattern) -> BasisPair:
    """Sum/difference basis ``B1 = (G2 + G1)/sqrt2``, ``B2 = (G2 - G1)/sqrt2``."""
    _check_compatible(g1, g2)
    b1 = (g2 + g1) * _SQRT1_2
    b2 = (g2 - g1) * _SQRT1_2
    return BasisPair(b1, b2, power(b1), power(b2), inner_product(b1, b2))


def synthesize_total(basis: BasisPair, s1: complex, s2: complex) -> VectorPattern:
    return (basis.b1 * s1 + basis.b2 * s2) * _SQRT1_2


def normalized_cross_correlation(basis: BasisPair) -> float:
    """``|<B1, B2>| / sqrt(P_B1 P_B2)``; 0 when either basis power vanishes."""
    denom = np.sqrt(basis.p_b1 * basis.p_b2)
    if denom == 0.0:
        return 0.0
    return float(abs(basis.cross_corr) / denom)


def imbalance_db(basis: BasisPair) -> float:
    if basis.p_b1 <= 0.0 or basis.p_b2 <= 0.0:
        raise DegenerateError(
            f"power imbalance undefined: P_B1={basis.p_b1:g}, P_B2={basis.p_b2:g}"
        )
    return abs(10.0 * np.log10(basis.p_b1 / basis.p_b2))


# -- pattern CSV files --------------------------------------------------------


def write_pattern_csv(path, patterns: Iterable[VectorPattern]) -> None:
    """Write one port's patterns (one per frequency), theta-major rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PATTERN_CSV_HEADER)
        for p in patterns:
            th = np.degrees(p.grid.theta)
            ph = np.degrees(p.grid.phi)
            f = repr(p.frequency)
            for i in range(th.size):
                for j in range(ph.size):
                    et = p.e_theta[i, j]
                    ep = p.e_phi[i, j]
                    w.writerow((
                        f, repr(float(th[i])), repr(float(ph[j])),
                        repr(float(et.real)), repr(float(et.imag)),
                        repr(float(ep.real)), repr(float(ep.imag)),
                    ))


def read_pattern_csv(path, scale: float = 1.0) -> list[VectorPattern]:
    """Read a pattern CSV written by :func:`write_pattern_csv`.

    The theta/phi nodes must be those of :func:`make_grid` for the node
    counts found in the file.  Rows are validated in order and the first
    inconsistent row is named in the raised :class:`IngestError`.
    """
    blocks: list[tuple[float, list[tuple[int, list[float]]]]] = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IngestError(f"cannot open file ({exc.strerror})", path) from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("empty pattern file", path) from None
        if tuple(h.strip() for h in header) != PATTERN_CSV_HEADER:
            raise IngestError(f"bad header {header!r}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 7:
                raise IngestError(f"expected 7 columns, got {len(row)}", path, lineno)
            try:
                vals = [float(v) for v in row]
            except ValueError as exc:
                raise IngestError(str(exc), path, lineno) from None
            if not blocks or blocks[-1][0] != vals[0]:
                blocks.append((vals[0], []))
            blocks[-1][1].append((lineno, vals[1:]))
    if not blocks:
        raise IngestError("no data rows", path)

    first = blocks[0][1]
    theta0 = first[0][1][0]
    n_phi = 0
    while n_phi < len(first) and first[n_phi][1][0] == theta0:
        n_phi += 1
    phis = [r[1][1] for r in first[:n_phi]]
    thetas = [first[i][1][0] for i in range(0, len(first), n_phi)]
    n_theta = len(thetas)

    patterns = []
    grid = None
    for freq, rows in blocks:
        for r, (lineno, vals) in enumerate(rows):
            i, j = divmod(r, n_phi)
            if i >= n_theta:
                raise IngestError(f"unexpected extra row for {freq} Hz", path, lineno)
            if vals[0] != thetas[i] or vals[1] != phis[j]:
                raise IngestError(
                    f"expected theta={thetas[i]!r} deg, phi={phis[j]!r} deg, "
                    f"got theta={vals[0]!r}, phi={vals[1]!r} (missing or out-of-order row)",
                    path, lineno,
                )
        if len(rows) != n_theta * n_phi:
            raise IngestError(
                f"{freq} Hz block has {len(rows)} rows, expected {n_theta * n_phi}",
                path, rows[-1][0],
            )
        if grid is None:
            try:
                grid = make_grid(n_theta, n_phi)
            except GridError as exc:
                raise IngestError(str(exc), path) from None
            if not (
                np.allclose(np.degrees(grid.theta), thetas, rtol=0, atol=1e-9)
                and np.allclose(np.degrees(grid.phi), phis, rtol=0, atol=1e-9)
            ):
                raise IngestError("nodes are not a Gauss-Legendre x uniform-phi grid", path)
        data = np.array([v for _, v in rows]).reshape(n_theta, n_phi, 6)
        et = (data[..., 2] + 1j * data[..., 3]) * scale
        ep = (data[..., 4] + 1j * data[..., 5]) * scale
        patterns.append(VectorPattern(grid, et, ep, freq))
    return patterns
