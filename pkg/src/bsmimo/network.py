"""Loaded multi-port antenna networks reduced to one driven port.

The passive ports of an N-port are terminated in complex loads and the
remaining (active) port is driven from a source of impedance ``z_ref``.
Everything is done in the impedance domain: the loads simply add to the
diagonal of the passive block of Z.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, GridError, SymmetryError
from .pattern import SphericalGrid, VectorPattern, inner_product, power

__all__ = [
    "PortNetwork",
    "LoadState",
    "DrivenSolution",
    "DIODE_ON",
    "DIODE_OFF",
    "DIODE_STATE",
    "z_to_s",
    "s_to_z",
    "reduce_loaded",
    "reduce_currents",
    "return_loss_db",
    "state_pair",
    "COND_LIMIT",
]

COND_LIMIT = 1e12

# Small-signal p-i-n diode impedances at 1.95 GHz (forward 19 mA / reverse -0.6 V).
DIODE_ON = 1.9 + 17j
DIODE_OFF = 35.4 - 407j


def _eye_like(m):
    return np.broadcast_to(np.eye(m.shape[-1]), m.shape)


def _check_cond(m, what):
    cond = np.linalg.cond(m)
    if np.any(~np.isfinite(cond)) or np.any(cond > COND_LIMIT):
        raise DegenerateError(f"{what} is singular (condition number {np.max(cond):.3g})")


def z_to_s(z, z_ref: float = 50.0) -> np.ndarray:
    """``S = (Z - z_ref I)(Z + z_ref I)^-1``; works on stacks of matrices."""
    if not z_ref > 0:
        raise ValueError("z_ref must be real and positive")
    z = np.asarray(z, dtype=complex)
    eye = _eye_like(z)
    b = z + z_ref * eye
    _check_cond(b, "Z + z_ref*I")
    # X B = A  <=>  B^T X^T = A^T
    return np.swapaxes(np.linalg.solve(np.swapaxes(b, -1, -2), np.swapaxes(z - z_ref * eye, -1, -2)), -1, -2)


def s_to_z(s, z_ref: float = 50.0) -> np.ndarray:
    """``Z = z_ref (I + S)(I - S)^-1``."""
    if not z_ref > 0:
        raise ValueError("z_ref must be real and positive")
    s = np.asarray(s, dtype=complex)
    eye = _eye_like(s)
    b = eye - s
    _check_cond(b, "I - S")
    return z_ref * np.swapaxes(np.linalg.solve(np.swapaxes(b, -1, -2), np.swapaxes(eye + s, -1, -2)), -1, -2)


@dataclass(frozen=True, eq=False)
class PortNetwork:
    """Per-frequency impedance matrices plus embedded port patterns.

    ``e_theta[f, k]`` / ``e_phi[f, k]`` hold the pattern radiated with unit
    current at port ``k`` and all other ports open (zero current), scaled so
    that the spherical integral of ``|E|^2`` is radiated power in watts.
    """

    frequencies: np.ndarray
    z: np.ndarray
    grid: SphericalGrid
    e_theta: np.ndarray
    e_phi: np.ndarray
    z_ref: float = 50.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.array(self.frequencies, dtype=float).reshape(-1)
        z = np.array(self.z, dtype=complex)
        if z.ndim != 3 or z.shape[0] != f.size or z.shape[1] != z.shape[2]:
            raise ValueError(f"z has shape {z.shape}, expected ({f.size}, N, N)")
        scale = np.max(np.abs(z), axis=(1, 2), keepdims=True)
        asym = np.max(np.abs(z - np.swapaxes(z, 1, 2)) / np.where(scale > 0, scale, 1.0))
        if asym > 1e-9:
            raise ValueError(f"impedance matrices are not reciprocal (asymmetry {asym:.2e})")
        n = z.shape[1]
        shape = (f.size, n) + self.grid.shape
        et = np.array(self.e_theta, dtype=complex)
        ep = np.array(self.e_phi, dtype=complex)
        if et.shape != shape or ep.shape != shape:
            raise GridError(f"port patterns have shape {et.shape}, expected {shape}")
        for name, a in (("frequencies", f), ("z", z), ("e_theta", et), ("e_phi", ep)):
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        object.__setattr__(self, "_gram_cache", {})

    @property
    def n_ports(self) -> int:
        return self.z.shape[1]

    def freq_index(self, f: float) -> int:
        """Index of frequency sample ``f``.  No interpolation is done."""
        i = int(np.argmin(np.abs(self.frequencies - f)))
        if abs(self.frequencies[i] - f) > 1e-9 * max(abs(f), 1.0):
            raise KeyError(f"{f} Hz is not a sample of this network (nearest {self.frequencies[i]} Hz)")
        return i

    def port_pattern(self, fi: int, k: int) -> VectorPattern:
        return VectorPattern(self.grid, self.e_theta[fi, k], self.e_phi[fi, k], self.frequencies[fi])

    def port_gram(self, fi: int) -> np.ndarray:
        """Hermitian matrix ``M[k, l] = <P_k, P_l>`` of the port patterns.

        Any pattern ``sum_k c_k P_k`` then has power ``c^T M c*`` and
        inner products follow the same sesquilinear rule.
        """
        cache = self._gram_cache
        if fi not in cache:
            n = self.n_ports
            pats = [self.port_pattern(fi, k) for k in range(n)]
            m = np.empty((n, n), dtype=complex)
            for k in range(n):
                for l in range(k, n):
                    m[k, l] = inner_product(pats[k], pats[l])
                    m[l, k] = np.conj(m[k, l])
            m.flags.writeable = False
            cache[fi] = m
        return cache[fi]

    def combine(self, fi: int, coeffs) -> VectorPattern:
        c = np.asarray(coeffs, dtype=complex)
        et = np.tensordot(c, self.e_theta[fi], axes=(0, 0))
        ep = np.tensordot(c, self.e_phi[fi], axes=(0, 0))
        return VectorPattern(self.grid, et, ep, self.frequencies[fi])


@dataclass(frozen=True)
class LoadState:
    """Complex terminations (ohm) at the passive ports, in port order."""

    loads: tuple

    def __post_init__(self):
        loads = tuple(complex(z) for z in self.loads)
        for z in loads:
            if z.real < 0:
                raise ValueError(f"load {z} is not passive (negative resistance)")
        object.__setattr__(self, "loads", loads)

    @classmethod
    def reactive(cls, *x):
        return cls(tuple(1j * float(v) for v in x))

    def swapped(self) -> "LoadState":
        return LoadState(self.loads[::-1])

    def __len__(self):
        return len(self.loads)


# Diode pair: first passive port forward biased, second reverse biased.
DIODE_STATE = LoadState((DIODE_ON, DIODE_OFF))


@dataclass(frozen=True, eq=False)
class DrivenSolution:
    """One loaded state of the antenna, driven at ``active_port``.

    ``port_currents`` correspond to a unit current at the active port.
    ``pattern`` and the ``p_*`` power fractions refer to unit incident
    (available) power from the ``z_ref`` source.
    """

    z_in: complex
    gamma: complex
    port_currents: np.ndarray
    incident_power: float
    pattern: VectorPattern
    p_rad: float
    p_load: float
    p_mismatch: float
    loads: LoadState
    active_port: int

    @property
    def total_efficiency(self) -> float:
        return self.p_rad


def _passive_ports(n, active):
    if not 0 <= active < n:
        raise IndexError(f"active port {active} out of range for {n}-port")
    return [k for k in range(n) if k != active]


def reduce_currents(z: np.ndarray, loads, active_port: int = 0, mask_singular: bool = False):
    """Port currents and input impedance for a stack of load vectors.

    Parameters
    ----------
    z : (N, N) complex
        Impedance matrix at one frequency.
    loads : (..., N-1) complex
        Passive-port terminations.

    Returns
    -------
    currents : (..., N) complex
        Currents for unit current at ``active_port``.
    z_in : (...) complex
    ok : (...) bool
        Only returned with ``mask_singular``; False where the passive block
        is singular (those entries are NaN instead of raising).
    """
    z = np.asarray(z, dtype=complex)
    n = z.shape[0]
    p = _passive_ports(n, active_port)
    loads = np.asarray(loads, dtype=complex)
    if loads.shape[-1] != n - 1:
        raise ValueError(f"{n}-port needs {n - 1} loads, got {loads.shape[-1]}")
    zpp = z[np.ix_(p, p)]
    zpa = z[p, active_port]
    zl = zpp + loads[..., :, None] * np.eye(n - 1)
    if mask_singular:
        cond = np.linalg.cond(zl)
        ok = np.isfinite(cond) & (cond <= COND_LIMIT)
        zl = np.where(ok[..., None, None], zl, np.eye(n - 1))
    else:
        _check_cond(zl, "passive block Z_pp + diag(loads) (resonant-load degeneracy)")
    rhs = np.broadcast_to(-zpa, zl.shape[:-1])
    ip = np.linalg.solve(zl, rhs[..., None])[..., 0]
    if mask_singular:
        ip = np.where(ok[..., None], ip, np.nan)
    currents = np.empty(loads.shape[:-1] + (n,), dtype=complex)
    currents[..., active_port] = 1.0
    currents[..., p] = ip
    # explicit fixed-order sum: matmul may take different BLAS paths for
    # different batch shapes, which would break bit-exact paired comparisons
    z_in = z[active_port, active_port]
    for m, k in enumerate(p):
        z_in = z_in + ip[..., m] * z[k, active_port]
    if mask_singular:
        return currents, z_in, ok
    return currents, z_in


def reduce_loaded(net: PortNetwork, f: float, loads: LoadState, active_port: int = 0) -> DrivenSolution:
    """Terminate the passive ports and solve for the driven state."""
    fi = net.freq_index(f)
    currents, z_in = reduce_currents(net.z[fi], loads.loads, active_port)
    z0 = net.z_ref
    gamma = (z_in - z0) / (z_in + z0)
    # available power of a source that pushes unit current into z_in
    p_inc = abs(z_in + z0) ** 2 / (8.0 * z0)
    scaled = currents / np.sqrt(p_inc)
    pattern = net.combine(fi, scaled)
    p_rad = power(pattern)
    p = _passive_ports(net.n_ports, active_port)
    res = np.array([zl.real for zl in loads.loads])
    p_load = float(0.5 * np.sum(np.abs(scaled[p]) ** 2 * res))
    currents.flags.writeable = False
    return DrivenSolution(
        z_in=complex(z_in),
        gamma=complex(gamma),
        port_currents=currents,
        incident_power=float(p_inc),
        pattern=pattern,
        p_rad=p_rad,
        p_load=p_load,
        p_mismatch=float(abs(gamma) ** 2),
        loads=loads,
        active_port=active_port,
    )


def return_loss_db(sol_or_gamma) -> float:
    """``-20 log10 |gamma|``; a perfect match returns ``inf``."""
    gamma = getattr(sol_or_gamma, "gamma", sol_or_gamma)
    mag = abs(gamma)
    if mag == 0.0:
        return float("inf")
    return float(-20.0 * np.log10(mag))


def state_pair(net, f, state_a: LoadState, state_b: LoadState | None = None,
               active_port: int = 0, strict: bool = True, rtol: float = 1e-9):
    """Solve both mirrored states (loads exchanged between the passive ports).

    With ``strict`` the network is required to be exchange-symmetric: the two
    states must show the same ``|gamma|`` to ``rtol``, otherwise
    :class:`SymmetryError` is raised.
    """
    if state_b is None:
        state_b = state_a.swapped()
    elif state_b.loads != state_a.swapped().loads:
        raise ValueError("state_b must be state_a with the passive loads exchanged")
    sa = reduce_loaded(net, f, state_a, active_port)
    sb = reduce_loaded(net, f, state_b, active_port)
    if strict:
        ga, gb = abs(sa.gamma), abs(sb.gamma)
        if abs(ga - gb) > rtol * max(ga, gb, 1e-300):
            raise SymmetryError(
                f"|gamma| differs between mirrored states ({ga:.12g} vs {gb:.12g}); "
                "network is not exchange-symmetric"
            )
    return sa, sb
