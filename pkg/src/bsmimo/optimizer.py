"""Reactance sweeps, band-wide optimal loads and sub-band quantization.

For every load pair ``(X1, X2)`` on a grid the two mirrored states are
solved, the sum/difference basis is formed and its Gram matrix goes into the
ergodic BPSK capacity.  The basis Gram matrix is computed in port-current
space, ``<sum a_k P_k, sum b_l P_l> = sum a_k conj(b_l) <P_k, P_l>``, which is
the same quadrature as synthesizing each pattern but costs O(N^2) per cell.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .capacity import ChannelConfig, _psd_sqrt, ergodic_capacity_many
from .network import LoadState, PortNetwork, reduce_currents

__all__ = [
    "ReactanceGrid",
    "BestCell",
    "SweepResult",
    "Segment",
    "SubBandPlan",
    "ContourTable",
    "sweep",
    "optimize_band",
    "evaluate_loads",
    "subband_quantize",
    "export_contour",
    "band_rows",
    "write_band_csv",
    "write_contour_csv",
]

_SQRT1_2 = np.sqrt(0.5)


@dataclass(frozen=True, eq=False)
class ReactanceGrid:
    x1_values: np.ndarray
    x2_values: np.ndarray

    def __post_init__(self):
        for name in ("x1_values", "x2_values"):
            v = np.array(getattr(self, name), dtype=float).reshape(-1)
            if v.size < 1 or np.any(np.diff(v) <= 0):
                raise ValueError(f"{name} must be strictly increasing")
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @classmethod
    def uniform(cls, lo: float = -400.0, hi: float = 400.0, n: int = 41):
        v = np.linspace(lo, hi, n)
        return cls(v, v)

    @property
    def shape(self):
        return (self.x1_values.size, self.x2_values.size)

    @property
    def square(self) -> bool:
        return np.array_equal(self.x1_values, self.x2_values)


@dataclass(frozen=True)
class BestCell:
    x1: float
    x2: float
    capacity: float
    std_error: float
    return_loss_db: float
    imbalance_db: float
    index: tuple


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Capacity over a reactance grid at one frequency.

    Maps are indexed ``[i1, i2]``; degenerate (singular-load) cells are NaN.
    ``return_loss_map`` is the worse of the two mirrored states.
    """

    frequency: float
    grid: ReactanceGrid
    capacity_map: np.ndarray
    std_error_map: np.ndarray
    return_loss_map: np.ndarray
    imbalance_map: np.ndarray
    best: BestCell
    series_resistance: float = 0.0


def _quad_form(m, a, b):
    # sum_kl a_k conj(b_l) m_kl, fixed summation order
    n = m.shape[0]
    acc = 0.0
    for k in range(n):
        for l in range(n):
            acc = acc + a[..., k] * np.conj(b[..., l]) * m[k, l]
    return acc


def _state_coefficients(z, loads, active_port, z_ref):
    currents, z_in, ok = reduce_currents(z, loads, active_port, mask_singular=True)
    with np.errstate(invalid="ignore"):  # masked cells carry NaN
        gamma = (z_in - z_ref) / (z_in + z_ref)
        p_inc = np.abs(z_in + z_ref) ** 2 / (8.0 * z_ref)
        return currents / np.sqrt(p_inc)[..., None], gamma, ok


def _basis_gram(m, c1, c2):
    b1 = (c2 + c1) * _SQRT1_2
    b2 = (c2 - c1) * _SQRT1_2
    p1 = _quad_form(m, b1, b1).real
    p2 = _quad_form(m, b2, b2).real
    x = _quad_form(m, b1, b2)
    r = np.empty(np.shape(p1) + (2, 2), dtype=complex)
    r[..., 0, 0] = p1
    r[..., 1, 1] = p2
    r[..., 0, 1] = x
    r[..., 1, 0] = np.conj(x)
    return r


def _rl_db(gamma):
    with np.errstate(divide="ignore"):
        return -20.0 * np.log10(np.abs(gamma))


def _imbalance(r):
    p1, p2 = r[..., 0, 0].real, r[..., 1, 1].real
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.abs(10.0 * np.log10(p1 / p2))


def _evaluate_cells(net, fi, loads_a, active_port, cfg, threads):
    """Capacity, std error, worst RL and imbalance for stacks of state-A loads."""
    z = net.z[fi]
    loads_b = loads_a[..., ::-1]
    c1, g1, ok1 = _state_coefficients(z, loads_a, active_port, net.z_ref)
    c2, g2, ok2 = _state_coefficients(z, loads_b, active_port, net.z_ref)
    ok = ok1 & ok2
    r = _basis_gram(net.port_gram(fi), c1, c2)
    shape = ok.shape
    cap = np.full(shape, np.nan)
    se = np.full(shape, np.nan)
    if np.any(ok):
        m, s = ergodic_capacity_many(_psd_sqrt(r[ok]), cfg, threads=threads)
        cap[ok], se[ok] = m, s
    rl = np.minimum(_rl_db(g1), _rl_db(g2))
    rl = np.where(ok, rl, np.nan)
    imb = np.where(ok, _imbalance(r), np.nan)
    return cap, se, rl, imb


def _argmax(cap, rl):
    valid = ~np.isnan(cap)
    if not np.any(valid):
        return None
    cmax = np.max(cap[valid])
    tied = valid & (cap == cmax)
    rl_t = np.where(tied, rl, -np.inf)
    rmax = np.max(rl_t)
    cand = np.argwhere(tied & (rl_t == rmax))
    return tuple(int(v) for v in cand[0])  # argwhere is row-major: lowest (i1, i2)


def sweep(net: PortNetwork, f: float, grid: ReactanceGrid, cfg: ChannelConfig,
          active_port: int = 0, series_resistance: float = 0.0, threads: int = 1) -> SweepResult:
    """Capacity over all ``(X1, X2)`` cells at one frequency (paired draws)."""
    if net.n_ports != 3:
        raise ValueError("reactance sweeps need a three-port network")
    if series_resistance < 0:
        raise ValueError("series_resistance must be >= 0")
    fi = net.freq_index(f)
    x1, x2 = np.meshgrid(grid.x1_values, grid.x2_values, indexing="ij")
    loads = np.stack([series_resistance + 1j * x1, series_resistance + 1j * x2], axis=-1)
    cap, se, rl, imb = _evaluate_cells(net, fi, loads, active_port, cfg, threads)
    for a in (cap, se, rl, imb):
        a.flags.writeable = False
    idx = _argmax(cap, rl)
    if idx is None:
        best = BestCell(np.nan, np.nan, np.nan, np.nan, np.nan, np.nan, (-1, -1))
    else:
        best = BestCell(
            float(grid.x1_values[idx[0]]), float(grid.x2_values[idx[1]]),
            float(cap[idx]), float(se[idx]), float(rl[idx]), float(imb[idx]), idx,
        )
    return SweepResult(float(net.frequencies[fi]), grid, cap, se, rl, imb, best, series_resistance)


def optimize_band(net: PortNetwork, f_list, grid: ReactanceGrid, cfg: ChannelConfig,
                  active_port: int = 0, series_resistance: float = 0.0, threads: int = 1) -> list[SweepResult]:
    """Per-frequency sweeps; results come back in ``f_list`` order."""
    f_list = list(f_list)
    if not f_list:
        raise ValueError("f_list is empty")

    def one(f):
        return sweep(net, f, grid, cfg, active_port, series_resistance)

    if threads > 1 and len(f_list) > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, f_list))
    return [one(f) for f in f_list]


def evaluate_loads(net: PortNetwork, f: float, state: LoadState, cfg: ChannelConfig,
                   active_port: int = 0) -> tuple[float, float]:
    """Capacity and std error of one fixed load state, same draws as :func:`sweep`."""
    fi = net.freq_index(f)
    loads = np.array([state.loads], dtype=complex)
    cap, se, _, _ = _evaluate_cells(net, fi, loads, active_port, cfg, 1)
    return float(cap[0]), float(se[0])


# -- sub-band quantization ------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    f_low: float
    f_high: float
    x1: float
    x2: float
    worst_case_capacity: float
    first: int
    last: int


@dataclass(frozen=True)
class SubBandPlan:
    segments: tuple

    @property
    def worst_case_capacity(self) -> float:
        return min(s.worst_case_capacity for s in self.segments)

    def to_json(self) -> str:
        return json.dumps({
            "worst_case_capacity": self.worst_case_capacity,
            "segments": [s.__dict__ for s in self.segments],
        }, indent=2)


def _candidate_table(results):
    grid = results[0].grid
    for r in results[1:]:
        if not (np.array_equal(r.grid.x1_values, grid.x1_values) and np.array_equal(r.grid.x2_values, grid.x2_values)):
            raise ValueError("all sweeps must share one reactance grid")
    cands = []
    for r in results:
        if r.best.index != (-1, -1) and r.best.index not in cands:
            cands.append(r.best.index)
    table = np.array([[r.capacity_map[c] for c in cands] for r in results])
    return grid, cands, np.where(np.isnan(table), -np.inf, table)


def subband_quantize(results: list[SweepResult], k: int) -> SubBandPlan:
    """Split the band into ``k`` contiguous segments with one load pair each.

    Candidate pairs are the per-frequency optima.  A segment's value is the
    best candidate's minimum capacity over the segment; the dynamic program
    maximizes the smallest segment value (max-min over segmentations).
    """
    n = len(results)
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}]")
    freqs = np.array([r.frequency for r in results])
    if np.any(np.diff(freqs) <= 0):
        raise ValueError("results must be sorted by increasing frequency")
    grid, cands, table = _candidate_table(results)
    if not cands:
        raise ValueError("no valid sweep cells")

    # seg[a, b] = (value, candidate) for segment a..b inclusive
    seg_val = np.full((n, n), -np.inf)
    seg_arg = np.zeros((n, n), dtype=int)
    for a in range(n):
        running = np.full(len(cands), np.inf)
        for b in range(a, n):
            running = np.minimum(running, table[b])
            c = int(np.argmax(running))
            seg_val[a, b], seg_arg[a, b] = running[c], c

    # best[m][b]: best max-min covering 0..b with m+1 segments
    best = np.full((k, n), -np.inf)
    back = np.zeros((k, n), dtype=int)
    best[0] = seg_val[0]
    for m in range(1, k):
        for b in range(m, n):
            vals = [min(best[m - 1][a - 1], seg_val[a, b]) for a in range(m, b + 1)]
            a = int(np.argmax(vals)) + m
            best[m][b], back[m][b] = vals[a - m], a

    bounds = []
    b = n - 1
    for m in range(k - 1, -1, -1):
        a = back[m][b] if m > 0 else 0
        bounds.append((a, b))
        b = a - 1
    bounds.reverse()

    edges = np.concatenate([[freqs[0]], (freqs[:-1] + freqs[1:]) / 2, [freqs[-1]]])
    segments = []
    for a, b in bounds:
        i1, i2 = cands[seg_arg[a, b]]
        segments.append(Segment(
            f_low=float(edges[a]), f_high=float(edges[b + 1]),
            x1=float(grid.x1_values[i1]), x2=float(grid.x2_values[i2]),
            worst_case_capacity=float(seg_val[a, b]), first=int(a), last=int(b),
        ))
    return SubBandPlan(tuple(segments))


# -- tabular output ---------------------------------------------------------------


@dataclass(frozen=True)
class ContourTable:
    rows: list
    plateau_fraction: float


def export_contour(result: SweepResult, tolerance: float = 0.05) -> ContourTable:
    """``(x1, x2, capacity)`` rows and the fraction of cells within 5% of the maximum."""
    cap = result.capacity_map
    rows = [
        (float(x1), float(x2), float(cap[i, j]))
        for i, x1 in enumerate(result.grid.x1_values)
        for j, x2 in enumerate(result.grid.x2_values)
    ]
    valid = cap[~np.isnan(cap)]
    if valid.size == 0:
        return ContourTable(rows, 0.0)
    cmax = valid.max()
    frac = float(np.count_nonzero(valid >= cmax - tolerance * abs(cmax)) / valid.size)
    return ContourTable(rows, frac)


def band_rows(results: list[SweepResult]):
    return [
        (r.frequency, r.best.x1, r.best.x2, r.best.capacity, r.best.return_loss_db, r.best.imbalance_db)
        for r in results
    ]


def _fmt(v):
    return repr(float(v))


def write_band_csv(path, results: list[SweepResult]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["f_hz", "x1_ohm", "x2_ohm", "capacity", "rl_db", "imbalance_db"])
        for row in band_rows(results):
            w.writerow([_fmt(v) for v in row])


def write_contour_csv(path, table: ContourTable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x1_ohm", "x2_ohm", "capacity"])
        for row in table.rows:
            w.writerow([_fmt(v) for v in row])
