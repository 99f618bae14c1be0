"""Ergodic BPSK capacity of two streams sent over the basis patterns.

Channel model: ``y = a * H_w R^(1/2) x + n`` with ``x`` uniform on
``{+-1}^2``, ``H_w`` a 2x2 i.i.d. CN(0, 1) matrix (two uncorrelated receive
antennas), ``R`` the transmit Gram matrix of the basis patterns and
``n ~ CN(0, I)``.

SNR convention: ``snr`` is the total transmit power over the noise variance
per real dimension.  Each stream gets half the power and enters through the
``1/sqrt(2)`` of the basis synthesis, so the per-stream, per-branch SNR is
``snr / 8`` for a unit-power basis (``a = sqrt(snr / 8)``).  ``R`` is not
normalized: antenna efficiency and basis imbalance reduce capacity.

Channels are drawn in antithetic pairs ``(H_w, H_w diag(1, -1))`` sharing one
noise block.  Together with the order-independent kernel summation this
makes the estimate exactly invariant to ``B2 -> -B2``, i.e. to swapping the
two load states.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import DegenerateError
from .pattern import BasisPair

__all__ = [
    "ChannelConfig",
    "TxCorrelation",
    "CapacityEstimate",
    "tx_correlation",
    "bpsk_mutual_information",
    "ergodic_capacity",
    "ergodic_capacity_many",
    "ideal_reference",
    "draw_channels",
]


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float
    n_channels: int = 2000
    n_noise: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.n_channels < 1 or self.n_noise < 1:
            raise ValueError("n_channels and n_noise must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    @property
    def n_pairs(self) -> int:
        return (self.n_channels + 1) // 2

    @property
    def amplitude(self) -> float:
        return float(np.sqrt(10.0 ** (self.snr_db / 10.0) / 8.0))


@dataclass(frozen=True, eq=False)
class TxCorrelation:
    r_tx: np.ndarray

    def __post_init__(self):
        r = np.array(self.r_tx, dtype=complex)
        if r.shape != (2, 2):
            raise ValueError("r_tx must be 2x2")
        tr = abs(r[0, 0].real) + abs(r[1, 1].real)
        tol = 1e-12 * max(tr, 1.0)
        if abs(r[0, 1] - np.conj(r[1, 0])) > tol or abs(r[0, 0].imag) > tol or abs(r[1, 1].imag) > tol:
            raise DegenerateError("r_tx is not Hermitian")
        if np.min(np.linalg.eigvalsh(r)) < -tol:
            raise DegenerateError("r_tx is not positive semidefinite")
        r.flags.writeable = False
        object.__setattr__(self, "r_tx", r)

    @property
    def trace(self) -> float:
        return float(self.r_tx[0, 0].real + self.r_tx[1, 1].real)

    def sqrt(self) -> np.ndarray:
        return _psd_sqrt(self.r_tx)


def _psd_sqrt(r):
    # closed form for 2x2 PSD: (R + sqrt(det) I) / sqrt(tr + 2 sqrt(det));
    # maps D R D to D sqrt(R) D exactly for D = diag(1, -1)
    a, d = r[..., 0, 0].real, r[..., 1, 1].real
    b = r[..., 0, 1]
    det = np.maximum(a * d - (b.real ** 2 + b.imag ** 2), 0.0)
    s = np.sqrt(det)
    t = np.sqrt(np.maximum(a + d + 2 * s, 0.0))
    inv = np.where(t > 0, 1.0 / np.where(t > 0, t, 1.0), 0.0)
    out = np.empty(np.shape(r), dtype=complex)
    out[..., 0, 0] = (a + s) * inv
    out[..., 1, 1] = (d + s) * inv
    out[..., 0, 1] = b * inv
    out[..., 1, 0] = np.conj(b) * inv
    return out


@dataclass(frozen=True)
class CapacityEstimate:
    bits_per_symbol: float
    std_error: float
    config: ChannelConfig

    def to_dict(self):
        return {"bits_per_symbol": self.bits_per_symbol, "std_error": self.std_error,
                "config": asdict(self.config)}


def tx_correlation(basis: BasisPair) -> TxCorrelation:
    r = np.array([[basis.p_b1, basis.cross_corr], [np.conj(basis.cross_corr), basis.p_b2]], dtype=complex)
    return TxCorrelation(r)


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


@lru_cache(maxsize=16)
def draw_channels(seed: int, n_pairs: int, n_noise: int):
    """Common random numbers for one seed.

    Pair ``p`` draws from its own stream ``SeedSequence(seed, spawn_key=(p,))``,
    so the draws do not depend on how work is split across threads.

    Returns
    -------
    h_w : (2*n_pairs, 2, 2) complex
        Realization ``2p + 1`` is realization ``2p`` with its second column negated.
    noise : (n_pairs, n_noise, 2) complex, unit variance
    block : (2*n_pairs,) int
    """
    h_w = np.empty((2 * n_pairs, 2, 2), dtype=complex)
    noise = np.empty((n_pairs, n_noise, 2), dtype=complex)
    for p in range(n_pairs):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(p,))))
        h = _cn(rng, (2, 2))
        h_w[2 * p] = h
        h[:, 1] = -h[:, 1]
        h_w[2 * p + 1] = h
        noise[p] = _cn(rng, (n_noise, 2))
    block = np.repeat(np.arange(n_pairs), 2)
    for a in (h_w, noise, block):
        a.flags.writeable = False
    return h_w, noise, block


def _matmul2(h, s):
    # explicit 2x2 products keep sign symmetries bit-exact
    out = np.empty(np.broadcast_shapes(h.shape, s.shape), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[..., i, j] = h[..., i, 0] * s[..., 0, j] + h[..., i, 1] * s[..., 1, j]
    return out


def _run_kernel(a, noise, block, noise_var, threads):
    n = a.shape[0]
    if threads <= 1 or n < 2 * threads:
        return kernels.mi_realizations(a, noise, block, noise_var)
    edges = np.linspace(0, n, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as ex:
        parts = ex.map(
            lambda lo_hi: kernels.mi_realizations(a[lo_hi[0]:lo_hi[1]], noise, block[lo_hi[0]:lo_hi[1]], noise_var),
            zip(edges[:-1], edges[1:]),
        )
        return np.concatenate(list(parts))


def bpsk_mutual_information(h, noise_var: float, n_noise: int, seed: int) -> float:
    """``I(x; Hx + n)`` in bits for ``x`` uniform on ``{+-1}^2``, ``n ~ CN(0, noise_var I)``."""
    if not noise_var > 0:
        raise ValueError("noise_var must be positive")
    h = np.asarray(h, dtype=complex).reshape(1, 2, 2)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    noise = _cn(rng, (1, n_noise, 2)) * np.sqrt(noise_var)
    return float(kernels.mi_realizations(h, noise, np.zeros(1, dtype=np.intp), noise_var)[0])


def _estimates(mi, n_pairs):
    pair = mi[0::2] + mi[1::2]
    mean = float(np.mean(pair) / 2)
    se = float(np.std(pair / 2, ddof=1) / np.sqrt(n_pairs)) if n_pairs > 1 else float("nan")
    return mean, se


def ergodic_capacity_many(sqrt_r, cfg: ChannelConfig, rx_transform=None, threads: int = 1):
    """Capacities for a stack of transmit-correlation square roots.

    All entries share the same channel and noise draws (paired comparison).

    Returns
    -------
    mean, std_error : (K,) float arrays
    """
    sqrt_r = np.asarray(sqrt_r, dtype=complex).reshape(-1, 2, 2)
    h_w, noise, block = draw_channels(int(cfg.seed), cfg.n_pairs, cfg.n_noise)
    if rx_transform is not None:
        h_w = _matmul2(np.asarray(rx_transform, dtype=complex), h_w)
    a = _matmul2(h_w[None], sqrt_r[:, None]) * cfg.amplitude
    k, r = a.shape[:2]
    mi = _run_kernel(a.reshape(k * r, 2, 2), noise, np.tile(block, k), 1.0, threads).reshape(k, r)
    res = [_estimates(row, cfg.n_pairs) for row in mi]
    return np.array([m for m, _ in res]), np.array([s for _, s in res])


def ergodic_capacity(r_tx: TxCorrelation, cfg: ChannelConfig, rx_transform=None, threads: int = 1) -> CapacityEstimate:
    if not isinstance(r_tx, TxCorrelation):
        r_tx = TxCorrelation(r_tx)
    m, s = ergodic_capacity_many(r_tx.sqrt(), cfg, rx_transform, threads)
    return CapacityEstimate(float(m[0]), float(s[0]), cfg)


def ideal_reference(cfg: ChannelConfig, threads: int = 1) -> CapacityEstimate:
    """Two ideal uncoupled unit-efficiency antennas (``R = I``)."""
    return ergodic_capacity(TxCorrelation(np.eye(2)), cfg, threads=threads)
