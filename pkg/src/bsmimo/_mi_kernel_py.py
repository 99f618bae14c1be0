"""Pure numpy BPSK mutual-information kernel.

Same algorithm and summation policy as the compiled kernel: the four
log-sum-exp terms for each received point and the four per-symbol averages
are summed in ascending order, which makes the result invariant to
relabelling the constellation (``x2 -> -x2``).
"""
import numpy as np

X = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
# DIFF[k, j] = x_k - x_j
DIFF = X[:, None, :] - X[None, :, :]

_TARGET = 1 << 18


def mi_realizations(a, noise, block, noise_var):
    a = np.asarray(a, dtype=complex)
    noise = np.asarray(noise, dtype=complex)
    block = np.asarray(block, dtype=np.intp)
    out = np.empty(a.shape[0])
    inv = 1.0 / noise_var
    chunk = max(1, _TARGET // (16 * max(noise.shape[1], 1)))
    for lo in range(0, a.shape[0], chunk):
        ac = a[lo:lo + chunk]
        # d[r, k, j, i] = sum_c A[r, i, c] * DIFF[k, j, c]
        d = ac[:, None, None, :, 0] * DIFF[None, :, :, 0, None] + ac[:, None, None, :, 1] * DIFF[None, :, :, 1, None]
        dsq = np.sum(d.real ** 2 + d.imag ** 2, axis=-1)
        n = noise[block[lo:lo + chunk]]  # (r, m, 2)
        cross = (
            d.real[:, :, :, None, 0] * n.real[:, None, None, :, 0]
            + d.imag[:, :, :, None, 0] * n.imag[:, None, None, :, 0]
            + d.real[:, :, :, None, 1] * n.real[:, None, None, :, 1]
            + d.imag[:, :, :, None, 1] * n.imag[:, None, None, :, 1]
        )  # (r, k, j, m)
        args = -(dsq[..., None] + 2.0 * cross) * inv
        args = np.sort(np.moveaxis(args, 2, -1), axis=-1)  # (r, k, m, j)
        mx = args[..., 3:]
        lse = np.log2(np.sum(np.exp(args - mx), axis=-1)) + mx[..., 0] * 1.4426950408889634
        mk = np.sort(np.mean(lse, axis=-1), axis=-1)
        out[lo:lo + chunk] = 2.0 - 0.25 * np.sum(mk, axis=-1)
    return out
