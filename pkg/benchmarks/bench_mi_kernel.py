"""Compare the compiled and pure-numpy BPSK mutual-information kernels.

Usage::

    python3 benchmarks/bench_mi_kernel.py [--channels 2000] [--noise 200] [--repeat 3]

Both backends get the same channel and noise draws; the script reports the
best wall time of each and the largest disagreement between them.
"""
import argparse
import time

import numpy as np

from bsmimo import kernels
from bsmimo.capacity import ChannelConfig, draw_channels


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--channels", type=int, default=2000)
    ap.add_argument("--noise", type=int, default=200)
    ap.add_argument("--snr-db", type=float, default=10.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cfg = ChannelConfig(args.snr_db, args.channels, args.noise, seed=1)
    h, noise, block = draw_channels(cfg.seed, cfg.n_pairs, cfg.n_noise)
    a = h * cfg.amplitude

    t_py, mi_py = best_time(lambda: kernels.python_mi_realizations(a, noise, block, 1.0), args.repeat)
    print(f"python   : {t_py * 1e3:9.1f} ms  mean MI {mi_py.mean():.6f}")
    if kernels.compiled_mi_realizations is None:
        print("compiled : not built (install with Cython available)")
        return
    t_c, mi_c = best_time(lambda: kernels.compiled_mi_realizations(a, noise, block, 1.0), args.repeat)
    print(f"compiled : {t_c * 1e3:9.1f} ms  mean MI {mi_c.mean():.6f}")
    print(f"speedup  : {t_py / t_c:9.2f}x   max |diff| {np.max(np.abs(mi_c - mi_py)):.2e}")


if __name__ == "__main__":
    main()
