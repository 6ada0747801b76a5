"""Compare the compiled and pure-numpy conv1d kernels.

Run directly: python3 benchmarks/bench_kernels.py
"""

import subprocess
import sys
import time

import numpy as np

from clasp.numerics import kernels

SHAPES = [
    # (batch, cin, length, cout, kernel, stride, pad)
    (64, 1, 2048, 32, 7, 2, 3),
    (64, 32, 1024, 64, 7, 2, 3),
    (64, 64, 512, 128, 7, 2, 3),
    (64, 128, 256, 128, 7, 2, 3),
]


def bench_once(reps=5):
    rng = np.random.default_rng(0)
    rows = []
    for bsz, cin, length, cout, k, stride, pad in SHAPES:
        x = rng.standard_normal((bsz, cin, length)).astype(np.float32)
        w = rng.standard_normal((cout, cin, k)).astype(np.float32)
        b = rng.standard_normal(cout).astype(np.float32)
        y, _ = kernels.conv1d_forward(x, w, b, stride, pad)
        gy = rng.standard_normal(y.shape).astype(np.float32)

        best_f = best_b = float("inf")
        for _ in range(reps):
            t0 = time.perf_counter()
            kernels.conv1d_forward(x, w, b, stride, pad)
            best_f = min(best_f, time.perf_counter() - t0)
            t0 = time.perf_counter()
            kernels.conv1d_backward(x, w, stride, pad, gy)
            best_b = min(best_b, time.perf_counter() - t0)
        rows.append((f"{bsz}x{cin}x{length} -> {cout}ch", best_f * 1e3, best_b * 1e3))
    return rows


def main():
    if kernels.BACKEND == "cython":
        # re-run this script under the pure-python backend for the comparison
        out = subprocess.run(
            [sys.executable, __file__],
            env={"CLASP_KERNELS": "py", "PATH": "/usr/bin:/bin"},
            capture_output=True,
            text=True,
        )
        print(out.stdout, end="")
    print(f"backend: {kernels.BACKEND}")
    print(f"{'shape':28s} {'forward ms':>12s} {'backward ms':>12s}")
    for name, fwd, bwd in bench_once():
        print(f"{name:28s} {fwd:12.2f} {bwd:12.2f}")


if __name__ == "__main__":
    main()
