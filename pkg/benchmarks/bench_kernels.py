"""Benchmark the numba kernels against the pure-NumPy fallback.

The backend is fixed at import time, so the script re-runs itself in a
subprocess per backend and prints a comparison table.

Run: python benchmarks/bench_kernels.py [--epochs 2000] [--repeats 10]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def build_workload():
    from ortg_lab.ingest import SyntheticSpec, generate_synthetic_dataset
    from ortg_lab.transform import fit_pipeline

    data, _ = generate_synthetic_dataset(7, 240, SyntheticSpec(sigma=2.0))
    X = data.feature_matrix()
    y = data.ortg_array()
    pipe = fit_pipeline(X, y, 18)
    Z = pipe.forward(X)
    y_norm = pipe.target_normalizer.apply(y.reshape(-1, 1)).ravel()
    return Z, y_norm


def run_child(epochs: int, repeats: int) -> dict:
    from ortg_lab import kernels

    Z, y_norm = build_workload()
    sizes = np.array([18, 3, 1], dtype=np.int64)
    rng = np.random.default_rng(0)
    hist = np.empty(epochs)

    timings: dict[str, float] = {"backend": kernels.BACKEND}

    # one warm call per kernel so JIT compilation is not timed
    params = rng.normal(size=kernels.param_count(sizes)) * 0.5
    kernels.adam_train(params.copy(), sizes, Z, y_norm, 1e-2, 0.9, 0.999, 1e-8,
                       50, 0.0, 10 **9, hist[:50])
    kernels.mlp_forward_batch(params, sizes, Z)
    kernels.mlp_input_grad(params, sizes, Z[0])

    t0 = time.perf_counter()
    for r in range(repeats):
        p = params.copy()
        kernels.adam_train(p, sizes, Z, y_norm, 1e-2, 0.9, 0.999, 1e-8,
                           epochs, 0.0, 10 ** 9, hist)
    timings["adam_train"] = (time.perf_counter() - t0) / repeats

    t0 = time.perf_counter()
    for _ in range(2000):
        kernels.mlp_forward_batch(params, sizes, Z)
    timings["forward_batch_x2000"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for i in range(2000):
        kernels.mlp_input_grad(params, sizes, Z[i % Z.shape[0]])
    timings["input_grad_x2000"] = time.perf_counter() - t0

    return timings


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epochs", type=int, default=2000)
    parser.add_argument("--repeats", type=int, default=10)
    args = parser.parse_args()

    if os.environ.get("ORTG_LAB_BENCH_CHILD"):
        print(json.dumps(run_child(args.epochs, args.repeats)))
        return

    results = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, ORTG_LAB_BACKEND=backend, ORTG_LAB_BENCH_CHILD="1")
        proc = subprocess.run(
            [sys.executable, __file__, "--epochs", str(args.epochs),
             "--repeats", str(args.repeats)],
            env=env, capture_output=True, text=True,
        )
        if proc.returncode != 0:
            print(f"{backend} run failed:\n{proc.stderr}", file=sys.stderr)
            continue
        results[backend] = json.loads(proc.stdout.strip().split("\n")[-1])

    if set(results) != {"numba", "numpy"}:
        sys.exit(1)

    print(f"{'kernel':<24} {'numba':>10} {'numpy':>10} {'speedup':>9}")
    for key in ("adam_train", "forward_batch_x2000", "input_grad_x2000"):
        nb = results["numba"][key]
        np_ = results["numpy"][key]
        print(f"{key:<24} {nb * 1000:>8.1f}ms {np_ * 1000:>8.1f}ms {np_ / nb:>8.2f}x")


if __name__ == "__main__":
    main()
