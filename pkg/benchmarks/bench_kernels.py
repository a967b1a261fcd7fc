"""Compare the numba and pure-numpy kernel backends on the hot paths.

The backend is fixed at import time by WALKGRID_DISABLE_NUMBA, so each
backend runs in its own subprocess; the parent aggregates timings and
checks that both produced identical checksums.

Usage::

    python3 benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _workloads():
    import numpy as np

    from walkgrid import kernels

    rng = np.random.default_rng(0xBE4C4)

    # one large catchment rasterized over a city-sized grid
    ang = 2.0 * np.pi * np.arange(256) / 256
    cx, cy, r = 25_000.0, 25_000.0, 1_200.0
    poly_xs = cx + r * np.cos(ang)
    poly_ys = cy + r * np.sin(ang)
    offsets1 = np.array([0, 256], np.int64)
    signs1 = np.array([1.0])

    def bench_cell_areas():
        ids, areas = kernels.polygon_cell_areas(
            poly_xs, poly_ys, offsets1, signs1, 0.0, 0.0, 250.0, 200, 200)
        return float(areas.sum()) + float(ids.sum())

    # point-in-polygon over a ring with a hole
    hole_xs = cx + 0.4 * r * np.cos(ang)[::-1]
    hole_ys = cy + 0.4 * r * np.sin(ang)[::-1]
    pip_xs = np.concatenate([poly_xs, hole_xs])
    pip_ys = np.concatenate([poly_ys, hole_ys])
    pip_offsets = np.array([0, 256, 512], np.int64)
    px = rng.uniform(cx - 2 * r, cx + 2 * r, 200_000)
    py = rng.uniform(cy - 2 * r, cy + 2 * r, 200_000)

    def bench_points_in_rings():
        inside = kernels.points_in_rings(px, py, pip_xs, pip_ys, pip_offsets)
        return float(inside.sum())

    # decay scoring: 100k cells x 45 categories, 6-entry config
    counts = rng.integers(0, 5, (100_000, 45)).astype(np.uint16)
    mstart = np.array([0, 3, 4, 5, 7, 8, 9], np.int64)
    midx = np.array([0, 7, 12, 20, 31, 3, 9, 40, 44], np.int64)
    weights = np.array([1.0, 2.0, 1.0, 1.0, 2.0, 1.0])
    rates = np.array([0.3466, 0.6931, 1.3863, 0.6931, 1.3863, 0.6931])
    required = np.array([False, False, True, False, False, False])

    def bench_score_cells():
        out = kernels.score_cells(counts, mstart, midx, weights, rates,
                                  required)
        return float(out.sum())

    return {
        "polygon_cell_areas[256-gon, 200x200 grid]": bench_cell_areas,
        "points_in_rings[200k pts, ring+hole]": bench_points_in_rings,
        "score_cells[100k cells, 6 entries]": bench_score_cells,
    }


def run_worker(repeats: int) -> None:
    from walkgrid import kernels

    kernels.warmup()
    results = {"backend": kernels.backend_name(), "ops": {}}
    for name, fn in _workloads().items():
        checksum = fn()  # untimed warm call (JIT specialization, caches)
        times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            got = fn()
            times.append(time.perf_counter() - t0)
            assert got == checksum
        results["ops"][name] = {"best_s": min(times), "checksum": checksum}
    json.dump(results, sys.stdout)


def run_comparison(repeats: int) -> int:
    here = os.path.abspath(__file__)
    runs = {}
    for backend, disable in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, WALKGRID_DISABLE_NUMBA=disable)
        proc = subprocess.run([sys.executable, here, "--worker",
                               "--repeats", str(repeats)],
                              env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(proc.stderr, file=sys.stderr)
            return proc.returncode
        doc = json.loads(proc.stdout)
        if doc["backend"] != backend:
            print(f"expected backend {backend}, got {doc['backend']} "
                  f"(numba not importable?)", file=sys.stderr)
            return 1
        runs[backend] = doc["ops"]

    width = max(len(n) for n in runs["numba"]) + 2
    print(f"{'operation':<{width}}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    ok = True
    for name in runs["numba"]:
        jit = runs["numba"][name]["best_s"]
        np_ = runs["numpy"][name]["best_s"]
        match = (runs["numba"][name]["checksum"]
                 == runs["numpy"][name]["checksum"])
        ok &= match
        flag = "" if match else "  CHECKSUM MISMATCH"
        print(f"{name:<{width}}{jit * 1e3:>10.2f}ms{np_ * 1e3:>10.2f}ms"
              f"{np_ / jit:>9.1f}x{flag}")
    if not ok:
        print("backends disagree; see flags above", file=sys.stderr)
        return 1
    return 0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--worker", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        run_worker(args.repeats)
        return 0
    return run_comparison(args.repeats)


if __name__ == "__main__":
    sys.exit(main())
