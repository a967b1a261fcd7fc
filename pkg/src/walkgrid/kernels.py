"""Hot numeric kernels: rectangle clipping, point-in-polygon, cell scoring.

Two interchangeable backends:

* numba ``@njit`` (default when numba imports cleanly), and
* a pure numpy/Python path, selected by setting ``WALKGRID_DISABLE_NUMBA=1``
  in the environment before import.

Both paths are exercised by the test suite and compared by
``benchmarks/bench_kernels.py``. All kernels are pure functions of their
inputs; results do not depend on thread count.

Geometry convention: rings are passed as *open* vertex arrays (no repeated
closing vertex). Multi-ring shapes arrive flattened: coordinate arrays
``xs``/``ys``, an ``offsets`` array of length ``n_rings + 1`` delimiting each
ring, and per-ring ``signs`` (+1 exterior, -1 hole).
"""

from __future__ import annotations

import math
import os

import numpy as np

_env = os.environ.get("WALKGRID_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _env in {"1", "true", "yes", "on"}

NUMBA_ENABLED = False
if not _DISABLED:
    try:
        from numba import njit, prange

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dep, but stay runnable
        pass

if not NUMBA_ENABLED:
    def njit(*args, **kwargs):  # noqa: D103 - identity decorator
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    prange = range


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


# ---------------------------------------------------------------------------
# Rectangle clipping (Sutherland-Hodgman against an axis-aligned window).
# The clip window is convex, so the clipped ring's shoelace area equals the
# exact intersection area even for non-convex subject rings: degenerate
# bridge edges cancel in the signed sum.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _clip_edge(inx, iny, n, axis, bound, keep_le, outx, outy):
    # One half-plane pass; writes <= 2n vertices into out buffers.
    m = 0
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        cur = inx[i] if axis == 0 else iny[i]
        nxt = inx[j] if axis == 0 else iny[j]
        if keep_le:
            cur_in = cur <= bound
            nxt_in = nxt <= bound
        else:
            cur_in = cur >= bound
            nxt_in = nxt >= bound
        if cur_in:
            outx[m] = inx[i]
            outy[m] = iny[i]
            m += 1
        if cur_in != nxt_in:
            t = (bound - cur) / (nxt - cur)
            outx[m] = inx[i] + t * (inx[j] - inx[i])
            outy[m] = iny[i] + t * (iny[j] - iny[i])
            m += 1
    return m


@njit(cache=True)
def _shoelace(xs, ys, n):
    acc = 0.0
    for i in range(n):
        j = i + 1
        if j == n:
            j = 0
        acc += xs[i] * ys[j] - xs[j] * ys[i]
    return 0.5 * acc


@njit(cache=True)
def _ring_clip_area_buf(xs, ys, x0, y0, x1, y1, ax, ay, bx, by):
    n = xs.shape[0]
    if n < 3:
        return 0.0
    rx0 = xs[0]
    rx1 = xs[0]
    ry0 = ys[0]
    ry1 = ys[0]
    for i in range(1, n):
        if xs[i] < rx0:
            rx0 = xs[i]
        if xs[i] > rx1:
            rx1 = xs[i]
        if ys[i] < ry0:
            ry0 = ys[i]
        if ys[i] > ry1:
            ry1 = ys[i]
    if rx1 <= x0 or rx0 >= x1 or ry1 <= y0 or ry0 >= y1:
        return 0.0
    if rx0 >= x0 and rx1 <= x1 and ry0 >= y0 and ry1 <= y1:
        return abs(_shoelace(xs, ys, n))
    for i in range(n):
        ax[i] = xs[i]
        ay[i] = ys[i]
    m = _clip_edge(ax, ay, n, 0, x0, False, bx, by)
    m = _clip_edge(bx, by, m, 0, x1, True, ax, ay)
    m = _clip_edge(ax, ay, m, 1, y0, False, bx, by)
    m = _clip_edge(bx, by, m, 1, y1, True, ax, ay)
    if m < 3:
        return 0.0
    return abs(_shoelace(ax, ay, m))


@njit(cache=True)
def _ring_clip_area(xs, ys, x0, y0, x1, y1):
    cap = 16 * xs.shape[0] + 16
    ax = np.empty(cap, np.float64)
    ay = np.empty(cap, np.float64)
    bx = np.empty(cap, np.float64)
    by = np.empty(cap, np.float64)
    return _ring_clip_area_buf(xs, ys, x0, y0, x1, y1, ax, ay, bx, by)


def ring_clip_area(xs: np.ndarray, ys: np.ndarray, x0: float, y0: float,
                   x1: float, y1: float) -> float:
    """Exact area of (open ring) ∩ (axis-aligned rectangle [x0,x1]×[y0,y1])."""
    return float(_ring_clip_area(np.ascontiguousarray(xs, np.float64),
                                 np.ascontiguousarray(ys, np.float64),
                                 float(x0), float(y0), float(x1), float(y1)))


# ---------------------------------------------------------------------------
# Polygon-vs-grid overlap: for every grid cell touched by the shape's bbox,
# the exact intersection area with the (possibly multi-ring) shape.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _polygon_cell_areas(xs, ys, offsets, signs, ox, oy, cell, n_cols, n_rows):
    n_rings = offsets.shape[0] - 1
    gx0 = xs[0]
    gx1 = xs[0]
    gy0 = ys[0]
    gy1 = ys[0]
    for i in range(xs.shape[0]):
        if xs[i] < gx0:
            gx0 = xs[i]
        if xs[i] > gx1:
            gx1 = xs[i]
        if ys[i] < gy0:
            gy0 = ys[i]
        if ys[i] > gy1:
            gy1 = ys[i]
    col0 = int(math.floor((gx0 - ox) / cell))
    col1 = int(math.floor((gx1 - ox) / cell))
    row0 = int(math.floor((gy0 - oy) / cell))
    row1 = int(math.floor((gy1 - oy) / cell))
    if col0 < 0:
        col0 = 0
    if row0 < 0:
        row0 = 0
    if col1 > n_cols - 1:
        col1 = n_cols - 1
    if row1 > n_rows - 1:
        row1 = n_rows - 1
    if col1 < col0 or row1 < row0:
        return np.empty(0, np.int64), np.empty(0, np.float64)

    max_len = 0
    for r in range(n_rings):
        ln = offsets[r + 1] - offsets[r]
        if ln > max_len:
            max_len = ln
    cap = int(16 * max_len + 16)
    ax = np.empty(cap, np.float64)
    ay = np.empty(cap, np.float64)
    bx = np.empty(cap, np.float64)
    by = np.empty(cap, np.float64)

    n_cand = (col1 - col0 + 1) * (row1 - row0 + 1)
    ids = np.empty(n_cand, np.int64)
    areas = np.empty(n_cand, np.float64)
    m = 0
    for row in range(row0, row1 + 1):
        y0 = oy + row * cell
        y1 = y0 + cell
        for col in range(col0, col1 + 1):
            x0 = ox + col * cell
            x1 = x0 + cell
            acc = 0.0
            for r in range(n_rings):
                s = offsets[r]
                e = offsets[r + 1]
                acc += signs[r] * _ring_clip_area_buf(
                    xs[s:e], ys[s:e], x0, y0, x1, y1, ax, ay, bx, by)
            ids[m] = row * n_cols + col
            areas[m] = acc
            m += 1
    return ids[:m], areas[:m]


def polygon_cell_areas(xs, ys, offsets, signs, ox, oy, cell, n_cols, n_rows):
    """Per-cell overlap areas of a flattened multi-ring shape with a grid.

    Returns ``(cell_ids, areas)`` covering every cell in the shape's bbox
    clamped to the grid; areas may be 0 for cells the bbox touches but the
    shape misses.
    """
    return _polygon_cell_areas(
        np.ascontiguousarray(xs, np.float64),
        np.ascontiguousarray(ys, np.float64),
        np.ascontiguousarray(offsets, np.int64),
        np.ascontiguousarray(signs, np.float64),
        float(ox), float(oy), float(cell), int(n_cols), int(n_rows))


# ---------------------------------------------------------------------------
# Point-in-polygon, even-odd rule over all rings (holes toggle membership).
# ---------------------------------------------------------------------------


@njit(cache=True)
def _point_in_rings(px, py, xs, ys, offsets):
    inside = False
    for r in range(offsets.shape[0] - 1):
        s = offsets[r]
        e = offsets[r + 1]
        j = e - 1
        for i in range(s, e):
            yi = ys[i]
            yj = ys[j]
            if (yi > py) != (yj > py):
                xc = xs[i] + (py - yi) * (xs[j] - xs[i]) / (yj - yi)
                if px < xc:
                    inside = not inside
            j = i
    return inside


@njit(cache=True, parallel=True)
def _points_in_rings_batch(pxs, pys, xs, ys, offsets, out):
    for i in prange(pxs.shape[0]):
        out[i] = _point_in_rings(pxs[i], pys[i], xs, ys, offsets)


def _points_in_rings_np(pxs, pys, xs, ys, offsets, out):
    # edge loop with vectorized point tests; ragged rings preclude a
    # single broadcast over edges
    inside = np.zeros(pxs.shape[0], np.bool_)
    for r in range(offsets.shape[0] - 1):
        s, e = offsets[r], offsets[r + 1]
        rx = xs[s:e]
        ry = ys[s:e]
        jx = np.roll(rx, 1)
        jy = np.roll(ry, 1)
        for i in range(rx.shape[0]):
            yi = ry[i]
            yj = jy[i]
            if yi == yj:
                continue
            straddles = (yi > pys) != (yj > pys)
            if not straddles.any():
                continue
            xc = rx[i] + (pys[straddles] - yi) * (jx[i] - rx[i]) / (yj - yi)
            hits = np.nonzero(straddles)[0][pxs[straddles] < xc]
            inside[hits] = ~inside[hits]
    out[:] = inside


def point_in_rings(px: float, py: float, xs, ys, offsets) -> bool:
    return bool(_point_in_rings(float(px), float(py),
                                np.ascontiguousarray(xs, np.float64),
                                np.ascontiguousarray(ys, np.float64),
                                np.ascontiguousarray(offsets, np.int64)))


def points_in_rings(pxs, pys, xs, ys, offsets) -> np.ndarray:
    pxs = np.ascontiguousarray(pxs, np.float64)
    pys = np.ascontiguousarray(pys, np.float64)
    out = np.empty(pxs.shape[0], np.bool_)
    batch = _points_in_rings_batch if NUMBA_ENABLED else _points_in_rings_np
    batch(pxs, pys,
          np.ascontiguousarray(xs, np.float64),
          np.ascontiguousarray(ys, np.float64),
          np.ascontiguousarray(offsets, np.int64), out)
    return out


# ---------------------------------------------------------------------------
# Real-time scoring kernel. k is the (n_cells, n_categories) count matrix;
# entries arrive resolved to column indices (CSR-style member lists).
# ---------------------------------------------------------------------------


@njit(cache=True, parallel=True)
def _score_cells_jit(k, mstart, midx, weights, lambdas, required, out):
    n = k.shape[0]
    n_entries = weights.shape[0]
    wsum = 0.0
    for e in range(n_entries):
        wsum += weights[e]
    for g in prange(n):
        num = 0.0
        gated = False
        for e in range(n_entries):
            kk = 0.0
            for t in range(mstart[e], mstart[e + 1]):
                kk += k[g, midx[t]]
            if required[e] and kk == 0.0:
                gated = True
                break
            num += weights[e] * (1.0 - math.exp(-lambdas[e] * kk))
        out[g] = 0.0 if gated else num / wsum


def _score_cells_np(k, mstart, midx, weights, lambdas, required, out):
    n_entries = weights.shape[0]
    num = np.zeros(k.shape[0], np.float64)
    gate = np.zeros(k.shape[0], np.bool_)
    for e in range(n_entries):
        idx = midx[mstart[e]:mstart[e + 1]]
        if idx.size == 1:
            kk = k[:, idx[0]].astype(np.float64)
        else:
            kk = k[:, idx].sum(axis=1, dtype=np.float64)
        if required[e]:
            gate |= kk == 0.0
        num += weights[e] * (1.0 - np.exp(-lambdas[e] * kk))
    np.divide(num, float(weights.sum()), out=out)
    out[gate] = 0.0
    return out


def score_cells(k: np.ndarray, mstart, midx, weights, lambdas, required,
                out: np.ndarray | None = None) -> np.ndarray:
    """Weighted exponential-decay score per cell with required-entry gating.

    ``score = sum_e w_e * (1 - exp(-lambda_e * K_e)) / sum_e w_e`` where
    ``K_e`` sums the member columns of entry ``e``; any required entry with
    ``K_e == 0`` forces the cell to 0.
    """
    k = np.ascontiguousarray(k)
    mstart = np.ascontiguousarray(mstart, np.int64)
    midx = np.ascontiguousarray(midx, np.int64)
    weights = np.ascontiguousarray(weights, np.float64)
    lambdas = np.ascontiguousarray(lambdas, np.float64)
    required = np.ascontiguousarray(required, np.bool_)
    if out is None:
        out = np.empty(k.shape[0], np.float64)
    if NUMBA_ENABLED:
        _score_cells_jit(k.astype(np.float64, copy=False), mstart, midx,
                         weights, lambdas, required, out)
    else:
        _score_cells_np(k, mstart, midx, weights, lambdas, required, out)
    return out


def warmup() -> None:
    """Force JIT compilation of all kernels (no-op on the numpy path)."""
    xs = np.array([0.0, 1.0, 1.0, 0.0])
    ys = np.array([0.0, 0.0, 1.0, 1.0])
    off = np.array([0, 4], np.int64)
    ring_clip_area(xs, ys, 0.2, 0.2, 0.8, 0.8)
    polygon_cell_areas(xs, ys, off, np.array([1.0]), 0.0, 0.0, 0.5, 2, 2)
    points_in_rings(np.array([0.5]), np.array([0.5]), xs, ys, off)
    score_cells(np.zeros((2, 1), np.uint16), np.array([0, 1]), np.array([0]),
                np.array([1.0]), np.array([0.7]), np.array([False]))
