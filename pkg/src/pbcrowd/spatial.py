"""Uniform hash grids for fixed-radius neighbor queries.

The grid is a sorted cell table rather than a hashed bucket array: agents are
sorted by packed integer cell key (stable, so indices within a cell stay
ascending) and cells are located with a binary search. The layout depends only
on the positions, never on how many threads built it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

# cell keys pack (cx, cy) as cx * _KEY_STRIDE + cy; valid while |cy| < 2**31
_KEY_STRIDE = np.int64(1 << 32)
_MAX_CELL = 1 << 30


@dataclass
class HashGrid:
    cell_size: float
    cell_keys: np.ndarray   # unique occupied keys, ascending
    cell_start: np.ndarray  # len(cell_keys) + 1 offsets into ``order``
    order: np.ndarray       # agent indices grouped by cell

    @property
    def table(self) -> dict:
        """Cell coordinates -> ascending list of agent indices."""
        out = {}
        for c, key in enumerate(self.cell_keys):
            cx, cy = _unpack(int(key))
            out[(cx, cy)] = self.order[self.cell_start[c]:self.cell_start[c + 1]].tolist()
        return out

    def cell_of(self, point) -> tuple[int, int]:
        return (math.floor(point[0] / self.cell_size), math.floor(point[1] / self.cell_size))


def _unpack(key: int) -> tuple[int, int]:
    cx, cy = divmod(key, 1 << 32)
    if cy >= 1 << 31:
        cx, cy = cx + 1, cy - (1 << 32)
    return cx, cy


def build(positions, cell_size: float) -> HashGrid:
    """Bin agent positions into square cells of side ``cell_size``."""
    if not cell_size > 0:
        raise ValueError(f"cell_size must be > 0, got {cell_size}")
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(pos)):
        raise ValueError("positions must be finite")
    cells = np.floor(pos / cell_size)
    if cells.size and np.abs(cells).max() >= _MAX_CELL:
        raise ValueError("positions too far from the origin for this cell size")
    cells = cells.astype(np.int64)
    keys = cells[:, 0] * _KEY_STRIDE + cells[:, 1]
    order = np.argsort(keys, kind="stable").astype(np.int64)
    sorted_keys = keys[order]
    cell_keys, starts = np.unique(sorted_keys, return_index=True)
    cell_start = np.append(starts, len(order)).astype(np.int64)
    return HashGrid(float(cell_size), cell_keys.astype(np.int64), cell_start, order)


def query(grid: HashGrid, positions, i: int, radius: float) -> list[int]:
    """Indices ``j != i`` with ``|x_j - x_i| <= radius``, ascending."""
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 2)
    buf = np.empty(len(pos), dtype=np.int64)
    count = _query_into(grid.cell_keys, grid.cell_start, grid.order, grid.cell_size,
                        pos, i, pos[i, 0], pos[i, 1], radius, buf)
    return buf[:count].tolist()


def query_point(grid: HashGrid, positions, point, radius: float, exclude: int = -1) -> list[int]:
    """Indices within ``radius`` of an arbitrary point, ascending."""
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 2)
    buf = np.empty(len(pos), dtype=np.int64)
    count = _query_into(grid.cell_keys, grid.cell_start, grid.order, grid.cell_size,
                        pos, exclude, float(point[0]), float(point[1]), radius, buf)
    return buf[:count].tolist()


@dataclass
class NeighborList:
    """Compressed per-agent neighbor lists: agent i owns ``index[offset[i]:offset[i+1]]``."""

    offset: np.ndarray
    index: np.ndarray

    def __getitem__(self, i: int) -> np.ndarray:
        return self.index[self.offset[i]:self.offset[i + 1]]

    def __len__(self) -> int:
        return len(self.offset) - 1

    @property
    def pair_count(self) -> int:
        return len(self.index)


def neighbor_lists(grid: HashGrid, positions, radius) -> NeighborList:
    """Run :func:`query` for every agent at once.

    ``radius`` may be a scalar or a per-agent array.
    """
    pos = np.ascontiguousarray(positions, dtype=np.float64).reshape(-1, 2)
    n = len(pos)
    radii = np.ascontiguousarray(np.broadcast_to(np.asarray(radius, dtype=np.float64), (n,)))
    counts = _count_all(grid.cell_keys, grid.cell_start, grid.order, grid.cell_size, pos, radii)
    offset = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offset[1:])
    index = np.empty(offset[-1], dtype=np.int64)
    _fill_all(grid.cell_keys, grid.cell_start, grid.order, grid.cell_size, pos, radii, offset, index)
    return NeighborList(offset, index)


@njit(cache=True)
def _find_cell(cell_keys, key):
    lo = np.searchsorted(cell_keys, key)
    if lo < cell_keys.shape[0] and cell_keys[lo] == key:
        return lo
    return -1


@njit(cache=True)
def _cell_span(p, radius, cell_size):
    # widened slightly so a pair accepted by the rounded distance test is never
    # in a cell outside the span
    reach = radius + 1e-9 * (abs(p) + radius)
    return int(math.floor((p - reach) / cell_size)), int(math.floor((p + reach) / cell_size))


@njit(cache=True)
def _query_into(cell_keys, cell_start, order, cell_size, pos, i, px, py, radius, out):
    x0, x1 = _cell_span(px, radius, cell_size)
    y0, y1 = _cell_span(py, radius, cell_size)
    r2 = radius * radius
    count = 0
    for cx in range(x0, x1 + 1):
        for cy in range(y0, y1 + 1):
            c = _find_cell(cell_keys, np.int64(cx) * _KEY_STRIDE + np.int64(cy))
            if c < 0:
                continue
            for k in range(cell_start[c], cell_start[c + 1]):
                j = order[k]
                if j == i:
                    continue
                ex = pos[j, 0] - px
                ey = pos[j, 1] - py
                if ex * ex + ey * ey <= r2:
                    out[count] = j
                    count += 1
    out[:count].sort()
    return count


@njit(cache=True)
def _count_one(cell_keys, cell_start, order, cell_size, pos, i, radius):
    px = pos[i, 0]
    py = pos[i, 1]
    x0, x1 = _cell_span(px, radius, cell_size)
    y0, y1 = _cell_span(py, radius, cell_size)
    r2 = radius * radius
    count = 0
    for cx in range(x0, x1 + 1):
        for cy in range(y0, y1 + 1):
            c = _find_cell(cell_keys, np.int64(cx) * _KEY_STRIDE + np.int64(cy))
            if c < 0:
                continue
            for k in range(cell_start[c], cell_start[c + 1]):
                j = order[k]
                if j == i:
                    continue
                ex = pos[j, 0] - px
                ey = pos[j, 1] - py
                if ex * ex + ey * ey <= r2:
                    count += 1
    return count


@njit(parallel=True, cache=True)
def _count_all(cell_keys, cell_start, order, cell_size, pos, radii):
    n = pos.shape[0]
    counts = np.empty(n, dtype=np.int64)
    for i in prange(n):
        counts[i] = _count_one(cell_keys, cell_start, order, cell_size, pos, i, radii[i])
    return counts


@njit(parallel=True, cache=True)
def _fill_all(cell_keys, cell_start, order, cell_size, pos, radii, offset, index):
    n = pos.shape[0]
    for i in prange(n):
        _query_into(cell_keys, cell_start, order, cell_size, pos, i, pos[i, 0], pos[i, 1],
                    radii[i], index[offset[i]:offset[i + 1]])
