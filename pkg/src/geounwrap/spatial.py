"""Spatial phase unwrapping for the smooth reference plane.

Two methods: an Itoh scan (1-D, plus an anchored row/column scan for 2-D
maps) and a quality-guided flood fill. Both work on integer fringe orders
so that the output is always ``wrapped + 2*pi*K`` bit for bit.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
from numba import njit

from .demod import WrappedPhaseMap
from .raster import TWO_PI

PROVENANCES = (
    "spatial-itoh",
    "spatial-quality-guided",
    "dual-frequency",
    "geometric",
    "geometric+corrected",
)


@dataclass(frozen=True)
class UnwrappedPhaseMap:
    """Continuous phase; NaN outside ``mask``."""

    phase: np.ndarray
    mask: np.ndarray
    provenance: str

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.phase.shape


def order_step(diff):
    """Fringe-order increment for a successive difference.

    +1 below ``-pi``, -1 above ``pi``, 0 on the closed interval between.
    """
    diff = np.asarray(diff)
    return (diff < -np.pi).astype(np.int64) - (diff > np.pi).astype(np.int64)


def itoh_orders(values) -> np.ndarray:
    """Fringe orders ``K_i`` of the Itoh recursion with ``K_0 = 0``."""
    values = np.asarray(values, dtype=np.float64)
    k = np.zeros(values.shape, dtype=np.int64)
    np.cumsum(order_step(np.diff(values)), out=k[1:])
    return k


def itoh_unwrap_line(values) -> np.ndarray:
    """Unwrap a 1-D sequence: ``out[i] = in[i] + 2 pi K_i``, ``K_0 = 0``."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("itoh_unwrap_line needs a non-empty 1-D sequence")
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite phase")
    return values + TWO_PI * itoh_orders(values)


def _segments(valid_line: np.ndarray) -> list[tuple[int, int]]:
    """Half-open ``[start, stop)`` runs of True."""
    padded = np.concatenate(([False], valid_line, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2], edges[1::2]))


def _scan_line(values, valid, anchor: int, anchor_order: int, orders_out) -> None:
    """Itoh recursion over each valid run of one line.

    The run holding ``anchor`` gets order ``anchor_order`` there and is
    scanned outwards both ways. Runs that do not reach the anchor restart
    with order 0 at their end nearest the anchor.
    """
    for start, stop in _segments(valid):
        rel = itoh_orders(values[start:stop])
        if start <= anchor < stop:
            orders_out[start:stop] = rel - rel[anchor - start] + anchor_order
        elif stop <= anchor:
            orders_out[start:stop] = rel - rel[-1]
        else:
            orders_out[start:stop] = rel


def anchored_scan_orders(values, mask, anchor_col: int) -> np.ndarray:
    """Two-pass Itoh scan: down column ``anchor_col``, then out along every row.

    Returns the integer order map; invalid pixels get 0.
    """
    values = np.asarray(values, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    height, width = values.shape
    if not 0 <= anchor_col < width:
        raise ValueError(f"anchor column {anchor_col} outside 0..{width - 1}")
    orders = np.zeros((height, width), dtype=np.int64)

    col_orders = np.zeros(height, dtype=np.int64)
    # column pass starts at the top, K = 0
    _scan_line(values[:, anchor_col], mask[:, anchor_col], -1, 0, col_orders)

    for y in range(height):
        _scan_line(values[y], mask[y], anchor_col, col_orders[y], orders[y])
    orders[~mask] = 0
    return orders


def default_seed(mask, quality) -> tuple[int, int]:
    """Highest-quality valid pixel; ties go to the smallest row-major index."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("no valid pixel to seed from")
    q = np.where(mask, np.asarray(quality, dtype=np.float64), -np.inf)
    idx = int(np.argmax(q))
    return divmod(idx, q.shape[1])


def itoh_unwrap(wrapped: WrappedPhaseMap, anchor_col: int | None = None) -> UnwrappedPhaseMap:
    """2-D Itoh unwrap by the anchored row/column scan.

    The anchor column defaults to the column of the highest-modulation
    valid pixel.
    """
    if anchor_col is None:
        anchor_col = default_seed(wrapped.mask, wrapped.modulation)[1]
    k = anchored_scan_orders(wrapped.phase, wrapped.mask, anchor_col)
    phase = np.where(wrapped.mask, wrapped.phase + TWO_PI * k, np.nan)
    return UnwrappedPhaseMap(phase, wrapped.mask.copy(), "spatial-itoh")


@njit(cache=True)
def _flood_fill(phase, mask, quality, seed_row, seed_col):
    height, width = phase.shape
    orders = np.zeros((height, width), dtype=np.int64)
    queued = np.zeros((height, width), dtype=np.bool_)
    queued[seed_row, seed_col] = True
    heap = [(-quality[seed_row, seed_col], seed_row * width + seed_col)]
    drs = (-1, 1, 0, 0)
    dcs = (0, 0, -1, 1)
    while len(heap) > 0:
        item = heapq.heappop(heap)
        idx = item[1]
        r = idx // width
        c = idx - r * width
        for n in range(4):
            rr = r + drs[n]
            cc = c + dcs[n]
            if rr < 0 or rr >= height or cc < 0 or cc >= width:
                continue
            if not mask[rr, cc] or queued[rr, cc]:
                continue
            d = phase[rr, cc] - phase[r, c]
            step = 0
            if d < -np.pi:
                step = 1
            elif d > np.pi:
                step = -1
            orders[rr, cc] = orders[r, c] + step
            queued[rr, cc] = True
            heapq.heappush(heap, (-quality[rr, cc], rr * width + cc))
    return orders, queued


def quality_guided_unwrap(
    wrapped: WrappedPhaseMap,
    seed: tuple[int, int] | None = None,
    quality=None,
) -> UnwrappedPhaseMap:
    """Quality-guided flood fill from ``seed`` (row, col).

    Frontier pixels are admitted highest quality first (modulation by
    default), ties broken by row-major index, 4-connectivity. A pixel takes
    its order from the settled neighbour that first reaches it. Only the
    valid component connected to the seed is unwrapped; the seed keeps its
    wrapped value.
    """
    mask = np.asarray(wrapped.mask, dtype=bool)
    q = np.asarray(wrapped.modulation if quality is None else quality, dtype=np.float64)
    if q.shape != mask.shape:
        raise ValueError("quality map shape does not match phase map")
    if seed is None:
        seed = default_seed(mask, q)
    r, c = (int(v) for v in seed)
    if not (0 <= r < mask.shape[0] and 0 <= c < mask.shape[1]) or not mask[r, c]:
        raise ValueError(f"seed pixel {(r, c)} is not a valid pixel")
    q = np.where(mask & np.isfinite(q), q, -np.inf)
    orders, reached = _flood_fill(np.ascontiguousarray(wrapped.phase, dtype=np.float64), mask, q, r, c)
    phase = np.where(reached, wrapped.phase + TWO_PI * orders, np.nan)
    return UnwrappedPhaseMap(phase, reached, "spatial-quality-guided")
