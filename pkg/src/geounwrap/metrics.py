"""Comparison of reconstructed phase against ground truth."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .raster import TWO_PI
from .synth import DfpGeometry

PISTON_SEARCH_PERIODS = 50


@dataclass(frozen=True)
class EvalReport:
    rmse: float
    max_abs_err: float
    order_error_count: int
    order_error_rate: float
    piston_removed: float
    valid_pixel_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def _best_piston(diff: np.ndarray) -> int:
    # RMSE is quadratic in n, so only the integers around mean/2pi can win
    centre = int(np.round(np.mean(diff) / TWO_PI))
    best, best_sse = 0, np.inf
    for n in range(centre - 1, centre + 2):
        if abs(n) > PISTON_SEARCH_PERIODS:
            continue
        sse = float(np.sum((diff - TWO_PI * n) ** 2))
        if sse < best_sse or (sse == best_sse and abs(n) < abs(best)):
            best, best_sse = n, sse
    if best_sse == np.inf:
        best = int(np.clip(centre, -PISTON_SEARCH_PERIODS, PISTON_SEARCH_PERIODS))
    return best


def evaluate(estimate, truth, mask=None, remove_piston: bool = True) -> EvalReport:
    """Error statistics of ``estimate`` against ``truth`` over valid pixels.

    ``estimate`` is an unwrapped map or a plain array. With
    ``remove_piston`` the integer multiple of 2*pi (within +/-50 periods)
    that minimises the RMSE is subtracted first. A pixel counts as a
    fringe-order error when its residual exceeds pi in magnitude.
    """
    est_phase = getattr(estimate, "phase", estimate)
    est_phase = np.asarray(est_phase, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if est_phase.shape != truth.shape:
        raise ValueError(f"dimension mismatch: {est_phase.shape} vs {truth.shape}")
    valid = np.isfinite(est_phase) & np.isfinite(truth)
    if mask is not None:
        valid &= np.asarray(mask, dtype=bool)
    est_mask = getattr(estimate, "mask", None)
    if est_mask is not None:
        valid &= est_mask
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise ValueError("empty valid set")

    diff = est_phase[valid] - truth[valid]
    n = _best_piston(diff) if remove_piston else 0
    err = diff - TWO_PI * n
    abs_err = np.abs(err)
    count = int(np.count_nonzero(abs_err > np.pi))
    return EvalReport(
        rmse=float(np.sqrt(np.mean(err**2))),
        max_abs_err=float(abs_err.max()),
        order_error_count=count,
        order_error_rate=count / n_valid,
        piston_removed=float(TWO_PI * n),
        valid_pixel_count=n_valid,
    )


def difference_map(estimate, truth, piston: float = 0.0) -> np.ndarray:
    """``|estimate - piston - truth|``, NaN where either side is missing."""
    est = np.asarray(getattr(estimate, "phase", estimate), dtype=np.float64)
    return np.abs(est - piston - np.asarray(truth, dtype=np.float64))


def height_from_phase(delta_phi, geom: DfpGeometry) -> np.ndarray:
    """Invert the height-to-phase model: ``h = L dphi / (dphi + 2 pi f_r d)``."""
    delta_phi = np.asarray(delta_phi, dtype=np.float64)
    denom = delta_phi + TWO_PI * geom.f_r * geom.d
    finite = np.isfinite(denom)
    if np.any(denom[finite] <= 0):
        raise ValueError("phase below -2*pi*f_r*d: denominator <= 0")
    return geom.L * delta_phi / denom
