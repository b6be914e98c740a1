"""Fringe-order recovery from a reference phase.

``geometric_unwrap`` lifts each wrapped pixel to the first branch at or
above the reference-plane phase. ``residual_correct`` removes the 2*pi
deficits left where the object phase climbs more than one period above
the plane. ``dual_frequency_unwrap`` is the conventional two-frequency
baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demod import WrappedPhaseMap
from .raster import TWO_PI
from .spatial import UnwrappedPhaseMap, anchored_scan_orders, default_seed


@dataclass(frozen=True)
class FrequencyPair:
    """Low and high fringe frequencies, in fringes per image."""

    f1: float
    f2: float

    def __post_init__(self):
        if not (self.f1 > 0 and self.f2 > 0):
            raise ValueError("frequencies must be positive")
        # equal frequencies are allowed: the identity case
        if self.f1 > self.f2:
            raise ValueError(f"low frequency {self.f1} exceeds high frequency {self.f2}")

    @property
    def ratio(self) -> float:
        return self.f2 / self.f1


@dataclass(frozen=True)
class MinPhaseMap:
    """Continuous phase of the reference plane placed at the nearest depth."""

    phase: np.ndarray
    mask: np.ndarray

    @classmethod
    def from_unwrapped(cls, unwrapped: UnwrappedPhaseMap) -> "MinPhaseMap":
        return cls(unwrapped.phase, unwrapped.mask)


def round_half_away(x):
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _check_shapes(a, b, what):
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch between {what}: {a.shape} vs {b.shape}")


def dual_frequency_unwrap(
    phi1: UnwrappedPhaseMap, phi2_wrapped: WrappedPhaseMap, freqs: FrequencyPair
) -> UnwrappedPhaseMap:
    """Unwrap the high-frequency phase from a continuous low-frequency one.

    ``k = round((f2/f1 * phi1 - phi2) / 2pi)``, ``Phi2 = phi2 + 2 pi k``,
    rounding half away from zero.
    """
    _check_shapes(phi1.phase, phi2_wrapped.phase, "low and high frequency maps")
    mask = phi1.mask & phi2_wrapped.mask
    with np.errstate(invalid="ignore"):
        k = round_half_away((freqs.ratio * phi1.phase - phi2_wrapped.phase) / TWO_PI)
        phase = np.where(mask, phi2_wrapped.phase + TWO_PI * k, np.nan)
    return UnwrappedPhaseMap(phase, mask, "dual-frequency")


def geometric_orders(phi_w, phi_min) -> np.ndarray:
    """``K = ceil((phi_min - phi_w) / 2pi)``, kept consistent in floating point.

    The quotient can round across an integer; the two guards make sure the
    reconstructed ``phi_w + 2 pi K`` really lies in ``[phi_min, phi_min + 2pi)``.
    """
    k = np.ceil((phi_min - phi_w) / TWO_PI)
    rel = phi_w + TWO_PI * k - phi_min
    k = np.where(rel < 0, k + 1, k)
    rel = phi_w + TWO_PI * k - phi_min
    k = np.where(rel >= TWO_PI, k - 1, k)
    return k


def geometric_unwrap(phi_w: WrappedPhaseMap, phi_min: MinPhaseMap) -> UnwrappedPhaseMap:
    """Unwrap with the reference-plane phase as a pixelwise lower bound.

    Every valid object pixel needs a valid ``phi_min``; no spatial path is
    involved, so isolated regions unwrap independently.
    """
    _check_shapes(phi_w.phase, phi_min.phase, "wrapped phase and minimum phase")
    if np.any(phi_w.mask & ~phi_min.mask):
        raise ValueError("missing minimum phase under a valid object pixel")
    mask = phi_w.mask.copy()
    pw = np.where(mask, phi_w.phase, 0.0)
    pm = np.where(mask, phi_min.phase, 0.0)
    k = geometric_orders(pw, pm)
    phase = np.where(mask, pw + TWO_PI * k, np.nan)
    return UnwrappedPhaseMap(phase, mask, "geometric")


def has_residual_wraps(phi_u: UnwrappedPhaseMap) -> bool:
    """True if any pair of 4-adjacent valid pixels differs by more than pi."""
    p, m = phi_u.phase, phi_u.mask
    with np.errstate(invalid="ignore"):
        horiz = (np.abs(np.diff(p, axis=1)) > np.pi) & m[:, 1:] & m[:, :-1]
        vert = (np.abs(np.diff(p, axis=0)) > np.pi) & m[1:, :] & m[:-1, :]
    return bool(horiz.any() or vert.any())


def residual_correct(
    phi_u: UnwrappedPhaseMap, quality=None, anchor_col: int | None = None
) -> UnwrappedPhaseMap:
    """Remove residual 2*pi wraps with an anchored two-pass scan.

    The recursion first runs down the anchor column from the top, then
    along every row outwards from that column. Masked gaps restart the
    recursion with order 0, i.e. trusting the input value after the gap.
    The anchor column is that of the highest-``quality`` valid pixel
    (first valid pixel in row-major order without a quality map).
    """
    mask = phi_u.mask
    if not mask.any():
        return UnwrappedPhaseMap(phi_u.phase.copy(), mask.copy(), "geometric+corrected")
    if anchor_col is None:
        q = np.zeros(mask.shape) if quality is None else quality
        anchor_col = default_seed(mask, q)[1]
    values = np.where(mask, phi_u.phase, 0.0)
    k = anchored_scan_orders(values, mask, anchor_col)
    phase = np.where(mask, values + TWO_PI * k, np.nan)
    return UnwrappedPhaseMap(phase, mask.copy(), "geometric+corrected")
