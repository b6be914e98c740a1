"""Four-step phase-shifting demodulation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MOD_THRESHOLD = 5.0


@dataclass(frozen=True)
class FringeStack:
    """Four phase-shifted intensity images; frame ``n`` carries offset ``n*pi/2``.

    ``images`` has shape ``(4, height, width)``.
    """

    images: np.ndarray
    period_px: float | None = None

    def __post_init__(self):
        images = np.asarray(self.images, dtype=np.float64)
        if images.ndim != 3 or images.shape[0] != 4:
            raise ValueError(f"expected 4 frames of equal size, got array of shape {images.shape}")
        object.__setattr__(self, "images", images)

    @classmethod
    def from_frames(cls, frames, period_px=None) -> "FringeStack":
        frames = [np.asarray(f, dtype=np.float64) for f in frames]
        if len(frames) != 4:
            raise ValueError(f"four-step demodulation needs 4 frames, got {len(frames)}")
        shapes = {f.shape for f in frames}
        if len(shapes) != 1:
            raise ValueError(f"mismatched frame dimensions: {sorted(shapes)}")
        return cls(np.stack(frames), period_px)

    @property
    def shape(self) -> tuple[int, int]:
        return self.images.shape[1:]


@dataclass(frozen=True)
class WrappedPhaseMap:
    phase: np.ndarray
    modulation: np.ndarray
    mask: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.phase.shape


def validity_mask(modulation, threshold: float = DEFAULT_MOD_THRESHOLD) -> np.ndarray:
    """Pixels whose modulation strictly exceeds ``threshold``."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return np.asarray(modulation) > threshold


def four_step_phase(stack: FringeStack, threshold: float = DEFAULT_MOD_THRESHOLD) -> WrappedPhaseMap:
    """Demodulate a four-step stack.

    With ``I_n = A + B cos(phi + n pi/2)`` the estimator is
    ``phi = atan2(I3 - I1, I0 - I2)`` and the modulation is
    ``0.5 * hypot(I3 - I1, I0 - I2)``, which equals ``B``.
    """
    i0, i1, i2, i3 = stack.images
    num = i3 - i1
    den = i0 - i2
    phase = np.arctan2(num, den)
    # atan2 returns -pi for (-0.0, negative); fold onto the closed end
    phase[phase == -np.pi] = np.pi
    modulation = 0.5 * np.hypot(num, den)
    return WrappedPhaseMap(phase, modulation, validity_mask(modulation, threshold))
