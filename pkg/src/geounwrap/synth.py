"""Synthetic digital fringe projection.

Builds height fields for a few scene kinds, maps height to phase with a
crossed-optical-axes model and renders four-step fringe stacks for the
reference plane and the object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .demod import FringeStack
from .raster import TWO_PI

SCENE_KINDS = ("flat-plane", "gaussian-peaks", "plate-with-holes", "step")

# stand-ins for the face model and the isolated cup: (x, y, height mm, sigma px)
DEFAULT_PEAKS = ((250.0, 220.0, 25.0, 70.0), (480.0, 230.0, 18.0, 30.0))
DEFAULT_HOLES = ((200.0, 220.0, 70.0), (430.0, 220.0, 70.0))


@dataclass(frozen=True)
class DfpGeometry:
    """Projector/camera layout.

    L is the distance from the camera-projector plane to the reference
    plane, d the baseline, f_r the fringe frequency on the reference plane
    (fringes per mm).
    """

    L: float = 700.0
    d: float = 300.0
    f_r: float = 0.05

    def __post_init__(self):
        if not (self.L > 0 and self.d > 0 and self.f_r > 0):
            raise ValueError("DfpGeometry requires L > 0, d > 0, f_r > 0")


@dataclass(frozen=True)
class SceneSpec:
    kind: str = "gaussian-peaks"
    width: int = 624
    height: int = 441
    height_offset: float = 5.0
    peaks: tuple = DEFAULT_PEAKS
    holes: tuple = DEFAULT_HOLES
    plate_height: float = 10.0
    step_height: float = 10.0
    step_col: int | None = None

    def __post_init__(self):
        if self.kind not in SCENE_KINDS:
            raise ValueError(f"unknown scene kind {self.kind!r}; expected one of {SCENE_KINDS}")
        if self.height_offset < 0:
            raise ValueError("height_offset must be >= 0")
        # JSON round trips hand us lists
        object.__setattr__(self, "peaks", tuple(tuple(float(v) for v in p) for p in self.peaks))
        object.__setattr__(self, "holes", tuple(tuple(float(v) for v in h) for h in self.holes))


@dataclass(frozen=True)
class FringeParams:
    period_px: float = 18.0
    A: float = 128.0
    B: float = 100.0
    n_shifts: int = 4
    noise_sigma: float = 0.0
    quantize: str = "none"
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_shifts != 4:
            raise ValueError("only four-step stacks are supported")
        if self.period_px <= 0:
            raise ValueError("period_px must be > 0")
        if self.B <= 0:
            raise ValueError("modulation B must be > 0")
        if self.A - self.B < 0:
            raise ValueError("A - B must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.quantize not in ("none", "8-bit"):
            raise ValueError(f"quantize must be 'none' or '8-bit', got {self.quantize!r}")
        if self.quantize == "8-bit" and self.A + self.B > 255:
            raise ValueError("A + B exceeds the 8-bit dynamic range")


def height_field(scene: SceneSpec) -> tuple[np.ndarray, np.ndarray]:
    """Height grid in mm and validity mask. Invalid pixels hold NaN."""
    if scene.width < 1 or scene.height < 1:
        raise ValueError(f"non-positive scene dimensions {scene.width}x{scene.height}")
    y, x = np.mgrid[0 : scene.height, 0 : scene.width].astype(np.float64)
    h = np.full((scene.height, scene.width), float(scene.height_offset))
    mask = np.ones(h.shape, dtype=bool)

    if scene.kind == "gaussian-peaks":
        for cx, cy, amp, sigma in scene.peaks:
            if amp < 0 or sigma <= 0:
                raise ValueError("peak heights must be >= 0 and sigmas > 0")
            h += amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * sigma**2))
    elif scene.kind == "plate-with-holes":
        if scene.plate_height < 0:
            raise ValueError("plate_height must be >= 0")
        h += scene.plate_height
        for cx, cy, r in scene.holes:
            mask &= (x - cx) ** 2 + (y - cy) ** 2 > r**2
    elif scene.kind == "step":
        if scene.step_height < 0:
            raise ValueError("step_height must be >= 0")
        col = scene.width // 2 if scene.step_col is None else scene.step_col
        h[:, col:] += scene.step_height

    h[~mask] = np.nan
    return h, mask


def phase_from_height(h, geom: DfpGeometry) -> np.ndarray:
    """Phase shift relative to the reference plane for height ``h`` (mm).

    ``dphi = 2 pi f_r d h / (L - h)``. NaN heights pass through as NaN.
    """
    h = np.asarray(h, dtype=np.float64)
    valid = ~np.isnan(h)
    if np.any(h[valid] >= geom.L):
        raise ValueError("height exceeds standoff")
    with np.errstate(invalid="ignore"):
        return TWO_PI * geom.f_r * geom.d * h / (geom.L - h)


def carrier_phase(shape, period_px: float) -> np.ndarray:
    """Reference-plane phase ``2 pi x / period_px`` for every row."""
    height, width = shape
    x = np.arange(width, dtype=np.float64)
    return np.broadcast_to(TWO_PI * x / period_px, (height, width)).copy()


def render_fringes(
    delta_phase,
    params: FringeParams,
    carrier: str = "object",
    *,
    shape=None,
    stream: int | None = None,
) -> FringeStack:
    """Render ``I_n = A + B cos(carrier + delta_phase + n pi/2)``, n = 0..3.

    For ``carrier="reference"`` the phase increment is zero and
    ``delta_phase`` may be None (then ``shape`` is required). Object pixels
    whose increment is NaN return no fringe: they render as flat ``A``.

    Noise is drawn from ``default_rng([rng_seed, stream])`` in frame-major,
    row-major order; ``stream`` defaults to 0 for the reference and 1 for
    the object so the two captures get independent noise.
    """
    if carrier not in ("reference", "object"):
        raise ValueError(f"carrier must be 'reference' or 'object', got {carrier!r}")
    if delta_phase is None:
        if shape is None:
            raise ValueError("shape is required when delta_phase is None")
        dphi = np.zeros(shape)
    else:
        dphi = np.asarray(delta_phase, dtype=np.float64)
    if carrier == "reference":
        dphi = np.zeros(dphi.shape)
    lit = ~np.isnan(dphi)

    phase = carrier_phase(dphi.shape, params.period_px) + np.where(lit, dphi, 0.0)
    shifts = np.arange(4).reshape(4, 1, 1) * (np.pi / 2.0)
    images = params.A + params.B * np.cos(phase[None] + shifts) * lit[None]

    if params.noise_sigma > 0:
        if stream is None:
            stream = 0 if carrier == "reference" else 1
        rng = np.random.default_rng([params.rng_seed, stream])
        images = images + rng.normal(0.0, params.noise_sigma, size=images.shape)
    if params.quantize == "8-bit":
        images = np.round(np.clip(images, 0.0, 255.0))
    return FringeStack(images, params.period_px)


@dataclass(frozen=True)
class SyntheticCapture:
    """Everything rendered for one scene: both stacks plus ground truth."""

    height: np.ndarray
    mask: np.ndarray
    delta_phase: np.ndarray
    true_phase: np.ndarray
    reference_phase: np.ndarray
    object_stack: FringeStack
    reference_stack: FringeStack


def simulate_capture(scene: SceneSpec, geom: DfpGeometry, params: FringeParams) -> SyntheticCapture:
    h, mask = height_field(scene)
    dphi = phase_from_height(h, geom)
    ref = carrier_phase(h.shape, params.period_px)
    obj_stack = render_fringes(dphi, params, "object")
    ref_stack = render_fringes(None, params, "reference", shape=h.shape)
    return SyntheticCapture(h, mask, dphi, ref + dphi, ref, obj_stack, ref_stack)
