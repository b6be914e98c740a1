"""End-to-end runs: simulate captures, run the unwrapping pipeline, sweep.

Everything here is deterministic given the config and its seed.
"""

from __future__ import annotations

import contextlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import raster
from .demod import DEFAULT_MOD_THRESHOLD, FringeStack, WrappedPhaseMap, four_step_phase
from .metrics import EvalReport, difference_map, evaluate
from .spatial import UnwrappedPhaseMap, quality_guided_unwrap
from .synth import (
    DfpGeometry,
    FringeParams,
    SceneSpec,
    carrier_phase,
    height_field,
    phase_from_height,
    render_fringes,
)
from .temporal import (
    FrequencyPair,
    MinPhaseMap,
    dual_frequency_unwrap,
    geometric_unwrap,
    has_residual_wraps,
    residual_correct,
)

log = logging.getLogger(__name__)

METHODS = ("geometric", "geometric+correct", "dual-frequency")

# unquantized stacks go to disk as 16-bit PGM holding round(I * scale)
FLOAT_PGM_SCALE = 256.0

SIDECAR = "simulate.json"


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@contextlib.contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


@dataclass(frozen=True)
class PipelineConfig:
    scene: SceneSpec = field(default_factory=SceneSpec)
    geometry: DfpGeometry = field(default_factory=DfpGeometry)
    fringe: FringeParams = field(default_factory=FringeParams)
    method: str = "geometric"
    low_frequency: float = 1.0
    out_dir: str = "out"
    seed: int = 0
    mod_threshold: float = DEFAULT_MOD_THRESHOLD
    seed_pixel: tuple | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method == "dual-frequency" and not self.low_frequency < self.high_frequency:
            raise ValueError("dual-frequency requires low_frequency < fringe frequency")

    @property
    def high_frequency(self) -> float:
        return self.scene.width / self.fringe.period_px

    @property
    def fringe_params(self) -> FringeParams:
        """Fringe parameters with the run seed applied."""
        return replace(self.fringe, rng_seed=self.seed)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        sub = {
            "scene": SceneSpec,
            "geometry": DfpGeometry,
            "fringe": FringeParams,
        }
        for key, kind in sub.items():
            if key in d and isinstance(d[key], dict):
                d[key] = kind(**d[key])
        if d.get("seed_pixel") is not None:
            d["seed_pixel"] = tuple(int(v) for v in d["seed_pixel"])
        return cls(**d)


def load_config(path) -> PipelineConfig:
    return PipelineConfig.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@dataclass
class Simulation:
    height: np.ndarray
    mask: np.ndarray
    true_phase: np.ndarray
    object_stack: FringeStack
    reference_stack: FringeStack
    low_stack: FringeStack | None = None
    low_true_phase: np.ndarray | None = None


def simulate(config: PipelineConfig) -> Simulation:
    """Render the object and reference-plane stacks for ``config``.

    For the dual-frequency method a low-frequency object stack is rendered
    too; its phase increment scales with the frequency ratio.
    """
    params = config.fringe_params
    with stage("simulate"):
        h, mask = height_field(config.scene)
        dphi = phase_from_height(h, config.geometry)
        truth = carrier_phase(h.shape, params.period_px) + dphi
        obj = render_fringes(dphi, params, "object")
        ref = render_fringes(None, params, "reference", shape=h.shape)
        sim = Simulation(h, mask, truth, obj, ref)
        if config.method == "dual-frequency":
            ratio = config.high_frequency / config.low_frequency
            low_params = replace(params, period_px=config.scene.width / config.low_frequency)
            sim.low_stack = render_fringes(dphi / ratio, low_params, "object", stream=2)
            sim.low_true_phase = carrier_phase(h.shape, low_params.period_px) + dphi / ratio
    return sim


def _stack_to_pgm(stack: FringeStack, quantize: str) -> tuple[np.ndarray, int, float]:
    if quantize == "8-bit":
        return stack.images, 255, 1.0
    scaled = np.round(np.clip(stack.images * FLOAT_PGM_SCALE, 0, 65535))
    return scaled, 65535, FLOAT_PGM_SCALE


def write_simulation(sim: Simulation, config: PipelineConfig, out_dir) -> list[Path]:
    out = Path(out_dir)
    written = []
    with stage("simulate"):
        out.mkdir(parents=True, exist_ok=True)
        stacks = {"object": sim.object_stack, "reference": sim.reference_stack}
        if sim.low_stack is not None:
            stacks["object_low"] = sim.low_stack
        scale = 1.0
        for name, stack in stacks.items():
            images, maxval, scale = _stack_to_pgm(stack, config.fringe.quantize)
            for n, img in enumerate(images):
                path = out / f"{name}_{n}.pgm"
                raster.write_image(img, path, maxval=maxval)
                written.append(path)
        for name, grid in (("truth_phase", sim.true_phase), ("truth_height", sim.height)):
            path = out / f"{name}.fphm"
            raster.write_phase_map(grid, sim.mask, path)
            written.append(path)
        # the output location is left out so a rerun elsewhere is byte-identical
        recorded = config.to_dict()
        recorded.pop("out_dir")
        sidecar = {
            "config": recorded,
            "pgm_scale": scale,
            "high_frequency": config.high_frequency,
        }
        path = out / SIDECAR
        path.write_text(json.dumps(sidecar, indent=2))
        written.append(path)
    return written


def read_stack(directory, name: str, scale: float = 1.0) -> FringeStack:
    d = Path(directory)
    frames = [raster.read_image(d / f"{name}_{n}.pgm") / scale for n in range(4)]
    return FringeStack.from_frames(frames)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

@dataclass
class PipelineResult:
    method: str
    wrapped_object: WrappedPhaseMap
    wrapped_reference: WrappedPhaseMap | None
    min_phase: UnwrappedPhaseMap | None
    unwrapped: UnwrappedPhaseMap
    corrected: UnwrappedPhaseMap | None
    correction_applied: bool
    reports: dict = field(default_factory=dict)

    @property
    def final(self) -> UnwrappedPhaseMap:
        return self.corrected if self.corrected is not None else self.unwrapped

    def summary(self) -> dict:
        return {
            "method": self.method,
            "correction_applied": self.correction_applied,
            "reports": {k: v.to_dict() for k, v in self.reports.items()},
        }


def run_pipeline(
    object_stack: FringeStack,
    reference_stack: FringeStack | None,
    *,
    method: str = "geometric",
    truth=None,
    truth_mask=None,
    low_stack: FringeStack | None = None,
    freqs: FrequencyPair | None = None,
    mod_threshold: float = DEFAULT_MOD_THRESHOLD,
    seed_pixel=None,
) -> PipelineResult:
    """Demodulate, build the minimum phase map, unwrap, optionally correct.

    For ``geometric`` the residual correction runs only when the geometric
    output still has adjacent jumps above pi; ``geometric+correct`` always
    runs it. ``dual-frequency`` needs ``low_stack`` and ``freqs``.
    """
    if method not in METHODS:
        raise StageError("config", ValueError(f"unknown method {method!r}"))
    with stage("demod"):
        wo = four_step_phase(object_stack, mod_threshold)

    wr = ref = corrected = None
    applied = False
    if method == "dual-frequency":
        if low_stack is None or freqs is None:
            raise StageError("unwrap-dual", ValueError("dual-frequency needs a low-frequency stack"))
        with stage("demod"):
            wl = four_step_phase(low_stack, mod_threshold)
        with stage("unwrap-spatial"):
            low = quality_guided_unwrap(wl, seed_pixel)
        with stage("unwrap-dual"):
            unwrapped = dual_frequency_unwrap(low, wo, freqs)
    else:
        if reference_stack is None:
            raise StageError("unwrap-geometric", ValueError("geometric methods need a reference stack"))
        with stage("demod"):
            wr = four_step_phase(reference_stack, mod_threshold)
        with stage("unwrap-spatial"):
            ref = quality_guided_unwrap(wr, seed_pixel)
        with stage("unwrap-geometric"):
            unwrapped = geometric_unwrap(wo, MinPhaseMap.from_unwrapped(ref))
        if method == "geometric+correct" or has_residual_wraps(unwrapped):
            with stage("correct"):
                corrected = residual_correct(unwrapped, wo.modulation)
            applied = True

    result = PipelineResult(method, wo, wr, ref, unwrapped, corrected, applied)
    if truth is not None:
        with stage("evaluate"):
            result.reports[unwrapped.provenance] = evaluate(unwrapped, truth, truth_mask)
            if corrected is not None:
                result.reports[corrected.provenance] = evaluate(corrected, truth, truth_mask)
    return result


def write_pipeline_outputs(result: PipelineResult, out_dir, truth=None) -> list[Path]:
    """Write every intermediate as FPHM plus ``report.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items = [
        ("wrapped_object", result.wrapped_object.phase, result.wrapped_object.mask),
        ("modulation_object", result.wrapped_object.modulation, None),
    ]
    if result.wrapped_reference is not None:
        items += [
            ("wrapped_reference", result.wrapped_reference.phase, result.wrapped_reference.mask),
            ("modulation_reference", result.wrapped_reference.modulation, None),
        ]
    if result.min_phase is not None:
        items.append(("min_phase", result.min_phase.phase, result.min_phase.mask))
    items.append(("unwrapped", result.unwrapped.phase, result.unwrapped.mask))
    if result.corrected is not None:
        items.append(("corrected", result.corrected.phase, result.corrected.mask))
    if truth is not None:
        final = result.final
        rep = result.reports.get(final.provenance)
        piston = rep.piston_removed if rep is not None else 0.0
        diff = difference_map(final, truth, piston)
        # noise can lift a few no-return pixels over the modulation threshold
        items.append(("abs_error", diff, final.mask & np.isfinite(diff)))

    written = []
    with stage("write"):
        for name, grid, mask in items:
            path = out / f"{name}.fphm"
            raster.write_phase_map(grid, mask, path)
            written.append(path)
        path = out / "report.json"
        path.write_text(json.dumps(result.summary(), indent=2))
        written.append(path)
    return written


def pipeline_from_config(config: PipelineConfig, input_dir=None) -> tuple[PipelineResult, np.ndarray | None]:
    """Run the pipeline on a stored capture directory or a fresh simulation.

    Returns the result and the ground-truth phase (None for real captures
    without ``truth_phase.fphm``).
    """
    truth = truth_mask = low = None
    if input_dir is None:
        sim = simulate(config)
        obj, ref, low = sim.object_stack, sim.reference_stack, sim.low_stack
        truth, truth_mask = sim.true_phase, sim.mask
    else:
        d = Path(input_dir)
        with stage("read"):
            scale = 1.0
            if (d / SIDECAR).exists():
                scale = float(json.loads((d / SIDECAR).read_text()).get("pgm_scale", 1.0))
            obj = read_stack(d, "object", scale)
            ref = read_stack(d, "reference", scale) if (d / "reference_0.pgm").exists() else None
            if config.method == "dual-frequency":
                low = read_stack(d, "object_low", scale)
            if (d / "truth_phase.fphm").exists():
                truth, truth_mask = raster.read_phase_map(d / "truth_phase.fphm")
    freqs = None
    if config.method == "dual-frequency":
        freqs = FrequencyPair(config.low_frequency, config.high_frequency)
    result = run_pipeline(
        obj,
        ref,
        method=config.method,
        truth=truth,
        truth_mask=truth_mask,
        low_stack=low,
        freqs=freqs,
        mod_threshold=config.mod_threshold,
        seed_pixel=config.seed_pixel,
    )
    return result, truth


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

SWEEP_COLUMNS = ("ratio", "noise_sigma", "seed", "dual_error_rate", "geometric_error_rate")


@dataclass(frozen=True)
class SweepRow:
    ratio: float
    noise_sigma: float
    seed: int
    dual_error_rate: float
    geometric_error_rate: float


def sweep_cell(config: PipelineConfig, ratio: float, noise_sigma: float, seed: int, *, _scene_cache=None) -> SweepRow:
    """Both methods on the same high-frequency object stack.

    The low frequency is ``config.low_frequency`` fringes per image; the high
    one is ``ratio`` times that. The object phase increment is fixed at the
    high frequency and divided by ``ratio`` for the low one.
    """
    width = config.scene.width
    f1 = config.low_frequency
    f2 = ratio * f1
    if _scene_cache is None:
        h, mask = height_field(config.scene)
        dphi = phase_from_height(h, config.geometry)
    else:
        h, mask, dphi = _scene_cache
    hi = replace(config.fringe, period_px=width / f2, noise_sigma=noise_sigma, rng_seed=seed)
    lo = replace(hi, period_px=width / f1)
    truth = carrier_phase(h.shape, hi.period_px) + dphi

    with stage("simulate"):
        obj = render_fringes(dphi, hi, "object")
        ref = render_fringes(None, hi, "reference", shape=h.shape)
        low = render_fringes(dphi / ratio, lo, "object", stream=2)
    geo = run_pipeline(obj, ref, method="geometric", truth=truth, truth_mask=mask,
                       mod_threshold=config.mod_threshold)
    dual = run_pipeline(obj, None, method="dual-frequency", truth=truth, truth_mask=mask,
                        low_stack=low, freqs=FrequencyPair(f1, f2),
                        mod_threshold=config.mod_threshold)
    return SweepRow(
        ratio=float(ratio),
        noise_sigma=float(noise_sigma),
        seed=int(seed),
        dual_error_rate=dual.reports["dual-frequency"].order_error_rate,
        geometric_error_rate=geo.reports["geometric"].order_error_rate,
    )


def run_sweep(config: PipelineConfig, ratios, noise_levels, seeds) -> list[SweepRow]:
    ratios, noise_levels, seeds = list(ratios), list(noise_levels), list(seeds)
    if not (ratios and noise_levels and seeds):
        raise StageError("sweep", ValueError("ratios, noise levels and seeds must be non-empty"))
    with stage("simulate"):
        h, mask = height_field(config.scene)
        cache = (h, mask, phase_from_height(h, config.geometry))
    rows = []
    for ratio in ratios:
        for sigma in noise_levels:
            for seed in seeds:
                row = sweep_cell(config, ratio, sigma, seed, _scene_cache=cache)
                log.info("ratio=%g sigma=%g seed=%d dual=%.6f geometric=%.6f", ratio, sigma, seed,
                         row.dual_error_rate, row.geometric_error_rate)
                rows.append(row)
    return rows


def format_table(rows) -> str:
    lines = ["\t".join(SWEEP_COLUMNS)]
    for r in rows:
        lines.append(f"{r.ratio:g}\t{r.noise_sigma:g}\t{r.seed}\t{r.dual_error_rate:.8f}\t{r.geometric_error_rate:.8f}")
    return "\n".join(lines) + "\n"


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.to_dict(), indent=2)
