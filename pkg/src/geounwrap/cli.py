"""Command line entry point: ``geounwrap <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from . import raster
from .demod import FringeStack, WrappedPhaseMap, four_step_phase, validity_mask
from .metrics import difference_map, evaluate
from .spatial import UnwrappedPhaseMap, itoh_unwrap, quality_guided_unwrap
from .synth import SCENE_KINDS
from .temporal import FrequencyPair, MinPhaseMap, dual_frequency_unwrap, geometric_unwrap, residual_correct

log = logging.getLogger("geounwrap")


def _pixel(text: str) -> tuple[int, int]:
    """``X,Y`` on the command line -> ``(row, col)``."""
    try:
        x, y = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}") from None
    return y, x


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _seeds(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part.strip("-"):
            lo, hi = part.split("-")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON config; command-line flags win")
    p.add_argument("--out", help="output directory (simulate, demod, pipeline) or file")
    p.add_argument("--seed", type=int)
    p.add_argument("--period-px", type=float)
    p.add_argument("--noise-sigma", type=float)
    p.add_argument("--method", choices=ex.METHODS)
    p.add_argument("--ratio", type=float, help="high/low frequency ratio")
    p.add_argument("--seed-pixel", type=_pixel, help="spatial unwrap seed as X,Y")
    p.add_argument("--mod-threshold", type=float)
    p.add_argument("--scene", choices=SCENE_KINDS)
    p.add_argument("--quantize", choices=("none", "8-bit"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_config(args) -> ex.PipelineConfig:
    cfg = ex.load_config(args.config) if args.config else ex.PipelineConfig()
    fringe = cfg.fringe
    if args.period_px is not None:
        fringe = replace(fringe, period_px=args.period_px)
    if args.noise_sigma is not None:
        fringe = replace(fringe, noise_sigma=args.noise_sigma)
    if args.quantize is not None:
        fringe = replace(fringe, quantize=args.quantize)
    scene = cfg.scene if args.scene is None else replace(cfg.scene, kind=args.scene)
    updates = {"fringe": fringe, "scene": scene}
    for attr, key in (("seed", "seed"), ("mod_threshold", "mod_threshold"), ("seed_pixel", "seed_pixel"),
                      ("out", "out_dir"), ("method", "method")):
        value = getattr(args, attr)
        if value is not None:
            updates[key] = value
    if args.ratio is not None:
        updates["low_frequency"] = scene.width / fringe.period_px / args.ratio
    # validation runs on the merged config
    return ex.PipelineConfig(**{**cfg.__dict__, **updates})


def _threshold(args) -> float:
    return ex.DEFAULT_MOD_THRESHOLD if args.mod_threshold is None else args.mod_threshold


def _wrapped_from_files(phase_path, modulation_path, threshold) -> WrappedPhaseMap:
    phase, mask = raster.read_phase_map(phase_path)
    if modulation_path is not None:
        modulation, mod_mask = raster.read_phase_map(modulation_path)
        if modulation.shape != phase.shape:
            raise ValueError("modulation map does not match phase map")
        mask &= mod_mask & validity_mask(np.nan_to_num(modulation), threshold)
    else:
        modulation = np.ones_like(phase)
    return WrappedPhaseMap(np.nan_to_num(phase), np.nan_to_num(modulation), mask)


def _unwrapped_from_file(path, provenance) -> UnwrappedPhaseMap:
    phase, mask = raster.read_phase_map(path)
    return UnwrappedPhaseMap(phase, mask, provenance)


def _out_file(args, default: str) -> Path:
    path = Path(args.out or default)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = build_config(args)
    sim = ex.simulate(cfg)
    files = ex.write_simulation(sim, cfg, cfg.out_dir)
    for f in files:
        print(f)
    return 0


def cmd_demod(args) -> int:
    frames = [raster.read_image(p) / args.scale for p in args.images]
    wrapped = four_step_phase(FringeStack.from_frames(frames), _threshold(args))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    raster.write_phase_map(wrapped.phase, wrapped.mask, out / f"{args.prefix}phase.fphm")
    raster.write_phase_map(wrapped.modulation, None, out / f"{args.prefix}modulation.fphm")
    return 0


def cmd_unwrap_spatial(args) -> int:
    wrapped = _wrapped_from_files(args.phase, args.modulation, _threshold(args))
    if args.algorithm == "itoh":
        anchor = None if args.seed_pixel is None else args.seed_pixel[1]
        result = itoh_unwrap(wrapped, anchor)
    else:
        result = quality_guided_unwrap(wrapped, args.seed_pixel)
    raster.write_phase_map(result.phase, result.mask, _out_file(args, "min_phase.fphm"))
    return 0


def cmd_unwrap_geometric(args) -> int:
    wrapped = _wrapped_from_files(args.phase, args.modulation, _threshold(args))
    min_phase, min_mask = raster.read_phase_map(args.min_phase)
    result = geometric_unwrap(wrapped, MinPhaseMap(min_phase, min_mask))
    raster.write_phase_map(result.phase, result.mask, _out_file(args, "unwrapped.fphm"))
    return 0


def cmd_unwrap_dual(args) -> int:
    if args.ratio is None:
        raise ValueError("--ratio is required")
    low = _unwrapped_from_file(args.low, "spatial-quality-guided")
    wrapped = _wrapped_from_files(args.phase, args.modulation, _threshold(args))
    result = dual_frequency_unwrap(low, wrapped, FrequencyPair(1.0, args.ratio))
    raster.write_phase_map(result.phase, result.mask, _out_file(args, "unwrapped_dual.fphm"))
    return 0


def cmd_correct(args) -> int:
    unwrapped = _unwrapped_from_file(args.unwrapped, "geometric")
    quality = None
    if args.modulation is not None:
        quality, _ = raster.read_phase_map(args.modulation)
        quality = np.nan_to_num(quality, nan=-np.inf)
    result = residual_correct(unwrapped, quality)
    raster.write_phase_map(result.phase, result.mask, _out_file(args, "corrected.fphm"))
    return 0


def cmd_evaluate(args) -> int:
    est, est_mask = raster.read_phase_map(args.estimate)
    truth, truth_mask = raster.read_phase_map(args.truth)
    report = evaluate(est, truth, est_mask & truth_mask, remove_piston=not args.no_piston)
    text = json.dumps(report.to_dict(), indent=2)
    if args.out:
        _out_file(args, args.out).write_text(text + "\n")
    if args.diff:
        raster.write_phase_map(difference_map(est, truth, report.piston_removed), est_mask & truth_mask, args.diff)
    print(text)
    return 0


def cmd_pipeline(args) -> int:
    cfg = build_config(args)
    result, truth = ex.pipeline_from_config(cfg, args.input)
    ex.write_pipeline_outputs(result, cfg.out_dir, truth)
    print(json.dumps(result.summary(), indent=2))
    return 0


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    ratios = args.ratios if args.ratios else ([args.ratio] if args.ratio else [4.0, 8.0, 16.0, 32.0])
    noise = args.noise_levels if args.noise_levels else [cfg.fringe.noise_sigma]
    seeds = args.seeds if args.seeds else [cfg.seed]
    table = ex.format_table(ex.run_sweep(cfg, ratios, noise, seeds))
    if args.out:
        _out_file(args, args.out).write_text(table)
    sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="geounwrap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="render object and reference stacks")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("demod", parents=[common], help="four-step demodulation of 4 PGM frames")
    p.add_argument("images", nargs=4, type=Path)
    p.add_argument("--scale", type=float, default=1.0, help="divide samples by this (16-bit float stacks)")
    p.add_argument("--prefix", default="", help="output file name prefix")
    p.set_defaults(func=cmd_demod)

    p = sub.add_parser("unwrap-spatial", parents=[common], help="spatially unwrap a reference-plane phase")
    p.add_argument("phase", type=Path)
    p.add_argument("--modulation", type=Path)
    p.add_argument("--algorithm", choices=("quality-guided", "itoh"), default="quality-guided")
    p.set_defaults(func=cmd_unwrap_spatial)

    p = sub.add_parser("unwrap-geometric", parents=[common], help="unwrap against a minimum phase map")
    p.add_argument("phase", type=Path)
    p.add_argument("min_phase", type=Path)
    p.add_argument("--modulation", type=Path)
    p.set_defaults(func=cmd_unwrap_geometric)

    p = sub.add_parser("unwrap-dual", parents=[common], help="conventional dual-frequency unwrap")
    p.add_argument("low", type=Path, help="continuous low-frequency phase")
    p.add_argument("phase", type=Path, help="wrapped high-frequency phase")
    p.add_argument("--modulation", type=Path)
    p.set_defaults(func=cmd_unwrap_dual)

    p = sub.add_parser("correct", parents=[common], help="remove residual 2pi wraps")
    p.add_argument("unwrapped", type=Path)
    p.add_argument("--modulation", type=Path)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("evaluate", parents=[common], help="compare a phase map with ground truth")
    p.add_argument("estimate", type=Path)
    p.add_argument("truth", type=Path)
    p.add_argument("--no-piston", action="store_true")
    p.add_argument("--diff", type=Path, help="write |difference| as FPHM")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", parents=[common], help="full pipeline on a capture dir or a fresh simulation")
    p.add_argument("--input", type=Path, help="directory written by 'simulate' (or real PGM captures)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("sweep", parents=[common], help="order-error rates across ratios, noise and seeds")
    p.add_argument("--ratios", type=_floats)
    p.add_argument("--noise-levels", type=_floats, help="intensity noise sigmas")
    p.add_argument("--seeds", type=_seeds, help="e.g. 0-9 or 1,5,7")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with ex.stage(args.command):
            return args.func(args)
    except ex.StageError as exc:
        print(f"error {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
