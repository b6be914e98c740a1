"""Geometric-constraint phase unwrapping for fringe projection profilometry."""

from .demod import FringeStack, WrappedPhaseMap, four_step_phase, validity_mask
from .metrics import EvalReport, evaluate, height_from_phase
from .raster import (
    read_image,
    read_phase_map,
    wrap_to_principal,
    write_image,
    write_phase_map,
)
from .spatial import UnwrappedPhaseMap, itoh_unwrap, itoh_unwrap_line, quality_guided_unwrap
from .synth import DfpGeometry, FringeParams, SceneSpec, height_field, phase_from_height, render_fringes
from .temporal import (
    FrequencyPair,
    MinPhaseMap,
    dual_frequency_unwrap,
    geometric_unwrap,
    residual_correct,
)

__version__ = "0.1.0"
