"""Point singularities of first-order implicit ODEs G(x, y, dy/dx) = 0."""

from .clairaut import GeneratingFamily, classify_family, dara_check, is_clairaut_type, is_reduced
from .classify import (KINDS, SingularPointReport, classify_equilibrium, classify_implicit_point,
                       find_folded_equilibria, k_from_lambda, k_lambda_convert, lambda_from_k,
                       resonance_detect, scan_implicit)
from .config import Config
from .errors import FoldsingError, InputError, NumericError
from .flow import FlowLimits, PhaseCurve, integrate
from .jets import Jet
from .portrait import PortraitSpec, build, render, render_family
from .surface import Box, EquationSurface, trace_criminant
from .umbrella import UmbrellaInput, reduce_and_integrate

__version__ = "0.1.0"

__all__ = [
    "Box", "Config", "EquationSurface", "FlowLimits", "FoldsingError", "GeneratingFamily", "InputError",
    "Jet", "KINDS", "NumericError", "PhaseCurve", "PortraitSpec", "SingularPointReport", "UmbrellaInput",
    "build", "classify_equilibrium", "classify_family", "classify_implicit_point", "dara_check",
    "find_folded_equilibria", "integrate", "is_clairaut_type", "is_reduced", "k_from_lambda",
    "k_lambda_convert", "lambda_from_k", "reduce_and_integrate", "render", "render_family",
    "resonance_detect", "scan_implicit", "trace_criminant",
]
