"""Lower and upper bounds on quantum violations of bipartite Bell inequalities."""

from . import bell, lb, nonstandard, qcore, sdp, states, ub
from .bell import BellInequality, CorrelationInequality, MeasurementAssignment, named
from .config import TOL
from .lb import SeesawConfig, horodecki_values, seesaw
from .qcore import DensityMatrix, PureState
from .ub import (chsh_semianalytic, ub_enumerate_profiles, ub_fixed_trace,
                 ub_state_independent, ub_threshold)

__all__ = [
    "bell", "lb", "nonstandard", "qcore", "sdp", "states", "ub",
    "BellInequality", "CorrelationInequality", "MeasurementAssignment", "named", "TOL",
    "SeesawConfig", "horodecki_values", "seesaw", "DensityMatrix", "PureState",
    "chsh_semianalytic", "ub_enumerate_profiles", "ub_fixed_trace", "ub_state_independent",
    "ub_threshold",
]
