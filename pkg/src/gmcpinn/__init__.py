"""Sampling-based fractional derivative estimators and a PINN solver built on them.

The estimators draw lattice offsets from the Grunwald-Letnikov weight law and
average function values there; the solver uses them as the discrete operator
inside a physics-informed loss. See :mod:`gmcpinn.runner` for the config
format and :mod:`gmcpinn.cli` for the command line.
"""

from .estimators import (
    AxisBounds,
    EstimatorConfig,
    Extension,
    caputo_time,
    gl_deterministic_oracle,
    gl_left,
    gl_right,
    riesz,
)
from .geometry import Ball, CurveDomain, disk, heart, make_domain
from .problems import ProblemSpec, error_report, fuzzy_boundary_setup, get_problem, l2_relative_error
from .sampler import FracOrder, JumpDistribution, NodeSet, draw_nodes
from .solver import LossWeights, TrainConfig, TrainResult, train
from .streams import halton, make_stream, pseudo_random, sobol_1d, split

__version__ = "0.1.0"

__all__ = [
    "AxisBounds",
    "Ball",
    "CurveDomain",
    "EstimatorConfig",
    "Extension",
    "FracOrder",
    "JumpDistribution",
    "LossWeights",
    "NodeSet",
    "ProblemSpec",
    "TrainConfig",
    "TrainResult",
    "caputo_time",
    "disk",
    "draw_nodes",
    "error_report",
    "fuzzy_boundary_setup",
    "get_problem",
    "gl_deterministic_oracle",
    "gl_left",
    "gl_right",
    "halton",
    "heart",
    "l2_relative_error",
    "make_domain",
    "make_stream",
    "pseudo_random",
    "riesz",
    "sobol_1d",
    "split",
    "train",
]
