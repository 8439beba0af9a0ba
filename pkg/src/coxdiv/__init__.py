"""Optimal dividend strategies under shot-noise Cox claim arrivals.

Library layout:

* `model`, `distributions` - risk-model primitives and the three size laws;
* `grid` - the product state grid and its projections;
* `kernel`, `hjb` - one-step transition kernels and the fixed-point solver;
* `simulate` - exact path simulation and Monte-Carlo validation;
* `baseline` - the classical constant-intensity comparison solves;
* `config`, `cli` - experiment configs and the batch front-end.
"""

from .distributions import Deterministic, Erlang, Exponential, distribution_from_dict
from .grid import IntensityGrid, StateGrid, SurplusGrid, decay_crossings, decay_segments
from .hjb import FINISH, HOLD, PAY, PolicyPartition, SolveResult, SolverError, ValueSurface, refine_check, solve
from .model import ModelParams

__all__ = [
    "Deterministic",
    "Erlang",
    "Exponential",
    "distribution_from_dict",
    "IntensityGrid",
    "StateGrid",
    "SurplusGrid",
    "decay_crossings",
    "decay_segments",
    "ModelParams",
    "HOLD",
    "PAY",
    "FINISH",
    "PolicyPartition",
    "SolveResult",
    "SolverError",
    "ValueSurface",
    "refine_check",
    "solve",
]

__version__ = "0.1.0"
