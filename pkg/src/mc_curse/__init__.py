"""Sample-size bounds, distributional laws and experiments for Monte Carlo maximization."""

from importlib import metadata

try:
    __version__ = metadata.version("artifact")
except metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .bounds import (
    SampleCount,
    cap_success_probability,
    expect_empirical_max,
    mode_empirical_max,
    nmin_box_axis,
    nmin_box_diag,
    nmin_l1,
    nmin_l2,
    nmin_l2_lower,
    nmin_multiobjective,
    uniform_grid_cardinality,
)
from .errors import BudgetExceededError, DimensionCapacityError
from .sampling import BallKind, RngStream

__all__ = [
    "BallKind",
    "BudgetExceededError",
    "DimensionCapacityError",
    "RngStream",
    "SampleCount",
    "cap_success_probability",
    "expect_empirical_max",
    "mode_empirical_max",
    "nmin_box_axis",
    "nmin_box_diag",
    "nmin_l1",
    "nmin_l2",
    "nmin_l2_lower",
    "nmin_multiobjective",
    "uniform_grid_cardinality",
]
