"""Value iteration for MDPs whose costs are only known up to intervals."""

from .core import Mdp, bellman_apply, enumerate_optimal, value_iteration
from .intervals import IntervalCost, IntervalVector, hausdorff_interval
from .set_bellman import MdpFamily, set_bellman_apply, set_value_iteration

__all__ = [
    "IntervalCost",
    "IntervalVector",
    "Mdp",
    "MdpFamily",
    "bellman_apply",
    "enumerate_optimal",
    "hausdorff_interval",
    "set_bellman_apply",
    "set_value_iteration",
    "value_iteration",
]
