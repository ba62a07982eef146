"""Set-valued Bellman operator on interval cost families.

For a box of costs ``[C_lo, C_hi]`` and a box of values ``[V_lo, V_hi]`` the
image of the lifted operator is again a box, ``[f_{C_lo}(V_lo), f_{C_hi}(V_hi)]``,
so every set computation here reduces to two ordinary Bellman tracks.  The
Monte-Carlo helpers check that claim against sampled costs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    DEFAULT_MAX_ITERS,
    Mdp,
    NonConvergenceError,
    bellman_apply,
    derive_seed,
    greedy_policy,
    random_mdp,
    require_valid,
    stopping_threshold,
    value_iteration,
)
from .intervals import IntervalCost, IntervalVector, excess_distance, hausdorff_interval


@dataclass(frozen=True, eq=False)
class MdpFamily:
    """MDPs sharing states, actions, kernel and discount; costs range over a box."""

    base: Mdp
    cost_set: IntervalCost

    def __post_init__(self):
        shape = (self.base.num_states, self.base.num_actions)
        if self.cost_set.shape != shape:
            raise ValueError(f"cost set has shape {self.cost_set.shape}, expected {shape}")
        # base.cost is ignored; use the lower endpoint so validation sees finite costs
        require_valid(self.base.with_cost(self.cost_set.lower))

    @classmethod
    def from_radius(cls, mdp: Mdp, radius) -> "MdpFamily":
        radius = np.broadcast_to(np.asarray(radius, dtype=float), mdp.cost.shape)
        return cls(mdp, IntervalCost(mdp.cost - radius, mdp.cost + radius))

    @property
    def num_states(self) -> int:
        return self.base.num_states

    @property
    def discount(self) -> float:
        return self.base.discount

    def lower_mdp(self) -> Mdp:
        return self.base.with_cost(self.cost_set.lower)

    def upper_mdp(self) -> Mdp:
        return self.base.with_cost(self.cost_set.upper)

    def __eq__(self, other):
        if not isinstance(other, MdpFamily):
            return NotImplemented
        return self.base == other.base and self.cost_set == other.cost_set


@dataclass
class SetSolveReport:
    fixed_point: IntervalVector
    iterations: int
    residual: float
    epsilon: float
    lower_policy: np.ndarray = field(repr=False, default=None)
    upper_policy: np.ndarray = field(repr=False, default=None)

    @property
    def guarantee_radius(self) -> float:
        """Hausdorff distance bound between ``fixed_point`` and the true fixed set."""
        return self.epsilon / 2

    def to_dict(self) -> dict:
        return {
            "lower": [float(x) for x in self.fixed_point.lower],
            "upper": [float(x) for x in self.fixed_point.upper],
            "iterations": int(self.iterations),
            "residual": float(self.residual),
            "epsilon": float(self.epsilon),
            "guarantee_radius": float(self.guarantee_radius),
        }


def _check_value_box(family: MdpFamily, v: IntervalVector) -> None:
    if len(v) != family.num_states:
        raise ValueError(f"interval vector has length {len(v)}, expected {family.num_states}")


def set_bellman_apply(family: MdpFamily, v: IntervalVector) -> IntervalVector:
    _check_value_box(family, v)
    lower = bellman_apply(family.base, v.lower, cost=family.cost_set.lower)
    upper = bellman_apply(family.base, v.upper, cost=family.cost_set.upper)
    return IntervalVector(lower, upper)


def set_value_iteration(
    family: MdpFamily,
    v0: IntervalVector | None = None,
    epsilon: float = 1e-6,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> SetSolveReport:
    """Iterate the set operator until consecutive boxes are within
    ``epsilon * (1 - gamma) / (2 * gamma)`` in Hausdorff distance.

    The result is within ``epsilon / 2`` of the fixed set; it is not an
    over-approximation, so use ``inflate(report.fixed_point, epsilon / 2)`` when
    a guaranteed enclosure is needed.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if v0 is None:
        v0 = IntervalVector.point(np.zeros(family.num_states))
    _check_value_box(family, v0)
    threshold = stopping_threshold(epsilon, family.discount)
    v = v0
    for k in range(1, max_iters + 1):
        v_next = set_bellman_apply(family, v)
        residual = hausdorff_interval(v_next, v)
        v = v_next
        if residual < threshold:
            return SetSolveReport(
                v,
                k,
                residual,
                float(epsilon),
                greedy_policy(family.base, v.lower, cost=family.cost_set.lower),
                greedy_policy(family.base, v.upper, cost=family.cost_set.upper),
            )
    raise NonConvergenceError(
        f"set value iteration did not reach threshold {threshold:.3g} in {max_iters} iterations"
    )


def sample_cost(family: MdpFamily, seed) -> np.ndarray:
    """Cost matrix drawn entrywise uniformly from the family's cost box."""
    rng = np.random.default_rng(seed)
    lo, hi = family.cost_set.lower, family.cost_set.upper
    u = rng.random(lo.shape)
    # clip guards against lo + (hi - lo) * u rounding past hi
    return np.clip(lo + (hi - lo) * u, lo, hi)


def sample_value(v: IntervalVector, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.clip(v.lower + v.width * rng.random(len(v)), v.lower, v.upper)


def monte_carlo_convergence(
    family: MdpFamily,
    v0,
    num_steps: int,
    seed: int,
    epsilon: float = 1e-9,
    reference: IntervalVector | None = None,
) -> np.ndarray:
    """Distance from ``V^k`` to the fixed set when each step uses a freshly
    sampled cost ``C^k`` from the family.

    Returns ``num_steps + 1`` distances (index 0 is the distance of ``v0``).
    Step ``k`` draws its cost with ``derive_seed(seed, k)``, so any step can be
    reproduced on its own.
    """
    if num_steps < 1:
        raise ValueError("num_steps must be at least 1")
    if reference is None:
        reference = set_value_iteration(family, epsilon=epsilon).fixed_point
    v = np.asarray(v0, dtype=float)
    distances = [excess_distance(reference, v)]
    for k in range(num_steps):
        v = bellman_apply(family.base, v, cost=sample_cost(family, derive_seed(seed, k)))
        distances.append(excess_distance(reference, v))
    return np.array(distances)


def check_contraction(family: MdpFamily, x: IntervalVector, y: IntervalVector) -> float:
    """Ratio ``d_H(F(x), F(y)) / d_H(x, y)``; at most the discount factor."""
    before = hausdorff_interval(x, y)
    if before == 0:
        raise ValueError("contraction ratio undefined for identical intervals")
    return hausdorff_interval(set_bellman_apply(family, x), set_bellman_apply(family, y)) / before


def random_family(
    num_states: int,
    num_actions: int,
    discount: float,
    seed,
    cost_range=(0.0, 1.0),
    max_radius: float = 0.5,
) -> MdpFamily:
    rng = np.random.default_rng(seed)
    mdp = random_mdp(num_states, num_actions, discount, rng, cost_range)
    radius = rng.uniform(0.0, max_radius, size=mdp.cost.shape)
    return MdpFamily.from_radius(mdp, radius)


def random_interval_vector(num_states: int, rng, scale: float = 10.0) -> IntervalVector:
    a = rng.uniform(-scale, scale, size=num_states)
    b = rng.uniform(-scale, scale, size=num_states)
    return IntervalVector(np.minimum(a, b), np.maximum(a, b))


def point_fixed_point(family: MdpFamily, cost, epsilon: float = 1e-9) -> np.ndarray:
    """Standard value-iteration fixed point for one constant cost in the family."""
    return value_iteration(family.base.with_cost(cost), epsilon=epsilon).value
