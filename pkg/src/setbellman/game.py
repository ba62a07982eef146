"""Two-player zero-sum stochastic games with coupled costs.

Both players share states, actions and the transition kernel.  With a
non-negative coupling matrix ``A``::

    C1[s, a] = C[s, a] + A[s, a] * pi2(s, a)
    C2[s, a] = C[s, a] - A[s, a] * pi1(s, a)

Player 1 runs value iteration against whatever cost the current opponent
policy induces; the opponent is pluggable.  Player 1's costs always lie in
``[C, C + A]``, so its values are eventually trapped in the fixed set of the
interval operator for that box.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Mdp, bellman_apply, derive_seed, greedy_policy, q_values
from .gridworld import GridSpec, build_grid_transition, random_cost_matrix
from .intervals import IntervalCost, IntervalVector, excess_distance, inflate, interval_contains
from .set_bellman import MdpFamily, SetSolveReport, set_value_iteration

VI_MINIMIZER = "vi_minimizer"
VI_MAXIMIZER = "vi_maximizer"
FIXED_POLICY = "fixed_policy"
OPPONENT_KINDS = (VI_MINIMIZER, VI_MAXIMIZER, FIXED_POLICY)


@dataclass(frozen=True, eq=False)
class GameSpec:
    base: Mdp
    nominal_cost: np.ndarray
    coupling: np.ndarray
    gamma1: float
    gamma2: float

    def __post_init__(self):
        shape = (self.base.num_states, self.base.num_actions)
        nominal = np.asarray(self.nominal_cost, dtype=float)
        coupling = np.asarray(self.coupling, dtype=float)
        if nominal.shape != shape or coupling.shape != shape:
            raise ValueError(f"nominal cost and coupling must both have shape {shape}")
        if np.any(coupling < 0):
            raise ValueError("coupling entries must be non-negative")
        for name in ("gamma1", "gamma2"):
            g = float(getattr(self, name))
            if not 0 < g < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {g}")
            object.__setattr__(self, name, g)
        object.__setattr__(self, "nominal_cost", nominal)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "base", self.base.with_cost(nominal).with_discount(self.gamma1))

    @property
    def num_states(self) -> int:
        return self.base.num_states

    @property
    def num_actions(self) -> int:
        return self.base.num_actions

    def with_gamma2(self, gamma2: float) -> "GameSpec":
        return GameSpec(self.base, self.nominal_cost, self.coupling, self.gamma1, gamma2)

    def __eq__(self, other):
        if not isinstance(other, GameSpec):
            return NotImplemented
        return (
            self.base == other.base
            and np.array_equal(self.coupling, other.coupling)
            and self.gamma1 == other.gamma1
            and self.gamma2 == other.gamma2
        )


def game_from_grid(
    grid: GridSpec,
    gamma1: float,
    gamma2: float,
    cost_range=(0.0, 1.0),
    coupling_range=(0.0, 0.1),
) -> GameSpec:
    """Grid game with nominal cost and coupling drawn from ``grid.seed``."""
    S, A = grid.num_states, grid.num_actions
    cost = random_cost_matrix(S, A, *cost_range, seed=derive_seed(grid.seed, 0))
    coupling = random_cost_matrix(S, A, *coupling_range, seed=derive_seed(grid.seed, 1))
    base = Mdp(S, A, build_grid_transition(grid), cost, gamma1)
    return GameSpec(base, cost, coupling, gamma1, gamma2)


def _indicator(spec: GameSpec, pi) -> np.ndarray:
    pi = np.asarray(pi)
    if pi.shape != (spec.num_states,) or np.any(pi < 0) or np.any(pi >= spec.num_actions):
        raise ValueError(f"invalid deterministic policy {pi!r}")
    out = np.zeros((spec.num_states, spec.num_actions))
    out[np.arange(spec.num_states), pi] = 1.0
    return out


def player_costs(spec: GameSpec, pi1, pi2) -> tuple[np.ndarray, np.ndarray]:
    c1 = spec.nominal_cost + spec.coupling * _indicator(spec, pi2)
    c2 = spec.nominal_cost - spec.coupling * _indicator(spec, pi1)
    return c1, c2


def derive_cost_intervals(spec: GameSpec) -> tuple[IntervalCost, IntervalCost]:
    """Cost boxes each player faces whatever the opponent plays.

    Player 2's box is written ``[C - A, C]`` (lower bound first).
    """
    C, A = spec.nominal_cost, spec.coupling
    return IntervalCost(C, C + A), IntervalCost(C - A, C)


def player1_family(spec: GameSpec) -> MdpFamily:
    return MdpFamily(spec.base, derive_cost_intervals(spec)[0])


def player1_bounds(spec: GameSpec, epsilon: float = 1e-9) -> SetSolveReport:
    return set_value_iteration(player1_family(spec), epsilon=epsilon)


@dataclass(frozen=True)
class OpponentStrategy:
    """How player 2 picks its policy given player 1's latest policy.

    The VI kinds keep their own value vector, advanced by one Bellman step
    (min or max over actions) per round under player 2's coupled cost and
    ``gamma2``.  When ``initial_value`` is omitted it is drawn uniformly from
    ``[0, 1]`` with ``seed``.
    """

    kind: str
    gamma2: float | None = None
    fixed: tuple | None = None
    initial_value: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in OPPONENT_KINDS:
            raise ValueError(f"unknown opponent kind {self.kind!r}; expected one of {OPPONENT_KINDS}")
        if self.kind == FIXED_POLICY and self.fixed is None:
            raise ValueError("fixed_policy opponent needs a policy")
        if self.gamma2 is not None and not 0 < self.gamma2 < 1:
            raise ValueError(f"gamma2 must lie in (0, 1), got {self.gamma2}")
        for name in ("fixed", "initial_value"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(np.asarray(value).tolist()))

    def start_value(self, num_states: int) -> np.ndarray:
        if self.initial_value is not None:
            value = np.asarray(self.initial_value, dtype=float)
            if value.shape != (num_states,):
                raise ValueError(f"opponent initial value must have length {num_states}")
            return value
        return np.random.default_rng(self.seed).random(num_states)


@dataclass
class TrajectoryRecord:
    k: int
    value: np.ndarray
    pi1: np.ndarray
    pi2: np.ndarray
    cost: np.ndarray
    opponent_value: np.ndarray | None = None


@dataclass
class Trajectory:
    records: list[TrajectoryRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.records])

    @property
    def norms(self) -> np.ndarray:
        return np.max(np.abs(self.values), axis=1)


def _opponent_step(spec: GameSpec, opponent: OpponentStrategy, pi1, w):
    if opponent.kind == FIXED_POLICY:
        return np.asarray(opponent.fixed, dtype=int), w
    gamma2 = spec.gamma2 if opponent.gamma2 is None else opponent.gamma2
    c2 = spec.nominal_cost - spec.coupling * _indicator(spec, pi1)
    q = q_values(spec.base, w, cost=c2, discount=gamma2)
    if opponent.kind == VI_MINIMIZER:
        return q.argmin(axis=1), q.min(axis=1)
    return q.argmax(axis=1), q.max(axis=1)


def run_two_player_vi(spec: GameSpec, opponent: OpponentStrategy, v0, num_iters: int) -> Trajectory:
    """Simulate ``num_iters`` rounds of two-player value iteration.

    Each round: ``C^k = C1(pi1^k, pi2^k)``, ``V^{k+1} = f_{C^k}(V^k)``,
    ``pi1^{k+1}`` greedy at ``V^k`` under ``C^k`` and ``pi2^{k+1}`` from the
    opponent.  Both policies start at action 0 everywhere.
    """
    if num_iters < 1:
        raise ValueError("num_iters must be at least 1")
    S = spec.num_states
    v = np.asarray(v0, dtype=float)
    if v.shape != (S,):
        raise ValueError(f"v0 must have length {S}")
    pi1 = np.zeros(S, dtype=int)
    pi2 = np.zeros(S, dtype=int) if opponent.kind != FIXED_POLICY else np.asarray(opponent.fixed, dtype=int)
    w = None if opponent.kind == FIXED_POLICY else opponent.start_value(S)
    cost = player_costs(spec, pi1, pi2)[0]
    traj = Trajectory([TrajectoryRecord(0, v, pi1, pi2, cost, w)])
    for k in range(num_iters):
        v_next = bellman_apply(spec.base, v, cost=cost)
        pi1 = greedy_policy(spec.base, v, cost=cost)
        pi2, w = _opponent_step(spec, opponent, pi1, w)
        v = v_next
        cost = player_costs(spec, pi1, pi2)[0]
        traj.records.append(TrajectoryRecord(k + 1, v, pi1, pi2, cost, w))
    return traj


@dataclass
class BoundsReport:
    burn_in: int
    tol: float
    first_violation: int | None
    violations: list[int]
    excess: np.ndarray
    max_excess: float

    @property
    def ok(self) -> bool:
        return self.first_violation is None

    def to_dict(self) -> dict:
        return {
            "burn_in": self.burn_in,
            "tol": self.tol,
            "first_violation": self.first_violation,
            "violations": self.violations,
            "max_excess_after_burn_in": self.max_excess,
            "ok": self.ok,
        }


def check_trajectory_bounds(traj: Trajectory, bounds: IntervalVector, burn_in: int, tol: float) -> BoundsReport:
    """Containment of ``V^k`` in ``inflate(bounds, tol)`` for ``k >= burn_in``.

    ``excess[k]`` is the distance of ``V^k`` to the uninflated bounds, for every
    ``k`` including the burn-in.
    """
    if not 0 <= burn_in < len(traj):
        raise ValueError(f"burn_in must lie in [0, {len(traj)}), got {burn_in}")
    box = inflate(bounds, tol)
    excess = np.array([excess_distance(bounds, r.value) for r in traj.records])
    violations = [r.k for r in traj.records[burn_in:] if not interval_contains(box, r.value)]
    return BoundsReport(
        burn_in,
        float(tol),
        violations[0] if violations else None,
        violations,
        excess,
        float(excess[burn_in:].max()),
    )


def norm_band(bounds: IntervalVector) -> tuple[float, float]:
    """Sup-norms of the lower and upper bound vectors."""
    return float(np.max(np.abs(bounds.lower))), float(np.max(np.abs(bounds.upper)))


def check_norm_band(traj: Trajectory, bounds: IntervalVector, burn_in: int, tol: float) -> list[int]:
    """Iterations ``k >= burn_in`` whose value norm leaves the predicted band."""
    lo, hi = norm_band(bounds)
    norms = traj.norms
    return [k for k in range(burn_in, len(traj)) if not lo - tol <= norms[k] <= hi + tol]
