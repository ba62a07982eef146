"""Discounted-cost MDPs: Bellman operator, greedy policies, policy evaluation
and value iteration.

Transition kernels are stored column-stochastic with shape ``(S, S*A)``; the
column for state-action ``(s, a)`` is ``s * A + a`` and entry ``P[s', s*A + a]``
is the probability of landing in ``s'``.  Costs are minimized.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

STOCHASTIC_TOL = 1e-9
DEFAULT_MAX_ITERS = 10**6
ENUMERATION_LIMIT = 10**6


class DimensionError(ValueError):
    """Array shapes do not agree with the MDP."""


class InvalidMdpError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid MDP: " + "; ".join(self.violations))


class NonConvergenceError(RuntimeError):
    pass


class ProblemTooLargeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Mdp:
    num_states: int
    num_actions: int
    transition: np.ndarray
    cost: np.ndarray
    discount: float

    def __post_init__(self):
        transition = np.asarray(self.transition, dtype=float)
        cost = np.asarray(self.cost, dtype=float)
        S, A = int(self.num_states), int(self.num_actions)
        if S < 1 or A < 1:
            raise DimensionError(f"need at least one state and action, got S={S}, A={A}")
        if transition.shape != (S, S * A):
            raise DimensionError(f"transition must have shape {(S, S * A)}, got {transition.shape}")
        if cost.shape != (S, A):
            raise DimensionError(f"cost must have shape {(S, A)}, got {cost.shape}")
        object.__setattr__(self, "num_states", S)
        object.__setattr__(self, "num_actions", A)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "discount", float(self.discount))

    @property
    def kernel(self) -> np.ndarray:
        """Transition probabilities indexed ``[s', s, a]``."""
        return self.transition.reshape(self.num_states, self.num_states, self.num_actions)

    def with_cost(self, cost) -> "Mdp":
        return Mdp(self.num_states, self.num_actions, self.transition, cost, self.discount)

    def with_discount(self, discount: float) -> "Mdp":
        return Mdp(self.num_states, self.num_actions, self.transition, self.cost, discount)

    def __eq__(self, other):
        if not isinstance(other, Mdp):
            return NotImplemented
        return (
            self.num_states == other.num_states
            and self.num_actions == other.num_actions
            and self.discount == other.discount
            and np.array_equal(self.transition, other.transition)
            and np.array_equal(self.cost, other.cost)
        )


@dataclass
class SolveReport:
    value: np.ndarray
    policy: np.ndarray
    iterations: int
    residual: float
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "value": [float(x) for x in self.value],
            "policy": [int(a) for a in self.policy],
            "iterations": int(self.iterations),
            "residual": float(self.residual),
        }


def column_index(s: int, a: int, num_actions: int) -> int:
    return s * num_actions + a


def validate_mdp(mdp: Mdp) -> list[str]:
    """Return a description of every violated invariant; empty when valid."""
    violations = []
    P = mdp.transition
    if not np.all(np.isfinite(P)):
        violations.append("transition has non-finite entries")
    if np.any(P < 0):
        violations.append("transition has negative entries")
    sums = P.sum(axis=0)
    for col in np.flatnonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL):
        s, a = divmod(int(col), mdp.num_actions)
        violations.append(f"column ({s},{a}) not stochastic (sums to {sums[col]:.12g})")
    if not (0.0 < mdp.discount < 1.0):
        violations.append("discount out of range")
    if not np.all(np.isfinite(mdp.cost)):
        violations.append("cost has non-finite entries")
    return violations


def require_valid(mdp: Mdp) -> None:
    violations = validate_mdp(mdp)
    if violations:
        raise InvalidMdpError(violations)


def _as_value(mdp: Mdp, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (mdp.num_states,):
        raise DimensionError(f"value vector must have length {mdp.num_states}, got shape {v.shape}")
    return v


def _as_policy(mdp: Mdp, pi) -> np.ndarray:
    pi = np.asarray(pi)
    if pi.shape != (mdp.num_states,):
        raise DimensionError(f"policy must have length {mdp.num_states}, got shape {pi.shape}")
    if not np.issubdtype(pi.dtype, np.integer):
        if not np.all(np.mod(pi, 1) == 0):
            raise ValueError("policy entries must be integer action indices")
        pi = pi.astype(int)
    if np.any(pi < 0) or np.any(pi >= mdp.num_actions):
        raise ValueError(f"policy entries must lie in [0, {mdp.num_actions})")
    return pi


def q_values(mdp: Mdp, v, cost=None, discount=None) -> np.ndarray:
    """``Q[s, a] = C[s, a] + gamma * sum_s' P[s', (s, a)] v[s']``.

    ``cost`` and ``discount`` override the MDP's own values, which lets the
    interval and game code reuse a kernel under many cost matrices.
    """
    v = _as_value(mdp, v)
    cost = mdp.cost if cost is None else cost
    discount = mdp.discount if discount is None else discount
    expected = np.tensordot(v, mdp.kernel, axes=(0, 0))
    return cost + discount * expected


def bellman_apply(mdp: Mdp, v, cost=None, discount=None) -> np.ndarray:
    return q_values(mdp, v, cost, discount).min(axis=1)


def greedy_policy(mdp: Mdp, v, cost=None, discount=None) -> np.ndarray:
    """Argmin action per state; ``np.argmin`` breaks ties toward the lowest index."""
    return q_values(mdp, v, cost, discount).argmin(axis=1)


def policy_cost(mdp: Mdp, pi) -> np.ndarray:
    pi = _as_policy(mdp, pi)
    return mdp.cost[np.arange(mdp.num_states), pi]


def policy_matrix(mdp: Mdp, pi) -> np.ndarray:
    """Row-stochastic ``S x S`` chain induced by ``pi``: entry ``[s, s']`` is ``P[s', (s, pi[s])]``."""
    pi = _as_policy(mdp, pi)
    return mdp.kernel[:, np.arange(mdp.num_states), pi].T


def policy_value(mdp: Mdp, pi) -> np.ndarray:
    """Stationary value of a deterministic policy via a dense linear solve."""
    require_valid(mdp)
    pi = _as_policy(mdp, pi)
    system = np.eye(mdp.num_states) - mdp.discount * policy_matrix(mdp, pi)
    return np.linalg.solve(system, policy_cost(mdp, pi))


def stopping_threshold(epsilon: float, discount: float) -> float:
    return epsilon * (1.0 - discount) / (2.0 * discount)


def value_iteration(
    mdp: Mdp,
    v0=None,
    epsilon: float = 1e-6,
    max_iters: int = DEFAULT_MAX_ITERS,
    record: bool = False,
) -> SolveReport:
    """Iterate the Bellman operator until the sup-norm step drops below
    ``epsilon * (1 - gamma) / (2 * gamma)``.

    The returned value is then within ``epsilon / 2`` of the fixed point.
    With ``record=True`` every iterate (including ``v0``) is kept in
    ``report.history``.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    require_valid(mdp)
    v = np.zeros(mdp.num_states) if v0 is None else _as_value(mdp, v0).copy()
    threshold = stopping_threshold(epsilon, mdp.discount)
    history = [v] if record else []
    for k in range(1, max_iters + 1):
        v_next = bellman_apply(mdp, v)
        residual = float(np.max(np.abs(v_next - v)))
        if record:
            history.append(v_next)
        v = v_next
        if residual < threshold:
            return SolveReport(v, greedy_policy(mdp, v), k, residual, history)
    raise NonConvergenceError(
        f"value iteration did not reach threshold {threshold:.3g} in {max_iters} iterations "
        f"(last residual {residual:.3g})"
    )


def enumerate_optimal(mdp: Mdp) -> np.ndarray:
    """Componentwise minimum of the stationary values of all deterministic policies."""
    require_valid(mdp)
    count = mdp.num_actions**mdp.num_states
    if count > ENUMERATION_LIMIT:
        raise ProblemTooLargeError(
            f"{count} deterministic policies exceeds the enumeration limit of {ENUMERATION_LIMIT}"
        )
    best = np.full(mdp.num_states, np.inf)
    for pi in itertools.product(range(mdp.num_actions), repeat=mdp.num_states):
        best = np.minimum(best, policy_value(mdp, np.array(pi)))
    return best


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic sub-seed for ``keys`` under ``master``.

    Independent of call order, so seeded runs can be split across workers.
    """
    seq = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def random_mdp(num_states: int, num_actions: int, discount: float, seed, cost_range=(0.0, 1.0)) -> Mdp:
    """Dirichlet-distributed transition columns and uniform costs."""
    rng = np.random.default_rng(seed)
    columns = rng.dirichlet(np.ones(num_states), size=num_states * num_actions).T
    cost = rng.uniform(cost_range[0], cost_range[1], size=(num_states, num_actions))
    return Mdp(num_states, num_actions, columns, cost, discount)
