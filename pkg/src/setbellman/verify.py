"""Randomized property suite for an interval cost family.

Used by ``setbellman verify`` and by the acceptance tests.  Every check draws
its randomness from ``derive_seed(seed, check_id, i)`` so results do not
depend on evaluation order.
"""

from __future__ import annotations

import numpy as np

from .core import bellman_apply, derive_seed, value_iteration
from .intervals import IntervalVector, excess_distance
from .set_bellman import (
    MdpFamily,
    check_contraction,
    monte_carlo_convergence,
    random_interval_vector,
    sample_cost,
    set_bellman_apply,
    set_value_iteration,
)

ENDPOINT, CONTRACTION, CONTAINMENT, MONTE_CARLO = range(4)

# With one state the ratio is exactly gamma, and rounding can land a few ulps above it.
RATIO_RTOL = 1e-12


def ratio_within_discount(ratios, gamma: float) -> bool:
    return bool(np.all(np.asarray(ratios) <= gamma * (1 + RATIO_RTOL)))


def endpoint_tracks_agree(family: MdpFamily, v0: IntervalVector, steps: int) -> bool:
    """k-fold set operator equals separate lower/upper Bellman tracks, bit for bit."""
    lower_mdp, upper_mdp = family.lower_mdp(), family.upper_mdp()
    box, lo, hi = v0, v0.lower, v0.upper
    for _ in range(steps):
        box = set_bellman_apply(family, box)
        lo = bellman_apply(lower_mdp, lo)
        hi = bellman_apply(upper_mdp, hi)
        if not (np.array_equal(box.lower, lo) and np.array_equal(box.upper, hi)):
            return False
    return True


def contraction_ratios(family: MdpFamily, num_pairs: int, seed: int) -> np.ndarray:
    ratios = []
    for i in range(num_pairs):
        rng = np.random.default_rng(derive_seed(seed, CONTRACTION, i))
        x = random_interval_vector(family.num_states, rng)
        y = random_interval_vector(family.num_states, rng)
        ratios.append(check_contraction(family, x, y))
    return np.array(ratios)


def fixed_point_excess(family: MdpFamily, fixed_set: IntervalVector, num_samples: int, seed: int,
                       epsilon: float = 1e-9) -> np.ndarray:
    """Distance of each sampled constant-cost fixed point to ``fixed_set``."""
    out = []
    for i in range(num_samples):
        cost = sample_cost(family, derive_seed(seed, CONTAINMENT, i))
        v = value_iteration(family.base.with_cost(cost), epsilon=epsilon).value
        out.append(excess_distance(fixed_set, v))
    return np.array(out)


def settles_below(distances: np.ndarray, threshold: float) -> int | None:
    """First index from which every distance stays below ``threshold``."""
    above = np.flatnonzero(distances >= threshold)
    first = 0 if above.size == 0 else int(above[-1]) + 1
    return first if first < len(distances) else None


def run_property_suite(
    family: MdpFamily,
    seed: int = 0,
    epsilon: float = 1e-6,
    num_pairs: int = 500,
    num_samples: int = 200,
    num_schedules: int = 20,
    num_steps: int = 200,
    endpoint_steps: int = 50,
    mc_threshold: float = 1e-3,
) -> dict:
    gamma = family.discount
    report = set_value_iteration(family, epsilon=epsilon)
    fixed_set = report.fixed_point
    reference = set_value_iteration(family, epsilon=min(epsilon, 1e-9)).fixed_point

    rng = np.random.default_rng(derive_seed(seed, ENDPOINT, 0))
    endpoint_ok = endpoint_tracks_agree(family, random_interval_vector(family.num_states, rng), endpoint_steps)

    ratios = contraction_ratios(family, num_pairs, seed)

    excess = fixed_point_excess(family, fixed_set, num_samples, seed)
    containment_ok = bool(np.all(excess <= epsilon))

    settle, finals = [], []
    for i in range(num_schedules):
        v0 = np.random.default_rng(derive_seed(seed, MONTE_CARLO, i)).random(family.num_states)
        d = monte_carlo_convergence(family, v0, num_steps, derive_seed(seed, MONTE_CARLO, i, 1), reference=reference)
        settle.append(settles_below(d, mc_threshold))
        finals.append(float(d[-1]))
    mc_ok = all(s is not None for s in settle)

    return {
        "discount": gamma,
        "fixed_point": report.to_dict(),
        "endpoint_characterization": {"steps": endpoint_steps, "ok": endpoint_ok},
        "contraction": {
            "pairs": num_pairs,
            "max_ratio": float(ratios.max()),
            "mean_ratio": float(ratios.mean()),
            "ok": ratio_within_discount(ratios, gamma),
        },
        "fixed_point_containment": {
            "samples": num_samples,
            "inflation": epsilon,
            "max_excess": float(excess.max()),
            "ok": containment_ok,
        },
        "monte_carlo": {
            "schedules": num_schedules,
            "steps": num_steps,
            "threshold": mc_threshold,
            "settle_step": settle,
            "final_distance": finals,
            "ok": mc_ok,
        },
        "ok": bool(endpoint_ok and ratio_within_discount(ratios, gamma) and containment_ok and mc_ok),
    }
