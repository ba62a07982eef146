"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line (also collected into the
terminal summary) and then asserts.
"""

import itertools
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from conftest import ACCEPTANCE_LINES, APPENDIX_GAMMA
from setbellman.cli import main
from setbellman.core import Mdp, bellman_apply, derive_seed, enumerate_optimal, random_mdp, stopping_threshold, value_iteration
from setbellman.game import (
    VI_MAXIMIZER,
    VI_MINIMIZER,
    OpponentStrategy,
    check_norm_band,
    check_trajectory_bounds,
    game_from_grid,
    player1_bounds,
    run_two_player_vi,
)
from setbellman.gridworld import GridSpec
from setbellman.intervals import IntervalVector, hausdorff_interval, hausdorff_point_sets, inflate, interval_contains
from setbellman.set_bellman import MdpFamily, random_family, random_interval_vector, set_value_iteration
from setbellman.set_bellman import monte_carlo_convergence
from setbellman.verify import (
    RATIO_RTOL,
    contraction_ratios,
    endpoint_tracks_agree,
    fixed_point_excess,
    ratio_within_discount,
    settles_below,
)

SEED = 20240101
PROBLEMS = Path(__file__).resolve().parents[1] / "problems"

NUM_MDPS = 50
NUM_FAMILIES = 50
# containment and Monte-Carlo solve many MDPs per family; a subset keeps the suite fast
NUM_HEAVY_FAMILIES = 10
GAME_SEEDS = (0, 1, 2)
GAMMA2_SWEEP = (0.1, 0.3, 0.5, 0.7, 0.9)


def report(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def random_case(i):
    rng = np.random.default_rng(derive_seed(SEED, 1, i))
    S, A = (int(x) for x in rng.integers(1, 5, size=2))
    gamma = float(rng.uniform(0.5, 0.95))
    return random_mdp(S, A, gamma, rng)


def family_case(i):
    rng = np.random.default_rng(derive_seed(SEED, 2, i))
    S, A = (int(x) for x in rng.integers(1, 5, size=2))
    gamma = float(rng.uniform(0.5, 0.95))
    return random_family(S, A, gamma, rng, cost_range=(-1.0, 1.0), max_radius=0.5)


@pytest.fixture(scope="module")
def appendix():
    from setbellman.problem import load_problem

    return load_problem(PROBLEMS / "appendix_2state.yaml")


@pytest.fixture(scope="module")
def families(appendix):
    return [appendix.family] + [family_case(i) for i in range(NUM_FAMILIES)]


def test_1_oracle_equivalence(appendix):
    mdps = [appendix.mdp] + [random_case(i) for i in range(NUM_MDPS)]
    errors = [np.max(np.abs(value_iteration(m, epsilon=1e-6).value - enumerate_optimal(m))) for m in mdps]
    worst = max(errors)
    assert appendix.mdp.discount == APPENDIX_GAMMA
    report(1, worst <= 5e-7, f"VI vs enumeration on {len(mdps)} MDPs, max error {worst:.6g} (tol 5e-7)")


def test_2_stopping_soundness():
    eps = 1e-6
    worst_ratio = 0.0
    ok = True
    for i in range(NUM_MDPS):
        mdp = random_case(i)
        oracle = enumerate_optimal(mdp)
        threshold = stopping_threshold(eps, mdp.discount)
        v = np.zeros(mdp.num_states)
        while True:
            v_next = bellman_apply(mdp, v)
            step = np.max(np.abs(v_next - v))
            v = v_next
            if step < threshold:
                break
        error = np.max(np.abs(v - oracle))
        ok &= error < eps / 2
        worst_ratio = max(worst_ratio, error / (eps / 2))
        # the library solver stops at the same iterate
        ok &= np.array_equal(value_iteration(mdp, epsilon=eps).value, v)
    report(2, bool(ok), f"{NUM_MDPS} MDPs, worst error {worst_ratio:.3g} x eps/2 at the first stop")


def test_3_endpoint_characterization(families):
    ok = []
    for i, fam in enumerate(families):
        rng = np.random.default_rng(derive_seed(SEED, 3, i))
        ok.append(endpoint_tracks_agree(fam, random_interval_vector(fam.num_states, rng), 50))
    report(3, all(ok), f"{sum(ok)}/{len(ok)} families bitwise equal to endpoint tracks for k <= 50")


def test_4_contraction(families):
    worst, ok = 0.0, True
    for i, fam in enumerate(families):
        ratios = contraction_ratios(fam, 500, derive_seed(SEED, 4, i))
        ok &= ratio_within_discount(ratios, fam.discount)
        worst = max(worst, float(np.max(ratios / fam.discount)))
    detail = f"500 pairs x {len(families)} families, max ratio/gamma 1 + {worst - 1:.2g} (float slack {RATIO_RTOL:g})"
    report(4, ok, detail)


def test_5_fixed_point_containment(families):
    eps = 1e-6
    worst, ok = 0.0, True
    for i, fam in enumerate(families[: NUM_HEAVY_FAMILIES + 1]):
        fixed = set_value_iteration(fam, epsilon=eps).fixed_point
        excess = fixed_point_excess(fam, fixed, 200, derive_seed(SEED, 5, i))
        # excess is the distance to the uninflated box, so <= eps means inside inflate(V*, eps)
        ok &= bool(np.all(excess <= eps))
        worst = max(worst, float(excess.max()))
    n = NUM_HEAVY_FAMILIES + 1
    report(5, ok, f"200 costs x {n} families, max distance outside V* {worst:.3g} (inflation 1e-6)")


def test_6_monte_carlo_convergence(families):
    threshold, steps = 1e-3, 200
    settle_steps = []
    for i, fam in enumerate(families[: NUM_HEAVY_FAMILIES + 1]):
        reference = set_value_iteration(fam, epsilon=1e-9).fixed_point
        for j in range(20):
            rng = np.random.default_rng(derive_seed(SEED, 6, i, j))
            v0 = rng.uniform(-10, 10, size=fam.num_states)
            d = monte_carlo_convergence(fam, v0, steps, derive_seed(SEED, 6, i, j, 1), reference=reference)
            settle_steps.append(settles_below(d, threshold))
    ok = all(s is not None for s in settle_steps)
    latest = max(s for s in settle_steps if s is not None) if any(s is not None for s in settle_steps) else None
    report(6, ok, f"{len(settle_steps)} schedules settle below 1e-3 within {steps} steps (latest {latest})")


def grid_game(seed, gamma2):
    return game_from_grid(GridSpec(3, 3, seed=seed), 0.7, gamma2, (0.0, 1.0), (0.0, 0.1))


def test_7_game_containment():
    total, runs, worst = 0, 0, 0.0
    for seed in GAME_SEEDS:
        bounds = player1_bounds(grid_game(seed, 0.5)).fixed_point
        for i, gamma2 in enumerate(GAMMA2_SWEEP):
            spec = grid_game(seed, gamma2)
            opponent = OpponentStrategy(VI_MINIMIZER, gamma2=gamma2, seed=derive_seed(seed, 1, i))
            traj = run_two_player_vi(spec, opponent, np.zeros(9), 100)
            check = check_trajectory_bounds(traj, bounds, 50, 1e-6)
            total += len(check.violations)
            worst = max(worst, check.max_excess)
            runs += 1
    report(7, total == 0, f"{runs} runs, {total} violations after burn-in 50, max excess {worst:.3g}")


def test_8_game_norm_band():
    band_violations, ordering, details = 0, True, []
    for seed in GAME_SEEDS:
        spec = grid_game(seed, 0.7)
        bounds = player1_bounds(spec).fixed_point
        v0 = np.random.default_rng(derive_seed(seed, 0, 0)).random(9)
        final = {}
        for kind in (VI_MINIMIZER, VI_MAXIMIZER):
            traj = run_two_player_vi(spec, OpponentStrategy(kind, seed=derive_seed(seed, 1, 0)), v0, 100)
            band_violations += len(check_norm_band(traj, bounds, 50, 1e-6))
            final[kind] = float(traj.norms[-1])
        ordering &= final[VI_MAXIMIZER] <= final[VI_MINIMIZER] + 1e-9
        details.append(f"seed {seed}: max {final[VI_MAXIMIZER]:.6f} <= min {final[VI_MINIMIZER]:.6f}")
    ok = band_violations == 0 and ordering
    report(8, ok, f"{band_violations} band violations; " + "; ".join(details))


def box_grid(x, n):
    axes = [np.linspace(lo, hi, n) for lo, hi in zip(x.lower, x.upper)]
    return np.array(list(itertools.product(*axes)))


def test_9_hausdorff_lemma():
    worst_slack, ok = 0.0, True
    for i in range(100):
        rng = np.random.default_rng(derive_seed(SEED, 9, i))
        S = 1 + i % 2
        n = 201 if S == 1 else 41
        boxes = []
        for _ in range(2):
            a, b = rng.uniform(-5, 5, size=(2, S))
            boxes.append(IntervalVector(np.minimum(a, b), np.maximum(a, b)))
        x, y = boxes
        spacing = max(np.max(x.width), np.max(y.width)) / (n - 1)
        gap = abs(hausdorff_point_sets(box_grid(x, n), box_grid(y, n)) - hausdorff_interval(x, y))
        ok &= gap <= 2 * spacing
        worst_slack = max(worst_slack, gap / (2 * spacing) if spacing else 0.0)
    report(9, ok, f"100 boxes (S <= 2), worst gap {worst_slack:.3f} x (2 * grid spacing)")


def test_10_cli_determinism(tmp_path):
    runner = CliRunner()
    commands = [
        ["solve", PROBLEMS / "appendix_2state.yaml"],
        ["set-solve", PROBLEMS / "grid_3x3.yaml"],
        ["game", PROBLEMS / "grid_game_3x3.yaml", "--v0", "random", "--seed", "7"],
        ["game", PROBLEMS / "grid_game_3x3.yaml", "--opponent", "max"],
    ]
    compared, mismatched = 0, []
    for c, args in enumerate(commands):
        outs = []
        for rep in range(2):
            out = tmp_path / f"{c}_{rep}"
            result = runner.invoke(main, [str(a) for a in args] + ["--out", str(out)])
            assert result.exit_code == 0, result.output
            outs.append(out)
        for path in sorted(outs[0].glob("*.csv")):
            compared += 1
            if path.read_bytes() != (outs[1] / path.name).read_bytes():
                mismatched.append(path.name)
    report(10, compared > 0 and not mismatched, f"{compared} CSV files compared across reruns, {len(mismatched)} differ")
