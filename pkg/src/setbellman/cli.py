"""Command-line entry point: ``setbellman {solve,set-solve,game,verify}``.

Every command reads one problem file and writes JSON/CSV into ``--out``.
Exit codes: 0 success, 2 usage error, 3 unparsable problem file,
4 invalid problem data, 5 non-convergence, 6 a check or containment failed.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import click
import numpy as np

from .core import DEFAULT_MAX_ITERS, InvalidMdpError, NonConvergenceError, derive_seed, value_iteration
from .game import (
    FIXED_POLICY,
    VI_MAXIMIZER,
    VI_MINIMIZER,
    OpponentStrategy,
    check_trajectory_bounds,
    norm_band,
    player1_bounds,
    run_two_player_vi,
)
from .problem import ProblemFile, ProblemSyntaxError, ProblemValidationError, load_problem
from .set_bellman import set_value_iteration
from .verify import run_property_suite

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_INVALID = 4
EXIT_NONCONVERGED = 5
EXIT_CHECK_FAILED = 6

OPPONENTS = {"min": VI_MINIMIZER, "max": VI_MAXIMIZER, "fixed": FIXED_POLICY}


@dataclass
class RunConfig:
    command: str
    epsilon: float = 1e-6
    max_iters: int = DEFAULT_MAX_ITERS
    iters: int = 100
    opponent: str = "min"
    gamma2: list = field(default_factory=list)
    seed: int = 0
    out: Path = Path("out")
    tol: float = 1e-6
    burn_in: int | None = None
    v0: str = "zero"
    fixed_policy: list | None = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise click.BadParameter("epsilon must be positive", param_hint="--epsilon")
        if self.tol < 0:
            raise click.BadParameter("tol must be non-negative", param_hint="--tol")
        if any(not 0 < g < 1 for g in self.gamma2):
            raise click.BadParameter("gamma2 values must lie in (0, 1)", param_hint="--gamma2")
        self.out = Path(self.out)


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_json(path: Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_solve(config: RunConfig, problem: ProblemFile) -> int:
    mdp = problem.game.base if problem.kind == "game" else problem.mdp
    report = value_iteration(mdp, epsilon=config.epsilon, max_iters=config.max_iters)
    write_json(config.out / "solve.json", {**report.to_dict(), "epsilon": config.epsilon})
    write_csv(
        config.out / "value.csv",
        ["state", "value"],
        [[s, fmt(v)] for s, v in enumerate(report.value)],
    )
    log.info("solve: %d iterations, residual %.3g", report.iterations, report.residual)
    return EXIT_OK


def run_set_solve(config: RunConfig, problem: ProblemFile) -> int:
    report = set_value_iteration(problem.family, epsilon=config.epsilon, max_iters=config.max_iters)
    write_json(config.out / "set_solve.json", report.to_dict())
    box = report.fixed_point
    write_csv(
        config.out / "bounds.csv",
        ["state", "lower", "upper"],
        [[s, fmt(lo), fmt(hi)] for s, (lo, hi) in enumerate(zip(box.lower, box.upper))],
    )
    return EXIT_OK


def _opponent(config: RunConfig, num_states: int, index: int, gamma2: float) -> OpponentStrategy:
    kind = OPPONENTS[config.opponent]
    if kind == FIXED_POLICY:
        policy = config.fixed_policy if config.fixed_policy is not None else [0] * num_states
        if len(policy) != num_states:
            raise click.BadParameter(f"fixed policy needs {num_states} entries", param_hint="--fixed-policy")
        return OpponentStrategy(kind, gamma2=gamma2, fixed=tuple(policy))
    return OpponentStrategy(kind, gamma2=gamma2, seed=derive_seed(config.seed, 1, index))


def run_game(config: RunConfig, problem: ProblemFile) -> int:
    if problem.kind != "game":
        raise click.UsageError("the game command needs a problem of kind 'game'")
    base_spec = problem.game
    S = base_spec.num_states
    bounds_report = player1_bounds(base_spec, epsilon=min(config.epsilon, 1e-9))
    bounds = bounds_report.fixed_point
    lo_norm, hi_norm = norm_band(bounds)
    burn_in = config.iters // 2 if config.burn_in is None else config.burn_in
    gammas = config.gamma2 or problem.gamma2
    runs = []
    for i, gamma2 in enumerate(gammas):
        spec = base_spec.with_gamma2(gamma2)
        if config.v0 == "random":
            v0 = np.random.default_rng(derive_seed(config.seed, 0, i)).random(S)
        else:
            v0 = np.zeros(S)
        traj = run_two_player_vi(spec, _opponent(config, S, i, gamma2), v0, config.iters)
        name = f"trajectory_gamma2_{gamma2:g}.csv"
        write_csv(
            config.out / name,
            ["iter", *[f"V_{s}" for s in range(S)], "norm_inf", "bound_lower_norm", "bound_upper_norm"],
            [
                [r.k, *[fmt(x) for x in r.value], fmt(np.max(np.abs(r.value))), fmt(lo_norm), fmt(hi_norm)]
                for r in traj.records
            ],
        )
        check = check_trajectory_bounds(traj, bounds, burn_in, config.tol)
        runs.append({"gamma2": gamma2, "csv": name, "final_norm": float(traj.norms[-1]), **check.to_dict()})
    ok = all(run["ok"] for run in runs)
    write_json(
        config.out / "containment.json",
        {
            "opponent": OPPONENTS[config.opponent],
            "gamma1": base_spec.gamma1,
            "iterations": config.iters,
            "bounds": bounds_report.to_dict(),
            "bound_norms": [lo_norm, hi_norm],
            "runs": runs,
            "total_violations": sum(len(run["violations"]) for run in runs),
            "ok": ok,
        },
    )
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def run_verify(config: RunConfig, problem: ProblemFile) -> int:
    summary = run_property_suite(problem.family, seed=config.seed, epsilon=config.epsilon)
    write_json(config.out / "verify.json", summary)
    return EXIT_OK if summary["ok"] else EXIT_CHECK_FAILED


RUNNERS = {"solve": run_solve, "set-solve": run_set_solve, "game": run_game, "verify": run_verify}


def execute(config: RunConfig, problem_path, renormalize: bool = False) -> int:
    """Load the problem, run one command and map failures to exit codes."""
    try:
        problem = load_problem(problem_path, renormalize=renormalize)
    except ProblemSyntaxError as exc:
        click.echo(f"parse error in {problem_path}:\n{exc}", err=True)
        return EXIT_PARSE
    except ProblemValidationError as exc:
        click.echo(f"invalid problem {problem_path}:\n{exc}", err=True)
        return EXIT_INVALID
    config.out.mkdir(parents=True, exist_ok=True)
    try:
        status = RUNNERS[config.command](config, problem)
    except InvalidMdpError as exc:
        click.echo(str(exc), err=True)
        return EXIT_INVALID
    except NonConvergenceError as exc:
        click.echo(str(exc), err=True)
        return EXIT_NONCONVERGED
    if status == EXIT_CHECK_FAILED:
        click.echo("one or more checks failed; see the JSON report", err=True)
    return status


def _parse_floats(ctx, param, value):
    if value is None:
        return []
    try:
        return [float(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of numbers")


def _parse_ints(ctx, param, value):
    if value is None:
        return None
    try:
        return [int(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter("expected a comma-separated list of integers")


def common_options(fn):
    options = [
        click.argument("problem", type=click.Path(exists=True, dir_okay=False)),
        click.option("--epsilon", type=float, default=1e-6, show_default=True, help="Value-iteration accuracy."),
        click.option("--max-iters", type=int, default=DEFAULT_MAX_ITERS, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True, help="Master seed."),
        click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True),
        click.option("--renormalize", is_flag=True, help="Rescale columns within 1e-6 of stochastic."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose):
    """Value iteration for MDPs with interval-valued costs."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(message)s")


def _finish(status):
    raise SystemExit(status)


@main.command()
@common_options
def solve(problem, epsilon, max_iters, seed, out, renormalize):
    """Standard value iteration on the problem's point cost."""
    _finish(execute(RunConfig("solve", epsilon, max_iters, seed=seed, out=out), problem, renormalize))


@main.command("set-solve")
@common_options
def set_solve(problem, epsilon, max_iters, seed, out, renormalize):
    """Interval fixed point of the set-valued Bellman operator."""
    _finish(execute(RunConfig("set-solve", epsilon, max_iters, seed=seed, out=out), problem, renormalize))


@main.command()
@common_options
@click.option("--iters", type=int, default=100, show_default=True, help="Game rounds per run.")
@click.option("--opponent", type=click.Choice(sorted(OPPONENTS)), default="min", show_default=True)
@click.option("--gamma2", callback=_parse_floats, help="Comma-separated opponent discounts (overrides the file).")
@click.option("--tol", type=float, default=1e-6, show_default=True, help="Containment tolerance.")
@click.option("--burn-in", type=int, default=None, help="First checked iteration (default: iters // 2).")
@click.option("--v0", type=click.Choice(["zero", "random"]), default="zero", show_default=True)
@click.option("--fixed-policy", callback=_parse_ints, help="Opponent actions for --opponent fixed.")
def game(problem, epsilon, max_iters, seed, out, renormalize, iters, opponent, gamma2, tol, burn_in, v0, fixed_policy):
    """Two-player value iteration with containment checks against the interval bounds."""
    if iters < 1:
        raise click.BadParameter("must be at least 1", param_hint="--iters")
    if burn_in is not None and not 0 <= burn_in <= iters:
        raise click.BadParameter("must lie in [0, iters]", param_hint="--burn-in")
    config = RunConfig(
        "game", epsilon, max_iters, iters, opponent, gamma2, seed, out, tol, burn_in, v0, fixed_policy
    )
    _finish(execute(config, problem, renormalize))


@main.command()
@common_options
def verify(problem, epsilon, max_iters, seed, out, renormalize):
    """Randomized property checks (contraction, containment, Monte-Carlo convergence)."""
    _finish(execute(RunConfig("verify", epsilon, max_iters, seed=seed, out=out), problem, renormalize))


if __name__ == "__main__":
    main()
