"""YAML problem files: explicit MDPs, grid MDPs and two-player games.

Explicit transitions are listed one column per state-action pair so that a
non-stochastic column is reported against its own line::

    kind: mdp
    states: 2
    actions: 2
    discount: 0.9
    transitions:
      - {state: 0, action: 0, probs: [0.9, 0.1]}
      ...
    cost: [[4, 5], [3, 1]]
    cost_interval: {lower: [[...]], upper: [[...]]}   # or cost_radius

Grid problems give ``rows``/``cols``/``p_main``/``p_side``/``seed`` instead
of transitions and costs; games add ``coupling`` (or ``coupling_range``),
``gamma1`` and a ``gamma2`` list.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .core import STOCHASTIC_TOL, Mdp, validate_mdp
from .game import GameSpec, game_from_grid, player1_family
from .gridworld import GridSpec, grid_mdp
from .intervals import IntervalCost
from .set_bellman import MdpFamily

KINDS = ("mdp", "grid", "game")
RENORMALIZE_TOL = 1e-6


class ProblemError(ValueError):
    """Base class; ``errors`` holds one message per problem found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class ProblemSyntaxError(ProblemError):
    pass


class ProblemValidationError(ProblemError):
    pass


@dataclass(eq=False)
class ProblemFile:
    kind: str
    mdp: Mdp | None = None
    cost_set: IntervalCost | None = None
    grid: GridSpec | None = None
    cost_range: tuple = (0.0, 1.0)
    cost_radius: float | None = None
    game: GameSpec | None = None
    coupling_range: tuple | None = None
    gamma2: list = field(default_factory=list)

    @property
    def family(self) -> MdpFamily:
        """Interval family for set solves; degenerate when no interval is given.

        For games this is player 1's family under ``[C, C + A]``.
        """
        if self.kind == "game":
            return player1_family(self.game)
        if self.cost_set is None:
            return MdpFamily(self.mdp, IntervalCost.point(self.mdp.cost))
        return MdpFamily(self.mdp, self.cost_set)

    def __eq__(self, other):
        if not isinstance(other, ProblemFile):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.mdp == other.mdp
            and self.cost_set == other.cost_set
            and self.grid == other.grid
            and tuple(self.cost_range) == tuple(other.cost_range)
            and self.cost_radius == other.cost_radius
            and self.game == other.game
            and (None if self.coupling_range is None else tuple(self.coupling_range))
            == (None if other.coupling_range is None else tuple(other.coupling_range))
            and list(self.gamma2) == list(other.gamma2)
        )


class _Locator:
    """Maps key paths in the document to 1-based line numbers."""

    def __init__(self, node):
        self.node = node

    def line(self, *path) -> int | None:
        node = self.node
        for key in path:
            if isinstance(node, yaml.MappingNode):
                for k, v in node.value:
                    if k.value == key:
                        node = v
                        break
                else:
                    return None
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                node = node.value[key]
            else:
                return None
        return None if node is None else node.start_mark.line + 1

    def where(self, *path) -> str:
        line = self.line(*path)
        while line is None and path:
            path = path[:-1]
            line = self.line(*path)
        return f"line {line}: " if line else ""


def _require(doc, key, loc, errors, *prefix):
    if key not in doc:
        errors.append(f"{loc.where(*prefix)}missing required key '{'.'.join(map(str, prefix + (key,)))}'")
        return None
    return doc[key]


def _matrix(value, shape, name, loc, errors, *path):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        errors.append(f"{loc.where(*path)}'{name}' must be a numeric matrix")
        return None
    if arr.shape != shape:
        errors.append(f"{loc.where(*path)}'{name}' has shape {arr.shape}, expected {shape}")
        return None
    return arr


def _number(value, name, loc, errors, *path):
    if isinstance(value, bool):
        value = None
    try:
        return float(value)
    except (TypeError, ValueError):
        errors.append(f"{loc.where(*path)}'{name}' must be a number")
        return None


def _pair(value, name, loc, errors, *path):
    try:
        lo, hi = (float(x) for x in value)
    except (TypeError, ValueError):
        errors.append(f"{loc.where(*path)}'{name}' must be a [lo, hi] pair")
        return None
    return lo, hi


def _transitions(doc, S, A, loc, errors, renormalize, prefix=()):
    columns = _require(doc, "transitions", loc, errors, *prefix)
    if columns is None:
        return None
    if not isinstance(columns, list):
        errors.append(f"{loc.where(*prefix, 'transitions')}'transitions' must be a list of columns")
        return None
    P = np.zeros((S, S * A))
    seen = {}
    invalid = []
    for i, entry in enumerate(columns):
        where = loc.where(*prefix, "transitions", i)
        if not isinstance(entry, dict) or not {"state", "action", "probs"} <= entry.keys():
            errors.append(f"{where}column entries need 'state', 'action' and 'probs'")
            continue
        s, a = entry["state"], entry["action"]
        if not (isinstance(s, int) and isinstance(a, int) and 0 <= s < S and 0 <= a < A):
            errors.append(f"{where}state/action ({s},{a}) out of range")
            continue
        if (s, a) in seen:
            errors.append(f"{where}duplicate column ({s},{a}); first given on line {seen[(s, a)]}")
            continue
        seen[(s, a)] = loc.line(*prefix, "transitions", i)
        try:
            probs = np.asarray(entry["probs"], dtype=float)
        except (TypeError, ValueError):
            errors.append(f"{where}column ({s},{a}) probs must be numbers")
            continue
        if probs.shape != (S,):
            errors.append(f"{where}column ({s},{a}) has {probs.size} probabilities, expected {S}")
            continue
        total = probs.sum()
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            invalid.append(f"{where}column ({s},{a}) has negative or non-finite probabilities")
        elif abs(total - 1.0) > STOCHASTIC_TOL:
            if renormalize and abs(total - 1.0) <= RENORMALIZE_TOL:
                probs = probs / total
            else:
                invalid.append(f"{where}column ({s},{a}) not stochastic (sums to {total:.12g})")
        P[:, s * A + a] = probs
    missing = [(s, a) for s in range(S) for a in range(A) if (s, a) not in seen]
    if missing:
        errors.append(f"{loc.where(*prefix, 'transitions')}missing columns {missing}")
    return P, invalid


def _grid_spec(doc, loc, errors, invalid, *prefix):
    rows = _require(doc, "rows", loc, errors, *prefix)
    cols = _require(doc, "cols", loc, errors, *prefix)
    if rows is None or cols is None:
        return None
    try:
        return GridSpec(
            int(rows),
            int(cols),
            float(doc.get("p_main", 0.7)),
            float(doc.get("p_side", 0.1)),
            int(doc.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        invalid.append(f"{loc.where(*prefix)}invalid grid: {exc}")
        return None


def _discount_check(name, value, loc, invalid, *path):
    if not 0 < value < 1:
        invalid.append(f"{loc.where(*path)}{name} {value!r} out of range (0, 1)")


def parse_problem(text: str, renormalize: bool = False) -> ProblemFile:
    """Parse and validate a problem document.

    Raises :class:`ProblemSyntaxError` for malformed or incomplete documents
    and :class:`ProblemValidationError` when the data violates an invariant
    (non-stochastic columns, discount out of range, reversed bounds...).
    """
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ProblemSyntaxError([f"malformed document: {exc}"]) from exc
    if not isinstance(doc, dict):
        raise ProblemSyntaxError(["document must be a mapping"])
    loc = _Locator(node)
    errors, invalid = [], []
    kind = _require(doc, "kind", loc, errors)
    if kind is not None and kind not in KINDS:
        errors.append(f"{loc.where('kind')}unknown kind {kind!r}; expected one of {KINDS}")
    if errors:
        raise ProblemSyntaxError(errors)

    if kind == "mdp":
        problem = _parse_mdp(doc, loc, errors, invalid, renormalize)
    elif kind == "grid":
        problem = _parse_grid(doc, loc, errors, invalid)
    else:
        problem = _parse_game(doc, loc, errors, invalid, renormalize)
    if errors:
        raise ProblemSyntaxError(errors)
    if invalid:
        raise ProblemValidationError(invalid)
    return problem


def _parse_mdp(doc, loc, errors, invalid, renormalize):
    S = _require(doc, "states", loc, errors)
    A = _require(doc, "actions", loc, errors)
    discount = _require(doc, "discount", loc, errors)
    cost = _require(doc, "cost", loc, errors)
    if errors:
        return None
    if not (isinstance(S, int) and isinstance(A, int) and S > 0 and A > 0):
        errors.append(f"{loc.where('states')}'states' and 'actions' must be positive integers")
        return None
    parsed = _transitions(doc, S, A, loc, errors, renormalize)
    cost = _matrix(cost, (S, A), "cost", loc, errors, "cost")
    discount = _number(discount, "discount", loc, errors, "discount")
    if errors:
        return None
    P, bad_columns = parsed
    invalid.extend(bad_columns)
    _discount_check("discount", discount, loc, invalid, "discount")
    mdp = Mdp(S, A, P, cost, discount)
    cost_set = _cost_set(doc, cost, loc, errors, invalid)
    if not invalid:
        invalid.extend(validate_mdp(mdp))
    return ProblemFile("mdp", mdp=mdp, cost_set=cost_set)


def _cost_set(doc, cost, loc, errors, invalid):
    if "cost_interval" in doc and "cost_radius" in doc:
        errors.append(f"{loc.where('cost_radius')}give either 'cost_interval' or 'cost_radius', not both")
        return None
    if "cost_radius" in doc:
        try:
            radius = np.broadcast_to(np.asarray(doc["cost_radius"], dtype=float), cost.shape)
        except (TypeError, ValueError):
            errors.append(f"{loc.where('cost_radius')}'cost_radius' must be a number or a {cost.shape} matrix")
            return None
        if np.any(radius < 0):
            invalid.append(f"{loc.where('cost_radius')}cost_radius must be non-negative")
            return None
        return IntervalCost(cost - radius, cost + radius)
    if "cost_interval" in doc:
        block = doc["cost_interval"]
        if not isinstance(block, dict):
            errors.append(f"{loc.where('cost_interval')}'cost_interval' needs 'lower' and 'upper'")
            return None
        lower = _matrix(block.get("lower"), cost.shape, "cost_interval.lower", loc, errors, "cost_interval", "lower")
        upper = _matrix(block.get("upper"), cost.shape, "cost_interval.upper", loc, errors, "cost_interval", "upper")
        if lower is None or upper is None:
            return None
        try:
            return IntervalCost(lower, upper)
        except ValueError as exc:
            invalid.append(f"{loc.where('cost_interval')}{exc}")
    return None


def _parse_grid(doc, loc, errors, invalid):
    grid = _grid_spec(doc, loc, errors, invalid)
    discount = _require(doc, "discount", loc, errors)
    cost_range = _pair(doc.get("cost_range", [0.0, 1.0]), "cost_range", loc, errors, "cost_range")
    if discount is not None:
        discount = _number(discount, "discount", loc, errors, "discount")
    radius = doc.get("cost_radius")
    if radius is not None:
        radius = _number(radius, "cost_radius", loc, errors, "cost_radius")
    if errors or grid is None:
        return None
    _discount_check("discount", discount, loc, invalid, "discount")
    if cost_range[0] > cost_range[1]:
        invalid.append(f"{loc.where('cost_range')}cost_range lower bound exceeds upper bound")
    if radius is not None and radius < 0:
        invalid.append(f"{loc.where('cost_radius')}cost_radius must be non-negative")
    if invalid:
        return None
    mdp = grid_mdp(grid, discount, cost_range)
    cost_set = None
    if radius is not None:
        cost_set = IntervalCost(mdp.cost - radius, mdp.cost + radius)
    return ProblemFile("grid", mdp=mdp, cost_set=cost_set, grid=grid, cost_range=cost_range, cost_radius=radius)


def _parse_game(doc, loc, errors, invalid, renormalize):
    gamma1 = _require(doc, "gamma1", loc, errors)
    gamma2 = _require(doc, "gamma2", loc, errors)
    if errors:
        return None
    gamma1 = _number(gamma1, "gamma1", loc, errors, "gamma1")
    if isinstance(gamma2, list):
        gamma2 = [_number(g, "gamma2", loc, errors, "gamma2", i) for i, g in enumerate(gamma2)]
    else:
        gamma2 = [_number(gamma2, "gamma2", loc, errors, "gamma2")]
    if not gamma2:
        errors.append(f"{loc.where('gamma2')}'gamma2' must list at least one discount factor")
    if errors:
        return None
    _discount_check("gamma1", gamma1, loc, invalid, "gamma1")
    for i, g in enumerate(gamma2):
        _discount_check("gamma2", g, loc, invalid, "gamma2", i)

    if "grid" in doc:
        block = doc["grid"]
        if not isinstance(block, dict):
            errors.append(f"{loc.where('grid')}'grid' must be a mapping")
            return None
        grid = _grid_spec(block, loc, errors, invalid, "grid")
        cost_range = _pair(doc.get("cost_range", [0.0, 1.0]), "cost_range", loc, errors, "cost_range")
        coupling_range = _pair(doc.get("coupling_range", [0.0, 0.1]), "coupling_range", loc, errors, "coupling_range")
        if errors or grid is None:
            return None
        if coupling_range[0] < 0:
            invalid.append(f"{loc.where('coupling_range')}coupling must be non-negative")
        for name, (lo, hi) in (("cost_range", cost_range), ("coupling_range", coupling_range)):
            if lo > hi:
                invalid.append(f"{loc.where(name)}{name} lower bound exceeds upper bound")
        if invalid:
            return None
        game = game_from_grid(grid, gamma1, gamma2[0], cost_range, coupling_range)
        return ProblemFile(
            "game", grid=grid, cost_range=cost_range, game=game, coupling_range=coupling_range, gamma2=gamma2
        )

    S = _require(doc, "states", loc, errors)
    A = _require(doc, "actions", loc, errors)
    cost = _require(doc, "cost", loc, errors)
    coupling = _require(doc, "coupling", loc, errors)
    if errors:
        return None
    if not (isinstance(S, int) and isinstance(A, int) and S > 0 and A > 0):
        errors.append(f"{loc.where('states')}'states' and 'actions' must be positive integers")
        return None
    parsed = _transitions(doc, S, A, loc, errors, renormalize)
    cost = _matrix(cost, (S, A), "cost", loc, errors, "cost")
    coupling = _matrix(coupling, (S, A), "coupling", loc, errors, "coupling")
    if errors:
        return None
    P, bad_columns = parsed
    invalid.extend(bad_columns)
    if np.any(coupling < 0):
        invalid.append(f"{loc.where('coupling')}coupling must be non-negative")
    if invalid:
        return None
    base = Mdp(S, A, P, cost, gamma1)
    invalid.extend(validate_mdp(base))
    if invalid:
        return None
    return ProblemFile("game", game=GameSpec(base, cost, coupling, gamma1, gamma2[0]), gamma2=gamma2)


def _floats(arr):
    return np.asarray(arr, dtype=float).tolist()


def _columns(mdp: Mdp):
    return [
        {"state": s, "action": a, "probs": _floats(mdp.transition[:, s * mdp.num_actions + a])}
        for s in range(mdp.num_states)
        for a in range(mdp.num_actions)
    ]


def _grid_doc(grid: GridSpec) -> dict:
    return {"rows": grid.rows, "cols": grid.cols, "p_main": grid.p_main, "p_side": grid.p_side, "seed": grid.seed}


def problem_to_document(problem: ProblemFile) -> dict:
    if problem.kind == "mdp":
        mdp = problem.mdp
        doc = {
            "kind": "mdp",
            "states": mdp.num_states,
            "actions": mdp.num_actions,
            "discount": mdp.discount,
            "transitions": _columns(mdp),
            "cost": _floats(mdp.cost),
        }
        if problem.cost_set is not None:
            doc["cost_interval"] = {"lower": _floats(problem.cost_set.lower), "upper": _floats(problem.cost_set.upper)}
        return doc
    if problem.kind == "grid":
        doc = {"kind": "grid", **_grid_doc(problem.grid), "discount": problem.mdp.discount,
               "cost_range": list(problem.cost_range)}
        if problem.cost_radius is not None:
            doc["cost_radius"] = problem.cost_radius
        return doc
    game = problem.game
    doc = {"kind": "game", "gamma1": game.gamma1, "gamma2": list(problem.gamma2)}
    if problem.grid is not None:
        doc.update(grid=_grid_doc(problem.grid), cost_range=list(problem.cost_range),
                   coupling_range=list(problem.coupling_range))
        return doc
    doc.update(
        states=game.num_states,
        actions=game.num_actions,
        transitions=_columns(game.base),
        cost=_floats(game.nominal_cost),
        coupling=_floats(game.coupling),
    )
    return doc


def emit_problem(problem: ProblemFile) -> str:
    return yaml.safe_dump(problem_to_document(problem), sort_keys=False, default_flow_style=None)


def load_problem(path, renormalize: bool = False) -> ProblemFile:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read(), renormalize=renormalize)
