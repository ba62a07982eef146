"""Grid-world transition kernels and seeded random cost matrices.

States are numbered row-major from the top-left cell.  Actions are
``LEFT, RIGHT, UP, DOWN = 0, 1, 2, 3``.  Each action sends ``p_main`` to the
intended neighbour and ``p_side`` to each of the other three neighbours.  On
the boundary:

* if the intended neighbour is missing, the move is uniform over the
  neighbours that do exist;
* if a side neighbour is missing, its ``p_side`` is added to the intended
  neighbour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Mdp, derive_seed

LEFT, RIGHT, UP, DOWN = 0, 1, 2, 3
ACTION_NAMES = ("left", "right", "up", "down")
_OFFSETS = {LEFT: (0, -1), RIGHT: (0, 1), UP: (-1, 0), DOWN: (1, 0)}


@dataclass(frozen=True)
class GridSpec:
    rows: int
    cols: int
    p_main: float = 0.7
    p_side: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs positive rows and cols")
        if self.rows * self.cols < 2:
            raise ValueError("a 1x1 grid has no neighbours to move to")
        if self.p_main < 0 or self.p_side < 0:
            raise ValueError("probabilities must be non-negative")
        if abs(self.p_main + 3 * self.p_side - 1.0) > 1e-9:
            raise ValueError(f"p_main + 3 * p_side must equal 1, got {self.p_main + 3 * self.p_side!r}")

    @property
    def num_states(self) -> int:
        return self.rows * self.cols

    @property
    def num_actions(self) -> int:
        return 4

    def state(self, row: int, col: int) -> int:
        return row * self.cols + col

    def neighbours(self, s: int) -> dict[int, int]:
        """Existing neighbour state for each direction."""
        r, c = divmod(s, self.cols)
        out = {}
        for a, (dr, dc) in _OFFSETS.items():
            rr, cc = r + dr, c + dc
            if 0 <= rr < self.rows and 0 <= cc < self.cols:
                out[a] = self.state(rr, cc)
        return out


def build_grid_transition(spec: GridSpec) -> np.ndarray:
    S, A = spec.num_states, spec.num_actions
    P = np.zeros((S, S * A))
    for s in range(S):
        nbrs = spec.neighbours(s)
        for a in range(A):
            col = P[:, s * A + a]
            if a not in nbrs:
                for t in nbrs.values():
                    col[t] += 1.0 / len(nbrs)
                continue
            col[nbrs[a]] += spec.p_main
            for side in range(A):
                if side == a:
                    continue
                col[nbrs.get(side, nbrs[a])] += spec.p_side
    return P


def random_cost_matrix(num_states: int, num_actions: int, lo: float, hi: float, seed) -> np.ndarray:
    """I.i.d. uniform entries in ``[lo, hi]``."""
    if lo > hi:
        raise ValueError(f"lo must not exceed hi, got [{lo}, {hi}]")
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random((num_states, num_actions))


def grid_mdp(spec: GridSpec, discount: float, cost_range=(0.0, 1.0)) -> Mdp:
    """Grid MDP whose cost matrix is drawn from ``spec.seed``."""
    cost = random_cost_matrix(spec.num_states, spec.num_actions, *cost_range, seed=derive_seed(spec.seed, 0))
    return Mdp(spec.num_states, spec.num_actions, build_grid_transition(spec), cost, discount)
