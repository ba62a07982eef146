import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setbellman.core import validate_mdp
from setbellman.gridworld import (
    DOWN,
    LEFT,
    RIGHT,
    UP,
    GridSpec,
    build_grid_transition,
    grid_mdp,
    random_cost_matrix,
)


def column(P, spec, s, a):
    return P[:, s * spec.num_actions + a]


class TestGridSpec:
    def test_rejects_single_cell(self):
        with pytest.raises(ValueError):
            GridSpec(1, 1)

    def test_rejects_bad_probabilities(self):
        with pytest.raises(ValueError):
            GridSpec(3, 3, p_main=0.8, p_side=0.1)
        with pytest.raises(ValueError):
            GridSpec(3, 3, p_main=1.3, p_side=-0.1)

    def test_neighbours(self):
        spec = GridSpec(3, 3)
        assert spec.neighbours(4) == {LEFT: 3, RIGHT: 5, UP: 1, DOWN: 7}
        assert spec.neighbours(0) == {RIGHT: 1, DOWN: 3}
        assert spec.state(2, 1) == 7


class TestTransition:
    def test_interior_column(self):
        spec = GridSpec(3, 3)
        P = build_grid_transition(spec)
        col = column(P, spec, 4, LEFT)
        expected = np.zeros(9)
        expected[3], expected[5], expected[1], expected[7] = 0.7, 0.1, 0.1, 0.1
        np.testing.assert_allclose(col, expected, atol=1e-15)

    def test_missing_intended_is_uniform(self):
        spec = GridSpec(3, 3)
        P = build_grid_transition(spec)
        col = column(P, spec, 0, LEFT)
        expected = np.zeros(9)
        expected[1] = expected[3] = 0.5
        np.testing.assert_allclose(col, expected, atol=1e-15)

    def test_missing_side_folds_into_intended(self):
        spec = GridSpec(3, 3)
        P = build_grid_transition(spec)
        # top-left, move right: left and up are missing
        col = column(P, spec, 0, RIGHT)
        expected = np.zeros(9)
        expected[1], expected[3] = 0.9, 0.1
        np.testing.assert_allclose(col, expected, atol=1e-15)

    def test_edge_cell(self):
        spec = GridSpec(3, 3)
        P = build_grid_transition(spec)
        # top-middle, move down: only up is missing
        col = column(P, spec, 1, DOWN)
        expected = np.zeros(9)
        expected[4], expected[0], expected[2] = 0.8, 0.1, 0.1
        np.testing.assert_allclose(col, expected, atol=1e-15)

    def test_no_self_loops(self):
        spec = GridSpec(3, 4)
        P = build_grid_transition(spec)
        for s in range(spec.num_states):
            for a in range(4):
                assert column(P, spec, s, a)[s] == 0

    def test_single_row(self):
        spec = GridSpec(1, 2)
        P = build_grid_transition(spec)
        np.testing.assert_allclose(column(P, spec, 0, UP), [0, 1])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 5), st.integers(1, 5), st.floats(0.0, 1.0))
    def test_column_stochastic(self, rows, cols, p_main):
        if rows * cols < 2:
            return
        spec = GridSpec(rows, cols, p_main=p_main, p_side=(1 - p_main) / 3)
        P = build_grid_transition(spec)
        assert np.all(P >= 0)
        np.testing.assert_allclose(P.sum(axis=0), 1.0, atol=1e-12)


class TestCosts:
    def test_range_and_mean(self):
        c = random_cost_matrix(100, 100, 0.0, 1.0, seed=0)
        assert c.shape == (100, 100)
        assert c.min() >= 0 and c.max() <= 1
        assert abs(c.mean() - 0.5) < 0.02

    def test_seeded(self):
        np.testing.assert_array_equal(random_cost_matrix(3, 4, 0, 1, 5), random_cost_matrix(3, 4, 0, 1, 5))

    def test_reversed_range(self):
        with pytest.raises(ValueError):
            random_cost_matrix(3, 4, 1.0, 0.0, seed=0)

    def test_degenerate_range(self):
        np.testing.assert_array_equal(random_cost_matrix(2, 2, 0.3, 0.3, seed=1), np.full((2, 2), 0.3))


def test_grid_mdp_valid():
    mdp = grid_mdp(GridSpec(3, 3, seed=4), 0.7)
    assert validate_mdp(mdp) == []
    assert (mdp.num_states, mdp.num_actions) == (9, 4)
    np.testing.assert_array_equal(mdp.cost, grid_mdp(GridSpec(3, 3, seed=4), 0.7).cost)
    assert not np.array_equal(mdp.cost, grid_mdp(GridSpec(3, 3, seed=5), 0.7).cost)
