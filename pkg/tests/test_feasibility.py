import numpy as np
import pytest

from divkit.feasibility import solve_equality_feasibility


def test_simple_feasible():
    # x1 + x2 = 1, x1 - x2 = 0 -> (0.5, 0.5)
    x = solve_equality_feasibility([[1.0, 1.0], [1.0, -1.0]], [1.0, 0.0])
    assert x is not None
    assert x == pytest.approx([0.5, 0.5], abs=1e-9)


def test_infeasible_by_sign():
    # x1 + x2 = -1 has no nonnegative solution
    assert solve_equality_feasibility([[1.0, 1.0]], [-1.0]) is None


def test_infeasible_inconsistent_rows():
    a = [[1.0, 1.0], [1.0, 1.0]]
    assert solve_equality_feasibility(a, [1.0, 2.0]) is None


def test_redundant_rows_are_fine():
    a = [[1.0, 1.0], [2.0, 2.0]]
    x = solve_equality_feasibility(a, [1.0, 2.0])
    assert x is not None
    assert np.asarray(a) @ x == pytest.approx([1.0, 2.0], abs=1e-9)


def test_negative_rhs_flipped():
    # -x1 = -0.25 -> x1 = 0.25
    x = solve_equality_feasibility([[-1.0, 0.0]], [-0.25])
    assert x is not None
    assert x[0] == pytest.approx(0.25, abs=1e-12)


def test_random_stochastic_systems():
    # random column-stochastic kernels seen as feasibility problems
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 6))
        target = rng.dirichlet(np.ones(n))
        source = rng.dirichlet(np.ones(n))
        # find psi with psi @ source = target and stochastic columns
        rows = []
        rhs = []
        for j in range(n):
            row = np.zeros(n * n)
            row[[i * n + j for i in range(n)]] = 1.0
            rows.append(row)
            rhs.append(1.0)
        for i in range(n):
            row = np.zeros(n * n)
            row[i * n : (i + 1) * n] = source
            rows.append(row)
            rhs.append(target[i])
        x = solve_equality_feasibility(np.array(rows), np.array(rhs))
        assert x is not None  # always feasible: ignore input, emit target
        psi = x.reshape(n, n)
        assert psi @ source == pytest.approx(target, abs=1e-9)
        assert psi.sum(axis=0) == pytest.approx(np.ones(n), abs=1e-9)


def test_shape_validation():
    with pytest.raises(ValueError):
        solve_equality_feasibility([[1.0, 0.0]], [1.0, 2.0])
