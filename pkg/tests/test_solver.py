"""
Unit tests for the preconditioned SDD solver.
"""
import numpy as np
import pytest

from app.errors import ConvergenceError, InputValidationError
from app.modules.graph.grounded import grounded_laplacian
from app.modules.graph.leaders import make_leader_config
from app.modules.linalg.solver import (
    CRITERION_ENERGY,
    CRITERION_RESIDUAL,
    gershgorin_upper,
    make_solve_handle,
    sdd_solve,
    solve_block,
)


def _system(g, leaders):
    return grounded_laplacian(g, make_leader_config(g, leaders))


def _energy_error(matrix, x, exact):
    err = x - exact
    return np.sqrt(err @ matrix @ err) / np.sqrt(exact @ matrix @ exact)


def test_triangle_solve(k3):
    """Test [[2,-1],[-1,2]] x = (1,0) gives (2/3, 1/3)."""
    sys = _system(k3, [0])
    h = make_solve_handle(sys, 1e-6, strict=True)

    x = sdd_solve(h, np.array([1.0, 0.0]))

    assert np.allclose(x, [2 / 3, 1 / 3], atol=1e-6)


def test_identity_solve_is_exact(star):
    """Test S = I returns b exactly."""
    h = make_solve_handle(_system(star, [0]), 0.1)
    b = np.array([1.0, -2.0, 0.5, 3.0, -0.25])

    assert np.array_equal(sdd_solve(h, b), b)


def test_zero_right_hand_side(karate):
    h = make_solve_handle(_system(karate, [0]), 0.1)

    outcome = solve_block(h, np.zeros((33, 2)))

    assert np.array_equal(outcome.x, np.zeros((33, 2)))
    assert outcome.iterations.tolist() == [0, 0]


@pytest.mark.parametrize("preconditioner", ["jacobi", "ilu"])
@pytest.mark.parametrize("delta", [1e-2, 1e-6])
def test_energy_norm_contract(karate, preconditioner, delta):
    """Test the strict rule keeps the S-norm error below delta."""
    sys = _system(karate, [0, 33])
    matrix = sys.matrix.toarray()
    b = np.random.default_rng(3).standard_normal(sys.dim)
    exact = np.linalg.solve(matrix, b)

    x = sdd_solve(make_solve_handle(sys, delta, preconditioner=preconditioner, strict=True), b)

    assert _energy_error(matrix, x, exact) <= delta


def test_block_columns_match_single_solves(karate):
    sys = _system(karate, [5])
    h = make_solve_handle(sys, 1e-8, strict=True)
    b = np.random.default_rng(0).standard_normal((sys.dim, 3))

    block = sdd_solve(h, b)

    for j in range(3):
        assert np.allclose(block[:, j], sdd_solve(h, b[:, j]), atol=1e-10)


def test_strict_handle_records_energy_rule(karate):
    h = make_solve_handle(_system(karate, [0]), 1e-4, strict=True)

    outcome = solve_block(h, np.ones(33))

    assert outcome.criteria == [CRITERION_ENERGY]
    assert outcome.residual[0] <= h.energy_tol


def test_practical_handle_may_stop_on_residual(karate):
    """Test the relaxed rule stops once the relative residual is below delta."""
    h = make_solve_handle(_system(karate, [0]), 0.5)

    outcome = solve_block(h, np.ones(33))

    assert outcome.criteria[0] in (CRITERION_ENERGY, CRITERION_RESIDUAL)
    assert outcome.residual[0] <= 0.5


def test_iteration_cap_raises_with_column_index(karate):
    """Test the failing column is reported, skipping the zero column."""
    sys = _system(karate, [0])
    h = make_solve_handle(sys, 1e-10, strict=True, max_iter=1)
    b = np.zeros((sys.dim, 2))
    b[:, 1] = np.arange(sys.dim, dtype=float) + 1.0

    with pytest.raises(ConvergenceError) as exc_info:
        solve_block(h, b)

    assert exc_info.value.probe_index == 1
    assert exc_info.value.iterations == 1
    assert exc_info.value.residual > 1e-10


def test_gershgorin_bound(k3):
    assert gershgorin_upper(_system(k3, [0]).matrix) == 3.0


@pytest.mark.parametrize("delta", [0.0, 1.0, -0.1])
def test_rejects_delta_outside_unit_interval(k3, delta):
    with pytest.raises(InputValidationError):
        make_solve_handle(_system(k3, [0]), delta)


def test_rejects_unknown_preconditioner(k3):
    with pytest.raises(InputValidationError):
        make_solve_handle(_system(k3, [0]), 0.1, preconditioner="amg")


def test_rejects_wrong_shape(k3):
    h = make_solve_handle(_system(k3, [0]), 0.1)

    with pytest.raises(InputValidationError):
        sdd_solve(h, np.ones(3))
