"""
Unit tests for the dense inverse and Sherman-Morrison maintenance.
"""
import numpy as np
import pytest
import scipy.sparse as sp

from app.errors import CapacityError, InputValidationError, NumericalError
from app.modules.graph.grounded import GroundedSystem, add_candidate, grounded_laplacian
from app.modules.graph.leaders import make_leader_config
from app.modules.linalg.dense import DenseInverse, dense_inverse, sherman_morrison_update


def test_inverse_of_path_grounded_at_start(p3):
    """Test [[2,-1],[-1,1]] inverts to [[1,1],[1,2]]."""
    invm = dense_inverse(grounded_laplacian(p3, make_leader_config(p3, [0])))

    assert np.allclose(invm.inv, [[1.0, 1.0], [1.0, 2.0]], atol=1e-12)


def test_inverse_of_triangle(k3):
    invm = dense_inverse(grounded_laplacian(k3, make_leader_config(k3, [0])))

    assert np.allclose(invm.inv, np.array([[2.0, 1.0], [1.0, 2.0]]) / 3, atol=1e-12)
    assert invm.trace() == pytest.approx(4 / 3)


def test_inverse_of_identity(star):
    invm = dense_inverse(grounded_laplacian(star, make_leader_config(star, [0])))

    assert np.allclose(invm.inv, np.eye(5))


def test_inverse_is_exactly_symmetric(karate):
    cfg = make_leader_config(karate, [0, 33])
    invm = dense_inverse(grounded_laplacian(karate, cfg))

    assert np.array_equal(invm.inv, invm.inv.T)


def test_column_norms_and_diagonal(p3):
    """Test t(u) and r(u) of [[2,1],[1,1]]."""
    invm = dense_inverse(grounded_laplacian(p3, make_leader_config(p3, [2])))

    assert np.allclose(invm.column_norms_sq(), [5.0, 2.0])
    assert np.allclose(invm.diagonal(), [2.0, 1.0])


def test_dense_cap_enforced(karate):
    sys = grounded_laplacian(karate, make_leader_config(karate, [0]))

    with pytest.raises(CapacityError):
        dense_inverse(sys, dense_cap=10)


def test_singular_matrix_is_numerical_error(p3):
    """Test a non positive definite matrix surfaces as a numerical error."""
    cfg = make_leader_config(p3, [2])
    singular = sp.csr_matrix(np.array([[1.0, -1.0], [-1.0, 1.0]]))

    with pytest.raises(NumericalError):
        dense_inverse(GroundedSystem(p3, cfg, singular))


def test_sherman_morrison_matches_fresh_inverse(p3):
    """Test [[2,1],[1,1]] bumped at index 0 becomes (1/3)[[2,1],[1,2]]."""
    updated = sherman_morrison_update(DenseInverse(np.array([[2.0, 1.0], [1.0, 1.0]])), 0, 1.0)

    assert np.allclose(updated.inv, np.array([[2.0, 1.0], [1.0, 2.0]]) / 3, atol=1e-12)


def test_sherman_morrison_on_identity():
    updated = sherman_morrison_update(DenseInverse(np.eye(3)), 0, 1.0)

    assert np.allclose(updated.inv, np.diag([0.5, 1.0, 1.0]))


def test_sherman_morrison_tiny_weight_is_nearly_identity(karate):
    invm = dense_inverse(grounded_laplacian(karate, make_leader_config(karate, [0])))

    updated = sherman_morrison_update(invm, 3, 1e-12)

    assert np.max(np.abs(updated.inv - invm.inv)) <= 1e-9


def test_sherman_morrison_copy_versus_inplace(karate):
    cfg = make_leader_config(karate, [0, 33])
    invm = dense_inverse(grounded_laplacian(karate, cfg))
    before = invm.inv.copy()

    copied = sherman_morrison_update(invm, 2, 1.0)
    assert np.array_equal(invm.inv, before), "Default update must not touch its input"

    same = sherman_morrison_update(invm, 2, 1.0, inplace=True)
    assert same is invm
    assert np.array_equal(invm.inv, copied.inv)


def test_sherman_morrison_chain_tracks_refactorization(karate):
    """Test several updates agree with a fresh Cholesky inverse and stay symmetric."""
    cfg = make_leader_config(karate, [0, 33])
    sys = grounded_laplacian(karate, cfg)
    invm = dense_inverse(sys)
    for pos in (0, 7, 19, 30):
        edge = cfg.candidate_at(pos)
        sherman_morrison_update(invm, int(cfg.cand_index[pos]), edge.weight, inplace=True)
        sys = add_candidate(sys, edge)

    fresh = dense_inverse(sys)
    assert np.allclose(invm.inv, fresh.inv, atol=1e-10)
    assert np.array_equal(invm.inv, invm.inv.T)


@pytest.mark.parametrize("u,w", [(-1, 1.0), (2, 1.0), (0, 0.0), (0, -1.0)])
def test_sherman_morrison_rejects_bad_arguments(u, w):
    with pytest.raises(InputValidationError):
        sherman_morrison_update(DenseInverse(np.eye(2)), u, w)
