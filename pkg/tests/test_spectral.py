import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from momentstab.errors import (DegenerateEigenvalue, NotSemisimple, SingularPairing,
                               VanishingPairing)
from momentstab.spectral import (biorthogonality_defect, eigenpairs, pair,
                                 perturb_degenerate, perturb_simple, spectral_abscissa)

square = st.integers(1, 5).flatmap(
    lambda n: arrays(float, (n, n), elements=st.floats(-3, 3, allow_nan=False)))


@given(square)
def test_eigenpairs_residuals_and_order(M):
    res = eigenpairs(M)
    assert np.all(res.residuals < 1e-10)
    re = res.eigenvalues.real
    assert np.all(np.diff(re) <= 1e-12)
    assert res.abscissa == pytest.approx(spectral_abscissa(M), abs=1e-12)
    assert np.allclose(np.linalg.norm(res.right_vectors, axis=0), 1.0)
    assert np.allclose(np.linalg.norm(res.left_vectors, axis=0), 1.0)


def test_left_vectors_satisfy_transposed_problem(rng):
    M = rng.normal(size=(5, 5))
    res = eigenpairs(M)
    for k, nu in enumerate(res.eigenvalues):
        v = res.left_vectors[:, k]
        assert np.allclose(M.T @ v, nu * v, atol=1e-12)


def test_biorthogonality(rng):
    for _ in range(5):
        res = eigenpairs(rng.normal(size=(6, 6)))
        assert biorthogonality_defect(res) < 1e-10
        assert np.all(np.abs(res.pairings) > 1e-6)


def test_companion_example():
    # x^2 - 3x + 2 = 0 has roots 1, 2
    M = np.array([[3.0, -2.0], [1.0, 0.0]])
    res = eigenpairs(M)
    assert np.allclose(res.eigenvalues, [2.0, 1.0])
    assert spectral_abscissa(M) == pytest.approx(2.0)


def test_complex_pair_ordering():
    M = np.array([[0.0, -2.0], [2.0, 0.0]]) - 0.5 * np.eye(2)
    w = eigenpairs(M).eigenvalues
    assert w[0] == pytest.approx(-0.5 + 2j)
    assert w[1] == pytest.approx(-0.5 - 2j)


def test_simple_shift_diagonal():
    M = np.diag([3.0, 1.0, -2.0])
    dM = np.arange(9.0).reshape(3, 3)
    base = eigenpairs(M)
    assert [perturb_simple(base, dM, k) for k in range(3)] == pytest.approx([0.0, 4.0, 8.0])


def test_simple_shift_nonnormal():
    # upper-triangular: left and right vectors differ
    M = np.array([[1.0, 5.0], [0.0, 2.0]])
    dM = np.array([[0.0, 0.0], [1.0, 0.0]])
    base = eigenpairs(M)
    eps = 1e-6
    w = np.sort(np.linalg.eigvals(M + eps * dM).real)[::-1]
    for k in range(2):
        fd = (w[k] - base.eigenvalues[k].real) / eps
        assert perturb_simple(base, dM, k).real == pytest.approx(fd, abs=1e-4)


def test_first_order_error_is_quadratic(rng):
    M = rng.normal(size=(4, 4))
    dM = rng.normal(size=(4, 4))
    base = eigenpairs(M)
    for k in range(4):
        nu = base.eigenvalues[k]
        d = perturb_simple(base, dM, k)
        errs = []
        for eps in (1e-2, 5e-3, 2.5e-3):
            w = np.linalg.eigvals(M + eps * dM)
            errs.append(np.abs(w - nu - eps * d).min())
        assert 3.0 < errs[0] / errs[1] < 5.0
        assert 3.0 < errs[1] / errs[2] < 5.0


def test_simple_rejects_degenerate_and_defective():
    with pytest.raises(DegenerateEigenvalue):
        perturb_simple(eigenpairs(np.eye(2)), np.ones((2, 2)), 0)
    jordan = np.array([[1.0, 1.0], [0.0, 1.0 + 1e-9]])
    base = eigenpairs(jordan)
    assert base.degenerate.all()
    with pytest.raises(VanishingPairing):
        perturb_simple(base, np.ones((2, 2)), 0, gap=1e-12, pairing_tol=1e-5)


@pytest.mark.parametrize("s", [1e-3, 0.5, 2.0])
def test_degenerate_splitting(s):
    M = np.diag([1.0, 1.0, 2.0])
    dM = np.zeros((3, 3))
    dM[0, 1] = dM[1, 0] = s
    z = perturb_degenerate(M, dM, 1)
    assert np.allclose(z, [s, -s], atol=1e-14)


def test_degenerate_matches_finite_difference(rng):
    # a semisimple double eigenvalue in a non-orthogonal basis
    S = rng.normal(size=(4, 4))
    M = S @ np.diag([2.0, 2.0, -1.0, 0.5]) @ np.linalg.inv(S)
    dM = rng.normal(size=(4, 4))
    k = 0
    z = perturb_degenerate(M, dM, k)
    eps = 1e-6
    w = np.linalg.eigvals(M + eps * dM)
    near = np.sort_complex(w[np.abs(w - 2.0) < 0.1])
    assert np.allclose(np.sort_complex((near - 2.0) / eps), np.sort_complex(z), atol=1e-4)


def test_degenerate_rejects_jordan_block():
    J = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 3.0]])
    with pytest.raises(NotSemisimple):
        perturb_degenerate(J, np.eye(3), 1)


def test_singular_pairing_guard():
    M = np.diag([1.0, 1.0])
    with pytest.raises(SingularPairing):
        perturb_degenerate(M, np.eye(2), 0, cond_max=0.5)


def test_pair_is_bilinear():
    v = np.array([1j, 1.0])
    u = np.array([1j, 0.0])
    assert pair(v, u) == -1.0
