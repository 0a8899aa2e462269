import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from optdesign.linalg import (
    NearSingularError,
    SymMatrix,
    det_root,
    inverse,
    sym_eig,
)


def random_sym(rng, n, spd=False):
    a = rng.standard_normal((n, n))
    if spd:
        return a @ a.T + 1e-3 * np.eye(n)
    return 0.5 * (a + a.T)


def test_sym_matrix_symmetrizes_and_freezes():
    m = SymMatrix([[1.0, 2.0], [2.5, 3.0]])
    assert np.array_equal(m.a, m.a.T)
    assert m.a[0, 1] == pytest.approx(2.25)
    with pytest.raises(ValueError):
        m.a[0, 0] = 5.0


def test_sym_matrix_rejects_nonsquare():
    with pytest.raises(ValueError):
        SymMatrix(np.ones((2, 3)))


def test_sym_eig_matches_numpy_eigh():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3, 5, 8, 12):
        for _ in range(20):
            a = random_sym(rng, n)
            dec = sym_eig(a)
            want = np.linalg.eigvalsh(a)
            assert np.allclose(dec.eigenvalues, want, atol=1e-10 * max(1, abs(want).max()))
            # eigenvalues ascend and the vectors reconstruct the matrix
            assert np.all(np.diff(dec.eigenvalues) >= -1e-12)
            recon = (dec.eigenvectors * dec.eigenvalues) @ dec.eigenvectors.T
            assert np.allclose(recon, a, atol=1e-9 * max(1, abs(a).max()))


def test_sym_eig_orthonormal_vectors():
    rng = np.random.default_rng(1)
    a = random_sym(rng, 7)
    dec = sym_eig(a)
    gram = dec.eigenvectors.T @ dec.eigenvectors
    assert np.allclose(gram, np.eye(7), atol=1e-12)


def test_sym_eig_diagonal_fast_path():
    dec = sym_eig(np.diag([3.0, -1.0, 2.0]))
    assert np.allclose(dec.eigenvalues, [-1.0, 2.0, 3.0])


def test_det_root_matches_slogdet():
    rng = np.random.default_rng(2)
    for n in (1, 2, 4, 9):
        a = random_sym(rng, n, spd=True)
        sign, logdet = np.linalg.slogdet(a)
        assert sign > 0
        assert det_root(a) == pytest.approx(np.exp(logdet / n), rel=1e-10)


def test_det_root_singular_is_zero():
    a = np.outer([1.0, 2.0], [1.0, 2.0])
    assert det_root(a) == 0.0


def test_inverse_matches_numpy():
    rng = np.random.default_rng(3)
    a = random_sym(rng, 6, spd=True)
    inv = inverse(a)
    assert np.allclose(inv.a, np.linalg.inv(a), atol=1e-8)


def test_inverse_near_singular_raises():
    a = np.diag([1.0, 1e-16])
    with pytest.raises(NearSingularError) as err:
        inverse(a)
    assert "singular" in str(err.value).lower()


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_sym_eig_property(n, seed):
    rng = np.random.default_rng(seed)
    a = random_sym(rng, n)
    dec = sym_eig(a)
    # trace and Frobenius norm are spectral invariants
    assert np.trace(a) == pytest.approx(float(dec.eigenvalues.sum()), abs=1e-9 * max(1, abs(a).max()))
    assert np.sum(a * a) == pytest.approx(float((dec.eigenvalues**2).sum()), rel=1e-9, abs=1e-12)
