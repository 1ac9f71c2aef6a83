import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anytime_cs import PsiFamily
from anytime_cs._errors import DomainError
from anytime_cs.boundaries import PolynomialH, StitchParams, stitched_boundary
from anytime_cs.matrix import (
    CovStreamState,
    SymMatrix,
    covariance_boundary,
    covariance_cs,
    eigenvalues,
    matrix_lil_boundary,
    max_eigenvalue,
    op_norm,
)

SIGMA = np.array([[5.0, 3.0], [3.0, 5.0]]) / 4


def test_eigen_examples():
    assert max_eigenvalue(SymMatrix.from_array(np.eye(3))) == pytest.approx(1.0, abs=1e-15)
    assert max_eigenvalue(SymMatrix.from_array(np.diag([5.0, -2.0]))) == 5.0
    assert max_eigenvalue(SymMatrix.from_array(SIGMA)) == pytest.approx(2.0, rel=1e-14)
    assert op_norm(SymMatrix.from_array(np.diag([1.0, -3.0]))) == 3.0
    assert eigenvalues(SymMatrix(4)) == [0.0] * 4


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-1e3, 1e3), b=st.floats(-1e3, 1e3), c=st.floats(-1e3, 1e3))
def test_two_by_two_closed_form(a, b, c):
    m = SymMatrix(2, [a, b, c])
    tr, det = a + c, a * c - b * b
    want = tr / 2 + math.sqrt(max(tr * tr / 4 - det, 0.0))
    assert max_eigenvalue(m) == pytest.approx(want, rel=1e-10, abs=1e-10 * max(1.0, abs(a), abs(b), abs(c)))


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(0)
    for d in (1, 2, 3, 5, 8):
        a = rng.normal(size=(d, d))
        a = a + a.T
        assert np.allclose(eigenvalues(SymMatrix.from_array(a)), np.linalg.eigvalsh(a), rtol=1e-10, atol=1e-12)


def test_sym_matrix_storage():
    m = SymMatrix.outer([1.0, 2.0, 3.0])
    assert np.array_equal(m.to_array(), np.outer([1, 2, 3], [1, 2, 3]))
    m[2, 0] = 7.0
    assert m[0, 2] == 7.0
    assert np.array_equal((m - m).to_array(), np.zeros((3, 3)))
    with pytest.raises(DomainError):
        SymMatrix.from_array([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(DomainError):
        SymMatrix(2, [1.0])
    with pytest.raises(DomainError):
        SymMatrix(2) + SymMatrix(3)


def test_matrix_lil_boundary():
    u1 = matrix_lil_boundary(3.0, d=1)
    ref = stitched_boundary(StitchParams(eta=2.0, c=1.0, h=PolynomialH(1.4)), 0.05)
    v = np.logspace(0, 6, 20)
    assert np.allclose(u1(v), ref(v), rtol=1e-14)
    assert u1.family == PsiFamily.gamma(1.0)
    p = StitchParams(eta=2.0, c=1.0, h=PolynomialH(1.4))
    assert np.allclose(p.ell(v, 0.05, 4.0) - p.ell(v, 0.05, 2.0), math.log(2), atol=1e-14)
    u2 = matrix_lil_boundary(3.0, d=2)
    assert u2.l0 == 2.0
    assert np.all(u2(v) > u1(v))
    with pytest.raises(DomainError):
        matrix_lil_boundary(0.0)


def test_matrix_lil_crossing_mc():
    # Y_t = a_t Z + c_t X with Pauli-type Z, X (both square to I), so W_t = t I and
    # gamma_max(Y_t) = sqrt(a_t^2 + c_t^2); increments have gamma_max = 1
    rng = np.random.default_rng(21)
    paths, horizon = 5000, 5000
    u = matrix_lil_boundary(1.0, d=2, alpha=0.05)
    bound = u(np.arange(1, horizon + 1, dtype=float))
    crossed = np.zeros(paths, dtype=bool)
    a = np.zeros(paths)
    c = np.zeros(paths)
    signs = rng.choice([-1.0, 1.0], size=(horizon, paths)).astype(np.float32)
    for t in range(horizon):
        if t % 2 == 0:
            a += signs[t]
        else:
            c += signs[t]
        crossed |= np.hypot(a, c) >= bound[t]
    assert crossed.mean() <= 0.05 + 3 * math.sqrt(0.05 * 0.95 / paths)


def test_covariance_boundary():
    u = covariance_boundary(4.0, 2)
    assert u.family == PsiFamily.poisson(8.0)
    assert u.params["rows"] == (5,)
    assert u.l0 == 2.0
    v = np.logspace(0, 6, 10)
    assert np.all(np.diff(u(v)) > 0)


def test_covariance_stream():
    state = CovStreamState(dim=2, b=4.0)
    u = covariance_boundary(4.0, 2)
    x = np.array([math.sqrt(2), math.sqrt(2)])
    est = covariance_cs(state, x, u)
    assert np.allclose(est.sigma_hat.to_array(), np.outer(x, x))
    assert isinstance(est.contains(SIGMA), bool)
    with pytest.raises(DomainError):
        state.update([3.0, 0.0])
    with pytest.raises(DomainError):
        state.update([1.0])
    with pytest.raises(DomainError):
        CovStreamState(dim=2, b=0.0)


def test_covariance_sets_are_consistent():
    rng = np.random.default_rng(1)
    pts = np.array([[math.sqrt(2), math.sqrt(2)], [-math.sqrt(2), -math.sqrt(2)],
                    [1 / math.sqrt(2), -1 / math.sqrt(2)], [-1 / math.sqrt(2), 1 / math.sqrt(2)]])
    state = CovStreamState(dim=2, b=4.0)
    u = covariance_boundary(4.0, 2)
    for i in rng.integers(0, 4, 3000):
        est = covariance_cs(state, pts[i], u)
    assert est.contains(SIGMA)
    # the ball uses ||sigma|| <= b, so it contains everything the exact test accepts
    for _ in range(200):
        e = rng.normal(scale=0.3, size=(2, 2))
        cand = est.sigma_hat.to_array() + (e + e.T) / 2
        if op_norm(SymMatrix.from_array(cand)) <= 4.0 and est.contains(cand):
            assert est.within_ball(cand)
    # moving closer in operator norm at equal ||sigma|| keeps membership
    far = SymMatrix.from_array(SIGMA)
    near = est.sigma_hat + (far - est.sigma_hat).scale(0.5)
    if abs(op_norm(near) - op_norm(far)) < 1e-12:
        assert est.contains(near)


def test_scalar_reduction():
    rng = np.random.default_rng(2)
    xs = rng.uniform(-1, 1, 500)
    u = covariance_boundary(1.0, 1)
    state = CovStreamState(dim=1, b=1.0)
    total = 0.0
    for t, x in enumerate(xs, 1):
        est = covariance_cs(state, [x], u)
        total += x * x
        assert est.sigma_hat[0, 0] == pytest.approx(total / t, rel=1e-12)
        for sig2 in (1 / 3, 0.2, 0.5):
            inside = abs(total / t - sig2) < u(t * sig2) / t
            assert est.contains([[sig2]]) == inside
