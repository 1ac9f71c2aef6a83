import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize

from anytime_cs import PsiFamily, conversion_factor, legendre, psi_eval
from anytime_cs._errors import DomainError, UnsupportedConversionError
from anytime_cs.boundaries import linear_boundary, mixture_boundary
from anytime_cs.psi import convert_boundary, psi_g_inverse

FAMILIES = [
    PsiFamily.bernoulli(0.5, 0.5),
    PsiFamily.bernoulli(0.2, 1.7),
    PsiFamily.bernoulli(3.0, 1.0),
    PsiFamily.normal(),
    PsiFamily.poisson(1.0),
    PsiFamily.poisson(-0.7),
    PsiFamily.exponential(1.0),
    PsiFamily.exponential(-2.0),
    PsiFamily.gamma(0.5),
    PsiFamily.gamma(-1.0),
]
IDS = [f.describe() for f in FAMILIES]


def lam_grid(f, n=40):
    top = min(f.lambda_max * 0.95, 20.0)
    return np.linspace(0, top, n)


def legendre_oracle(f, x):
    top = min(f.lambda_max * (1 - 1e-9), 200.0)
    res = optimize.minimize_scalar(lambda lam: -(lam * x - f.psi(lam)), bounds=(0, top),
                                   method="bounded", options={"xatol": 1e-12})
    return max(-res.fun, 0.0)


def test_examples():
    assert psi_eval(PsiFamily.normal(), 1.0) == 0.5
    assert psi_eval(PsiFamily.gamma(0.0), 0.3) == pytest.approx(0.045, abs=1e-15)
    assert psi_eval(PsiFamily.exponential(1.0), 0.5) == pytest.approx(-math.log(0.5) - 0.5, rel=1e-12)
    assert psi_g_inverse(0.5, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert psi_g_inverse(0.5, 1.0) == pytest.approx(2 / (1 + math.sqrt(5)), rel=1e-12)
    assert psi_eval(PsiFamily.gamma(2.0), psi_g_inverse(3.0, 2.0)) == pytest.approx(3.0, rel=1e-12)
    assert legendre(PsiFamily.normal(), 2.0) == 2.0
    assert legendre(PsiFamily.bernoulli(0.5, 0.5), 0.0) == 0.0
    assert legendre(PsiFamily.exponential(1.0), 1.0) == pytest.approx(1 - math.log(2), rel=1e-12)


def test_zero_scale_limits_are_normal():
    lam = np.linspace(0, 5, 11)
    for f in (PsiFamily.poisson(0.0), PsiFamily.exponential(0.0), PsiFamily.gamma(0.0)):
        assert np.array_equal(f.psi(lam), lam ** 2 / 2)
        assert f.b_bar == math.inf


@pytest.mark.parametrize("f", FAMILIES, ids=IDS)
def test_scaling_at_origin(f):
    h = 1e-4
    assert f.psi(0.0) == 0.0
    assert abs(f.psi(h) / h) < 1e-4
    assert abs((f.psi(2 * h) - 2 * f.psi(h)) / h ** 2 - 1) < 1e-3
    assert abs(2 * f.psi(h) / h ** 2 - 1) < 1e-3


@pytest.mark.parametrize("f", FAMILIES, ids=IDS)
def test_convexity_and_derivative(f):
    lam = lam_grid(f)
    vals = f.psi(lam)
    mids = f.psi((lam[:-1] + lam[1:]) / 2)
    assert np.all(mids <= (vals[:-1] + vals[1:]) / 2 + 1e-12)
    inner = lam[1:-1]
    h = 1e-6
    fd = (f.psi(inner + h) - f.psi(inner - h)) / (2 * h)
    assert np.allclose(f.dpsi(inner), fd, rtol=1e-5, atol=1e-8)
    assert np.all(f.dpsi(lam) <= f.b_bar + 1e-12)


def test_bernoulli_large_lambda_is_finite():
    f = PsiFamily.bernoulli(0.3, 0.9)
    assert math.isfinite(f.psi(1e4))
    assert f.dpsi(1e4) == pytest.approx(1 / 0.3, rel=1e-9)


def test_gamma_dominates_normal():
    lam = np.linspace(0, 1.9, 50)
    n = PsiFamily.normal().psi(lam)
    assert np.all(PsiFamily.gamma(0.5).psi(lam) >= n - 1e-15)
    lam = np.linspace(0, 50, 50)
    assert np.all(PsiFamily.gamma(-1.0).psi(lam) <= PsiFamily.normal().psi(lam) + 1e-15)


@pytest.mark.parametrize("f", FAMILIES, ids=IDS)
@pytest.mark.parametrize("x", [0.0, 0.05, 0.4, 1.0, 2.5])
def test_legendre_matches_maximization(f, x):
    got = legendre(f, x)
    if x > f.b_bar:
        assert got == math.inf
        return
    want = legendre_oracle(f, x)
    assert got == pytest.approx(want, rel=1e-6, abs=1e-9)


def test_legendre_normal_oracle_tight():
    for x in np.linspace(0, 6, 25):
        assert legendre(PsiFamily.normal(), x) == pytest.approx(legendre_oracle(PsiFamily.normal(), x),
                                                               rel=1e-8, abs=1e-12)


def test_domain_errors():
    with pytest.raises(DomainError):
        psi_eval(PsiFamily.exponential(1.0), 1.0)
    with pytest.raises(DomainError):
        psi_eval(PsiFamily.normal(), -0.1)
    with pytest.raises(DomainError):
        PsiFamily.bernoulli(0.0, 1.0)
    with pytest.raises(DomainError):
        PsiFamily("cauchy")
    with pytest.raises(DomainError):
        legendre(PsiFamily.normal(), -1.0)


def test_table_examples():
    assert conversion_factor(PsiFamily.normal(), PsiFamily.bernoulli(1, 1), row=1)[0] == 1.0
    assert conversion_factor(PsiFamily.normal(), PsiFamily.bernoulli(1, 3), row=2)[0] == pytest.approx(4 / 3)
    assert conversion_factor(PsiFamily.gamma(0.7), PsiFamily.poisson(2.1), row=5)[0] == 1.0
    g, h = 0.2, 1.7
    want = (h * h - g * g) / (2 * math.log(h / g)) / (g * h)
    assert conversion_factor(PsiFamily.normal(), PsiFamily.bernoulli(g, h), row=1)[0] == pytest.approx(want)


# every row: psi_target <= a * psi_source on the shared domain is what makes v -> u(a v) valid
ROW_CASES = [
    (1, PsiFamily.normal(), PsiFamily.bernoulli(0.2, 1.7)),
    (1, PsiFamily.normal(), PsiFamily.bernoulli(1.5, 0.5)),
    (2, PsiFamily.normal(), PsiFamily.bernoulli(1.0, 3.0)),
    (3, PsiFamily.poisson(1.5), PsiFamily.bernoulli(0.5, 2.0)),
    (5, PsiFamily.gamma(0.4), PsiFamily.poisson(1.2)),
    (5, PsiFamily.gamma(-0.4), PsiFamily.poisson(-1.2)),
    (6, PsiFamily.exponential(1.5), PsiFamily.gamma(1.0)),
    (7, PsiFamily.gamma(0.8), PsiFamily.exponential(0.8)),
    (8, PsiFamily.gamma(-0.5), PsiFamily.exponential(-1.0)),
    (9, PsiFamily.poisson(-2.0), PsiFamily.gamma(-1.0)),
    (10, PsiFamily.normal(), PsiFamily.poisson(-0.6)),
    (11, PsiFamily.bernoulli(0.6, 1.1), PsiFamily.poisson(-0.6)),
]


@pytest.mark.parametrize("row,src,dst", ROW_CASES, ids=[f"row{r[0]}-{r[2].describe()}" for r in ROW_CASES])
def test_row_factor_dominates(row, src, dst):
    a, rows = conversion_factor(src, dst, row=row)
    assert rows == (row,)
    top = min(src.lambda_max, dst.lambda_max)
    lam = np.linspace(0, min(top * 0.999, 30.0), 400)
    assert np.all(dst.psi(lam) <= a * src.psi(lam) * (1 + 1e-12) + 1e-14)


def test_missing_row_and_bad_pairs():
    with pytest.raises(UnsupportedConversionError):
        conversion_factor(PsiFamily.normal(), PsiFamily.bernoulli(1, 1), row=4)
    with pytest.raises(UnsupportedConversionError):
        conversion_factor(PsiFamily.normal(), PsiFamily.poisson(0.5), row=10)
    with pytest.raises(UnsupportedConversionError) as err:
        conversion_factor(PsiFamily.poisson(-1.0), PsiFamily.exponential(2.0))
    assert "reachable" in str(err.value)


def test_chain_search():
    a, rows = conversion_factor(PsiFamily.gamma(1.0), PsiFamily.bernoulli(0.5, 2.0))
    assert a == 1.0 and rows[-1] == 3
    a, rows = conversion_factor(PsiFamily.normal(), PsiFamily.bernoulli(0.2, 1.7))
    assert rows == (1,)
    assert conversion_factor(PsiFamily.gamma(2.0), PsiFamily.gamma(1.0)) == (1.0, (0,))
    assert conversion_factor(PsiFamily.gamma(1.0), PsiFamily.gamma(1.0)) == (1.0, ())


def test_convert_boundary_rescales_time():
    u = mixture_boundary("normal1", {"rho": 1.0}, 0.05)
    target = PsiFamily.bernoulli(0.2, 1.7)
    w = convert_boundary(u, target)
    a = conversion_factor(PsiFamily.normal(), target)[0]
    assert w.family == target
    for v in [0.5, 10.0, 1e4]:
        assert w(v) == pytest.approx(u(a * v), rel=1e-12)
    lin = linear_boundary(PsiFamily.gamma(1 / 3), 0.5, 0.05)
    conv = convert_boundary(lin, PsiFamily.poisson(1.0), row=5)
    assert conv(7.0) == pytest.approx(lin(7.0))


@settings(max_examples=100, deadline=None)
@given(u=st.floats(1e-8, 1e8), c=st.floats(-5, 5))
def test_psi_g_inverse_round_trip(u, c):
    lam = psi_g_inverse(u, c)
    assert lam > 0
    # the forward map is ill-conditioned near 1/c, so compare with an extended-precision inverse
    with mp.workdps(50):
        mu, mc = mp.mpf(u), mp.mpf(c)
        want = float(2 / (mc + mp.sqrt(mc * mc + 2 / mu)))
    assert lam == pytest.approx(want, rel=1e-13)
    if c * lam < 0.9:
        assert psi_eval(PsiFamily.gamma(c), lam) == pytest.approx(u, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(g=st.floats(0.05, 5), h=st.floats(0.05, 5), x=st.floats(0, 1))
def test_bernoulli_legendre_fenchel_young(g, h, x):
    f = PsiFamily.bernoulli(g, h)
    x = x * f.b_bar * 0.999
    star = legendre(f, x)
    for lam in (0.1, 1.0, 5.0):
        assert lam * x <= f.psi(lam) + star + 1e-9
