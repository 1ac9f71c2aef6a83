"""Streaming confidence sequences built on uniform boundaries.

The functions mirror single estimator updates: each takes a mutable state,
folds in one observation and returns the current interval.  The strategy
classes at the bottom bundle a state with its boundaries so that a stream can
be processed with ``update`` calls, and they expose the common interface used
by :func:`always_valid_p` and the simulation harness.

Conventions: a boundary built at crossing probability ``alpha`` bounds one
side.  Functions that take boundaries therefore return intervals at
confidence ``1 - 2 alpha`` when the same one-sided boundary guards both sides,
and at ``1 - alpha`` when the boundary is two-sided.  Strategy classes take the
total error ``alpha`` of the reported interval and split it themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Protocol

import numpy as np

from . import kernels
from ._errors import DomainError, UnsupportedStrategyError
from .boundaries import (
    StitchParams,
    PolynomialH,
    UniformBoundary,
    mixture_boundary,
    stitched_boundary,
    tune_rho_for_time,
)
from .psi import PsiFamily, convert_boundary, legendre

__all__ = [
    "AteState",
    "BetaBinomialStrategy",
    "BernoulliFamilyStrategy",
    "CsInterval",
    "EmpiricalBernsteinStrategy",
    "HoeffdingStrategy",
    "NaiveSNStrategy",
    "PointwiseBernoulliStrategy",
    "RunningIntersection",
    "RunningMeanPredictor",
    "StreamState",
    "VarianceStrategy",
    "always_valid_p",
    "ate_update",
    "bernoulli_expo_family_cs",
    "beta_binomial_cs",
    "betabinom_kappa",
    "default_variance_boundaries",
    "eb_closed_form_constants",
    "empirical_bernstein_boundary",
    "empirical_bernstein_cs",
    "exponential_family_cs",
    "hoeffding_boundary",
    "hoeffding_time",
    "mean_cs_update",
    "naive_sn_cs",
    "pointwise_bernoulli_reject",
    "running_intersection",
    "variance_cs_update",
]

BB_GRID = 512


@dataclass(frozen=True)
class CsInterval:
    t: int
    lower: float
    upper: float
    empty: bool = False

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, theta: float) -> bool:
        return self.lower <= theta <= self.upper


# ---------------------------------------------------------------- predictors

class Predictor(Protocol):
    def predict(self) -> float: ...

    def observe(self, x: float) -> None: ...


class RunningMeanPredictor:
    """Predicts the mean of past observations, or ``start`` before any data."""

    def __init__(self, start: float = 0.0):
        self.start = start
        self.n = 0
        self.total = 0.0

    def predict(self) -> float:
        return self.total / self.n if self.n else self.start

    def observe(self, x: float) -> None:
        self.n += 1
        self.total += x

    def copy(self) -> RunningMeanPredictor:
        out = RunningMeanPredictor(self.start)
        out.n, out.total = self.n, self.total
        return out


# ---------------------------------------------------------------- stream state

@dataclass
class StreamState:
    """Running statistics of a scalar stream.

    ``v_hat`` accumulates squared prediction errors (x_t - xhat_t)^2 where
    xhat_t comes from ``predictor`` before x_t is seen.  ``mean`` and ``m2``
    are Welford accumulators used by the variance sequence.
    """

    a: float = -math.inf
    b: float = math.inf
    t: int = 0
    sum_x: float = 0.0
    v_hat: float = 0.0
    mean: float = 0.0
    m2: float = 0.0
    predictor: Predictor | None = None

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError(f"support needs a < b, got [{self.a}, {self.b}]")
        if self.predictor is None:
            start = 0.5 * (self.a + self.b) if self.bounded else 0.0
            self.predictor = RunningMeanPredictor(start)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.a) and math.isfinite(self.b)

    @property
    def xbar(self) -> float:
        return self.sum_x / self.t if self.t else math.nan

    def update(self, x: float) -> None:
        x = float(x)
        if not (self.a <= x <= self.b):
            raise DomainError(f"observation {x} outside [{self.a}, {self.b}]")
        pred = self.predictor.predict()
        self.v_hat += (x - pred) ** 2
        self.predictor.observe(x)
        self.t += 1
        self.sum_x += x
        d = x - self.mean
        self.mean += d / self.t
        self.m2 += d * (x - self.mean)

    def copy(self) -> StreamState:
        pred = self.predictor.copy() if hasattr(self.predictor, "copy") else self.predictor
        return replace(self, predictor=pred)


def _full(state: StreamState) -> CsInterval:
    return CsInterval(state.t, state.a, state.b)


def hoeffding_time(state: StreamState) -> float:
    """V_t = (b - a)^2 t / 4, the variance process of a bounded stream."""
    if not state.bounded:
        raise DomainError("Hoeffding intrinsic time needs a bounded support")
    return (state.b - state.a) ** 2 * state.t / 4.0


def mean_cs_update(state: StreamState, x: float, boundary_lo: UniformBoundary | None,
                   boundary_up: UniformBoundary,
                   intrinsic_time: Callable[[StreamState], float] = hoeffding_time) -> CsInterval:
    """Fold in ``x`` and return xbar_t -/+ u(V_t)/t.

    ``boundary_lo`` defaults to ``boundary_up``.
    """
    state.update(x)
    lo = boundary_up if boundary_lo is None else boundary_lo
    v = intrinsic_time(state)
    return CsInterval(state.t, state.xbar - lo(v) / state.t, state.xbar + boundary_up(v) / state.t)


def hoeffding_boundary(a: float, b: float, alpha: float, opt_time: float = 500.0) -> UniformBoundary:
    """Two-sided normal mixture for bounded data, tightest at ``opt_time`` observations."""
    rho = tune_rho_for_time((b - a) ** 2 * opt_time / 4.0, alpha)
    return mixture_boundary("normal2", {"rho": rho}, alpha)


# ---------------------------------------------------------------- beta-binomial

def betabinom_kappa(alpha: float, opt_time: float = 500.0, l0: float = 1.0) -> float:
    """Relative beta-binomial precision: rho(mu) = kappa g(mu) h(mu), tuned for ``opt_time``."""
    w = kernels.lambert_w_m1(-alpha * alpha / (math.e * l0 * l0))
    return opt_time / (-w - 1.0)


def beta_binomial_cs(state: StreamState, alpha: float, *, rho: float | None = None,
                     kappa: float | None = None, split: tuple[float, float] | None = None,
                     l0: float = 1.0) -> CsInterval:
    """Set of mu in [a, b] at which the beta-binomial mixture stays below l0/alpha.

    Give either an absolute ``rho`` or a relative ``kappa`` (rho = kappa g h);
    the default is :func:`betabinom_kappa` at 500 observations.  With ``split``
    = (alpha1, alpha2) two one-sided mixtures are used instead of the
    two-sided one, alpha1 guarding upward deviations of sum x - t mu.
    """
    if not state.bounded:
        raise DomainError("beta-binomial strategy needs a bounded support")
    if state.t == 0:
        return _full(state)
    if rho is not None and kappa is not None:
        raise DomainError("give rho or kappa, not both")
    if rho is None and kappa is None:
        kappa = betabinom_kappa(alpha if split is None else 2 * min(split), l0=l0)
    rel = 1 if rho is None else 0
    par = kappa if rho is None else rho
    if rel and not kappa > 1:
        raise DomainError(f"kappa must exceed 1, got {kappa}")
    impl = kernels.backend_module()
    if split is None:
        if not 0 < alpha <= 1:
            raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
        lo, hi = impl.betabinom_interval(state.sum_x, state.t, state.a, state.b, par, rel, 0,
                                         math.log(l0 / alpha), 0.0, BB_GRID)
    else:
        a1, a2 = split
        if not (0 < a1 <= 1 and 0 < a2 <= 1):
            raise DomainError(f"alpha split must lie in (0, 1], got {split}")
        lo, hi = impl.betabinom_interval(state.sum_x, state.t, state.a, state.b, par, rel, 1,
                                         math.log(l0 / a1), math.log(l0 / a2), BB_GRID)
    return CsInterval(state.t, lo, hi)


def pointwise_bernoulli_reject(state: StreamState, mu: float, alpha: float,
                               two_sided: bool = True) -> bool:
    """Fixed-time Chernoff test of mean ``mu``; not valid uniformly over time.

    Rejects when V_t psi_B*(S_t / V_t) reaches log(1/alpha), with S_t = sum x - t mu
    and V_t = (mu - a)(b - mu) t.  The two-sided version tests both tails at alpha/2.
    """
    if not (state.a < mu < state.b):
        raise DomainError(f"mu must lie strictly inside [{state.a}, {state.b}]")
    if state.t == 0:
        return False
    g, h = mu - state.a, state.b - mu
    v = g * h * state.t
    s = state.sum_x - state.t * mu
    thr = math.log((2.0 if two_sided else 1.0) / alpha)
    if s >= 0:
        stat = v * legendre(PsiFamily.bernoulli(g, h), s / v)
    elif two_sided:
        stat = v * legendre(PsiFamily.bernoulli(h, g), -s / v)
    else:
        return False
    return stat >= thr


# ---------------------------------------------------------------- empirical Bernstein

def empirical_bernstein_boundary(width: float, alpha: float, rho: float | None = None,
                                 opt_var: float | None = None, closed_form: bool = False,
                                 eta: float = 2.0, s: float = 1.4, m: float = 1.0) -> UniformBoundary:
    """One-sided sub-exponential boundary with scale ``width`` = b - a.

    By default a gamma-exponential mixture; give ``rho`` directly or an
    intrinsic time ``opt_var`` to tune it for.  ``closed_form`` switches to
    polynomial stitching, which is sub-gamma and hence sub-exponential.
    """
    if closed_form:
        return stitched_boundary(StitchParams(eta=eta, m=m, c=width, h=PolynomialH(s)), alpha)
    if rho is None:
        rho = tune_rho_for_time(opt_var if opt_var is not None else width * width * 125.0, 2 * alpha)
    return mixture_boundary("gammaexp", {"rho": rho, "c": width}, alpha)


def eb_closed_form_constants(alpha: float, eta: float = 2.0, s: float = 1.4, m: float = 1.0,
                             c: float = 1.0) -> dict[str, float]:
    """Constants of the explicit empirical-Bernstein radius.

    With v = V_t v m the stitched boundary is at most
    ``lead * sqrt(v (log log(eta v / m) + inner)) + loglog_coef * log log(eta v / m) + linear_const``.
    """
    p = StitchParams(eta=eta, m=m, c=c, h=PolynomialH(s))
    k1, k2 = p.k1, p.k2
    const = math.log(kernels.riemann_zeta(s) / (alpha * math.log(eta) ** s))
    return {
        "lead": k1 * math.sqrt(s),
        "inner": const / s,
        "loglog_coef": 2.0 * k2 * c * s,
        "linear_const": 2.0 * k2 * c * const,
    }


def empirical_bernstein_cs(state: StreamState, x: float, boundary: UniformBoundary,
                           boundary_lo: UniformBoundary | None = None) -> CsInterval:
    """Fold in ``x``; return xbar_t -/+ u(v_hat_t)/t, valid at 1 - 2 alpha.

    ``boundary`` must be sub-exponential with scale b - a.
    """
    if not state.bounded:
        raise DomainError("empirical Bernstein needs a bounded support")
    return mean_cs_update(state, x, boundary_lo, boundary, intrinsic_time=lambda st: st.v_hat)


def naive_sn_cs(state: StreamState, x: float, boundary: UniformBoundary) -> CsInterval:
    """Normal mixture fed the empirical variance; a diagnostic with no coverage guarantee."""
    return mean_cs_update(state, x, None, boundary, intrinsic_time=lambda st: st.v_hat)


# ---------------------------------------------------------------- treatment effects

@dataclass
class AteState:
    """IPW running sums for a sequential experiment with outcomes in [0, 1]."""

    p_min: float = 0.5
    t: int = 0
    sum_ipw: float = 0.0
    v: float = 0.0
    arm_n: list = field(default_factory=lambda: [0, 0])
    arm_sum: list = field(default_factory=lambda: [0.0, 0.0])

    def __post_init__(self):
        if not 0 < self.p_min <= 0.5:
            raise DomainError(f"p_min must lie in (0, 1/2], got {self.p_min}")

    def prediction(self, arm: int) -> float:
        n = self.arm_n[arm]
        return self.arm_sum[arm] / n if n else 0.5

    @property
    def estimate(self) -> float:
        return self.sum_ipw / self.t if self.t else math.nan


def ate_update(s: AteState, z: int, p: float, y_obs: float, boundary: UniformBoundary,
               boundary_lo: UniformBoundary | None = None,
               preds: tuple[float, float] | None = None) -> CsInterval:
    """Fold in one unit and return the running average treatment effect interval.

    ``boundary`` should be sub-exponential with scale 2/p_min; the interval is
    valid at 1 - 2 alpha for the running average of individual effects.
    ``preds`` = (yhat0, yhat1) overrides the per-arm running means.
    """
    if z not in (0, 1):
        raise DomainError(f"treatment indicator must be 0 or 1, got {z}")
    if not (s.p_min - 1e-12 <= p <= 1.0 - s.p_min + 1e-12):
        raise DomainError(f"treatment probability {p} outside [{s.p_min}, {1 - s.p_min}]")
    if not 0.0 <= y_obs <= 1.0:
        raise DomainError(f"outcome {y_obs} outside [0, 1]")
    y0, y1 = preds if preds is not None else (s.prediction(0), s.prediction(1))
    if not (0.0 <= y0 <= 1.0 and 0.0 <= y1 <= 1.0):
        raise DomainError("predictions must lie in [0, 1]")
    w = (z - p) / (p * (1.0 - p))
    resid = y_obs - (y1 if z else y0)
    s.sum_ipw += y1 - y0 + w * resid
    s.v += (w * resid) ** 2
    s.t += 1
    s.arm_n[z] += 1
    s.arm_sum[z] += y_obs
    lo = boundary if boundary_lo is None else boundary_lo
    xbar = s.sum_ipw / s.t
    return CsInterval(s.t, xbar - lo(s.v) / s.t, xbar + boundary(s.v) / s.t)


# ---------------------------------------------------------------- variance

def default_variance_boundaries(alpha: float = 0.025, opt_time: float = 500.0):
    """(upper, lower) boundaries for the chi-square deviations of the variance sequence.

    The upper side is a gamma-exponential mixture with scale 2.  The lower
    side needs sub-exponential scale -2; a one-sided normal mixture covers it
    since the normal psi dominates every negative-scale family.
    """
    v_opt = 2.0 * opt_time
    rho = tune_rho_for_time(v_opt, 2 * alpha)
    upper = mixture_boundary("gammaexp", {"rho": rho, "c": 2.0}, alpha)
    lower = convert_boundary(mixture_boundary("normal1", {"rho": rho}, alpha), PsiFamily.exponential(-2.0))
    return upper, lower


def variance_cs_update(state: StreamState, x: float, upper: UniformBoundary,
                       lower: UniformBoundary) -> CsInterval:
    """Fold in ``x``; interval for sigma^2 of i.i.d. Gaussian data.

    With n = t + 1 observations and Q their centred sum of squares the set is
    [Q / (t + u_up(2t)), Q / (t - u_lo(2t))], unbounded above while t <= u_lo(2t).
    """
    state.update(x)
    t = state.t - 1
    if t < 1:
        return CsInterval(state.t, 0.0, math.inf)
    q = state.m2
    v = 2.0 * t
    lo = q / (t + upper(v))
    den = t - lower(v)
    hi = q / den if den > 0 else math.inf
    return CsInterval(state.t, lo, hi)


# ---------------------------------------------------------------- exponential families

def bernoulli_expo_family_cs(state: StreamState, alpha1: float, alpha2: float, **kw) -> CsInterval:
    """Exponential-family sequence for Bernoulli data; the beta-binomial set on [0, 1]."""
    if state.a != 0.0 or state.b != 1.0:
        raise DomainError("Bernoulli family sequence needs support [0, 1]")
    return beta_binomial_cs(state, min(alpha1, alpha2), split=(alpha1, alpha2), **kw)


def exponential_family_cs(t: int, sum_stat: float, omega: tuple[float, float],
                          upper_radius: Callable[[float, int], float],
                          lower_radius: Callable[[float, int], float],
                          ngrid: int = BB_GRID, iters: int = 60) -> CsInterval:
    """Generic mean-parametrized family: {mu : -lower(mu, t) < sum_stat - t mu < upper(mu, t)}.

    The radii are the uniform boundaries of the family at mu, evaluated at the
    family's intrinsic time.  Endpoints come from a grid scan refined by
    bisection, with the grid seeded at the sample mean.
    """
    lo_w, hi_w = omega
    if t == 0:
        return CsInterval(0, lo_w, hi_w)

    def inside(mu):
        s = sum_stat - t * mu
        return -lower_radius(mu, t) < s < upper_radius(mu, t)

    width = hi_w - lo_w
    grid = lo_w + width * (np.arange(ngrid) + 0.5) / ngrid
    flags = np.array([inside(mu) for mu in grid])
    xbar = min(max(sum_stat / t, lo_w), hi_w)
    idx = np.nonzero(flags)[0]
    lo_in = min(grid[idx[0]], xbar) if idx.size else xbar
    hi_in = max(grid[idx[-1]], xbar) if idx.size else xbar
    below = grid[(grid < lo_in) & ~flags]
    above = grid[(grid > hi_in) & ~flags]

    def refine(x_in, x_out):
        for _ in range(iters):
            mid = 0.5 * (x_in + x_out)
            if mid in (x_in, x_out):
                break
            if inside(mid):
                x_in = mid
            else:
                x_out = mid
        return x_out

    lower = refine(lo_in, below[-1]) if below.size else lo_w
    upper = refine(hi_in, above[0]) if above.size else hi_w
    return CsInterval(t, lower, upper)


# ---------------------------------------------------------------- running intersection

class RunningIntersection:
    """Cumulative intersection of intervals, remembering when it first became empty."""

    def __init__(self):
        self.lower = -math.inf
        self.upper = math.inf
        self.empty_since: int | None = None

    def update(self, ci: CsInterval) -> CsInterval:
        self.lower = max(self.lower, ci.lower)
        self.upper = min(self.upper, ci.upper)
        if self.empty_since is None and self.lower > self.upper:
            self.empty_since = ci.t
        return CsInterval(ci.t, self.lower, self.upper, empty=self.empty_since is not None)


def running_intersection(intervals: Iterable[CsInterval]) -> Iterator[CsInterval]:
    ri = RunningIntersection()
    for ci in intervals:
        yield ri.update(ci)


# ---------------------------------------------------------------- strategies

class Strategy:
    """A stream processor producing an interval at total error ``alpha``.

    Subclasses implement ``_interval(alpha)``; ``uniform`` marks strategies
    whose intervals hold simultaneously over time.
    """

    name = "strategy"
    uniform = True

    def __init__(self, state: StreamState, alpha: float):
        if not 0 < alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
        self.state = state
        self.alpha = alpha

    def update(self, x: float) -> CsInterval:
        self.state.update(x)
        return self.interval()

    def interval(self, alpha: float | None = None) -> CsInterval:
        if self.state.t == 0:
            return _full(self.state)
        return self._interval(self.alpha if alpha is None else alpha)

    def _interval(self, alpha: float) -> CsInterval:
        raise NotImplementedError

    def p_value(self, theta: float) -> float:
        """Smallest alpha whose interval excludes ``theta``, by bisection."""
        return _bisect_p(lambda a: not self.interval(a).contains(theta))


P_FLOOR = 1e-8


def _bisect_p(excluded: Callable[[float], bool], tol: float = 1e-6, max_iter: int = 40) -> float:
    if not excluded(1.0):
        return 1.0
    if excluded(P_FLOOR):
        return P_FLOOR
    lo, hi = P_FLOOR, 1.0
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if excluded(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _mixture_p(boundary: UniformBoundary, s: float, v: float, sides: int) -> float:
    """p-value from a mixture: excluded at alpha iff m(|s|, v) >= sides * l0 / alpha."""
    log_m = boundary.log_m(abs(s), v)
    return min(1.0, sides * boundary.l0 * math.exp(-log_m)) if log_m > -700 else 1.0


class _SymmetricMean(Strategy):
    """xbar -/+ u(V)/t with one boundary, two-sided or shared by both sides."""

    def __init__(self, state, alpha, boundary: UniformBoundary):
        super().__init__(state, alpha)
        self.boundary = boundary
        self._sides = 1 if boundary.two_sided else 2
        self._cache: dict[float, UniformBoundary] = {}

    def _boundary_at(self, alpha: float) -> UniformBoundary:
        a = alpha / self._sides
        if a == self.boundary.alpha:
            return self.boundary
        if a not in self._cache:
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[a] = self.boundary.with_alpha(a)
        return self._cache[a]

    def time(self) -> float:
        raise NotImplementedError

    def _interval(self, alpha):
        r = self._boundary_at(alpha)(self.time()) / self.state.t
        return CsInterval(self.state.t, self.state.xbar - r, self.state.xbar + r)

    def p_value(self, theta):
        if self.state.t == 0:
            return 1.0
        if self.boundary.log_m is not None:
            s = self.state.sum_x - self.state.t * theta
            return _mixture_p(self.boundary, s, self.time(), self._sides)
        return super().p_value(theta)


class HoeffdingStrategy(_SymmetricMean):
    name = "hoeffding"

    def __init__(self, a=0.0, b=1.0, alpha=0.05, opt_time=500.0, boundary=None):
        super().__init__(StreamState(a, b), alpha,
                         boundary or hoeffding_boundary(a, b, alpha, opt_time))

    def time(self):
        return hoeffding_time(self.state)


class EmpiricalBernsteinStrategy(_SymmetricMean):
    """Empirical Bernstein with a running-mean predictor; each side gets alpha/2."""

    name = "empirical_bernstein"

    def __init__(self, a=0.0, b=1.0, alpha=0.05, opt_var=None, closed_form=False, boundary=None,
                 predictor=None):
        bd = boundary or empirical_bernstein_boundary(b - a, alpha / 2, opt_var=opt_var,
                                                      closed_form=closed_form)
        super().__init__(StreamState(a, b, predictor=predictor), alpha, bd)

    def time(self):
        return self.state.v_hat


class NaiveSNStrategy(_SymmetricMean):
    """Two-sided normal mixture on the empirical variance.  Not a valid sequence."""

    name = "naive_sn"
    uniform = False

    def __init__(self, a=-math.inf, b=math.inf, alpha=0.05, opt_var=500.0, boundary=None):
        bd = boundary or mixture_boundary("normal2", {"rho": tune_rho_for_time(opt_var, alpha)}, alpha)
        super().__init__(StreamState(a, b), alpha, bd)

    def time(self):
        return self.state.v_hat


class BetaBinomialStrategy(Strategy):
    name = "beta_binomial"

    def __init__(self, a=0.0, b=1.0, alpha=0.05, opt_time=500.0, kappa=None, rho=None):
        super().__init__(StreamState(a, b), alpha)
        if rho is None and kappa is None:
            kappa = betabinom_kappa(alpha, opt_time)
        self.kappa, self.rho = kappa, rho

    def _interval(self, alpha):
        return beta_binomial_cs(self.state, alpha, rho=self.rho, kappa=self.kappa)

    def p_value(self, theta):
        st = self.state
        if st.t == 0 or not st.a < theta < st.b:
            return super().p_value(theta)
        g, h = theta - st.a, st.b - theta
        rho = self.rho if self.rho is not None else self.kappa * g * h
        lm = kernels.backend_module().log_mixture(2, st.sum_x - st.t * theta, g * h * st.t, g, h, rho - g * h)
        return min(1.0, math.exp(-lm)) if lm > -700 else 1.0


class BernoulliFamilyStrategy(Strategy):
    """Bernoulli exponential-family sequence with alpha split evenly over the two tails."""

    name = "bernoulli_family"

    def __init__(self, alpha=0.05, opt_time=500.0):
        super().__init__(StreamState(0.0, 1.0), alpha)
        self.kappa = betabinom_kappa(alpha, opt_time)

    def _interval(self, alpha):
        return bernoulli_expo_family_cs(self.state, alpha / 2, alpha / 2, kappa=self.kappa)


class PointwiseBernoulliStrategy(Strategy):
    """Fixed-time Chernoff interval; valid at each t but not uniformly."""

    name = "pointwise"
    uniform = False

    def __init__(self, a=0.0, b=1.0, alpha=0.05):
        super().__init__(StreamState(a, b), alpha)

    def _interval(self, alpha):
        st = self.state
        xbar = min(max(st.xbar, st.a), st.b)

        def rejects(mu):
            return pointwise_bernoulli_reject(st, mu, alpha)

        def edge(x_in, x_out):
            for _ in range(100):
                mid = 0.5 * (x_in + x_out)
                if mid in (x_in, x_out):
                    break
                if rejects(mid):
                    x_out = mid
                else:
                    x_in = mid
            return x_out

        eps = 1e-12 * (st.b - st.a)
        lo = edge(max(xbar, st.a + eps), st.a) if xbar > st.a + eps else st.a
        hi = edge(min(xbar, st.b - eps), st.b) if xbar < st.b - eps else st.b
        return CsInterval(st.t, lo, hi)


class VarianceStrategy(Strategy):
    """Sequence for sigma^2 of Gaussian data; each side gets alpha/2."""

    name = "variance"

    def __init__(self, alpha=0.05, opt_time=500.0):
        super().__init__(StreamState(), alpha)
        self.upper_b, self.lower_b = default_variance_boundaries(alpha / 2, opt_time)

    def update(self, x):
        return variance_cs_update(self.state, x, self.upper_b, self.lower_b)

    def _interval(self, alpha):
        up, lo = self.upper_b.with_alpha(alpha / 2), self.lower_b.with_alpha(alpha / 2)
        t = self.state.t - 1
        if t < 1:
            return CsInterval(self.state.t, 0.0, math.inf)
        v = 2.0 * t
        den = t - lo(v)
        return CsInterval(self.state.t, self.state.m2 / (t + up(v)),
                          self.state.m2 / den if den > 0 else math.inf)

    def interval(self, alpha=None):
        return self._interval(self.alpha if alpha is None else alpha)


STRATEGIES = {
    cls.name: cls for cls in (HoeffdingStrategy, BetaBinomialStrategy, EmpiricalBernsteinStrategy,
                              NaiveSNStrategy, PointwiseBernoulliStrategy, VarianceStrategy,
                              BernoulliFamilyStrategy)
}


def always_valid_p(stream: Iterable[float], theta_star: float, strategy: Strategy) -> Iterator[float]:
    """Running-min p-values for H0: theta = theta_star, one per observation."""
    if not strategy.uniform:
        raise UnsupportedStrategyError(f"{strategy.name} is not uniformly valid; its p-values are not always valid")
    best = 1.0
    for x in stream:
        strategy.update(x)
        best = min(best, strategy.p_value(theta_star))
        yield best
