"""Uniform boundaries: linear, stitched, conjugate and discrete mixtures, inverted stitching.

A uniform boundary u for a psi family satisfies P(exists t: S_t >= u(V_t)) <= alpha
for every sub-psi process (S_t) with variance process (V_t).  Every constructor
here returns an immutable :class:`UniformBoundary` that evaluates on scalars
or numpy arrays of intrinsic time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import kernels
from ._errors import ConvergenceError, DomainError
from ._parallel import chunked_apply
from .psi import PsiFamily, conversion_factor

__all__ = [
    "DiscreteMixtureParams",
    "ExponentialH",
    "HalfNormalDensity",
    "LILDensity",
    "MIXTURE_KINDS",
    "PolynomialH",
    "StitchParams",
    "TableH",
    "UniformBoundary",
    "boundary_from_config",
    "build_boundary",
    "calibrate_inverted_stitching",
    "discrete_mixture_boundary",
    "inverted_stitching_boundary",
    "inverted_stitching_prob",
    "lambda_bar_for_time",
    "linear_boundary",
    "mixture_boundary",
    "mixture_log_m",
    "stitched_boundary",
    "stitching_tail",
    "tune_rho_for_time",
]

MIXTURE_KINDS = {
    "normal2": 0,
    "normal1": 1,
    "betabinom2": 2,
    "betabinom1": 3,
    "gammaexp": 4,
    "gammapoisson": 5,
}
TWO_SIDED = {"normal2", "betabinom2"}


def _check_alpha(alpha: float, l0: float) -> None:
    if not (0.0 < alpha <= 1.0):
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not (l0 >= 1.0 and math.isfinite(l0)):
        raise DomainError(f"l0 must be a finite number >= 1, got {l0}")


@dataclass(frozen=True, eq=False)
class UniformBoundary:
    """An evaluable boundary v -> u(v) with crossing probability ``alpha``."""

    family: PsiFamily
    alpha: float
    l0: float
    kind: str
    params: Mapping[str, Any]
    _fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _rebuild: Callable[[float], "UniformBoundary"] | None = field(default=None, repr=False)
    log_m: Callable[[Any, Any], Any] | None = field(default=None, repr=False)
    v_max: float = math.inf
    two_sided: bool = False

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def __call__(self, v):
        arr = np.asarray(v, dtype=float)
        if np.any(~(arr >= 0)):
            raise DomainError("intrinsic time v must be >= 0")
        flat = np.ascontiguousarray(arr.reshape(-1))
        out = np.asarray(self._fn(flat), dtype=float).reshape(arr.shape)
        return float(out) if out.ndim == 0 else out

    def with_alpha(self, alpha: float) -> UniformBoundary:
        """The same construction at a different crossing probability."""
        if alpha == self.alpha:
            return self
        if self._rebuild is None:
            raise DomainError(f"{self.kind} boundary cannot be rebuilt at another alpha")
        return self._rebuild(alpha)

    @property
    def supports_alpha(self) -> bool:
        return self._rebuild is not None

    def rescaled(self, factor: float, family: PsiFamily, rows: Sequence[int] = ()) -> UniformBoundary:
        """The boundary v -> u(factor * v) attributed to ``family``."""
        base = self
        fn = base._fn
        log_m = base.log_m
        rebuild = None if base._rebuild is None else (
            lambda a: base.with_alpha(a).rescaled(factor, family, rows))
        return UniformBoundary(
            family=family,
            alpha=base.alpha,
            l0=base.l0,
            kind=base.kind,
            params={**base.params, "convert_to": family, "factor": factor, "rows": tuple(rows),
                    "source_family": base.family if "source_family" not in base.params
                    else base.params["source_family"]},
            _fn=lambda v: fn(factor * v),
            _rebuild=rebuild,
            log_m=None if log_m is None else (lambda s, v: log_m(s, factor * np.asarray(v))),
            v_max=base.v_max / factor,
            two_sided=base.two_sided,
        )

    def to_config(self) -> str:
        """Serialize to ``key=value`` lines readable by :func:`boundary_from_config`."""
        spec = dict(self.params.get("spec", {}))
        if not spec:
            raise DomainError(f"{self.kind} boundary has no serializable spec")
        spec["alpha"] = self.alpha
        spec["l0"] = self.l0
        if "convert_to" in self.params:
            spec["convert_to"] = _family_to_str(self.params["convert_to"])
        return "".join(f"{k}={_fmt(v)}\n" for k, v in spec.items())


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------- linear

def linear_boundary(family: PsiFamily, lam: float, alpha: float, l0: float = 1.0) -> UniformBoundary:
    """u(v) = log(l0/alpha)/lam + (psi(lam)/lam) v."""
    _check_alpha(alpha, l0)
    if not (0.0 < lam < family.lambda_max):
        raise DomainError(f"lambda must lie in (0, {family.lambda_max}), got {lam}")
    intercept = math.log(l0 / alpha) / lam
    slope = family.psi(lam) / lam

    return UniformBoundary(
        family=family, alpha=alpha, l0=l0, kind="linear",
        params={"lambda": lam, "intercept": intercept, "slope": slope,
                "spec": {"kind": "linear", "family": _family_to_str(family), "lambda": lam}},
        _fn=lambda v: intercept + slope * v,
        _rebuild=lambda a: linear_boundary(family, lam, a, l0),
    )


# ---------------------------------------------------------------- stitching

@dataclass(frozen=True)
class PolynomialH:
    """h(k) = (k + 1)^s zeta(s)."""

    s: float = 1.4

    def __post_init__(self):
        if not self.s > 1:
            raise DomainError(f"polynomial h needs s > 1, got {self.s}")

    def log_h(self, k, eta):
        return self.s * np.log1p(k) + math.log(kernels.riemann_zeta(self.s))

    def tail(self, k0: int, eta: float) -> float:
        return kernels.hurwitz_zeta(self.s, k0 + 1.0) / kernels.riemann_zeta(self.s)


@dataclass(frozen=True)
class ExponentialH:
    """h(k) = eta^(s k) / (1 - eta^(-s))."""

    s: float = 2.0

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError(f"exponential h needs s > 0, got {self.s}")

    def log_h(self, k, eta):
        return self.s * k * math.log(eta) - math.log(-math.expm1(-self.s * math.log(eta)))

    def tail(self, k0: int, eta: float) -> float:
        return eta ** (-self.s * k0)


@dataclass(frozen=True)
class TableH:
    """User-supplied increasing h with an optional tail bound K -> sum_{k>=K} 1/h(k)."""

    h: Callable[[float], float]
    tail_bound: Callable[[int], float] | None = None
    check_terms: int = 10_000

    def __post_init__(self):
        ks = np.arange(self.check_terms, dtype=float)
        vals = np.array([self.h(k) for k in ks], dtype=float)
        if np.any(~(vals > 0)) or np.any(np.diff(vals) < 0):
            raise DomainError("table h must be positive and increasing")
        total = float(np.sum(1.0 / vals))
        if self.tail_bound is not None:
            total += float(self.tail_bound(self.check_terms))
        if total > 1.0 + 1e-12:
            raise DomainError(f"sum of 1/h(k) must not exceed 1 (got at least {total:.6g})")

    def log_h(self, k, eta):
        k = np.asarray(k, dtype=float)
        return np.log(np.vectorize(self.h, otypes=[float])(k))

    def tail(self, k0: int, eta: float) -> float:
        if self.tail_bound is None:
            raise DomainError("stitching_tail needs a tail bound for a table h")
        return float(self.tail_bound(k0))


@dataclass(frozen=True)
class StitchParams:
    eta: float = 2.0
    m: float = 1.0
    c: float = 0.0
    h: PolynomialH | ExponentialH | TableH = field(default_factory=PolynomialH)

    def __post_init__(self):
        if not self.eta > 1:
            raise DomainError(f"eta must exceed 1, got {self.eta}")
        if not self.m > 0:
            raise DomainError(f"m must be positive, got {self.m}")
        if not self.c >= 0:
            raise DomainError(f"stitching needs c >= 0, got {self.c}")

    @property
    def k1(self) -> float:
        return (self.eta ** 0.25 + self.eta ** -0.25) / math.sqrt(2.0)

    @property
    def k2(self) -> float:
        return (math.sqrt(self.eta) + 1.0) / 2.0

    def ell(self, v, alpha: float, l0: float = 1.0):
        """l(v) = log h(log_eta(v/m)) + log(l0/alpha), for v >= m."""
        k = np.log(np.asarray(v, dtype=float) / self.m) / math.log(self.eta)
        return self.h.log_h(k, self.eta) + math.log(l0 / alpha)


def stitched_boundary(p: StitchParams, alpha: float, l0: float = 1.0) -> UniformBoundary:
    """u(v) = S_alpha(v v m), a sub-gamma(c) boundary."""
    _check_alpha(alpha, l0)
    k1, k2, c = p.k1, p.k2, p.c

    def fn(v):
        ve = np.maximum(v, p.m)
        ell = p.ell(ve, alpha, l0)
        return np.sqrt(k1 * k1 * ve * ell + (k2 * c * ell) ** 2) + c * k2 * ell

    spec = {"kind": _stitch_kind(p.h), "eta": p.eta, "m": p.m, "c": p.c}
    if isinstance(p.h, (PolynomialH, ExponentialH)):
        spec["s"] = p.h.s
    family = PsiFamily.gamma(c) if c > 0 else PsiFamily.normal()
    return UniformBoundary(
        family=family, alpha=alpha, l0=l0, kind="stitched",
        params={"stitch": p, "k1": k1, "k2": k2, "spec": spec},
        _fn=fn,
        _rebuild=lambda a: stitched_boundary(p, a, l0),
    )


def _stitch_kind(h) -> str:
    if isinstance(h, PolynomialH):
        return "stitch-poly"
    if isinstance(h, ExponentialH):
        return "stitch-exp"
    return "stitch-table"


def stitching_tail(p: StitchParams, alpha: float, v0: float) -> float:
    """Bound on P(exists t: V_t >= v0 and S_t >= S_alpha(V_t)).

    Equals alpha times sum_{k >= floor(log_eta(v0/m))} 1/h(k), where the h sum is
    normalised so that the full sum is at most one.
    """
    if not v0 >= p.m:
        raise DomainError(f"v0 must be at least m={p.m}, got {v0}")
    k0 = int(math.floor(math.log(v0 / p.m) / math.log(p.eta) + 1e-12))
    return alpha * p.h.tail(k0, p.eta)


# ---------------------------------------------------------------- conjugate mixtures

def _mixture_setup(kind: str, params: Mapping[str, float]):
    """Validate parameters; return (kernel code, (p0, p1, p2), family, bbar)."""
    if kind not in MIXTURE_KINDS:
        raise DomainError(f"unknown mixture kind {kind!r}; expected one of {sorted(MIXTURE_KINDS)}")
    code = MIXTURE_KINDS[kind]
    rho = float(params.get("rho", float("nan")))
    if not rho > 0:
        raise DomainError(f"{kind} mixture needs rho > 0, got {rho}")
    if kind.startswith("normal"):
        return code, (rho, 0.0, 0.0), PsiFamily.normal(), math.inf
    if kind.startswith("betabinom"):
        g, h = float(params["g"]), float(params["h"])
        if not (g > 0 and h > 0):
            raise DomainError(f"beta-binomial mixture needs g, h > 0, got g={g}, h={h}")
        if not rho > g * h:
            raise DomainError(f"beta-binomial mixture needs rho > g*h = {g * h}, got {rho}")
        return code, (g, h, rho - g * h), PsiFamily.bernoulli(g, h), 1.0 / g
    c = float(params.get("c", float("nan")))
    if not c > 0:
        raise DomainError(f"{kind} mixture needs c > 0, got {c}")
    family = PsiFamily.exponential(c) if kind == "gammaexp" else PsiFamily.poisson(c)
    return code, (rho, c, 0.0), family, math.inf


def mixture_log_m(kind: str, s, v, **params):
    """log m(s, v) for a conjugate mixture; scalars or broadcastable arrays."""
    code, p, _, _ = _mixture_setup(kind, params)
    s_arr, v_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(v, dtype=float))
    if np.any(~(v_arr >= 0)):
        raise DomainError("v must be >= 0")
    out = _log_m_batch(code, p, s_arr.reshape(-1), v_arr.reshape(-1)).reshape(s_arr.shape)
    if kind.startswith("gamma") and np.any(np.isnan(out)):
        raise DomainError(f"{kind} mixture needs s > -(v + rho)/c")
    return float(out) if out.ndim == 0 else out


def _log_m_batch(code, p, s, v):
    impl = kernels.backend_module()
    s = np.ascontiguousarray(s, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    out = np.empty(s.shape[0])
    impl.log_mixture_batch(code, p[0], p[1], p[2], s, v, out)
    return out


def mixture_boundary(kind: str, params: Mapping[str, float], alpha: float, l0: float = 1.0) -> UniformBoundary:
    """Boundary u(v) solving m(u(v), v) = l0/alpha.

    For the two-sided kinds the returned function is the upper boundary of a
    two-sided region holding with total probability alpha.  When the family's
    psi' is bounded (beta-binomial) the root is searched in [0, b_bar v] and
    b_bar v itself is returned when the mixture never reaches l0/alpha there.
    """
    _check_alpha(alpha, l0)
    params = dict(params)
    code, p, family, bbar = _mixture_setup(kind, params)
    log_thr = math.log(l0 / alpha)
    impl = kernels.backend_module()

    if kind == "normal2":
        rho = p[0]

        def fn(v):
            vr = v + rho
            return np.sqrt(vr * (2.0 * log_thr + np.log(vr / rho)))
    else:
        def solve(v):
            out = np.empty(v.shape[0])
            impl.mixture_root_batch(code, p[0], p[1], p[2], v, log_thr, bbar, out)
            return out

        def fn(v):
            return chunked_apply(solve, v, min_chunk=256)

    def log_m(s, v):
        s_arr, v_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(v, dtype=float))
        out = _log_m_batch(code, p, s_arr.reshape(-1), v_arr.reshape(-1)).reshape(s_arr.shape)
        return float(out) if out.ndim == 0 else out

    return UniformBoundary(
        family=family, alpha=alpha, l0=l0, kind=kind,
        params={**params, "b_bar": bbar, "spec": {"kind": kind, **params}},
        _fn=fn,
        _rebuild=lambda a: mixture_boundary(kind, params, a, l0),
        log_m=log_m,
        two_sided=kind in TWO_SIDED,
    )


def normal1_closed_form(v, rho: float, alpha: float, l0: float = 1.0):
    """Closed-form upper bound on the one-sided normal mixture boundary."""
    v = np.asarray(v, dtype=float)
    return np.sqrt(2.0 * (v + rho) * np.log(l0 / (2.0 * alpha) * np.sqrt((v + rho) / rho) + 1.0))


def betabinom_lower_boundary(u: UniformBoundary) -> UniformBoundary:
    """For a two-sided beta-binomial boundary, the magnitude of its lower branch.

    The region is -f_{h,g}(v) < S < f_{g,h}(v); this returns f_{h,g}.
    """
    if u.kind != "betabinom2":
        raise DomainError("lower branch is only defined for betabinom2")
    params = dict(u.params["spec"])
    params.pop("kind")
    params["g"], params["h"] = params["h"], params["g"]
    return mixture_boundary("betabinom2", params, u.alpha, u.l0)


# ---------------------------------------------------------------- tuning

def tune_rho_for_time(m: float, alpha: float, l0: float = 1.0) -> float:
    """rho making the two-sided normal mixture boundary tightest (u(v)/sqrt(v)) at v = m.

    For a one-sided bound pass ``2 * alpha``.
    """
    if not m > 0:
        raise DomainError(f"optimize-for time must be positive, got {m}")
    if not (0 < alpha < l0) or l0 < 1:
        raise DomainError(f"tuning needs 0 < alpha < l0, got alpha={alpha}, l0={l0}")
    x = -alpha * alpha / (math.e * l0 * l0)
    return m / (-kernels.lambert_w_m1(x) - 1.0)


def lambda_bar_for_time(m: float, alpha: float, c: float = 0.0) -> float:
    """Default discrete-mixture upper support point lambda_bar for optimize-for time m."""
    if not m > 0:
        raise DomainError(f"optimize-for time must be positive, got {m}")
    return 1.0 / (max(c, 0.0) + math.sqrt(m / (2.0 * math.log(1.0 / alpha))))


# ---------------------------------------------------------------- discrete mixtures

@dataclass(frozen=True)
class HalfNormalDensity:
    """Half-normal density with precision rho on lambda >= 0."""

    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise DomainError(f"half-normal density needs rho > 0, got {self.rho}")

    def __call__(self, lam, lambda_bar):
        return np.exp(self.log(lam, lambda_bar))

    def log(self, lam, lambda_bar):
        lam = np.asarray(lam, dtype=float)
        return math.log(2.0 * math.sqrt(self.rho / (2.0 * math.pi))) - 0.5 * self.rho * lam * lam

    def spec(self):
        return {"density": "half_normal", "rho": self.rho}


@dataclass(frozen=True)
class LILDensity:
    """f(lam) = (s-1) / (lam log^s(e lambda_bar / lam)) on (0, lambda_bar]."""

    s: float = 1.4

    def __post_init__(self):
        if not self.s > 1:
            raise DomainError(f"LIL density needs s > 1, got {self.s}")

    def __call__(self, lam, lambda_bar):
        return np.exp(self.log(lam, lambda_bar))

    def log(self, lam, lambda_bar):
        lam = np.asarray(lam, dtype=float)
        return math.log(self.s - 1.0) - np.log(lam) - self.s * np.log(np.log(math.e * lambda_bar / lam))

    def cdf(self, lam, lambda_bar):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(math.e * lambda_bar / lam) ** (1.0 - self.s)

    def spec(self):
        return {"density": "lil", "s": self.s}


@dataclass(frozen=True)
class DiscreteMixtureParams:
    density: Callable[[Any, float], Any]
    lambda_bar: float
    eta: float = 1.1

    def __post_init__(self):
        if not self.eta > 1:
            raise DomainError(f"eta must exceed 1, got {self.eta}")
        if not self.lambda_bar > 0:
            raise DomainError(f"lambda_bar must be positive, got {self.lambda_bar}")
        grid = self.lambda_bar * np.logspace(-12, 0, 201)
        vals = self.log_density(grid)
        if np.any(np.isnan(vals)) or np.any(vals == np.inf) or np.all(vals == -np.inf):
            raise DomainError("mixture density must be finite and positive on (0, lambda_bar]")
        rising = np.diff(vals) > 1e-12 * np.maximum(np.abs(vals[:-1]), 1.0)
        if np.any(rising):
            # Allowed only with a cdf to bound the total weight, and only if the
            # density is monotone below the rising stretch.
            if not hasattr(self.density, "cdf"):
                raise DomainError("mixture density must be nonincreasing on (0, lambda_bar]")
            if rising[0]:
                raise DomainError("mixture density must be nonincreasing near zero")

    def log_density(self, lam):
        lam = np.asarray(lam, dtype=float)
        if hasattr(self.density, "log"):
            return np.asarray(self.density.log(lam, self.lambda_bar), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(self.density(lam, self.lambda_bar), dtype=float))

    def support(self, n: int):
        """(lambda_k, log w_k) for k = 0..n-1."""
        k = np.arange(n, dtype=float)
        lam = self.lambda_bar * self.eta ** -(k + 0.5)
        top = self.lambda_bar * self.eta ** -k
        logw = (math.log(self.lambda_bar * (self.eta - 1.0)) + self.log_density(top)
                - (k + 1) * math.log(self.eta))
        if hasattr(self.density, "cdf"):
            # Terms past n sit where f is nonincreasing, so their weights total
            # at most the remaining mass F(lambda_bar / eta^n).
            rest = float(self.density.cdf(self.lambda_bar * self.eta ** -float(n), self.lambda_bar))
            total = float(np.sum(np.exp(logw))) + rest
            if total > 1.0:
                logw = logw - math.log(total)
        return lam, logw

    def kmax(self, v, alpha: float, c: float = 0.0):
        """Truncation index: terms k = 0..kmax are kept."""
        v = np.asarray(v, dtype=float)
        la = math.log(1.0 / alpha) if alpha < 1 else 1e-300
        arg = self.lambda_bar * (max(c, 0.0) + np.sqrt(5.0 * v / la))
        with np.errstate(divide="ignore"):
            k = np.ceil(np.log(np.maximum(arg, 1e-300)) / math.log(self.eta))
        return np.maximum(k, 0).astype(np.int64)


def discrete_mixture_boundary(p: DiscreteMixtureParams, family: PsiFamily, alpha: float,
                              l0: float = 1.0, kmax_scale: float = 1.0,
                              truncate: bool = False) -> UniformBoundary:
    """Boundary from a discrete mixture over lambda_k with weights w_k.

    Terms run up to the truncation index at v = 1e16 scaled by ``kmax_scale``.
    With ``truncate=True`` each v keeps only its own ``kmax(v)`` terms, which is
    faster but can be loose when the density is concentrated near zero.
    Dropping terms only lowers the mixture, so either choice stays valid.
    """
    _check_alpha(alpha, l0)
    if not p.lambda_bar < family.lambda_max:
        raise DomainError(f"lambda_bar must lie below lambda_max={family.lambda_max}")
    c = family.c if family.kind in ("gamma", "exponential", "poisson") else 0.0
    n_total = int(kmax_scale * p.kmax(1e16, alpha, c)) + 2
    lam, logw = p.support(n_total)
    psik = np.asarray(family.psi(lam), dtype=float)
    log_thr = math.log(l0 / alpha)
    bbar = family.b_bar
    impl = kernels.backend_module()

    def nterms(v):
        if not truncate:
            return np.full(np.shape(v), n_total, dtype=np.int64)
        k = p.kmax(v, alpha, c)
        return np.minimum(np.ceil(kmax_scale * k).astype(np.int64) + 1, n_total)

    def solve(v):
        out = np.empty(v.shape[0])
        impl.discrete_root_batch(lam, logw, psik, np.ascontiguousarray(nterms(v)), v, log_thr, bbar, out)
        return out

    def log_m(s, v):
        s_arr, v_arr = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(v, dtype=float))
        n = nterms(v_arr)
        out = np.empty(s_arr.shape)
        for idx in np.ndindex(s_arr.shape):
            out[idx] = impl.discrete_log_m(lam, logw, psik, int(n[idx]), float(s_arr[idx]), float(v_arr[idx]))
        return float(out) if out.ndim == 0 else out

    spec = {"kind": "discrete", "family": _family_to_str(family), "eta": p.eta,
            "lambda_bar": p.lambda_bar}
    if hasattr(p.density, "spec"):
        spec.update(p.density.spec())
    return UniformBoundary(
        family=family, alpha=alpha, l0=l0, kind="discrete",
        params={"mixture": p, "n_terms": n_total, "weight_sum": float(np.sum(np.exp(logw))), "spec": spec},
        _fn=lambda v: chunked_apply(solve, v, min_chunk=256),
        _rebuild=lambda a: discrete_mixture_boundary(p, family, a, l0, kmax_scale, truncate),
        log_m=log_m,
    )


# ---------------------------------------------------------------- inverted stitching

DEFAULT_ETA_GRID = tuple(float(x) for x in np.exp(np.linspace(math.log(1.1), math.log(6.0), 40)))


def _vectorized(g):
    def call(x):
        x = np.asarray(x, dtype=float)
        try:
            out = np.asarray(g(x), dtype=float)
            if out.shape == x.shape:
                return out
        except Exception:
            pass
        return np.array([float(g(float(xi))) for xi in x.reshape(-1)]).reshape(x.shape)
    return call


def _check_concave(g, v_max: float) -> None:
    x = np.logspace(0.0, math.log10(v_max), 201)
    gx = g(x)
    if np.any(~(gx >= 0)) or np.any(~np.isfinite(gx)):
        raise DomainError("inverted stitching needs a finite nonnegative g on [1, v_max]")
    mid = g(0.5 * (x[:-1] + x[1:]))
    avg = 0.5 * (gx[:-1] + gx[1:])
    if np.any(mid < avg - 1e-12 * np.abs(avg)):
        raise DomainError("inverted stitching needs a concave g (midpoint test failed)")


def inverted_stitching_prob(g: Callable, v_max: float, eta_grid: Sequence[float] | None = None,
                            l0: float = 1.0, check_concavity: bool = True) -> float:
    """Crossing-probability bound for the boundary g(1 v v) on [0, v_max].

    Minimises the epoch sum over ``eta_grid`` (default: 40 log-spaced values in
    (1.1, 6]); the result is clipped to 1.
    """
    if not v_max > 1:
        raise DomainError(f"v_max must exceed 1, got {v_max}")
    gv = _vectorized(g)
    if check_concavity:
        _check_concave(gv, v_max)
    grid = DEFAULT_ETA_GRID if eta_grid is None else tuple(eta_grid)
    best = math.inf
    for eta in grid:
        if not eta > 1:
            raise DomainError(f"eta values must exceed 1, got {eta}")
        kmax = int(math.ceil(math.log(v_max) / math.log(eta)))
        x = eta ** np.arange(kmax + 1, dtype=float)
        gk = gv(x)
        gk1 = gv(eta * x)
        expo = -2.0 * (gk1 - gk) * (eta * gk - gk1) / (x * (eta - 1.0) ** 2)
        best = min(best, float(np.sum(np.exp(expo))))
    return min(1.0, l0 * best)


def inverted_stitching_boundary(g: Callable, v_max: float, eta_grid: Sequence[float] | None = None,
                                l0: float = 1.0) -> UniformBoundary:
    """The sub-Gaussian boundary g(1 v v) up to v_max (infinite beyond), with alpha computed."""
    alpha = inverted_stitching_prob(g, v_max, eta_grid, l0)
    gv = _vectorized(g)

    def fn(v):
        out = gv(np.maximum(v, 1.0))
        return np.where(v <= v_max, out, np.inf)

    return UniformBoundary(
        family=PsiFamily.normal(), alpha=alpha, l0=l0, kind="inverted",
        params={"g": g, "eta_grid": eta_grid},
        _fn=fn, v_max=v_max,
    )


def lil_shape(A: float, C: float) -> Callable:
    """g(v) = A sqrt(v (log log(e v) + C))."""
    def g(v):
        v = np.asarray(v, dtype=float)
        return A * np.sqrt(v * (np.log(np.log(math.e * v)) + C))
    return g


def calibrate_inverted_stitching(alpha: float, v_max: float = 1e20, A: float = 1.7,
                                 eta_grid: Sequence[float] | None = None, l0: float = 1.0) -> UniformBoundary:
    """Inverted-stitching boundary A sqrt(v (log log(ev) + C)) with C chosen so the bound equals alpha."""
    _check_alpha(alpha, l0)
    if alpha >= 1.0:
        raise DomainError("calibration needs alpha < 1")

    def prob(C):
        return inverted_stitching_prob(lil_shape(A, C), v_max, eta_grid, l0, check_concavity=False)

    lo, hi = 0.0, 1.0
    if prob(lo) <= alpha:
        C = lo
    else:
        while prob(hi) > alpha:
            lo, hi = hi, 2 * hi
            if hi > 1e6:
                raise ConvergenceError(f"cannot reach alpha={alpha} with A={A}")
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if prob(mid) > alpha:
                lo = mid
            else:
                hi = mid
        C = hi
    g = lil_shape(A, C)
    base = inverted_stitching_boundary(g, v_max, eta_grid, l0)
    return UniformBoundary(
        family=base.family, alpha=alpha, l0=l0, kind="inverted",
        params={"A": A, "C": C, "bound": base.alpha, "g": g,
                "spec": {"kind": "inverted-lil", "A": A, "v_max": v_max}},
        _fn=base._fn,
        _rebuild=lambda a: calibrate_inverted_stitching(a, v_max, A, eta_grid, l0),
        v_max=v_max,
    )


# ---------------------------------------------------------------- config

def _family_to_str(f: PsiFamily) -> str:
    if f.kind == "bernoulli":
        return f"bernoulli:{f.g!r}:{f.h!r}"
    if f.kind == "normal":
        return "normal"
    return f"{f.kind}:{f.c!r}"


def family_from_str(text: str) -> PsiFamily:
    """Parse ``normal``, ``gamma:C``, ``poisson:C``, ``exponential:C`` or ``bernoulli:G:H``."""
    parts = text.strip().lower().split(":")
    name = parts[0]
    try:
        if name == "normal" and len(parts) == 1:
            return PsiFamily.normal()
        if name == "bernoulli" and len(parts) == 3:
            return PsiFamily.bernoulli(float(parts[1]), float(parts[2]))
        if name in ("gamma", "poisson", "exponential") and len(parts) == 2:
            return PsiFamily(name, c=float(parts[1]))
    except ValueError as exc:
        raise DomainError(f"bad family spec {text!r}: {exc}") from None
    raise DomainError(f"bad family spec {text!r}")


def _num(spec, key, default=None):
    if key not in spec or spec[key] is None:
        if default is None:
            raise DomainError(f"boundary spec needs {key!r}")
        return default
    try:
        return float(spec[key])
    except (TypeError, ValueError):
        raise DomainError(f"{key} must be numeric, got {spec[key]!r}") from None


def build_boundary(spec: Mapping[str, Any]) -> UniformBoundary:
    """Construct a boundary from a flat key/value spec (the CLI and config format).

    Keys: ``kind`` (linear, stitch-poly, stitch-exp, normal2, normal1, betabinom2,
    betabinom1, gammaexp, gammapoisson, discrete, inverted-lil), ``alpha``,
    ``l0``, and per kind ``family``, ``lambda``, ``eta``, ``s``, ``m``, ``c``,
    ``rho`` or ``opt_time``, ``g``, ``h``, ``density``, ``lambda_bar``, ``A``,
    ``v_max``.  ``convert_to`` re-targets the result to another psi family.
    """
    spec = {k: v for k, v in spec.items() if v is not None}
    kind = str(spec.get("kind", "")).lower()
    alpha = _num(spec, "alpha")
    l0 = _num(spec, "l0", 1.0)
    _check_alpha(alpha, l0)
    if "rho" in spec and "opt_time" in spec:
        raise DomainError("give either rho or opt_time, not both")

    if kind == "linear":
        u = linear_boundary(family_from_str(str(spec.get("family", "normal"))), _num(spec, "lambda"), alpha, l0)
    elif kind in ("stitch-poly", "stitch-exp"):
        s_default = 1.4 if kind == "stitch-poly" else 2.0
        h = PolynomialH(_num(spec, "s", s_default)) if kind == "stitch-poly" else ExponentialH(_num(spec, "s", s_default))
        p = StitchParams(eta=_num(spec, "eta", 2.0), m=_num(spec, "m", 1.0), c=_num(spec, "c", 0.0), h=h)
        u = stitched_boundary(p, alpha, l0)
    elif kind in MIXTURE_KINDS:
        params = {}
        if "opt_time" in spec:
            a_tune = alpha if kind in TWO_SIDED else 2 * alpha
            params["rho"] = tune_rho_for_time(_num(spec, "opt_time"), a_tune, l0)
        else:
            params["rho"] = _num(spec, "rho")
        if kind.startswith("betabinom"):
            params["g"], params["h"] = _num(spec, "g"), _num(spec, "h")
            if "opt_time" in spec:
                params["rho"] *= params["g"] * params["h"]
        if kind.startswith("gamma"):
            params["c"] = _num(spec, "c")
        u = mixture_boundary(kind, params, alpha, l0)
    elif kind == "discrete":
        family = family_from_str(str(spec.get("family", "normal")))
        c = family.c if family.kind in ("gamma", "exponential", "poisson") else 0.0
        density_name = str(spec.get("density", "lil")).lower()
        if "lambda_bar" in spec:
            lam_bar = _num(spec, "lambda_bar")
        else:
            lam_bar = lambda_bar_for_time(_num(spec, "opt_time", 1.0), alpha, c)
        if density_name == "lil":
            density = LILDensity(_num(spec, "s", 1.4))
        elif density_name in ("half_normal", "half-normal"):
            if "rho" in spec:
                rho = _num(spec, "rho")
            else:
                rho = tune_rho_for_time(_num(spec, "opt_time", 1.0), 2 * alpha, l0)
            density = HalfNormalDensity(rho)
        else:
            raise DomainError(f"unknown density {density_name!r}")
        p = DiscreteMixtureParams(density=density, lambda_bar=lam_bar, eta=_num(spec, "eta", 1.1))
        u = discrete_mixture_boundary(p, family, alpha, l0)
    elif kind == "inverted-lil":
        u = calibrate_inverted_stitching(alpha, _num(spec, "v_max", 1e20), _num(spec, "A", 1.7), l0=l0)
    else:
        raise DomainError(
            f"unknown boundary kind {kind!r}; expected linear, stitch-poly, stitch-exp, "
            f"{', '.join(MIXTURE_KINDS)}, discrete or inverted-lil")

    if "convert_to" in spec:
        target = family_from_str(str(spec["convert_to"]))
        row = int(spec["row"]) if "row" in spec else None
        factor, rows = conversion_factor(u.family, target, row=row)
        u = u.rescaled(factor, target, rows)
    return u


def parse_config(text: str) -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {n}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def boundary_from_config(text: str) -> UniformBoundary:
    return build_boundary(parse_config(text))
