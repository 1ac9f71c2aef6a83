"""Seeded Monte Carlo scenarios for coverage and crossing checks.

Every replication draws from its own counter-based generator keyed by
(seed, rep), so results do not depend on how replications are scheduled.
Replications run in fixed-size blocks on a thread pool and are reduced in
replication order.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from ._errors import DomainError
from ._parallel import thread_count
from .boundaries import (
    DiscreteMixtureParams,
    LILDensity,
    StitchParams,
    UniformBoundary,
    calibrate_inverted_stitching,
    discrete_mixture_boundary,
    lambda_bar_for_time,
    linear_boundary,
    mixture_boundary,
    stitched_boundary,
    tune_rho_for_time,
)
from .confseq import betabinom_kappa, default_variance_boundaries, empirical_bernstein_boundary, hoeffding_boundary
from .matrix import covariance_boundary
from .psi import PsiFamily

__all__ = [
    "Law",
    "PRESETS",
    "Scenario",
    "SimReport",
    "crossing_probability_mc",
    "parse_law",
    "rep_rng",
    "run_scenario",
]

BLOCK = 25
GRID_POINTS = 50
OPT_TIME = 500.0


def rep_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent generator for replication ``rep`` of a run seeded with ``seed``."""
    if not 0 <= seed < 2**64:
        raise DomainError(f"seed must fit in 64 bits, got {seed}")
    return np.random.Generator(np.random.Philox(key=(rep << 64) | seed))


# ---------------------------------------------------------------- data laws

THREE_POINT = (np.array([-1.408, 1.0, 20.0]), np.array([0.495, 0.495, 0.01]))


@dataclass(frozen=True)
class Law:
    name: str
    params: tuple = ()

    @property
    def label(self) -> str:
        return f"{self.name}({','.join(f'{p:g}' for p in self.params)})" if self.params else self.name

    @property
    def support(self) -> tuple[float, float]:
        if self.name == "bernoulli":
            return 0.0, 1.0
        if self.name == "rademacher":
            return -1.0, 1.0
        if self.name == "three_point":
            return float(THREE_POINT[0].min()), float(THREE_POINT[0].max())
        return -math.inf, math.inf

    @property
    def mean(self) -> float:
        if self.name == "bernoulli":
            return self.params[0]
        if self.name == "three_point":
            return float(THREE_POINT[0] @ THREE_POINT[1])
        if self.name == "normal":
            return self.params[0]
        return 0.0

    @property
    def var(self) -> float:
        if self.name == "bernoulli":
            p = self.params[0]
            return p * (1 - p)
        if self.name == "three_point":
            return float((THREE_POINT[0] - self.mean) ** 2 @ THREE_POINT[1])
        if self.name == "normal":
            return self.params[1]
        return 1.0

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.name == "bernoulli":
            return (rng.random(n) < self.params[0]).astype(float)
        if self.name == "rademacher":
            return np.where(rng.random(n) < 0.5, -1.0, 1.0)
        if self.name == "three_point":
            return THREE_POINT[0][np.searchsorted(np.cumsum(THREE_POINT[1]), rng.random(n), side="right")]
        if self.name == "normal":
            return self.params[0] + math.sqrt(self.params[1]) * rng.standard_normal(n)
        if self.name == "gaussian_increments":
            return rng.standard_normal(n)
        if self.name == "centered_bernoulli":
            p = self.params[0]
            return (rng.random(n) < p) - p
        raise DomainError(f"law {self.name} has no scalar sampler")


LAWS = {"rademacher": 0, "bernoulli": 1, "three_point": 0, "normal": 2, "ate_trial": 0,
        "covariance_2d": 0, "gaussian_increments": 0, "centered_bernoulli": 1}


def parse_law(text: str) -> Law:
    """Parse ``name`` or ``name(p1,p2)``."""
    m = re.fullmatch(r"\s*([a-z_0-9]+)\s*(?:\(([^)]*)\))?\s*", text)
    if not m or m.group(1) not in LAWS:
        raise DomainError(f"unknown data law {text!r}; expected one of {sorted(LAWS)}")
    name = m.group(1)
    params = tuple(float(p) for p in m.group(2).split(",")) if m.group(2) else ()
    if len(params) != LAWS[name]:
        raise DomainError(f"law {name} takes {LAWS[name]} parameters, got {len(params)}")
    if name in ("bernoulli", "centered_bernoulli") and not 0 < params[0] < 1:
        raise DomainError(f"bernoulli parameter must lie in (0, 1), got {params[0]}")
    if name == "normal" and not params[1] > 0:
        raise DomainError(f"normal variance must be positive, got {params[1]}")
    return Law(name, params)


# ---------------------------------------------------------------- boundary evaluation

class _Lookup:
    """Decides |s| >= u(v) for many (s, v) with few exact boundary evaluations.

    For nondecreasing u, u(v_i) <= u(v) <= u(v_{i+1}) on a tabulated grid; only
    pairs falling between the two bracket values are evaluated exactly.
    """

    def __init__(self, u: UniformBoundary, v_max: float, n: int = 4096):
        v_max = max(v_max, 1.0)
        self.u = u
        self.grid = np.concatenate([[0.0], np.logspace(-6, math.log10(v_max) + 1e-9, n)])
        self.vals = u(self.grid)

    def crosses(self, s: np.ndarray, v: np.ndarray) -> np.ndarray:
        s = np.abs(s)
        idx = np.clip(np.searchsorted(self.grid, v, side="right"), 1, len(self.grid) - 1)
        lo, hi = self.vals[idx - 1], self.vals[idx]
        out = s >= hi
        amb = (s >= lo) & ~out
        if np.any(amb):
            out[amb] = s[amb] >= self.u(v[amb])
        return out


def _first_true(mask: np.ndarray, none: int) -> np.ndarray:
    """Index (1-based time) of the first True per row, ``none`` when absent."""
    hit = mask.any(axis=1)
    first = mask.argmax(axis=1) + 1
    return np.where(hit, first, none)


# ---------------------------------------------------------------- scenario types

@dataclass(frozen=True)
class Scenario:
    name: str
    data_law: str
    strategies: tuple[str, ...]
    horizon: int = 10_000
    reps: int = 1000
    seed: int = 0
    alpha: float = 0.05

    def __post_init__(self):
        if self.horizon < 1 or self.reps < 1:
            raise DomainError("horizon and reps must be at least 1")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        law = parse_law(self.data_law)
        known = _strategies_for(law)
        bad = [s for s in self.strategies if s not in known]
        if bad:
            raise DomainError(f"unknown strategies {bad} for law {law.name}; expected some of {sorted(known)}")


@dataclass
class SimReport:
    scenario: str
    t_grid: np.ndarray
    reps: int
    rows: dict = field(default_factory=dict)

    def cum_miscoverage(self, strategy: str) -> np.ndarray:
        return self.rows[strategy][0]

    def final_miscoverage(self, strategy: str) -> float:
        return float(self.rows[strategy][0][-1])

    def mean_width(self, strategy: str) -> np.ndarray:
        return self.rows[strategy][2]

    def to_table(self, sep: str = ",", digits: int = 10) -> str:
        lines = [sep.join(["scenario", "strategy", "t", "cum_miscoverage", "mc_stderr", "mean_width"])]
        for name, (miss, se, width) in self.rows.items():
            for t, m, s, w in zip(self.t_grid, miss, se, width):
                lines.append(sep.join([self.scenario, name, str(int(t)),
                                       f"{m:.{digits}g}", f"{s:.{digits}g}", f"{w:.{digits}g}"]))
        return "\n".join(lines) + "\n"


def t_grid(horizon: int, points: int = GRID_POINTS) -> np.ndarray:
    g = np.unique(np.round(np.logspace(0, math.log10(horizon), points)).astype(int))
    return g


# ---------------------------------------------------------------- strategy kernels
# Each kernel maps a block of paths (R x T) to (first miss time, widths at grid).

def _mean_kernels(law: Law, alpha: float, T: int):
    a, b = law.support
    mu = law.mean
    ks: dict[str, Callable] = {}
    t = np.arange(1, T + 1, dtype=float)
    bounded = math.isfinite(a) and math.isfinite(b)

    def prefix_pred(x):
        start = 0.5 * (a + b) if bounded else 0.0
        csum = np.cumsum(x, axis=1)
        prev = np.empty_like(x)
        prev[:, 0] = start
        prev[:, 1:] = csum[:, :-1] / t[:-1]
        return prev

    if bounded:
        hb = hoeffding_boundary(a, b, alpha, OPT_TIME)
        hu = hb((b - a) ** 2 * t / 4.0)

        def hoeffding(x, grid):
            s = np.cumsum(x - mu, axis=1)
            return _first_true(np.abs(s) >= hu, T + 1), np.broadcast_to(2 * hu[grid - 1] / t[grid - 1], (x.shape[0], grid.size))
        ks["hoeffding"] = hoeffding

        eb = empirical_bernstein_boundary(b - a, alpha / 2, opt_var=law.var * OPT_TIME)
        eb_look = _Lookup(eb, (b - a) ** 2 * T)

        def empirical_bernstein(x, grid):
            s = np.cumsum(x - mu, axis=1)
            v = np.cumsum((x - prefix_pred(x)) ** 2, axis=1)
            miss = eb_look.crosses(s.ravel(), v.ravel()).reshape(s.shape)
            w = 2 * eb(v[:, grid - 1]) / t[grid - 1]
            return _first_true(miss, T + 1), w
        ks["empirical_bernstein"] = empirical_bernstein

        kappa = betabinom_kappa(alpha, OPT_TIME)
        g, h = mu - a, b - mu
        impl = kernels.backend_module()
        thr = math.log(1.0 / alpha)

        def beta_binomial(x, grid):
            s = np.ascontiguousarray(np.cumsum(x - mu, axis=1).ravel())
            v = np.ascontiguousarray(np.broadcast_to(g * h * t, x.shape).ravel())
            lm = np.empty(s.shape[0])
            impl.log_mixture_batch(2, g, h, (kappa - 1) * g * h, s, v, lm)
            miss = (lm >= thr).reshape(x.shape)
            sums = np.cumsum(x, axis=1)[:, grid - 1]
            w = np.empty(sums.shape)
            for i in range(sums.shape[0]):
                for j, tj in enumerate(grid):
                    lo, hi = impl.betabinom_interval(float(sums[i, j]), float(tj), a, b, kappa, 1, 0,
                                                     thr, 0.0, 512)
                    w[i, j] = hi - lo
            return _first_true(miss, T + 1), w
        ks["beta_binomial"] = beta_binomial

        def pointwise(x, grid):
            q = (np.cumsum(x, axis=1) / t - a) / (b - a)
            p0 = (mu - a) / (b - a)
            lthr = math.log(2.0 / alpha)
            miss = t * _kl(q, p0) >= lthr
            qg = q[:, grid - 1]
            tg = t[grid - 1]
            lo = _kl_edge(qg, tg, lthr, np.zeros_like(qg))
            hi = _kl_edge(qg, tg, lthr, np.ones_like(qg))
            return _first_true(miss, T + 1), (hi - lo) * (b - a)
        ks["pointwise"] = pointwise

    nb = mixture_boundary("normal2", {"rho": tune_rho_for_time(law.var * OPT_TIME, alpha)}, alpha)
    nb_look = _Lookup(nb, (b - a) ** 2 * T if bounded else 100.0 * law.var * T)

    def naive_sn(x, grid):
        s = np.cumsum(x - mu, axis=1)
        v = np.cumsum((x - prefix_pred(x)) ** 2, axis=1)
        miss = nb_look.crosses(s.ravel(), v.ravel()).reshape(s.shape)
        return _first_true(miss, T + 1), 2 * nb(v[:, grid - 1]) / t[grid - 1]
    ks["naive_sn"] = naive_sn

    if law.name == "rademacher":
        nm = mixture_boundary("normal2", {"rho": tune_rho_for_time(OPT_TIME, alpha)}, alpha)
        nu = nm(t)

        def normal_mixture(x, grid):
            s = np.cumsum(x, axis=1)
            return _first_true(np.abs(s) >= nu, T + 1), np.broadcast_to(2 * nu[grid - 1] / t[grid - 1], (x.shape[0], grid.size))
        ks["normal_mixture"] = normal_mixture

        z = _normal_quantile(1 - alpha / 2)

        # fixed-time interval z sqrt(V_t) with the known unit variance
        cr = z * np.sqrt(t)

        def clt(x, grid):
            s = np.cumsum(x, axis=1)
            return _first_true(np.abs(s) >= cr, T + 1), np.broadcast_to(2 * cr[grid - 1] / t[grid - 1], (x.shape[0], grid.size))
        ks["clt"] = clt

    if law.name == "normal":
        up, lo = default_variance_boundaries(alpha / 2, OPT_TIME)
        tv = t[:-1]
        uu, ul = up(2 * tv), lo(2 * tv)
        sigma2 = law.var

        def variance(x, grid):
            xs = x - x[:, :1]
            n = t
            q = np.cumsum(xs * xs, axis=1) - np.cumsum(xs, axis=1) ** 2 / n
            q = np.maximum(q[:, 1:], 0.0)
            dev = q / sigma2 - tv
            miss = np.zeros(x.shape, dtype=bool)
            miss[:, 1:] = (dev >= uu) | (-dev >= ul)
            lo_end = q / (tv + uu)
            den = tv - ul
            hi_end = np.where(den > 0, q / np.where(den > 0, den, 1.0), np.inf)
            width = np.full((x.shape[0], grid.size), np.inf)
            sel = grid >= 2
            width[:, sel] = (hi_end - lo_end)[:, grid[sel] - 2]
            return _first_true(miss, T + 1), width
        ks["variance"] = variance
    return ks


def _kl(q, p):
    q = np.clip(q, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(q > 0, q * np.log(q / p), 0.0)
        b = np.where(q < 1, (1 - q) * np.log((1 - q) / (1 - p)), 0.0)
    return a + b


def _kl_edge(q, t, thr, out_end, iters: int = 80):
    """Vectorized bisection for the point between q and out_end where t KL(q || p) = thr."""
    inn = np.clip(q, 0.0, 1.0).copy()
    out = out_end.copy()
    rej_end = t * _kl(q, np.clip(out_end, 1e-300, 1 - 1e-16)) >= thr
    for _ in range(iters):
        mid = 0.5 * (inn + out)
        pm = np.clip(mid, 1e-300, 1 - 1e-16)
        rej = t * _kl(q, pm) >= thr
        out = np.where(rej, mid, out)
        inn = np.where(rej, inn, mid)
    return np.where(rej_end, out, out_end)


def _normal_quantile(p: float) -> float:
    lo, hi = -40.0, 40.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if kernels.std_normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def crossing_boundaries(alpha: float, opt_time: float = OPT_TIME) -> dict[str, UniformBoundary]:
    """One-sided sub-Gaussian boundaries used by the Gaussian-increment scenario."""
    N = PsiFamily.normal()
    return {
        "linear": linear_boundary(N, 1.0, alpha),
        "stitched": stitched_boundary(StitchParams(eta=2.0, m=1.0), alpha),
        "normal_mixture": mixture_boundary("normal1", {"rho": tune_rho_for_time(opt_time, 2 * alpha)}, alpha),
        "discrete_mixture": discrete_mixture_boundary(
            DiscreteMixtureParams(LILDensity(1.4), lambda_bar_for_time(opt_time, alpha), 1.1), N, alpha),
        "inverted_stitching": calibrate_inverted_stitching(alpha),
    }


def _crossing_kernels(alpha: float, T: int):
    t = np.arange(1, T + 1, dtype=float)
    ks = {}
    for name, u in crossing_boundaries(alpha).items():
        ut = u(t)

        def kern(x, grid, ut=ut):
            s = np.cumsum(x, axis=1)
            return _first_true(s >= ut, T + 1), np.broadcast_to(ut[grid - 1] / t[grid - 1], (x.shape[0], grid.size))
        ks[name] = kern
    return ks


ATE_RHO = 12.6
ATE_P = 0.5


def _ate_draw(rng, T):
    y0 = (rng.random(T) < 0.5).astype(float)
    xi = (rng.random(T) < 0.2).astype(float)
    z = (rng.random(T) < ATE_P).astype(float)
    return np.stack([y0, np.maximum(xi, y0), z])


def _ate_kernels(alpha: float, T: int):
    u = mixture_boundary("gammaexp", {"rho": ATE_RHO, "c": 2.0 / min(ATE_P, 1 - ATE_P)}, alpha / 2)
    look = _Lookup(u, T * 4.0 / (ATE_P * (1 - ATE_P)) ** 2)
    t = np.arange(1, T + 1, dtype=float)

    def ate(block, grid):
        y0, y1, z = block[:, 0], block[:, 1], block[:, 2]
        y = np.where(z == 1, y1, y0)
        pred = []
        for arm in (0, 1):
            hit = (z == arm).astype(float)
            n = np.cumsum(hit, axis=1) - hit
            sm = np.cumsum(hit * y, axis=1) - hit * y
            pred.append(np.where(n > 0, sm / np.maximum(n, 1), 0.5))
        w = (z - ATE_P) / (ATE_P * (1 - ATE_P))
        resid = y - np.where(z == 1, pred[1], pred[0])
        x = pred[1] - pred[0] + w * resid
        v = np.cumsum((w * resid) ** 2, axis=1)
        s = np.cumsum(x - (y1 - y0), axis=1)
        miss = look.crosses(s.ravel(), v.ravel()).reshape(s.shape)
        return _first_true(miss, T + 1), 2 * u(v[:, grid - 1]) / t[grid - 1]
    return {"ate": ate}


COV_POINTS = np.array([[math.sqrt(2), math.sqrt(2)], [-math.sqrt(2), -math.sqrt(2)],
                       [1 / math.sqrt(2), -1 / math.sqrt(2)], [-1 / math.sqrt(2), 1 / math.sqrt(2)]])
COV_SIGMA = np.array([[5.0, 3.0], [3.0, 5.0]]) / 4.0
COV_B = 4.0


def _cov_draw(rng, T):
    pts = COV_POINTS[rng.integers(0, 4, T)]
    return pts.T.copy()


def _sym2_norm(p, q, r):
    return np.abs(0.5 * (p + r)) + np.sqrt((0.5 * (p - r)) ** 2 + q * q)


def _cov_kernels(alpha: float, T: int):
    u = covariance_boundary(COV_B, 2, alpha)
    t = np.arange(1, T + 1, dtype=float)
    sig_norm = float(np.linalg.eigvalsh(COV_SIGMA).max())
    rad = u(COV_B * t * sig_norm) / t

    def covariance(block, grid):
        x1, x2 = block[:, 0], block[:, 1]
        p = np.cumsum(x1 * x1, axis=1) / t - COV_SIGMA[0, 0]
        q = np.cumsum(x1 * x2, axis=1) / t - COV_SIGMA[0, 1]
        r = np.cumsum(x2 * x2, axis=1) / t - COV_SIGMA[1, 1]
        miss = _sym2_norm(p, q, r) >= rad
        return _first_true(miss, T + 1), np.broadcast_to(2 * rad[grid - 1], (block.shape[0], grid.size))
    return {"covariance": covariance}


def _strategies_for(law: Law) -> set[str]:
    if law.name == "gaussian_increments":
        return {"linear", "stitched", "normal_mixture", "discrete_mixture", "inverted_stitching"}
    if law.name == "ate_trial":
        return {"ate"}
    if law.name == "covariance_2d":
        return {"covariance"}
    names = {"naive_sn"}
    a, b = law.support
    if math.isfinite(a):
        names |= {"hoeffding", "empirical_bernstein", "beta_binomial", "pointwise"}
    if law.name == "rademacher":
        names |= {"normal_mixture", "clt"}
    if law.name == "normal":
        names |= {"variance"}
    return names


def _setup(sc: Scenario):
    law = parse_law(sc.data_law)
    T = sc.horizon
    if law.name == "gaussian_increments":
        return law.draw, _crossing_kernels(sc.alpha, T)
    if law.name == "ate_trial":
        return _ate_draw, _ate_kernels(sc.alpha, T)
    if law.name == "covariance_2d":
        return _cov_draw, _cov_kernels(sc.alpha, T)
    return law.draw, _mean_kernels(law, sc.alpha, T)


def _run_blocks(n_reps: int, work: Callable[[int, int], object]) -> list:
    starts = list(range(0, n_reps, BLOCK))
    jobs = [(s, min(s + BLOCK, n_reps)) for s in starts]
    workers = min(thread_count(), len(jobs))
    if workers <= 1:
        return [work(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: work(*j), jobs))


def run_scenario(sc: Scenario) -> SimReport:
    draw, kernels_ = _setup(sc)
    T = sc.horizon
    grid = t_grid(T)
    names = list(sc.strategies)

    def work(r0, r1):
        data = np.stack([draw(rep_rng(sc.seed, r), T) for r in range(r0, r1)])
        return {n: kernels_[n](data, grid) for n in names}

    parts = _run_blocks(sc.reps, work)
    report = SimReport(sc.name, grid, sc.reps)
    for n in names:
        first = np.concatenate([p[n][0] for p in parts])
        widths = np.concatenate([np.asarray(p[n][1]) for p in parts])
        miss = (first[None, :] <= grid[:, None]).mean(axis=1)
        se = np.sqrt(miss * (1 - miss) / sc.reps)
        report.rows[n] = (miss, se, widths.mean(axis=0))
    return report


def crossing_probability_mc(boundary: UniformBoundary, process_law: str, T: int, R: int,
                            seed: int = 0, variance: float | None = None) -> tuple[float, float]:
    """Fraction of R paths with S_t >= u(V_t) for some t <= T, and its standard error.

    Supported laws have deterministic V_t = variance * t: ``gaussian_increments``
    and ``rademacher`` (variance 1) and ``centered_bernoulli(p)`` (p(1-p)).
    """
    law = parse_law(process_law)
    if law.name not in ("gaussian_increments", "rademacher", "centered_bernoulli"):
        raise DomainError(f"crossing MC needs a law with deterministic variance process, got {law.name}")
    if variance is None:
        variance = law.params[0] * (1 - law.params[0]) if law.name == "centered_bernoulli" else 1.0
    u = boundary(variance * np.arange(1, T + 1, dtype=float))

    def work(r0, r1):
        s = np.cumsum(np.stack([law.draw(rep_rng(seed, r), T) for r in range(r0, r1)]), axis=1)
        return int(np.count_nonzero((s >= u).any(axis=1)))

    hits = sum(_run_blocks(R, work))
    rate = hits / R
    return rate, math.sqrt(rate * (1 - rate) / R)


MEAN_STRATEGIES = ("hoeffding", "beta_binomial", "empirical_bernstein", "naive_sn", "pointwise")

PRESETS = {
    "bernoulli05": Scenario("bernoulli05", "bernoulli(0.5)", MEAN_STRATEGIES),
    "bernoulli001": Scenario("bernoulli001", "bernoulli(0.01)", MEAN_STRATEGIES),
    "three_point": Scenario("three_point", "three_point", MEAN_STRATEGIES),
    "rademacher": Scenario("rademacher", "rademacher", ("normal_mixture", "clt")),
    "gaussian_crossing": Scenario("gaussian_crossing", "gaussian_increments",
                                  ("linear", "stitched", "normal_mixture", "discrete_mixture",
                                   "inverted_stitching")),
    "ate_trial": Scenario("ate_trial", "ate_trial", ("ate",), reps=500),
    "covariance_2d": Scenario("covariance_2d", "covariance_2d", ("covariance",), reps=200),
    "variance_normal": Scenario("variance_normal", "normal(3,4)", ("variance",)),
}


def preset(name: str, **overrides) -> Scenario:
    if name not in PRESETS:
        raise DomainError(f"unknown scenario {name!r}; expected one of {sorted(PRESETS)}")
    base = PRESETS[name]
    fields = {k: v for k, v in overrides.items() if v is not None}
    return Scenario(**{**base.__dict__, **fields})
