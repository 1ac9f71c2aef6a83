"""The five psi families, their conjugates, and conversions between boundaries.

All families are scaled so that psi(0) = psi'(0+) = 0 and psi''(0+) = 1.  A
scale parameter c = 0 makes the Poisson, exponential and gamma families
identical to the normal one, and they are evaluated as such.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ._errors import DomainError, UnsupportedConversionError

BERNOULLI = "bernoulli"
NORMAL = "normal"
POISSON = "poisson"
EXPONENTIAL = "exponential"
GAMMA = "gamma"
KINDS = (BERNOULLI, NORMAL, POISSON, EXPONENTIAL, GAMMA)
_SCALED = (POISSON, EXPONENTIAL, GAMMA)

__all__ = [
    "PsiFamily",
    "conversion_factor",
    "convert_boundary",
    "legendre",
    "psi_eval",
    "psi_g_inverse",
]


@dataclass(frozen=True)
class PsiFamily:
    """One of the five psi families with its parameters.

    Use the class-method constructors rather than the raw fields.
    """

    kind: str
    g: float = 0.0
    h: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown psi family {self.kind!r}; expected one of {KINDS}")
        if self.kind == BERNOULLI:
            if not (self.g > 0 and self.h > 0 and math.isfinite(self.g) and math.isfinite(self.h)):
                raise DomainError(f"bernoulli family needs g, h > 0, got g={self.g}, h={self.h}")
        elif not math.isfinite(self.c):
            raise DomainError(f"scale c must be finite, got {self.c}")

    @classmethod
    def bernoulli(cls, g: float, h: float) -> PsiFamily:
        return cls(BERNOULLI, g=float(g), h=float(h))

    @classmethod
    def normal(cls) -> PsiFamily:
        return cls(NORMAL)

    @classmethod
    def poisson(cls, c: float) -> PsiFamily:
        return cls(POISSON, c=float(c))

    @classmethod
    def exponential(cls, c: float) -> PsiFamily:
        return cls(EXPONENTIAL, c=float(c))

    @classmethod
    def gamma(cls, c: float) -> PsiFamily:
        return cls(GAMMA, c=float(c))

    @property
    def is_gaussian(self) -> bool:
        return self.kind == NORMAL or (self.kind in _SCALED and self.c == 0.0)

    @property
    def lambda_max(self) -> float:
        if self.kind in (EXPONENTIAL, GAMMA) and self.c > 0:
            return 1.0 / self.c
        return math.inf

    @property
    def b_bar(self) -> float:
        """Supremum of psi' over the domain."""
        if self.kind == BERNOULLI:
            return 1.0 / self.g
        if self.is_gaussian or self.kind == NORMAL or self.c > 0:
            return math.inf
        if self.kind == GAMMA:
            return 1.0 / (2.0 * abs(self.c))
        return 1.0 / abs(self.c)

    def normalized(self) -> PsiFamily:
        """Canonical representative: scaled families with c = 0 become normal."""
        return PsiFamily.normal() if self.is_gaussian else self

    def describe(self) -> str:
        if self.kind == BERNOULLI:
            return f"bernoulli(g={self.g:g}, h={self.h:g})"
        if self.kind == NORMAL:
            return "normal"
        return f"{self.kind}(c={self.c:g})"

    def _check(self, lam):
        lam = np.asarray(lam, dtype=float)
        if np.any(~(lam >= 0)) or np.any(lam >= self.lambda_max):
            raise DomainError(f"lambda outside [0, {self.lambda_max}) for {self.describe()}")
        return lam

    def psi(self, lam):
        """psi(lambda); accepts scalars or arrays."""
        lam = self._check(lam)
        out = _psi(self, lam)
        return float(out) if out.ndim == 0 else out

    def dpsi(self, lam):
        """psi'(lambda)."""
        lam = self._check(lam)
        out = _dpsi(self, lam)
        return float(out) if out.ndim == 0 else out

    def legendre(self, x: float) -> float:
        return legendre(self, x)


def _psi(f: PsiFamily, lam: np.ndarray) -> np.ndarray:
    if f.kind == BERNOULLI:
        g, h = f.g, f.h
        # log((g e^{h lam} + h e^{-g lam}) / (g + h)) without overflow
        inner = np.log1p(h * np.expm1(-(g + h) * lam) / (g + h))
        return (h * lam + inner) / (g * h)
    if f.is_gaussian:
        return 0.5 * lam * lam
    c = f.c
    x = c * lam
    small = np.abs(x) < 1e-3
    with np.errstate(divide="ignore", invalid="ignore"):
        if f.kind == POISSON:
            big = (np.expm1(x) - x) / (c * c)
            ser = 0.5 * lam**2 * (1 + x / 3 + x * x / 12 + x**3 / 60)
        elif f.kind == EXPONENTIAL:
            big = (-np.log1p(-x) - x) / (c * c)
            ser = 0.5 * lam**2 * (1 + 2 * x / 3 + x * x / 2 + 2 * x**3 / 5)
        else:
            return lam * lam / (2.0 * (1.0 - x))
    return np.where(small, ser, big)


def _dpsi(f: PsiFamily, lam: np.ndarray) -> np.ndarray:
    if f.kind == BERNOULLI:
        g, h = f.g, f.h
        e = np.exp(-(g + h) * lam)
        return -np.expm1(-(g + h) * lam) / (g + h * e)
    if f.is_gaussian:
        return lam.copy()
    c = f.c
    x = c * lam
    if f.kind == POISSON:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.abs(x) < 1e-8, lam * (1 + 0.5 * x), np.expm1(x) / c)
    if f.kind == EXPONENTIAL:
        return lam / (1.0 - x)
    return lam * (2.0 - x) / (2.0 * (1.0 - x) ** 2)


def psi_eval(family: PsiFamily, lam):
    return family.psi(lam)


def psi_g_inverse(u: float, c: float) -> float:
    """The lambda >= 0 with psi_{G,c}(lambda) = u."""
    if not u > 0:
        raise DomainError(f"psi_g_inverse needs u > 0, got {u}")
    root = math.sqrt(c * c + 2.0 / u)
    if c < 0:
        # c + root cancels; multiply through by the conjugate
        return u * (root - c)
    return 2.0 / (c + root)


def _xlogy_ratio(q: float, p: float) -> float:
    return 0.0 if q == 0.0 else q * math.log(q / p)


def legendre(family: PsiFamily, x: float) -> float:
    """psi*(x) = sup over the domain of lambda*x - psi(lambda); inf when unbounded."""
    x = float(x)
    if not x >= 0:
        raise DomainError(f"legendre transform needs x >= 0, got {x}")
    f = family
    if f.is_gaussian:
        return 0.5 * x * x
    bbar = f.b_bar
    if x > bbar:
        return math.inf
    if f.kind == BERNOULLI:
        g, h = f.g, f.h
        q = min((g * h * x + g) / (g + h), 1.0)
        p = g / (g + h)
        return (_xlogy_ratio(q, p) + _xlogy_ratio(1.0 - q, 1.0 - p)) / (g * h)
    c = f.c
    u = c * x
    if f.kind == POISSON:
        if u == -1.0:
            return 1.0 / (c * c)
        if abs(u) < 1e-4:
            return x * x * (0.5 - u / 6 + u * u / 12 - u**3 / 20)
        return ((1.0 + u) * math.log1p(u) - u) / (c * c)
    if f.kind == EXPONENTIAL:
        if u <= -1.0:
            return math.inf
        if abs(u) < 1e-4:
            return x * x * (0.5 - u / 3 + u * u / 4 - u**3 / 5)
        return (u - math.log1p(u)) / (c * c)
    # gamma: x^2 / (1 + u + sqrt(1 + 2u)) is the cancellation-free form
    return x * x / (1.0 + u + math.sqrt(max(1.0 + 2.0 * u, 0.0)))


# ---------------------------------------------------------------- conversions

def _phi(g: float, h: float) -> float:
    if g < h:
        return (h * h - g * g) / (2.0 * math.log(h / g))
    return g * h


@dataclass(frozen=True)
class _Step:
    row: int
    source: PsiFamily
    target: PsiFamily
    factor: float


def _same(a: PsiFamily, b: PsiFamily, tol: float = 1e-12) -> bool:
    a, b = a.normalized(), b.normalized()
    if a.kind != b.kind:
        return False
    if a.kind == BERNOULLI:
        return abs(a.g - b.g) <= tol * max(1, a.g) and abs(a.h - b.h) <= tol * max(1, a.h)
    return abs(a.c - b.c) <= tol * max(1.0, abs(a.c))


def _dominates(src: PsiFamily, node: PsiFamily) -> bool:
    """True if every sub-node process is sub-src, so a src boundary serves node as is."""
    if _same(src, node):
        return True
    s, n = src.normalized(), node.normalized()
    cs = 0.0 if s.kind == NORMAL else s.c
    cn = 0.0 if n.kind == NORMAL else n.c
    if s.kind == n.kind and s.kind in _SCALED:
        return cs >= cn
    # psi_{K,c} <= psi_N for c <= 0, and psi_N <= psi_{K,c} for c >= 0
    if n.kind in _SCALED and s.kind == NORMAL:
        return cn <= 0
    if s.kind in _SCALED and n.kind == NORMAL:
        return cs >= 0
    return False


def _predecessors(t: PsiFamily) -> Iterable[_Step]:
    """Direct table rows whose target is ``t``."""
    t = t.normalized()
    if t.kind == BERNOULLI:
        g, h = t.g, t.h
        yield _Step(1, PsiFamily.normal(), t, _phi(g, h) / (g * h))
        yield _Step(2, PsiFamily.normal(), t, (g + h) ** 2 / (4 * g * h))
        yield _Step(3, PsiFamily.poisson(h - g).normalized(), t, 1.0)
    elif t.kind == POISSON:
        yield _Step(5, PsiFamily.gamma(t.c / 3), t, 1.0)
        if t.c < 0:
            yield _Step(10, PsiFamily.normal(), t, 1.0)
    elif t.kind == GAMMA:
        yield _Step(6, PsiFamily.exponential(1.5 * t.c), t, 1.0)
        if t.c < 0:
            yield _Step(9, PsiFamily.poisson(2 * t.c), t, 1.0)
    elif t.kind == EXPONENTIAL:
        if t.c >= 0:
            yield _Step(7, PsiFamily.gamma(t.c), t, 1.0)
        else:
            yield _Step(8, PsiFamily.gamma(t.c / 2), t, 1.0)


_ROW_ENDPOINTS = {
    1: ("normal", "bernoulli"), 2: ("normal", "bernoulli"), 3: ("poisson", "bernoulli"),
    5: ("gamma", "poisson"), 6: ("exponential", "gamma"), 7: ("gamma", "exponential"),
    8: ("gamma", "exponential"), 9: ("poisson", "gamma"), 10: ("normal", "poisson"),
    11: ("bernoulli", "poisson"),
}


def _direct(src: PsiFamily, dst: PsiFamily, row: int) -> float:
    """Factor for one specific table row, checking its restriction."""
    s, d = src.normalized(), dst.normalized()
    if row not in _ROW_ENDPOINTS:
        raise UnsupportedConversionError(f"no table row {row}")
    if row == 11:
        if s.kind == BERNOULLI and d.kind == POISSON and abs(d.c + s.g) <= 1e-12 * max(1, s.g):
            return 1.0
    else:
        for step in _predecessors(d):
            if step.row == row and _same(step.source, s):
                return step.factor
    raise UnsupportedConversionError(
        f"row ({row}) does not map {src.describe()} to {dst.describe()}")


def conversion_factor(source: PsiFamily, target: PsiFamily, row: int | None = None,
                      max_depth: int = 4) -> tuple[float, tuple[int, ...]]:
    """Factor a such that v -> u(a v) turns a sub-source boundary into a sub-target one.

    Returns ``(a, rows)``, where ``rows`` lists the table rows used (0 marks a
    same-kind step to a smaller scale, which needs no rescaling).  With ``row``
    given, only that single row is tried.  Otherwise chains of up to
    ``max_depth`` rows are searched and the smallest factor wins.
    """
    if row is not None:
        return _direct(source, target, row), (row,)
    if _dominates(source, target):
        return 1.0, (0,) if not _same(source, target) else ()
    best: tuple[float, tuple[int, ...]] | None = None
    queue = deque([(target.normalized(), 1.0, ())])
    while queue:
        node, factor, rows = queue.popleft()
        if len(rows) >= max_depth:
            continue
        cands = list(_predecessors(node))
        if node.kind == POISSON and source.kind == BERNOULLI and -source.g >= node.c - 1e-12:
            cands.append(_Step(11, PsiFamily.poisson(-source.g), node, 1.0))
        for step in cands:
            total = factor * step.factor
            path = (step.row,) + rows
            if step.row == 11 or _dominates(source, step.source):
                if step.row == 11 and not _same(step.source, node):
                    path = (11, 0) + rows
                if best is None or total < best[0] - 1e-15:
                    best = (total, path)
                continue
            queue.append((step.source, total, path))
    if best is None:
        raise UnsupportedConversionError(
            f"no chain of table rows maps {source.describe()} to {target.describe()}; "
            f"reachable targets: {', '.join(_reachable_kinds(source))}")
    return best


def _reachable_kinds(source: PsiFamily) -> list[str]:
    s = source.normalized()
    out = {s.describe()}
    if s.kind == NORMAL:
        out |= {"bernoulli(any g, h)", "poisson(c<=0)", "gamma(c<=0)", "exponential(c<=0)"}
    elif s.kind == GAMMA:
        out |= {f"poisson(c<={3 * s.c:g})", "exponential (restricted)", "bernoulli (via poisson)"}
    elif s.kind == EXPONENTIAL:
        out |= {f"gamma(c<={2 * s.c / 3:g})", "poisson/bernoulli (via gamma)"}
    elif s.kind == POISSON:
        out |= {f"bernoulli(h-g={s.c:g})", "gamma (c<0 only)"}
    elif s.kind == BERNOULLI:
        out |= {f"poisson(c<={-s.g:g})"}
    return sorted(out)


def convert_boundary(u, target: PsiFamily, row: int | None = None):
    """Re-express a uniform boundary for a different psi family.

    ``u`` is any object with ``family`` and ``rescaled(a, family, rows)``, which
    ``boundaries.UniformBoundary`` provides.
    """
    factor, rows = conversion_factor(u.family, target, row=row)
    return u.rescaled(factor, target, rows)
