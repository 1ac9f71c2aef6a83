"""Special-function kernels with a compiled backend and a pure-Python fallback.

The compiled extension is used when it imports cleanly; set ``ANYTIME_CS_PURE=1``
to force the fallback.  ``BACKEND`` names the active one.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

from ._errors import ConvergenceError, DomainError

from . import _pycore

if os.environ.get("ANYTIME_CS_PURE") == "1":
    _impl = _pycore
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pycore
        BACKEND = "python"

__all__ = [
    "AccuracySpec",
    "BACKEND",
    "ConvergenceError",
    "DomainError",
    "backend_module",
    "inc_beta",
    "lambert_w_m1",
    "log_inc_beta",
    "log_std_normal_cdf",
    "hurwitz_zeta",
    "reg_lower_inc_gamma",
    "reg_upper_inc_gamma",
    "riemann_zeta",
    "std_normal_cdf",
]


@dataclass(frozen=True)
class AccuracySpec:
    rel_tol: float = 1e-12
    abs_tol: float = 0.0
    max_iter: int = 1_000_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if not self.abs_tol >= 0:
            raise DomainError("abs_tol must be nonnegative")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")


DEFAULT_ACCURACY = AccuracySpec()


def backend_module(name: str | None = None):
    """Return the kernel module for ``name`` ("compiled" or "python"), or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pycore
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {name!r}")


def reg_lower_inc_gamma(a: float, x: float, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    return _impl.reg_lower_inc_gamma(float(a), float(x), acc.max_iter)


def reg_upper_inc_gamma(a: float, x: float, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    return _impl.reg_upper_inc_gamma(float(a), float(x), acc.max_iter)


def log_inc_beta(x: float, a: float, b: float, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """log B_x(a, b), the log of the non-regularized incomplete beta integral."""
    return _impl.log_inc_beta(float(x), float(a), float(b), acc.max_iter)


def inc_beta(x: float, a: float, b: float, acc: AccuracySpec = DEFAULT_ACCURACY) -> float:
    """Non-regularized incomplete beta integral of p^(a-1) (1-p)^(b-1) over [0, x]."""
    return math.exp(log_inc_beta(x, a, b, acc))


def lambert_w_m1(x: float) -> float:
    """Lower real branch W_{-1} of the Lambert W function on [-1/e, 0)."""
    return _impl.lambert_w_m1(float(x))


def std_normal_cdf(x: float) -> float:
    return _impl.norm_cdf(float(x))


def log_std_normal_cdf(x: float) -> float:
    return _impl.log_norm_cdf(float(x))


def hurwitz_zeta(s: float, q: float) -> float:
    """Hurwitz zeta sum_{k>=0} (q + k)^(-s) for s > 1, q > 0."""
    return _impl.hurwitz_zeta(float(s), float(q))


def riemann_zeta(s: float) -> float:
    return _impl.hurwitz_zeta(float(s), 1.0)
