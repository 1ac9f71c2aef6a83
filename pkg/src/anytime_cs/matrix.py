"""Matrix martingale boundaries and covariance confidence sequences.

Dimensions here are small (the covariance application uses d = 2), so the
eigen-solver is a plain cyclic Jacobi iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ._errors import DomainError
from .boundaries import (
    DiscreteMixtureParams,
    LILDensity,
    PolynomialH,
    StitchParams,
    UniformBoundary,
    discrete_mixture_boundary,
    stitched_boundary,
)
from .psi import PsiFamily, convert_boundary

__all__ = [
    "CovEstimate",
    "CovStreamState",
    "SymMatrix",
    "covariance_boundary",
    "covariance_cs",
    "eigenvalues",
    "matrix_lil_boundary",
    "max_eigenvalue",
    "op_norm",
]


class SymMatrix:
    """Dense symmetric matrix stored as its upper triangle, row by row."""

    __slots__ = ("dim", "entries")

    def __init__(self, dim: int, entries: Sequence[float] | None = None):
        if dim < 1:
            raise DomainError(f"dimension must be at least 1, got {dim}")
        n = dim * (dim + 1) // 2
        self.dim = dim
        self.entries = [0.0] * n if entries is None else [float(e) for e in entries]
        if len(self.entries) != n:
            raise DomainError(f"expected {n} upper-triangle entries, got {len(self.entries)}")

    def _index(self, i: int, j: int) -> int:
        if i > j:
            i, j = j, i
        return i * self.dim - i * (i - 1) // 2 + (j - i)

    def __getitem__(self, ij):
        return self.entries[self._index(*ij)]

    def __setitem__(self, ij, value):
        self.entries[self._index(*ij)] = float(value)

    @classmethod
    def from_array(cls, a, tol: float = 1e-12) -> SymMatrix:
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError("expected a square matrix")
        if not np.allclose(a, a.T, rtol=0, atol=tol * max(1.0, float(np.abs(a).max(initial=0)))):
            raise DomainError("matrix is not symmetric")
        d = a.shape[0]
        return cls(d, [a[i, j] for i in range(d) for j in range(i, d)])

    @classmethod
    def outer(cls, x) -> SymMatrix:
        x = [float(v) for v in x]
        d = len(x)
        return cls(d, [x[i] * x[j] for i in range(d) for j in range(i, d)])

    def to_array(self) -> np.ndarray:
        d = self.dim
        out = np.empty((d, d))
        for i in range(d):
            for j in range(i, d):
                out[i, j] = out[j, i] = self[i, j]
        return out

    def _check(self, other: SymMatrix) -> None:
        if other.dim != self.dim:
            raise DomainError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __add__(self, other: SymMatrix) -> SymMatrix:
        self._check(other)
        return SymMatrix(self.dim, [a + b for a, b in zip(self.entries, other.entries)])

    def __sub__(self, other: SymMatrix) -> SymMatrix:
        self._check(other)
        return SymMatrix(self.dim, [a - b for a, b in zip(self.entries, other.entries)])

    def scale(self, k: float) -> SymMatrix:
        return SymMatrix(self.dim, [k * a for a in self.entries])

    def __repr__(self):
        return f"SymMatrix({self.dim}, {self.to_array().tolist()})"


def eigenvalues(m: SymMatrix, tol: float = 1e-15, max_sweeps: int = 100) -> list[float]:
    """All eigenvalues, ascending, by cyclic Jacobi rotations."""
    a = m.to_array()
    d = m.dim
    scale = float(np.abs(a).max(initial=0.0))
    if scale == 0.0:
        return [0.0] * d
    for _ in range(max_sweeps):
        off = math.sqrt(sum(a[i, j] ** 2 for i in range(d) for j in range(i + 1, d)))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(d):
                    akp, akq = a[k, p], a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(d):
                    apk, aqk = a[p, k], a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
    return sorted(float(a[i, i]) for i in range(d))


def max_eigenvalue(m: SymMatrix) -> float:
    return eigenvalues(m)[-1]


def op_norm(m: SymMatrix) -> float:
    ev = eigenvalues(m)
    return max(abs(ev[0]), abs(ev[-1]))


def matrix_lil_boundary(b: float, eta: float = 2.0, s: float = 1.4, m: float = 1.0,
                        alpha: float = 0.05, d: int = 1) -> UniformBoundary:
    """Stitched boundary for matrix martingales with max-eigenvalue increments at most ``b``.

    The sub-gamma scale is b/3 and the dimension enters through l0 = d.
    """
    if not b > 0:
        raise DomainError(f"increment bound must be positive, got {b}")
    if d < 1:
        raise DomainError(f"dimension must be at least 1, got {d}")
    return stitched_boundary(StitchParams(eta=eta, m=m, c=b / 3.0, h=PolynomialH(s)), alpha, l0=float(d))


def covariance_boundary(b: float, d: int, alpha: float = 0.05, eta: float = 1.1,
                        lambda_bar: float = 0.262, s: float = 1.4) -> UniformBoundary:
    """Sub-Poisson (scale 2b) boundary with l0 = d for the covariance sequence.

    A discrete mixture over the sub-gamma psi with scale 2b/3 and the LIL
    density, carried to sub-Poisson scale 2b by the gamma-to-Poisson relation.
    """
    fam = PsiFamily.gamma(2.0 * b / 3.0)
    dm = discrete_mixture_boundary(DiscreteMixtureParams(LILDensity(s), lambda_bar, eta), fam,
                                   alpha, l0=float(d))
    return convert_boundary(dm, PsiFamily.poisson(2.0 * b), row=5)


@dataclass
class CovEstimate:
    t: int
    sigma_hat: SymMatrix
    radius: Callable[[float], float]
    conservative_radius: float

    def contains(self, sigma) -> bool:
        """Membership of ``sigma``: ||sigma_hat - sigma||_op < u(b t ||sigma||_op) / t."""
        s = sigma if isinstance(sigma, SymMatrix) else SymMatrix.from_array(sigma)
        return op_norm(self.sigma_hat - s) < self.radius(op_norm(s))

    def within_ball(self, sigma) -> bool:
        s = sigma if isinstance(sigma, SymMatrix) else SymMatrix.from_array(sigma)
        return op_norm(self.sigma_hat - s) < self.conservative_radius


@dataclass
class CovStreamState:
    """Running sum of outer products of mean-zero vectors with ||x||^2 <= b."""

    dim: int
    b: float
    t: int = 0
    sum_outer: SymMatrix = field(default=None)

    def __post_init__(self):
        if not self.b > 0:
            raise DomainError(f"norm bound must be positive, got {self.b}")
        if self.sum_outer is None:
            self.sum_outer = SymMatrix(self.dim)

    def update(self, x) -> None:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.dim:
            raise DomainError(f"expected a {self.dim}-vector, got length {x.shape[0]}")
        if float(x @ x) > self.b + 1e-12:
            raise DomainError(f"||x||^2 = {float(x @ x)} exceeds the bound {self.b}")
        self.sum_outer = self.sum_outer + SymMatrix.outer(x)
        self.t += 1


def covariance_cs(state: CovStreamState, x, boundary: UniformBoundary) -> CovEstimate:
    """Fold in ``x`` and describe the covariance confidence set.

    The exact set depends on the unknown ||sigma||_op through u, so both the
    self-referential membership test and the ball using ||sigma||_op <= b are
    returned.
    """
    state.update(x)
    t = state.t
    b = state.b
    sigma_hat = state.sum_outer.scale(1.0 / t)
    return CovEstimate(
        t=t,
        sigma_hat=sigma_hat,
        radius=lambda norm: boundary(b * t * norm) / t,
        conservative_radius=boundary(b * b * t) / t,
    )
