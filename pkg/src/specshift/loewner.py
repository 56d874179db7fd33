"""Divided differences, Loewner matrices, finite spectra grids, and the
mixed-eigenbasis perturbation identity.

For A = U diag(lambda) U* and B = V diag(mu) V* the entrywise identity

    [U* (f(A) - f(B)) V]_jk = L(lambda_j, mu_k) * [U* (A - B) V]_jk

holds exactly, where L is the divided difference of f.  The residual of this
identity is the main cross-check on the functional calculus.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .catalog import ScalarFunction
from .errors import BadInterval, InvariantViolation
from .hermitian import HermitianOperator, decompose

__all__ = [
    "DEFAULT_TIE_EPS",
    "FiniteSpectrumSet",
    "LoewnerMatrix",
    "restrict_to_grid",
    "divided_difference",
    "loewner_matrix",
    "perturbation_identity_residual",
]

#: relative gap under which two grid points count as a tie
DEFAULT_TIE_EPS = 1e-9


@dataclass(frozen=True)
class FiniteSpectrumSet:
    """Strictly increasing finite set of admissible spectrum points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size < 1:
            raise InvariantViolation("a spectrum set needs at least one point")
        if not np.isfinite(pts).all():
            raise InvariantViolation("spectrum points must be finite")
        if np.any(np.diff(pts) <= 0):
            raise InvariantViolation("spectrum points must be strictly increasing")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return int(self.points.size)

    @property
    def hull(self) -> tuple:
        return float(self.points[0]), float(self.points[-1])


def restrict_to_grid(interval, n: int) -> FiniteSpectrumSet:
    """n equispaced points spanning [a, b], endpoints included."""
    a, b = float(interval[0]), float(interval[1])
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise BadInterval(f"need finite a < b, got [{a}, {b}]")
    if n < 2:
        raise BadInterval(f"need n >= 2 grid points, got {n}")
    return FiniteSpectrumSet(np.linspace(a, b, n))


def _divided(f: ScalarFunction, x: float, y: float, tie_eps: float):
    """Divided difference with tie handling; returns (value, used_fallback)."""
    if abs(x - y) > tie_eps * (1.0 + abs(x) + abs(y)):
        return (f(x) - f(y)) / (x - y), False
    d = f.derivative_at(x)
    if d is not None:
        return d, False
    return (f(x + tie_eps) - f(x - tie_eps)) / (2.0 * tie_eps), True


def divided_difference(f: ScalarFunction, x: float, y: float,
                       tie_eps: float = DEFAULT_TIE_EPS) -> float:
    """(f(x) - f(y)) / (x - y); near ties, the analytic derivative at x, or
    a central difference with step tie_eps when no derivative is declared."""
    if not (tie_eps > 0.0):
        raise ValueError(f"tie_eps must be positive, got {tie_eps!r}")
    value, _ = _divided(f, float(x), float(y), tie_eps)
    return value


@dataclass(frozen=True)
class LoewnerMatrix:
    """Divided differences of f over a row grid and a column grid.

    ``tie_fallback_used`` flags that at least one near-tie entry was filled
    by a central difference because no analytic derivative was available.
    """

    row_grid: np.ndarray
    col_grid: np.ndarray
    entries: np.ndarray
    tie_fallback_used: bool


def loewner_matrix(f: ScalarFunction, lam, mu,
                   tie_eps: float = DEFAULT_TIE_EPS) -> LoewnerMatrix:
    """Entrywise divided differences L[j][k] = dd(f, lam[j], mu[k])."""
    lam = np.atleast_1d(np.asarray(lam, dtype=np.float64))
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    entries = np.empty((lam.size, mu.size))
    fallback = False
    for j, x in enumerate(lam):
        for k, y in enumerate(mu):
            entries[j, k], used = _divided(f, float(x), float(y), tie_eps)
            fallback = fallback or used
    entries.setflags(write=False)
    return LoewnerMatrix(lam, mu, entries, fallback)


def perturbation_identity_residual(f: ScalarFunction, a: HermitianOperator,
                                   b: HermitianOperator,
                                   tie_eps: float = DEFAULT_TIE_EPS) -> float:
    """Max-entry residual of the mixed-basis identity relating f(A)-f(B)
    to the Loewner matrix acting entrywise on A-B."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} != {b.dim}")
    da = decompose(a)
    db = decompose(b)
    u, v = da.eigenvectors, db.eigenvectors
    fa = np.array([f(x) for x in da.eigenvalues])
    fb = np.array([f(x) for x in db.eigenvalues])
    f_incr = (u * fa) @ u.conj().T - (v * fb) @ v.conj().T
    lhs = u.conj().T @ f_incr @ v
    rhs = u.conj().T @ (a.matrix - b.matrix) @ v
    loewner = loewner_matrix(f, da.eigenvalues, db.eigenvalues, tie_eps)
    return float(np.abs(lhs - loewner.entries * rhs).max())
