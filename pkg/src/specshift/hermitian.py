"""Dense self-adjoint matrix core.

Spectral decomposition, functional calculus f(A) = U diag(f(lambda)) U*,
Schatten norms from singular values, spectral truncation, and the
trace-norm / operator-norm increment ratios that the searches maximise.

All tolerances are relative to ``operator_scale`` = max(1, ||A||, ||B||)
(largest singular value).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .catalog import ScalarFunction
from .errors import ConvergenceFailure, DegeneratePair, NonFinite

__all__ = [
    "HermitianOperator",
    "SpectralDecomposition",
    "RatioWitness",
    "TraceTransferReport",
    "decompose",
    "apply_function",
    "schatten_norm",
    "singular_values",
    "spectral_truncation",
    "increment_ratio",
    "trace_transfer_check",
    "operator_scale",
]

#: relative floor under which a pair counts as degenerate (A = B)
DEGENERATE_REL = 1e-14

_EIG_TOL = 1e-10


class HermitianOperator:
    """Square self-adjoint matrix.

    The constructor replaces its input by (M + M*)/2.  That map is exact on
    matrices that are already Hermitian and guarantees the storage invariant
    entries[j][k] == conj(entries[k][j]) bit for bit.  Matrices with no
    imaginary part are kept in a real float64 array.
    """

    __slots__ = ("_mat",)

    def __init__(self, entries) -> None:
        arr = np.asarray(entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise ValueError(f"expected a nonempty square matrix, got shape {arr.shape}")
        dtype = np.complex128 if np.iscomplexobj(arr) else np.float64
        arr = arr.astype(dtype, copy=False)
        if not np.isfinite(arr).all():
            raise NonFinite("matrix entries must be finite")
        mat = (arr + arr.conj().T) / 2
        if np.iscomplexobj(mat) and not mat.imag.any():
            mat = mat.real.copy()
        mat.setflags(write=False)
        self._mat = mat

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        """Read-only entry array (float64 or complex128)."""
        return self._mat

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order and a unitary matrix of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def operator_scale(a: HermitianOperator, b: HermitianOperator | None = None) -> float:
    """max(1, ||a||, ||b||) in operator norm; normalises relative tolerances."""
    scale = max(1.0, schatten_norm(a, np.inf))
    if b is not None:
        scale = max(scale, schatten_norm(b, np.inf))
    return scale


def decompose(a: HermitianOperator) -> SpectralDecomposition:
    """Eigendecomposition A = U diag(lambda) U* with verified accuracy.

    Raises ConvergenceFailure if the reconstruction or orthonormality
    residual exceeds 1e-10 relative to max(1, max-entry of A).
    """
    m = a.matrix
    try:
        w, u = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(f"eigendecomposition failed: {exc}") from None
    dim = a.dim
    ortho = np.abs(u.conj().T @ u - np.eye(dim)).max()
    recon = np.abs((u * w) @ u.conj().T - m).max()
    if ortho > _EIG_TOL or recon > _EIG_TOL * max(1.0, np.abs(m).max()):
        raise ConvergenceFailure(
            f"eigendecomposition out of tolerance: ortho={ortho:g}, recon={recon:g}")
    if np.any(np.diff(w) < 0):  # pragma: no cover - eigh returns ascending
        order = np.argsort(w, kind="stable")
        w, u = w[order], u[:, order]
    w.setflags(write=False)
    u.setflags(write=False)
    return SpectralDecomposition(w, u)


def apply_function(f: ScalarFunction, a: HermitianOperator) -> HermitianOperator:
    """Functional calculus: U diag(f(lambda_1), ..., f(lambda_n)) U*.

    Raises DomainError (from the function itself) if f is undefined or
    non-finite at some eigenvalue.
    """
    dec = decompose(a)
    vals = np.array([f(x) for x in dec.eigenvalues])
    return HermitianOperator((dec.eigenvectors * vals) @ dec.eigenvectors.conj().T)


def _coerce_matrix(x) -> np.ndarray:
    if isinstance(x, HermitianOperator):
        return x.matrix
    arr = np.asarray(x)
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFinite("matrix entries must be finite")
    return arr


def singular_values(x) -> np.ndarray:
    """Singular values in descending order; accepts arrays or HermitianOperator."""
    return np.linalg.svd(_coerce_matrix(x), compute_uv=False)


def schatten_norm(x, p) -> float:
    """Schatten p-norm from singular values: p = 1 (trace norm), 2 (Frobenius)
    or inf (operator norm)."""
    s = singular_values(x)
    if p == 1:
        return float(s.sum())
    if p == 2:
        return float(np.sqrt((s * s).sum()))
    if p == np.inf:
        return float(s[0])
    raise ValueError(f"p must be 1, 2 or inf, got {p!r}")


def spectral_truncation(a: HermitianOperator, delta: float) -> Tuple[HermitianOperator, int]:
    """Zero out every eigenvalue with |lambda| > delta.

    Returns the truncated operator and the number of discarded eigenvalues,
    which equals rank(A - A_delta).
    """
    if not (delta > 0 and np.isfinite(delta)):
        raise ValueError(f"delta must be positive and finite, got {delta!r}")
    dec = decompose(a)
    keep = np.abs(dec.eigenvalues) <= delta
    trimmed = np.where(keep, dec.eigenvalues, 0.0)
    truncated = HermitianOperator((dec.eigenvectors * trimmed) @ dec.eigenvectors.conj().T)
    return truncated, int(np.count_nonzero(~keep))


@dataclass(frozen=True)
class RatioWitness:
    """A pair (A, B) with its function-increment ratios.

    ratio_s1 = ||f(B)-f(A)||_1 / ||B-A||_1 and ratio_op is the same quotient
    in operator norm; increment_s1 stores the numerator of ratio_s1.
    """

    a: HermitianOperator
    b: HermitianOperator
    function: ScalarFunction
    ratio_s1: float
    ratio_op: float
    increment_s1: float

    @property
    def dim(self) -> int:
        return self.a.dim


def increment_ratio(f: ScalarFunction, a: HermitianOperator,
                    b: HermitianOperator) -> RatioWitness:
    """Compute the trace-norm and operator-norm increment ratios of (A, B).

    Raises DegeneratePair when ||B-A||_1 is below the noise floor
    1e-14 * dim * scale (this also rejects A = B).
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} != {b.dim}")
    diff = b.matrix - a.matrix
    scale = operator_scale(a, b)
    den_s1 = schatten_norm(diff, 1)
    if den_s1 <= DEGENERATE_REL * a.dim * scale:
        raise DegeneratePair(
            f"||B-A||_1 = {den_s1:g} is below the degeneracy floor")
    num = apply_function(f, b).matrix - apply_function(f, a).matrix
    num_s1 = schatten_norm(num, 1)
    return RatioWitness(
        a=a, b=b, function=f,
        ratio_s1=num_s1 / den_s1,
        ratio_op=schatten_norm(num, np.inf) / schatten_norm(diff, np.inf),
        increment_s1=num_s1,
    )


@dataclass(frozen=True)
class TraceTransferReport:
    """How a function increment splits across a spectral truncation at delta.

    The tails f(A)-f(A_delta) and f(B)-f(B_delta) are supported on the
    discarded eigenvectors, so their ranks never exceed the discarded ranks.
    The reassembly residual measures the telescoping identity
    f(A)-f(B) = [f(A)-f(A_d)] + [f(A_d)-f(B_d)] - [f(B)-f(B_d)].
    """

    delta: float
    tail_a_s1: float
    tail_b_s1: float
    tail_a_rank: int
    tail_b_rank: int
    discarded_rank_a: int
    discarded_rank_b: int
    core_increment_s1: float
    total_increment_s1: float
    reassembly_residual_s1: float
    scale: float
    tolerance: float

    @property
    def within_tolerance(self) -> bool:
        return self.reassembly_residual_s1 <= self.tolerance


def _numerical_rank(m: np.ndarray, scale: float) -> int:
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.count_nonzero(s > 1e-10 * max(1.0, scale) * m.shape[0]))


def trace_transfer_check(f: ScalarFunction, delta: float, a: HermitianOperator,
                         b: HermitianOperator) -> TraceTransferReport:
    """Split ||f(A)-f(B)||_1 across the truncation A_delta, B_delta.

    f is normalised to f - f(0) first, so the tails vanish exactly when
    nothing is discarded.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} != {b.dim}")
    g = f.shifted(f(0.0))
    a_d, rank_a = spectral_truncation(a, delta)
    b_d, rank_b = spectral_truncation(b, delta)
    ga = apply_function(g, a).matrix
    gb = apply_function(g, b).matrix
    gad = apply_function(g, a_d).matrix
    gbd = apply_function(g, b_d).matrix
    tail_a = ga - gad
    tail_b = gb - gbd
    core = gad - gbd
    total = ga - gb
    residual = total - (tail_a + core - tail_b)
    scale = operator_scale(a, b)
    return TraceTransferReport(
        delta=float(delta),
        tail_a_s1=schatten_norm(tail_a, 1),
        tail_b_s1=schatten_norm(tail_b, 1),
        tail_a_rank=_numerical_rank(tail_a, scale),
        tail_b_rank=_numerical_rank(tail_b, scale),
        discarded_rank_a=rank_a,
        discarded_rank_b=rank_b,
        core_increment_s1=schatten_norm(core, 1),
        total_increment_s1=schatten_norm(total, 1),
        reassembly_residual_s1=schatten_norm(residual, 1),
        scale=scale,
        tolerance=1e-9 * scale,
    )
