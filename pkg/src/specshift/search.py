"""Seeded lower-bound search for the increment-ratio seminorms on a finite
spectra set.

Candidates are pairs A = diag(a), B = Q diag(b) Q^T with a, b drawn from the
grid (with repetition) and Q orthogonal.  A is kept diagonal without loss of
generality: every norm involved is unitarily invariant, so one rotation can
always be absorbed.

Search phases, in deterministic order:

  0. scalar probe: every unordered pair of grid points as a 1x1 quotient
     (embedded at the requested dimension), so the scalar floor is always
     attained;
  1. exhaustive sweep of all diagonal assignments when |grid|**(2*dim) is at
     most 10**4;
  2. a Givens coordinate-ascent polish of the best candidate so far;
  3+. `budget` seeded random restarts, each drawing (a, b, Q0) from substream
     (seed, r) and refining Q by per-angle coordinate ascent with a coarse
     scan plus golden-section line search.

The incumbent is the best value with the earliest phase index, so the result
is deterministic given (seed, budget), independent of evaluation order, and
nondecreasing in budget.  Candidate ratios reuse the construction
decomposition of B (no fresh eigensolve), which keeps trivial identities
exact: the identity function scores 1.0 bit for bit.
"""
from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .catalog import ScalarFunction
from .errors import ConfigError
from .hermitian import DEGENERATE_REL, HermitianOperator, RatioWitness
from .loewner import FiniteSpectrumSet

__all__ = ["NORM_KINDS", "SeminormLowerBound", "seminorm_lower_bound", "max_workers"]

NORM_KINDS = ("operator", "schatten1")

_SWEEP_LIMIT = 10_000
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SeminormLowerBound:
    """Best increment ratio found, with the pair that attains it.

    ``value`` equals the witness's ratio of the requested kind exactly.
    ``witness`` is None (and ``degenerate`` True) when the grid admits no
    unequal pair, i.e. it has a single point.
    """

    value: float
    witness: Optional[RatioWitness]
    norm_kind: str
    budget_used: int
    seed: int
    budget: int
    degenerate: bool = False


def max_workers() -> int:
    """Thread cap from SPECSHIFT_THREADS; defaults to 1 (serial)."""
    raw = os.environ.get("SPECSHIFT_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(
            f"SPECSHIFT_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"SPECSHIFT_THREADS must be a positive integer, got {raw!r}")
    return n


def _diag_norms(vec: np.ndarray, kind: str) -> float:
    av = np.abs(vec)
    return float(av.sum()) if kind == "schatten1" else float(av.max())


def _dense_norm(m: np.ndarray, kind: str) -> float:
    s = np.linalg.svd(m, compute_uv=False)
    return float(s.sum()) if kind == "schatten1" else float(s[0])


class _Evaluator:
    """Ratio evaluation for candidates over a fixed grid and function table.

    Denominators at or below the degeneracy floor invalidate a candidate;
    numerators at or below the floor score an exact 0.0, so functions that
    are constant on the grid report a clean zero instead of spectral noise.
    """

    def __init__(self, pts: np.ndarray, fvals: np.ndarray, kind: str):
        self.pts = pts
        self.fvals = fvals
        self.kind = kind
        self.count = 0

    def floor(self, a: np.ndarray, b: np.ndarray) -> float:
        scale = max(1.0, float(np.abs(a).max()), float(np.abs(b).max()))
        return DEGENERATE_REL * a.size * scale

    def diagonal(self, ia: np.ndarray, ib: np.ndarray) -> float:
        """Ratio of the pair diag(a), diag(b); exact diagonal norms."""
        self.count += 1
        a, b = self.pts[ia], self.pts[ib]
        den = _diag_norms(b - a, self.kind)
        if den <= self.floor(a, b):
            return -math.inf
        num = _diag_norms(self.fvals[ib] - self.fvals[ia], self.kind)
        if num <= self.floor(a, b):
            return 0.0
        return num / den

    def rotated(self, ia: np.ndarray, ib: np.ndarray, q: np.ndarray) -> float:
        """Ratio of the pair diag(a), Q diag(b) Q^T."""
        self.count += 1
        a, b = self.pts[ia], self.pts[ib]
        den_m = (q * b) @ q.T - np.diag(a)
        den = _dense_norm(den_m, self.kind)
        if den <= self.floor(a, b):
            return -math.inf
        num_m = (q * self.fvals[ib]) @ q.T - np.diag(self.fvals[ia])
        num = _dense_norm(num_m, self.kind)
        if num <= self.floor(a, b):
            return 0.0
        return num / den


def _givens(dim: int, i: int, j: int, theta: float) -> np.ndarray:
    g = np.eye(dim)
    c, s = math.cos(theta), math.sin(theta)
    g[i, i] = c
    g[j, j] = c
    g[i, j] = -s
    g[j, i] = s
    return g


def _golden_max(g, lo: float, hi: float, iters: int = 18):
    """Golden-section maximisation on [lo, hi]; returns (best_x, best_value)."""
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = g(x1), g(x2)
    best_x, best_v = (x1, f1) if f1 >= f2 else (x2, f2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = g(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = g(x1)
        if f1 >= best_v:
            best_x, best_v = x1, f1
        if f2 >= best_v:
            best_x, best_v = x2, f2
    return best_x, best_v


def _ascent(ev: _Evaluator, ia: np.ndarray, ib: np.ndarray, q0: np.ndarray,
            sweeps: int):
    """Per-angle coordinate ascent over Givens rotations applied to Q.

    The objective is pi-periodic in each angle (a sign flip of two columns
    leaves Q diag(b) Q^T unchanged), so [-pi/2, pi/2] covers each coordinate.
    """
    dim = ia.size
    best = ev.rotated(ia, ib, q0)
    q = q0
    if dim == 1:
        return best, q
    coarse = np.linspace(-math.pi / 2, math.pi / 2, 9)[:-1]
    window = math.pi / 8
    for _ in range(sweeps):
        for i in range(dim - 1):
            for j in range(i + 1, dim):
                def g(theta):
                    return ev.rotated(ia, ib, q @ _givens(dim, i, j, theta))

                coarse_vals = [g(t) for t in coarse]
                k = int(np.argmax(coarse_vals))
                theta, val = _golden_max(g, coarse[k] - window, coarse[k] + window)
                if coarse_vals[k] > val:
                    theta, val = float(coarse[k]), coarse_vals[k]
                if val > best:
                    best = val
                    q = q @ _givens(dim, i, j, theta)
    return best, q


def _scalar_probe(ev: _Evaluator, dim: int):
    """Best quotient over all pairs of grid points, embedded at ``dim``
    by padding both spectra with the first point of the pair."""
    pts, fvals = ev.pts, ev.fvals
    best_val, best_pair = -math.inf, (0, 1)
    for i in range(pts.size - 1):
        for j in range(i + 1, pts.size):
            ev.count += 1
            quotient = abs(fvals[j] - fvals[i]) / abs(pts[j] - pts[i])
            if quotient > best_val:
                best_val, best_pair = quotient, (i, j)
    i, j = best_pair
    ia = np.full(dim, i, dtype=np.intp)
    ib = ia.copy()
    ib[0] = j
    return best_val, (ia, ib, None)


def _diagonal_sweep(ev: _Evaluator, dim: int):
    """Exhaust all diagonal spectra assignments (Q = I)."""
    best_val, best_cand = -math.inf, None
    assignments = list(itertools.product(range(ev.pts.size), repeat=dim))
    for ta in assignments:
        ia = np.array(ta, dtype=np.intp)
        for tb in assignments:
            if ta == tb:
                continue
            v = ev.diagonal(ia, np.array(tb, dtype=np.intp))
            if v > best_val:
                best_val, best_cand = v, (ia, np.array(tb, dtype=np.intp), None)
    return best_val, best_cand


def _random_restart(pts, fvals, kind, dim, seed, index, sweeps):
    """One seeded restart; runs on a private evaluator so the eval count is
    race-free under threaded execution."""
    ev = _Evaluator(pts, fvals, kind)
    rng = np.random.default_rng([seed, index])
    n_pts = pts.size
    ia = rng.integers(0, n_pts, size=dim)
    ib = rng.integers(0, n_pts, size=dim)
    for _ in range(16):
        if not np.array_equal(ia, ib):
            break
        ib = rng.integers(0, n_pts, size=dim)
    else:
        ib = ia.copy()
        ib[0] = (ia[0] + 1) % n_pts
    z = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    value, q = _ascent(ev, ia, ib, q, sweeps)
    return value, (ia, ib, q), ev.count


def _witness_from_candidate(f: ScalarFunction, ev: _Evaluator, ia, ib, q):
    """Materialise the candidate pair with both ratios computed along the
    same arithmetic path the search used to score it."""
    a, b = ev.pts[ia], ev.pts[ib]
    fa, fb = ev.fvals[ia], ev.fvals[ib]
    if q is None:
        b_mat = np.diag(b)
        den_s1, den_op = _diag_norms(b - a, "schatten1"), _diag_norms(b - a, "operator")
        num_s1 = _diag_norms(fb - fa, "schatten1")
        num_op = _diag_norms(fb - fa, "operator")
    else:
        b_mat = (q * b) @ q.T
        den_m = b_mat - np.diag(a)
        num_m = (q * fb) @ q.T - np.diag(fa)
        den_s1, den_op = _dense_norm(den_m, "schatten1"), _dense_norm(den_m, "operator")
        num_s1, num_op = _dense_norm(num_m, "schatten1"), _dense_norm(num_m, "operator")
    floor = ev.floor(a, b)
    return RatioWitness(
        a=HermitianOperator(np.diag(a)),
        b=HermitianOperator(b_mat),
        function=f,
        ratio_s1=0.0 if num_s1 <= floor else num_s1 / den_s1,
        ratio_op=0.0 if num_op <= floor else num_op / den_op,
        increment_s1=num_s1,
    )


def seminorm_lower_bound(f: ScalarFunction, f0: FiniteSpectrumSet, dim: int,
                         norm_kind: str, budget: int, seed: int,
                         sweeps: int = 1) -> SeminormLowerBound:
    """Maximise the increment ratio of ``f`` over pairs with spectra in ``f0``.

    ``budget`` counts random restarts; ``budget_used`` reports total candidate
    evaluations.  Deterministic given (seed, budget), and nondecreasing in
    budget under a fixed seed.
    """
    if norm_kind not in NORM_KINDS:
        raise ValueError(f"norm_kind must be one of {NORM_KINDS}, got {norm_kind!r}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")

    pts = f0.points
    if pts.size == 1:
        return SeminormLowerBound(0.0, None, norm_kind, 0, seed, budget, degenerate=True)

    fvals = np.array([f(x) for x in pts])
    ev = _Evaluator(pts, fvals, norm_kind)
    candidates = []  # (value, phase, (ia, ib, q))

    value, cand = _scalar_probe(ev, dim)
    candidates.append((value, 0, cand))

    if float(pts.size) ** (2 * dim) <= _SWEEP_LIMIT:
        value, cand = _diagonal_sweep(ev, dim)
        if cand is not None:
            candidates.append((value, 1, cand))

    _, _, (ia0, ib0, _) = max(candidates, key=lambda c: (c[0], -c[1]))
    polish_value, polish_q = _ascent(ev, ia0, ib0, np.eye(dim), sweeps)
    candidates.append((polish_value, 2, (ia0, ib0, polish_q)))

    workers = max_workers()
    if workers > 1 and budget > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                lambda r: _random_restart(pts, fvals, norm_kind, dim, seed, r, sweeps),
                range(budget)))
    else:
        results = [_random_restart(pts, fvals, norm_kind, dim, seed, r, sweeps)
                   for r in range(budget)]
    for r, (value, cand, used) in enumerate(results):
        ev.count += used
        candidates.append((value, 3 + r, cand))

    best_value, _, best_cand = max(candidates, key=lambda c: (c[0], -c[1]))
    witness = _witness_from_candidate(f, ev, *best_cand)
    value = witness.ratio_s1 if norm_kind == "schatten1" else witness.ratio_op
    return SeminormLowerBound(value, witness, norm_kind, ev.count, seed, budget)
