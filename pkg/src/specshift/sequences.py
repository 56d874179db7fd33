"""Scalar sequence machinery for jointly diagonalisable pairs.

A commuting compact self-adjoint pair is simultaneously diagonal in some
orthonormal basis, so its increment bookkeeping reduces to scalar sequences
(t_k, s_k) with per-level constraints

    0 < |t_k - s_k| < 2**-k   and   |f(t_k) - f(s_k)| / |t_k - s_k| > 2**k.

Choosing the multiplicity n_k = floor(1/|f(t_k) - f(s_k)|) + 1 then makes the
weighted increments sum past any bound (each term is at least 1) while the
weighted perturbations stay below the geometric majorant 2**(1-k) per level.
``diagonal_embedding`` realises the same numbers as 1x1 direct-sum blocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple, Union

import numpy as np

from .blocks import DirectSumPair, make_block, weighted
from .catalog import ScalarFunction
from .errors import DegenerateIncrement, InvariantViolation
from .hermitian import HermitianOperator

__all__ = [
    "SequenceWitness",
    "NotFound",
    "make_sequence_witness",
    "scalar_ratio_witnesses",
    "multiplicity_sequence",
    "LevelCheck",
    "DivergenceReport",
    "divergence_check",
    "diagonal_embedding",
]


@dataclass(frozen=True)
class SequenceWitness:
    """Finite prefix of sequences violating a uniform difference-quotient
    bound at every level; ``n`` holds multiplicities once filled.

    ``decay_constant`` is the recorded c with |t_k|, |s_k| <= c * 2**-k.
    """

    function: ScalarFunction
    t: Tuple[float, ...]
    s: Tuple[float, ...]
    n: Optional[Tuple[int, ...]]
    decay_constant: float

    @property
    def length(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class NotFound:
    """Search outcome when some level admits no qualifying pair.

    Persistent failures from a level onward are the numerical signature of a
    finite difference-quotient bound (local Lipschitzness) at that scale.
    """

    level: int
    best_quotient: float
    levels_found: int


def make_sequence_witness(f: ScalarFunction, t, s, n=None) -> SequenceWitness:
    """Validate the per-level constraints and record the decay constant."""
    t = tuple(float(x) for x in t)
    s = tuple(float(x) for x in s)
    if len(t) != len(s):
        raise InvariantViolation(f"length mismatch: {len(t)} != {len(s)}")
    if n is not None:
        n = tuple(int(x) for x in n)
        if len(n) != len(t):
            raise InvariantViolation(
                f"multiplicity length mismatch: {len(n)} != {len(t)}")
        if any(x < 1 for x in n):
            raise InvariantViolation("multiplicities must be positive")
    c = 1.0
    for k, (tk, sk) in enumerate(zip(t, s), start=1):
        level_scale = 2.0 ** -k
        c = max(c, abs(tk) / level_scale, abs(sk) / level_scale)
        gap = abs(tk - sk)
        if not 0.0 < gap < level_scale:
            raise InvariantViolation(
                f"level {k}: |t-s| = {gap!r} not in (0, 2**-{k})")
        quotient = abs(f(tk) - f(sk)) / gap
        if not quotient > 2.0 ** k:
            raise InvariantViolation(
                f"level {k}: quotient {quotient!r} does not exceed 2**{k}")
    return SequenceWitness(f, t, s, n, c)


def _level_points(level: int, search_grid: int, total_levels: int,
                  seed: int) -> np.ndarray:
    """Search backbone at one level: an equispaced grid on [-2**-k, 2**-k],
    a dyadic ladder accumulating at 0 (the equispaced grid alone cannot
    resolve quotients past ~2**log2(grid)), and seeded random points."""
    radius = 2.0 ** -level
    ladder = radius * 0.5 ** np.arange(1, max(64, 2 * total_levels) + 1)
    rng = np.random.default_rng([seed, level])
    extras = rng.uniform(-radius, radius, size=64)
    return np.unique(np.concatenate([
        np.linspace(-radius, radius, search_grid), ladder, -ladder,
        [0.0], extras]))


def _best_level_pair(f: ScalarFunction, pts: np.ndarray, radius: float):
    """Best difference quotient over point pairs with |t - s| < radius.

    Scans the upper triangle in row-major chunks; the first maximum wins, so
    the outcome is deterministic."""
    vals = np.array([f(x) for x in pts])
    size = pts.size
    best_q = -math.inf
    best_pair = None
    chunk = 256
    for lo in range(0, size - 1, chunk):
        hi = min(lo + chunk, size - 1)
        rows = np.arange(lo, hi)
        dx = pts[None, :] - pts[rows, None]
        df = vals[None, :] - vals[rows, None]
        mask = np.triu(np.ones((hi - lo, size), dtype=bool), k=lo + 1)
        mask &= np.abs(dx) < radius
        mask &= dx != 0.0
        if not mask.any():
            continue
        q = np.where(mask, np.abs(df) / np.where(dx == 0.0, 1.0, np.abs(dx)), -math.inf)
        flat = int(np.argmax(q))
        i, j = lo + flat // size, flat % size
        if q.flat[flat] > best_q:
            best_q = float(q.flat[flat])
            best_pair = (float(pts[i]), float(pts[j]))
    return best_q, best_pair


def scalar_ratio_witnesses(f: ScalarFunction, levels: int,
                           search_grid: int = 2001,
                           seed: int = 0) -> Union[SequenceWitness, NotFound]:
    """Search each level k = 1..levels for a pair beating quotient 2**k.

    Returns a validated witness when every level succeeds, otherwise a
    NotFound carrying the first failing level and the best quotient seen
    there.  Deterministic given (seed, search_grid).
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if search_grid < 3:
        raise ValueError(f"search_grid must be >= 3, got {search_grid}")
    t_seq = []
    s_seq = []
    for k in range(1, levels + 1):
        radius = 2.0 ** -k
        pts = _level_points(k, search_grid, levels, seed)
        best_q, best_pair = _best_level_pair(f, pts, radius)
        if best_pair is None or not best_q > 2.0 ** k:
            return NotFound(level=k, best_quotient=best_q, levels_found=k - 1)
        x, y = best_pair
        t_seq.append(max(x, y))
        s_seq.append(min(x, y))
    return make_sequence_witness(f, t_seq, s_seq)


def _floor_reciprocal(value: float) -> int:
    """floor(1/value) in exact rational arithmetic on the stored float."""
    return int(Fraction(1) / Fraction(value))


def multiplicity_sequence(f: ScalarFunction, witness: SequenceWitness) -> SequenceWitness:
    """Fill n_k = floor(1 / |f(t_k) - f(s_k)|) + 1 with exact integer
    arithmetic on the double-precision increments."""
    mults = []
    for k, (tk, sk) in enumerate(zip(witness.t, witness.s), start=1):
        gap = abs(f(tk) - f(sk))
        if gap == 0.0:
            raise DegenerateIncrement(f"level {k}: f(t) = f(s)")
        mults.append(_floor_reciprocal(gap) + 1)
    return SequenceWitness(witness.function, witness.t, witness.s,
                           tuple(mults), witness.decay_constant)


@dataclass(frozen=True)
class LevelCheck:
    k: int
    t: float
    s: float
    n: int
    weighted_perturbation: float
    weighted_increment: float
    bound: float  # 2**(1-k)
    ok: bool


@dataclass(frozen=True)
class DivergenceReport:
    """Per-level checks plus the two partial sums and their analytic bounds:
    the perturbation sum stays below sum(2**(1-k)) < 2 while the increment
    sum is at least the number of levels."""

    levels: Tuple[LevelCheck, ...]
    perturbation_sum: float
    increment_sum: float
    perturbation_majorant: float
    increment_floor: float


def divergence_check(witness: SequenceWitness, upto: int) -> DivergenceReport:
    """Verify n_k |t_k - s_k| < 2**(1-k) per level and accumulate both
    weighted partial sums over the first ``upto`` levels.

    The per-level bound is implied by the witness invariants, so its failure
    raises InvariantViolation naming the level.
    """
    if witness.n is None:
        raise ValueError("witness has no multiplicities; fill them first")
    if not 0 <= upto <= witness.length:
        raise IndexError(f"upto = {upto} outside [0, {witness.length}]")
    f = witness.function
    levels = []
    perturbation_sum = 0.0
    increment_sum = 0.0
    for k in range(1, upto + 1):
        tk, sk, nk = witness.t[k - 1], witness.s[k - 1], witness.n[k - 1]
        wp = weighted(nk, abs(tk - sk))
        wi = weighted(nk, abs(f(tk) - f(sk)))
        bound = 2.0 ** (1 - k)
        ok = wp < bound
        if not ok:
            raise InvariantViolation(
                f"level {k}: n|t-s| = {wp!r} reaches the bound {bound!r}")
        levels.append(LevelCheck(k, tk, sk, nk, wp, wi, bound, ok))
        perturbation_sum += wp
        increment_sum += wi
    return DivergenceReport(
        levels=tuple(levels),
        perturbation_sum=perturbation_sum,
        increment_sum=increment_sum,
        perturbation_majorant=2.0 - 2.0 ** (1 - upto) if upto else 0.0,
        increment_floor=float(upto),
    )


def diagonal_embedding(witness: SequenceWitness, upto: int) -> DirectSumPair:
    """Realise the first ``upto`` levels as 1x1 blocks (t_k) vs (s_k) with
    multiplicity n_k; partial sums of the result reproduce the divergence
    report sums exactly (same arithmetic)."""
    if witness.n is None:
        raise ValueError("witness has no multiplicities; fill them first")
    if not 0 <= upto <= witness.length:
        raise IndexError(f"upto = {upto} outside [0, {witness.length}]")
    blocks = tuple(
        make_block(witness.function,
                   HermitianOperator([[witness.t[k]]]),
                   HermitianOperator([[witness.s[k]]]),
                   witness.n[k])
        for k in range(upto))
    return DirectSumPair(witness.function, blocks)
