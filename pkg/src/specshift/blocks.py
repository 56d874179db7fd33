"""Direct-sum assembly of operator pairs.

A direct sum of N copies of a block pair is never materialised: trace-norm
quantities are additive over blocks, so each block carries a symbolic integer
multiplicity and every aggregate is a sum of multiplicity * block quantity.
``weighted`` performs that product exactly (integer times the exact rational
value of the stored float, rounded once), which keeps bookkeeping identities
bitwise reproducible and safe for huge multiplicities.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from .catalog import ScalarFunction
from .errors import (DegeneratePair, InvariantViolation, PreconditionViolated,
                     RefinementOverflow)
from .hermitian import (HermitianOperator, apply_function, decompose,
                        schatten_norm)
from .loewner import FiniteSpectrumSet
from .search import seminorm_lower_bound

__all__ = [
    "SumBlock",
    "DirectSumPair",
    "BlockRecord",
    "DivergentFamily",
    "weighted",
    "make_block",
    "segment_refine",
    "amplify_to_unit",
    "default_delta_schedule",
    "build_divergent_family",
    "partial_sums",
]

#: subdivision cap for segment refinement
MAX_SUBDIVISION = 2 ** 20


def weighted(multiplicity: int, value: float) -> float:
    """multiplicity * value with the product formed exactly, then rounded."""
    return float(multiplicity * Fraction(value))


@dataclass(frozen=True)
class SumBlock:
    """One block of a direct sum: a pair (A, B) repeated ``multiplicity`` times."""

    a: HermitianOperator
    b: HermitianOperator
    multiplicity: int
    delta_s1: float
    increment_s1: float

    def __post_init__(self):
        if self.a.dim != self.b.dim:
            raise InvariantViolation(
                f"block dims differ: {self.a.dim} != {self.b.dim}")
        if self.multiplicity < 1:
            raise InvariantViolation(
                f"multiplicity must be >= 1, got {self.multiplicity}")
        if not self.delta_s1 > 0.0:
            raise InvariantViolation("block pair is degenerate (A = B)")

    @property
    def weighted_delta_s1(self) -> float:
        return weighted(self.multiplicity, self.delta_s1)

    @property
    def weighted_increment_s1(self) -> float:
        return weighted(self.multiplicity, self.increment_s1)


def make_block(f: ScalarFunction, a: HermitianOperator, b: HermitianOperator,
               multiplicity: int, delta_s1: Optional[float] = None,
               increment_s1: Optional[float] = None) -> SumBlock:
    """Build a block, computing its trace-norm quantities unless supplied."""
    if delta_s1 is None:
        delta_s1 = schatten_norm(b.matrix - a.matrix, 1)
    if increment_s1 is None:
        increment_s1 = schatten_norm(
            apply_function(f, b).matrix - apply_function(f, a).matrix, 1)
    return SumBlock(a, b, int(multiplicity), float(delta_s1), float(increment_s1))


@dataclass(frozen=True)
class DirectSumPair:
    """A list of blocks representing two block-diagonal operators at once."""

    function: ScalarFunction
    blocks: Tuple[SumBlock, ...]

    @property
    def sum_blocks(self) -> Tuple[SumBlock, ...]:
        return self.blocks

    def aggregate_delta_s1(self) -> float:
        total = 0.0
        for blk in self.blocks:
            total += blk.weighted_delta_s1
        return total

    def aggregate_increment_s1(self) -> float:
        total = 0.0
        for blk in self.blocks:
            total += blk.weighted_increment_s1
        return total

    def aggregate_ratio(self) -> float:
        return self.aggregate_increment_s1() / self.aggregate_delta_s1()


def _path_point(a: HermitianOperator, diff: np.ndarray, t: float) -> HermitianOperator:
    if t == 0.0:
        return a
    return HermitianOperator(a.matrix + t * diff)


def segment_refine(f: ScalarFunction, a: HermitianOperator,
                   b: HermitianOperator,
                   n_max: int = MAX_SUBDIVISION) -> Tuple[HermitianOperator, HermitianOperator]:
    """Shrink (A, B) along the straight segment until the function increment
    drops below 1, without decreasing the trace-norm increment ratio.

    If ||f(B)-f(A)||_1 < 1 the pair is returned unchanged.  Otherwise the
    segment t -> f((1-t)A + tB) is subdivided into n equal parts with n
    doubling (2, 4, 8, ...) until every consecutive increment is < 1; the
    sub-segment with the largest increment (smallest index on ties) is
    returned.  Its endpoints are dyadic, so the sub-segment length is exactly
    ||B-A||_1 / n, and the maximal sub-increment is at least 1/n of the total
    by the triangle inequality, which preserves the ratio.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} != {b.dim}")
    diff = b.matrix - a.matrix
    cache = {0.0: apply_function(f, a), 1.0: apply_function(f, b)}
    if schatten_norm(cache[1.0].matrix - cache[0.0].matrix, 1) < 1.0:
        return a, b

    def value_at(t: float) -> HermitianOperator:
        got = cache.get(t)
        if got is None:
            got = apply_function(f, _path_point(a, diff, t))
            cache[t] = got
        return got

    n = 2
    while n <= n_max:
        increments = np.empty(n)
        for k in range(n):
            lo = value_at(k / n)
            hi = value_at((k + 1) / n)
            increments[k] = schatten_norm(hi.matrix - lo.matrix, 1)
        if np.all(increments < 1.0):
            k = int(np.argmax(increments))  # first maximum: smallest k
            left = _path_point(a, diff, k / n)
            right = b if k + 1 == n else _path_point(a, diff, (k + 1) / n)
            return left, right
        n *= 2
    raise RefinementOverflow(
        f"no subdivision up to {n_max} brought all increments below 1")


def amplify_to_unit(f: ScalarFunction, a: HermitianOperator,
                    b: HermitianOperator) -> DirectSumPair:
    """Repeat the pair so the aggregate increment lands in [1/2, 1].

    Requires 0 < ||f(B)-f(A)||_1 < 1 (refine first if needed).  The
    multiplicity is the exact floor of the reciprocal increment; the
    aggregate ratio equals the block ratio because both norms scale by the
    same integer.
    """
    delta_s1 = schatten_norm(b.matrix - a.matrix, 1)
    if not delta_s1 > 0.0:
        raise DegeneratePair("cannot amplify a pair with A = B")
    increment = schatten_norm(
        apply_function(f, b).matrix - apply_function(f, a).matrix, 1)
    if not 0.0 < increment < 1.0:
        raise PreconditionViolated(
            f"increment must lie in (0, 1), got {increment!r}")
    multiplicity = int(Fraction(1) / Fraction(increment))
    block = make_block(f, a, b, multiplicity,
                       delta_s1=delta_s1, increment_s1=increment)
    return DirectSumPair(f, (block,))


@dataclass(frozen=True)
class BlockRecord:
    """Outcome of one divergence-family block construction."""

    index: int
    delta: float
    target_ratio: float
    achieved_ratio: float
    block: Optional[SumBlock]
    status: str  # "ok" | "failed"


@dataclass(frozen=True)
class DivergentFamily:
    """Blocks whose aggregate ratios exceed 2**n inside shrinking spectra
    windows, truncated at the first block that missed its target."""

    function: ScalarFunction
    records: Tuple[BlockRecord, ...]
    failure: Optional[BlockRecord]

    def __post_init__(self):
        for rec in self.records:
            blk = rec.block
            if rec.status != "ok" or blk is None:
                raise InvariantViolation("family records must be successful blocks")
            for op in (blk.a, blk.b):
                top = float(np.abs(decompose(op).eigenvalues).max())
                if not top < rec.delta:
                    raise InvariantViolation(
                        f"block {rec.index}: spectrum reaches {top:g}, "
                        f"not strictly inside (-{rec.delta:g}, {rec.delta:g})")
            agg = blk.weighted_increment_s1
            if not 0.5 - 1e-9 <= agg <= 1.0 + 1e-9:
                raise InvariantViolation(
                    f"block {rec.index}: aggregate increment {agg!r} outside [1/2, 1]")

    @property
    def sum_blocks(self) -> Tuple[SumBlock, ...]:
        return tuple(rec.block for rec in self.records)

    @property
    def all_records(self) -> Tuple[BlockRecord, ...]:
        if self.failure is None:
            return self.records
        return self.records + (self.failure,)


def default_delta_schedule(count: int, delta0: float = 1.0) -> Tuple[float, ...]:
    """delta_n = delta0 * 2**-n for n = 1..count."""
    if not delta0 > 0:
        raise ValueError(f"delta0 must be positive, got {delta0!r}")
    return tuple(delta0 * 2.0 ** -n for n in range(1, count + 1))


def _block_grid(delta: float, level: int) -> FiniteSpectrumSet:
    """Grid inside [-delta/2, delta/2]: 65 equispaced points plus a dyadic
    ladder accumulating at 0 so kink quotients can reach the 2**level target."""
    half = delta / 2.0
    ladder = half * 0.5 ** np.arange(1, 2 * level + 9)
    pts = np.unique(np.concatenate([
        np.linspace(-half, half, 65), ladder, -ladder, [0.0]]))
    return FiniteSpectrumSet(pts)


def _block_seed(seed: int, index: int) -> int:
    return seed * 1_000_003 + index


def build_divergent_family(f: ScalarFunction, delta_schedule: Sequence[float],
                           block_count: int, per_block_budget: int, seed: int,
                           dim: int = 2) -> DivergentFamily:
    """For each n <= block_count, search for a pair with ratio above 2**n
    inside the n-th spectra window, refine it below unit increment, and
    amplify it back into [1/2, 1].

    A block that misses its target truncates the family; the miss is recorded
    as data, not raised.  That outcome is expected for functions whose
    increments stay controlled near 0.
    """
    if block_count < 1:
        raise ValueError(f"block_count must be >= 1, got {block_count}")
    schedule = [float(d) for d in delta_schedule]
    if len(schedule) < block_count:
        raise ValueError(
            f"schedule has {len(schedule)} entries for {block_count} blocks")
    if any(d <= 0 for d in schedule) or any(
            schedule[i + 1] >= schedule[i] for i in range(len(schedule) - 1)):
        raise ValueError("delta schedule must be strictly decreasing and positive")

    records = []
    failure = None
    for index in range(1, block_count + 1):
        delta = schedule[index - 1]
        target = 2.0 ** index
        bound = seminorm_lower_bound(
            f, _block_grid(delta, index), dim, "schatten1",
            per_block_budget, _block_seed(seed, index))
        achieved = 0.0
        block = None
        if bound.witness is not None:
            pair_a, pair_b = bound.witness.a, bound.witness.b
            try:
                refined_a, refined_b = segment_refine(f, pair_a, pair_b)
                amplified = amplify_to_unit(f, refined_a, refined_b)
            except (PreconditionViolated, DegeneratePair, RefinementOverflow):
                amplified = None
            if amplified is not None:
                block = amplified.blocks[0]
                achieved = amplified.aggregate_ratio()
        if block is not None and achieved > target:
            records.append(BlockRecord(index, delta, target, achieved, block, "ok"))
        else:
            failure = BlockRecord(index, delta, target, achieved, block, "failed")
            break
    return DivergentFamily(f, tuple(records), failure)


def partial_sums(family, upto: int) -> Tuple[float, float]:
    """(sum of N_n ||B_n - A_n||_1, sum of N_n ||f(B_n) - f(A_n)||_1) over the
    first ``upto`` blocks.  Accepts a DirectSumPair or a DivergentFamily."""
    blocks = family.sum_blocks
    if not 0 <= upto <= len(blocks):
        raise IndexError(
            f"upto = {upto} outside [0, {len(blocks)}] available blocks")
    perturbation_sum = 0.0
    increment_sum = 0.0
    for blk in blocks[:upto]:
        perturbation_sum += blk.weighted_delta_s1
        increment_sum += blk.weighted_increment_s1
    return perturbation_sum, increment_sum
