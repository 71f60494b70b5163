"""Exact evaluators and brute-force verifiers for the multi-index bounds.

Three inequalities are covered, all evaluated by exhaustive enumeration in
exact or double arithmetic:

* ``factorial_ratio_check`` -- for any split alpha = a1 + ... + ap,
  (|a1|! ... |ap|!) / (a1! ... ap!)  <=  |alpha|! / alpha!   (exact rationals).

* ``summation_bound_check`` -- the p,q-fold decomposition double sum weighted
  by star-dagger factors is bounded by
  a^(n(p+q-2)) p^(2n) q^(2n) (sum X^2)^((p+q)/2) with a = sqrt(1 + pi^2/6).

* ``bilinear_bound_check`` -- |X^t B conj(X)| for a lower-triangular
  multi-index matrix B against the split bound 2^n n! |X|^2 max(...).

Index-range reading for the bilinear bound
------------------------------------------
The bound maximizes over a subset P of the coordinate directions.  After the
change of variables to (row beta, difference alpha = row - column), the
coordinates in P run through beta_i in {alpha_i, ..., 2 alpha_i - 1} inside
the square-rooted sum, and the remaining coordinates are maximized over
beta_i >= 2 alpha_i; the outer sum over the remaining alpha-coordinates sits
outside the square root.  All beta are constrained to |beta| <= l, the index
set on which B lives.  The randomized sweeps in the test suite would expose a
wrong reading by producing violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as _cartesian
from typing import Mapping, Sequence

import numpy as np

from .multiindex import (
    MultiIndex,
    decompositions,
    enumerate_upto,
    star_dagger,
)

#: Relative slack applied to every inequality check; the bounds are exact
#: statements and the slack only absorbs floating-point roundoff.
REL_TOLERANCE = 1e-9


def inverse_square_series_constant() -> float:
    """sqrt(1 + sum_{j>=1} 1/j^2) = sqrt(1 + pi^2/6) ~ 1.6265765...

    Computed from the closed form of the series; the partial sums increase
    to this value (see the test suite for the tail-bound evaluation).
    """
    return math.sqrt(1.0 + math.pi**2 / 6.0)


@dataclass(frozen=True)
class CheckResult:
    lhs: float
    rhs: float
    holds: bool


@dataclass(frozen=True)
class FactorialCheckResult:
    lhs: Fraction
    rhs: Fraction
    holds: bool


def factorial_ratio_check(parts: Sequence[MultiIndex]) -> FactorialCheckResult:
    """Exact-rational check of the decomposition factorial inequality.

    lhs = prod_j |a_j|! / prod_j a_j!,  rhs = |alpha|!/alpha! for
    alpha = sum_j a_j.  Exact arithmetic; ``holds`` is lhs <= rhs.
    """
    if not parts:
        raise ValueError("need at least one part")
    dim = parts[0].dim
    if any(p.dim != dim for p in parts):
        raise ValueError("all parts must share a dimension")
    total = parts[0]
    for p in parts[1:]:
        total = total + p

    lhs_num = math.prod(math.factorial(p.order) for p in parts)
    lhs_den = math.prod(math.factorial(c) for p in parts for c in p.components)
    rhs_num = math.factorial(total.order)
    rhs_den = math.prod(math.factorial(c) for c in total.components)
    lhs = Fraction(lhs_num, lhs_den)
    rhs = Fraction(rhs_num, rhs_den)
    return FactorialCheckResult(lhs, rhs, lhs <= rhs)


@dataclass(frozen=True)
class IndexedVector:
    """Vector of reals indexed by all multi-indices with |alpha| <= max_order."""

    dim: int
    max_order: int
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(enumerate_upto(self.dim, self.max_order))
        if len(self.values) != n:
            raise ValueError(f"expected {n} values, got {len(self.values)}")

    @staticmethod
    def from_array(dim: int, max_order: int, values) -> "IndexedVector":
        return IndexedVector(dim, max_order, tuple(float(v) for v in values))

    @staticmethod
    def from_mapping(dim: int, max_order: int, values: Mapping[MultiIndex, float]) -> "IndexedVector":
        order = enumerate_upto(dim, max_order)
        if set(values) != set(order):
            raise ValueError("keys must be exactly the indices with |alpha| <= max_order")
        return IndexedVector(dim, max_order, tuple(float(values[a]) for a in order))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


class _DecompositionTable:
    """Flat index arrays for all p-part decompositions of every |alpha| <= l."""

    def __init__(self, dim: int, max_order: int, parts: int):
        order = enumerate_upto(dim, max_order)
        index_of = {a: i for i, a in enumerate(order)}
        rows_alpha: list[int] = []
        rows_parts: list[list[int]] = []
        for a in order:
            ai = index_of[a]
            for tup in decompositions(a, parts):
                rows_alpha.append(ai)
                rows_parts.append([index_of[p] for p in tup])
        self.size = len(order)
        self.row_alpha = np.asarray(rows_alpha, dtype=np.intp)
        self.row_parts = np.asarray(rows_parts, dtype=np.intp)

    def weighted_sums(self, y: np.ndarray) -> np.ndarray:
        """S(alpha) = sum over decompositions of prod_j y[part_j]."""
        out = np.zeros(self.size)
        np.add.at(out, self.row_alpha, y[self.row_parts].prod(axis=1))
        return out


_decomp_cache: dict[tuple[int, int, int], _DecompositionTable] = {}


def _decomp_table(dim: int, max_order: int, parts: int) -> _DecompositionTable:
    key = (dim, max_order, parts)
    if key not in _decomp_cache:
        _decomp_cache[key] = _DecompositionTable(*key)
    return _decomp_cache[key]


def summation_bound_check(x: IndexedVector, p: int, q: int) -> CheckResult:
    """Exhaustive evaluation of the p,q decomposition double sum bound.

    lhs sums, over every |alpha| <= l and every split of alpha into p and
    into q ordered parts, the product of the X-values weighted by
    (star-dagger of alpha)^2 over the star-daggers of the parts.  rhs is
    a^(n(p+q-2)) p^(2n) q^(2n) (sum X^2)^((p+q)/2).
    """
    if p < 2 or q < 2:
        raise ValueError("part counts p, q must both be >= 2")
    xs = x.as_array()
    if np.any(xs < 0):
        raise ValueError("X must be non-negative")

    order = enumerate_upto(x.dim, x.max_order)
    sd = np.asarray([star_dagger(a) for a in order], dtype=float)
    y = xs / sd
    s_p = _decomp_table(x.dim, x.max_order, p).weighted_sums(y)
    s_q = s_p if q == p else _decomp_table(x.dim, x.max_order, q).weighted_sums(y)
    lhs = float(np.sum(sd**2 * s_p * s_q))

    a = inverse_square_series_constant()
    n = x.dim
    rhs = a ** (n * (p + q - 2)) * p ** (2 * n) * q ** (2 * n) * float(np.sum(xs**2)) ** ((p + q) / 2)
    return CheckResult(lhs, rhs, lhs <= rhs * (1.0 + REL_TOLERANCE))


@dataclass(frozen=True)
class TriangularIndexedMatrix:
    """Matrix suffixed by multi-indices, nonzero only for column <= row."""

    dim: int
    max_order: int
    entries: dict[tuple[MultiIndex, MultiIndex], complex] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for (row, col), _ in self.entries.items():
            if row.dim != self.dim or col.dim != self.dim:
                raise ValueError("entry indices must match the matrix dimension")
            if row.order > self.max_order:
                raise ValueError(f"row index {row} exceeds max order {self.max_order}")
            if not col.leq(row):
                raise ValueError(f"entry ({row}, {col}) violates lower triangularity")

    def dense(self) -> np.ndarray:
        order = enumerate_upto(self.dim, self.max_order)
        index_of = {a: i for i, a in enumerate(order)}
        out = np.zeros((len(order), len(order)), dtype=complex)
        for (row, col), v in self.entries.items():
            out[index_of[row], index_of[col]] = v
        return out


class _BilinearBoundTable:
    """Index structure for the split bound: per coordinate subset P, an outer
    list (one item per assignment of the non-P alpha coordinates) of middle
    lists (one per P-assignment of alpha and beta) of innermost (row, col)
    candidates over which |b|^2 is maximized."""

    def __init__(self, dim: int, max_order: int):
        order = enumerate_upto(dim, max_order)
        index_of = {a: i for i, a in enumerate(order)}
        self.size = len(order)
        self.subset_tables: list[list[list[list[tuple[int, int]]]]] = []
        l = max_order

        all_coords = list(range(dim))
        for mask in range(2 ** dim):
            in_p = [j for j in all_coords if (mask >> j) & 1]
            out_p = [j for j in all_coords if not (mask >> j) & 1]
            outer_items: list[list[list[tuple[int, int]]]] = []
            for a_out in _tuples_upto(len(out_p), l):
                budget = l - sum(a_out)
                middle: list[list[tuple[int, int]]] = []
                for a_in in _tuples_upto(len(in_p), budget):
                    alpha = _merge(dim, in_p, a_in, out_p, a_out)
                    beta_in_ranges = [range(a, 2 * a) for a in a_in]
                    for b_in in _cartesian(*beta_in_ranges):
                        candidates: list[tuple[int, int]] = []
                        remaining = l - sum(b_in)
                        for b_out in _tuples_upto(len(out_p), remaining):
                            if any(b < 2 * a for b, a in zip(b_out, a_out)):
                                continue
                            beta = _merge(dim, in_p, b_in, out_p, b_out)
                            col = tuple(b - a for b, a in zip(beta, alpha))
                            if any(c < 0 for c in col):
                                continue
                            candidates.append(
                                (index_of[MultiIndex(beta)], index_of[MultiIndex(col)])
                            )
                        if candidates:
                            middle.append(candidates)
                if middle:
                    outer_items.append(middle)
            self.subset_tables.append(outer_items)

    def bound_factor(self, absq: np.ndarray) -> float:
        """max over subsets of sum_outer sqrt(sum_middle max_inner |b|^2)."""
        best = 0.0
        for outer_items in self.subset_tables:
            total = 0.0
            for middle in outer_items:
                inner = 0.0
                for candidates in middle:
                    inner += max(absq[r, c] for r, c in candidates)
                total += math.sqrt(inner)
            best = max(best, total)
        return best


def _tuples_upto(k: int, budget: int) -> list[tuple[int, ...]]:
    """All k-tuples of non-negative integers with sum <= budget."""
    if budget < 0:
        return []
    if k == 0:
        return [()]
    out = []
    for first in range(budget + 1):
        for rest in _tuples_upto(k - 1, budget - first):
            out.append((first,) + rest)
    return out


def _merge(dim, pos_a, vals_a, pos_b, vals_b) -> tuple[int, ...]:
    out = [0] * dim
    for p, v in zip(pos_a, vals_a):
        out[p] = v
    for p, v in zip(pos_b, vals_b):
        out[p] = v
    return tuple(out)


_bilinear_cache: dict[tuple[int, int], _BilinearBoundTable] = {}


def _bilinear_table(dim: int, max_order: int) -> _BilinearBoundTable:
    key = (dim, max_order)
    if key not in _bilinear_cache:
        _bilinear_cache[key] = _BilinearBoundTable(*key)
    return _bilinear_cache[key]


def bilinear_bound_check(b: TriangularIndexedMatrix, x) -> CheckResult:
    """|X^t B conj(X)| against 2^n n! |X|^2 times the split max factor.

    ``x`` is a complex vector over the enumeration order of the index set.
    """
    if b.max_order < 1:
        raise ValueError("max order must be >= 1")
    xv = np.asarray(x, dtype=complex)
    dense = b.dense()
    if xv.shape != (dense.shape[0],):
        raise ValueError(f"X must have length {dense.shape[0]}")

    lhs = abs(complex(xv @ dense @ np.conj(xv)))
    table = _bilinear_table(b.dim, b.max_order)
    factor = table.bound_factor(np.abs(dense) ** 2)
    n = b.dim
    rhs = 2**n * math.factorial(n) * float(np.sum(np.abs(xv) ** 2)) * factor
    return CheckResult(lhs, rhs, lhs <= rhs * (1.0 + REL_TOLERANCE))


@dataclass(frozen=True)
class SweepResult:
    trials: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def sweep_factorial(dim_max: int = 3, order_max: int = 6, parts_max: int = 4) -> SweepResult:
    """Check the factorial inequality on EVERY decomposition in range.

    Exhaustive and exact: integer cross-multiplied comparison, no floats.
    """
    trials = 0
    violations = []
    fact = [math.factorial(k) for k in range(order_max + 1)]
    for dim in range(1, dim_max + 1):
        for alpha in enumerate_upto(dim, order_max):
            rhs_num = fact[alpha.order]
            rhs_den = math.prod(fact[c] for c in alpha.components)
            for parts in range(1, parts_max + 1):
                for tup in decompositions(alpha, parts):
                    lhs_num = math.prod(fact[p.order] for p in tup)
                    lhs_den = math.prod(fact[c] for p in tup for c in p.components)
                    trials += 1
                    if lhs_num * rhs_den > rhs_num * lhs_den:
                        violations.append((alpha, tup))
    return SweepResult(trials, violations)


def sweep_summation(
    dims: Sequence[int] = (1, 2),
    max_orders: Sequence[int] = (1, 2, 3, 4, 5),
    part_counts: Sequence[tuple[int, int]] = ((2, 2), (2, 3), (3, 2), (3, 3)),
    trials: int = 200,
    seed: int = 0,
) -> SweepResult:
    """Randomized non-negative X sweep of the decomposition sum bound."""
    rng = np.random.default_rng(seed)
    total = 0
    violations = []
    for dim in dims:
        for l in max_orders:
            n = len(enumerate_upto(dim, l))
            for p, q in part_counts:
                for _ in range(trials):
                    x = IndexedVector.from_array(dim, l, rng.random(n))
                    res = summation_bound_check(x, p, q)
                    total += 1
                    if not res.holds:
                        violations.append((dim, l, p, q, res))
    return SweepResult(total, violations)


def sweep_bilinear(
    dims: Sequence[int] = (1, 2),
    max_orders: Sequence[int] = (1, 2, 3, 4),
    trials: int = 200,
    seed: int = 0,
) -> SweepResult:
    """Randomized complex (B, X) sweep of the triangular bilinear bound."""
    rng = np.random.default_rng(seed)
    total = 0
    violations = []
    for dim in dims:
        for l in max_orders:
            order = enumerate_upto(dim, l)
            pairs = [(r, c) for r in order for c in order if c.leq(r)]
            for _ in range(trials):
                vals = (rng.standard_normal(len(pairs)) + 1j * rng.standard_normal(len(pairs))) / math.sqrt(2)
                entries = {pair: complex(v) for pair, v in zip(pairs, vals)}
                b = TriangularIndexedMatrix(dim, l, entries)
                x = (rng.standard_normal(len(order)) + 1j * rng.standard_normal(len(order))) / math.sqrt(2)
                res = bilinear_bound_check(b, x)
                total += 1
                if not res.holds:
                    violations.append((dim, l, res))
    return SweepResult(total, violations)
