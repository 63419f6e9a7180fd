"""Parity-biased laws on sign vectors.

``nu(m, theta)`` is the law on ``{-1, +1}^m`` that mixes the uniform law
(weight ``1 - theta``) with the uniform law on vectors whose product of
entries is ``+1`` (weight ``theta``).  Any ``m - 1`` coordinates are
independent fair signs, while splitting all ``m`` coordinates into two
groups gives maximal correlation ``theta`` and ``alpha = theta / 4``.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from .dependence import JointTable, alpha_exact, rho_svd
from .errors import BadArity, BadSubset
from .exact import FiniteDistribution, as_rational, is_independent, marginal, uniform

SIGNS = (-1, 1)
PERMUTATION_SAMPLE_SIZE = 100
PERMUTATION_SEED = 20_260_101


@dataclass(frozen=True)
class NuSpec:
    m: int
    theta: Fraction

    def __post_init__(self):
        object.__setattr__(self, "theta", as_rational(self.theta))
        if self.m < 3:
            raise ValueError(f"m must be at least 3, got {self.m}")
        if not 0 <= self.theta <= 1:
            raise ValueError(f"theta must lie in [0, 1], got {self.theta}")


def parity(x: Sequence[int]) -> int:
    return math.prod(x)


def nu_pmf(spec: NuSpec, x: Sequence[int]) -> Fraction:
    if len(x) != spec.m:
        raise BadArity(f"sign vector of length {len(x)} for m={spec.m}")
    if any(v not in SIGNS for v in x):
        raise ValueError(f"{x} is not a sign vector")
    bias = spec.theta if parity(x) == 1 else -spec.theta
    return (1 + bias) / 2 ** spec.m


@lru_cache(maxsize=256)
def nu_dist(spec: NuSpec) -> FiniteDistribution:
    return FiniteDistribution(
        (x, nu_pmf(spec, x)) for x in itertools.product(SIGNS, repeat=spec.m)
    )


@lru_cache(maxsize=4096)
def nu_marginal(spec: NuSpec, coords: tuple[int, ...]) -> FiniteDistribution:
    """Law of the coordinates ``coords`` (0-based, in order), by explicit summation.

    The dropped coordinates only enter through their product, so the sum
    runs over a count of completions by parity instead of over ``2^m``
    vectors.  Works for any ``m``.
    """
    coords = tuple(coords)
    if not coords or len(set(coords)) != len(coords) or any(not 0 <= c < spec.m for c in coords):
        raise BadArity(f"coordinates {coords} invalid for m={spec.m}")
    # count[p]: number of sign assignments to the dropped coordinates with product p
    count = {1: 1, -1: 0}
    for _ in range(spec.m - len(coords)):
        count = {1: count[1] + count[-1], -1: count[-1] + count[1]}
    pairs = []
    for x in itertools.product(SIGNS, repeat=len(coords)):
        px = parity(x)
        total = Fraction(0)
        for p, n in count.items():
            if n:
                bias = spec.theta if px * p == 1 else -spec.theta
                total += n * (1 + bias) / 2 ** spec.m
        pairs.append((x, total))
    return FiniteDistribution(pairs)


def nu_restricted(spec: NuSpec, coords: Sequence[int]) -> FiniteDistribution:
    """Closed form of a proper marginal: uniform on sign vectors of that length."""
    coords = tuple(coords)
    if not 1 <= len(coords) <= spec.m - 1:
        raise BadSubset(f"need between 1 and {spec.m - 1} coordinates, got {len(coords)}")
    if len(set(coords)) != len(coords) or any(not 0 <= c < spec.m for c in coords):
        raise BadSubset(f"coordinates {coords} invalid for m={spec.m}")
    return uniform(itertools.product(SIGNS, repeat=len(coords)))


def split_table(spec: NuSpec, left: Sequence[int], right: Sequence[int]) -> JointTable:
    """Joint table between the sign sub-vectors at ``left`` and ``right``."""
    left, right = tuple(left), tuple(right)
    law = nu_marginal(spec, left + right)
    k = len(left)
    pairs = FiniteDistribution((( x[:k], x[k:]), p) for x, p in law)
    return JointTable.from_distribution(pairs)


@dataclass(frozen=True)
class SplitResult:
    left: tuple[int, ...]
    right: tuple[int, ...]
    rho: float
    alpha: Fraction


@dataclass
class Lemma26Report:
    spec: NuSpec
    permutations_checked: int
    permutation_invariant: bool
    fair_marginals: bool
    subsets_independent: bool
    splits: list[SplitResult] = field(default_factory=list)
    rho_tol: float = 1e-9

    @property
    def splits_ok(self) -> bool:
        return all(abs(s.rho - float(self.spec.theta)) <= self.rho_tol
                   and 4 * s.alpha == self.spec.theta for s in self.splits)

    @property
    def passed(self) -> bool:
        return (self.permutation_invariant and self.fair_marginals
                and self.subsets_independent and self.splits_ok)

    def to_dict(self) -> dict:
        return {
            "m": self.spec.m,
            "theta": f"{self.spec.theta.numerator}/{self.spec.theta.denominator}",
            "permutations_checked": self.permutations_checked,
            "permutation_invariant": self.permutation_invariant,
            "fair_marginals": self.fair_marginals,
            "subsets_independent": self.subsets_independent,
            "splits": [
                {"left": list(s.left), "right": list(s.right), "rho": s.rho,
                 "alpha": f"{s.alpha.numerator}/{s.alpha.denominator}"}
                for s in self.splits
            ],
            "splits_ok": self.splits_ok,
            "passed": self.passed,
        }


def _permutations(m: int):
    if m <= 6:
        return list(itertools.permutations(range(m)))
    rng = random.Random(PERMUTATION_SEED)
    perms = []
    for _ in range(PERMUTATION_SAMPLE_SIZE):
        p = list(range(m))
        rng.shuffle(p)
        perms.append(tuple(p))
    return perms


def check_lemma_2_6(spec: NuSpec, *, rho_tol: float = 1e-9) -> Lemma26Report:
    """Check permutation invariance, fair marginals, independence of every
    ``m - 1`` coordinates, and ``4 alpha = rho = theta`` on every bipartition."""
    dist = nu_dist(spec)
    perms = _permutations(spec.m)
    perm_ok = all(
        nu_pmf(spec, tuple(x[i] for i in perm)) == p for perm in perms for x, p in dist
    )
    fair = uniform(((-1,), (1,)))
    fair_ok = all(marginal(dist, (i,)) == fair for i in range(spec.m))
    subsets_ok = True
    for drop in range(spec.m):
        keep = tuple(i for i in range(spec.m) if i != drop)
        sub = marginal(dist, keep)
        if not is_independent(sub, [(i,) for i in range(len(keep))]):
            subsets_ok = False
    splits = []
    rest = tuple(range(1, spec.m))
    for r in range(0, spec.m - 1):
        for extra in itertools.combinations(rest, r):
            left = (0,) + extra
            right = tuple(i for i in range(spec.m) if i not in left)
            table = split_table(spec, left, right)
            splits.append(SplitResult(left, right, rho_svd(table), alpha_exact(table)))
    return Lemma26Report(spec, len(perms), perm_ok, fair_ok, subsets_ok, splits, rho_tol)
