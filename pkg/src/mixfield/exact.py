"""Exact finite probability distributions over hashable labels.

All probabilities are :class:`fractions.Fraction` values.  Distributions are
immutable; every operation returns a new object.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Any, Callable, Hashable, Iterable, Iterator, Sequence

from .errors import BadArity, DuplicateLabel, NegativeProb, SumNotOne, TooManyAtoms

Rational = Fraction


def as_rational(value: Any) -> Fraction:
    """Coerce ints, Fractions and ``"p/q"`` strings to a Fraction.

    Floats and decimal strings are rejected so that exactness is never lost
    silently.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "." in text or "e" in text.lower():
            raise ValueError(f"decimal value {value!r} rejected; use p/q")
        return Fraction(text)
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


def format_rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


class FiniteDistribution:
    """A probability mass function with finitely many positive atoms."""

    __slots__ = ("_atoms", "_index")

    def __init__(self, pairs: Iterable[tuple[Hashable, Fraction]]):
        atoms = []
        index: dict[Hashable, Fraction] = {}
        total = Fraction(0)
        for label, prob in pairs:
            prob = as_rational(prob)
            if prob < 0:
                raise NegativeProb(f"negative probability {prob} for {label!r}")
            if label in index:
                raise DuplicateLabel(f"label {label!r} appears twice")
            index[label] = prob
            total += prob
            if prob > 0:
                atoms.append((label, prob))
        if total != 1:
            raise SumNotOne(f"probabilities sum to {total}, not 1")
        self._atoms = tuple(atoms)
        self._index = {label: p for label, p in atoms}

    @classmethod
    def _trusted(cls, mass: dict[Hashable, Fraction]) -> "FiniteDistribution":
        # Skips validation; callers guarantee positive masses summing to one.
        self = object.__new__(cls)
        self._atoms = tuple(mass.items())
        self._index = dict(mass)
        return self

    @property
    def atoms(self) -> tuple[tuple[Hashable, Fraction], ...]:
        return self._atoms

    @property
    def labels(self) -> tuple[Hashable, ...]:
        return tuple(label for label, _ in self._atoms)

    def prob(self, label: Hashable) -> Fraction:
        return self._index.get(label, Fraction(0))

    def __len__(self) -> int:
        return len(self._atoms)

    def __iter__(self) -> Iterator[tuple[Hashable, Fraction]]:
        return iter(self._atoms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FiniteDistribution):
            return NotImplemented
        return self._index == other._index

    def __hash__(self) -> int:
        return hash(frozenset(self._index.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{label!r}: {p}" for label, p in self._atoms[:6])
        more = ", ..." if len(self._atoms) > 6 else ""
        return f"FiniteDistribution({{{body}{more}}})"

    def arity(self) -> int:
        """Common tuple length of the labels; raises BadArity if they differ."""
        sizes = {len(label) if isinstance(label, tuple) else -1 for label in self.labels}
        if len(sizes) != 1 or -1 in sizes:
            raise BadArity("labels are not tuples of one fixed length")
        return sizes.pop()


def dist_new(pairs: Iterable[tuple[Hashable, Any]]) -> FiniteDistribution:
    return FiniteDistribution(pairs)


def uniform(labels: Iterable[Hashable]) -> FiniteDistribution:
    labels = list(labels)
    p = Fraction(1, len(labels))
    return FiniteDistribution((label, p) for label in labels)


def point_mass(label: Hashable) -> FiniteDistribution:
    return FiniteDistribution._trusted({label: Fraction(1)})


def push_forward(dist: FiniteDistribution, f: Callable[[Hashable], Hashable]) -> FiniteDistribution:
    mass: dict[Hashable, Fraction] = {}
    for label, p in dist:
        image = f(label)
        mass[image] = mass.get(image, Fraction(0)) + p
    return FiniteDistribution._trusted(mass)


def marginal(joint: FiniteDistribution, coords: Sequence[int]) -> FiniteDistribution:
    """Law of the sub-tuple at ``coords`` (0-based, in the given order)."""
    arity = joint.arity()
    coords = tuple(coords)
    if any(not 0 <= c < arity for c in coords) or len(set(coords)) != len(coords):
        raise BadArity(f"coordinates {coords} invalid for arity {arity}")
    return push_forward(joint, lambda x: tuple(x[c] for c in coords))


def product(factors: Sequence[FiniteDistribution], *, max_atoms: int | None = None) -> FiniteDistribution:
    """Independent joint law; labels are tuples with one entry per factor."""
    count = math.prod(len(f) for f in factors)
    if max_atoms is not None and count > max_atoms:
        raise TooManyAtoms(f"product has {count} atoms, cap is {max_atoms}")
    mass = {}
    for combo in itertools.product(*(f.atoms for f in factors)):
        label = tuple(label for label, _ in combo)
        mass[label] = math.prod((p for _, p in combo), start=Fraction(1))
    return FiniteDistribution._trusted(mass)


class ProductSpace:
    """Independent factors whose joint law is only built on request."""

    def __init__(self, factors: Sequence[FiniteDistribution]):
        self.factors = tuple(factors)

    @property
    def atom_count(self) -> int:
        return math.prod(len(f) for f in self.factors)

    def materialize(self, max_atoms: int | None = None) -> FiniteDistribution:
        return product(self.factors, max_atoms=max_atoms)


def is_independent(joint: FiniteDistribution, groups: Sequence[Sequence[int]]) -> bool:
    """True iff the joint law is exactly the product of its group marginals."""
    arity = joint.arity()
    flat = [c for g in groups for c in g]
    if sorted(flat) != list(range(arity)) or any(len(g) == 0 for g in groups):
        raise BadArity(f"groups {groups} do not partition {arity} coordinates")
    margins = [marginal(joint, g) for g in groups]
    for combo in itertools.product(*(m.atoms for m in margins)):
        label = [None] * arity
        expected = Fraction(1)
        for group, (sub, p) in zip(groups, combo):
            expected *= p
            for c, value in zip(group, sub):
                label[c] = value
        if joint.prob(tuple(label)) != expected:
            return False
    # Every atom of the joint lies in the product of the marginal supports, and
    # the masses there already sum to one, so nothing else needs checking.
    return True
