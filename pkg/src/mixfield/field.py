"""Stationary random fields built from independent shifted copies of a block.

A :class:`FieldModel` is a stack of levels.  Each level has a finite
carrier ``C`` in Z^d, a parity bias ``theta`` and an ordering of the
carrier (the bit encoding).  For every level and every offset ``u`` in Z^d
there is an independent copy ``Y(u)`` of a sign vector on ``C`` with law
``nu(|C|, theta)``.  The value at site ``k`` packs, for every level and
every carrier point ``j``, the bit ``(Y(k - j)_j + 1) / 2`` at position
``level_offset + encoding_index(j)``.  Each bit of ``X_k`` therefore comes
from a different copy, and distinct bit patterns give distinct values.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .dependence import JointTable
from .errors import (BadDimension, BadRates, CarrierTooSmall, DimensionMismatch,
                     TooManyAtoms)
from .exact import FiniteDistribution, as_rational, format_rational, is_independent
from .lattice import (Point, index_set, lattice_block_lambda, shell_gamma,
                      sorted_points, sub)
from .nu import NuSpec, nu_marginal

JOINT_BITS_CAP = 16
NTUPLE_SUBSET_CAP = 200_000
CONSTRUCTIONS = ("lemma31", "lemma41", "lemma42", "thm14", "thm15")


@dataclass(frozen=True)
class Level:
    encoding: tuple[Point, ...]
    theta: Fraction

    def __post_init__(self):
        enc = tuple(tuple(int(c) for c in p) for p in self.encoding)
        object.__setattr__(self, "encoding", enc)
        object.__setattr__(self, "theta", as_rational(self.theta))
        if len(set(enc)) != len(enc):
            raise ValueError("encoding lists a carrier point twice")
        if len(enc) < 3:
            raise CarrierTooSmall(f"carrier has {len(enc)} points; the parity law needs at least 3")
        if len({len(p) for p in enc}) != 1:
            raise ValueError("carrier points of mixed dimension")
        if not 0 <= self.theta <= 1:
            raise ValueError(f"theta {self.theta} outside [0, 1]")

    @classmethod
    def lexicographic(cls, carrier: Iterable[Point], theta) -> "Level":
        return cls(sorted_points(carrier), theta)

    @cached_property
    def carrier(self) -> frozenset[Point]:
        return frozenset(self.encoding)

    @cached_property
    def phi(self) -> dict[Point, int]:
        return {p: i for i, p in enumerate(self.encoding)}

    @property
    def size(self) -> int:
        return len(self.encoding)

    @property
    def d(self) -> int:
        return len(self.encoding[0])

    @cached_property
    def nu(self) -> NuSpec:
        return NuSpec(self.size, self.theta)


@dataclass(frozen=True)
class FieldModel:
    d: int
    N: int
    levels: tuple[Level, ...]
    construction: str = "single"
    params: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.d < 1:
            raise BadDimension("d must be positive")
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if not self.levels:
            raise ValueError("a field needs at least one level")
        for lvl in self.levels:
            if lvl.d != self.d:
                raise DimensionMismatch(f"level of dimension {lvl.d} in a d={self.d} field")
        smallest = min(lvl.size for lvl in self.levels)
        if smallest - 1 < self.N:
            raise CarrierTooSmall(
                f"a carrier of {smallest} points gives only {smallest - 1}-tuplewise "
                f"independence, N={self.N} requested")

    @cached_property
    def bit_offsets(self) -> tuple[int, ...]:
        offsets, total = [], 0
        for lvl in self.levels:
            offsets.append(total)
            total += lvl.size
        return tuple(offsets)

    @property
    def alphabet_bits(self) -> int:
        return sum(lvl.size for lvl in self.levels)

    @property
    def alphabet_size(self) -> int:
        return 1 << self.alphabet_bits

    @property
    def carriers(self) -> frozenset[Point]:
        return frozenset().union(*(lvl.carrier for lvl in self.levels))

    def bit_position(self, level: int, j: Point) -> int:
        return self.bit_offsets[level] + self.levels[level].phi[j]

    def copies_touching(self, points: Iterable[Point]) -> dict[tuple[int, Point], list[Point]]:
        """Copies ``(level, u)`` feeding some site in ``points``, with the carrier
        points ``j`` (so ``u + j`` is one of the sites) sorted by encoding index."""
        pts = set(points)
        found: dict[tuple[int, Point], list[Point]] = {}
        for li, lvl in enumerate(self.levels):
            for k in pts:
                for j in lvl.encoding:
                    found.setdefault((li, sub(k, j)), []).append(j)
        for (li, _), js in found.items():
            js.sort(key=self.levels[li].phi.__getitem__)
        return dict(sorted(found.items()))

    # ---- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "N": self.N,
            "construction": self.construction,
            "params": self.params,
            "levels": [
                {
                    "carrier": [list(p) for p in sorted_points(lvl.carrier)],
                    "theta": format_rational(lvl.theta),
                    "encoding": [list(p) for p in lvl.encoding],
                }
                for lvl in self.levels
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "FieldModel":
        levels = []
        for entry in data["levels"]:
            enc = tuple(tuple(p) for p in entry["encoding"])
            if index_set(entry["carrier"]) != frozenset(enc):
                raise ValueError("level encoding is not a bijection onto its carrier")
            levels.append(Level(enc, as_rational(entry["theta"])))
        model = cls(int(data["d"]), int(data["N"]), tuple(levels),
                    data.get("construction", "single"), dict(data.get("params", {})))
        _validate_params(model)
        return model

    @classmethod
    def from_json(cls, text: str) -> "FieldModel":
        return cls.from_dict(json.loads(text))


def parse_rates(values: Sequence) -> tuple[Fraction, ...]:
    rates = tuple(as_rational(v) for v in values)
    if not rates:
        raise BadRates("at least one rate is required")
    if any(not 0 <= c <= 1 for c in rates):
        raise BadRates("rates must lie in [0, 1]")
    if any(a < b for a, b in zip(rates, rates[1:])):
        raise BadRates(f"rates must be nonincreasing, got {[format_rational(c) for c in rates]}")
    return rates


def _validate_params(model: FieldModel) -> None:
    if model.construction in ("thm14", "thm15"):
        rates = parse_rates(model.params.get("rates", []))
        thetas = tuple(lvl.theta for lvl in model.levels[:len(rates)])
        if thetas != rates:
            raise BadRates("level parameters disagree with the declared rates")


# ---- carriers and constructions ----------------------------------------

def smallest_block_side(d: int, N: int) -> int:
    M = 2
    while M ** d - 1 < N:
        M += 1
    return M


def single_level_field(carrier: Iterable[Point], theta, d: int, N: int) -> FieldModel:
    carrier = frozenset(carrier)
    if len(carrier) < max(3, N + 1):
        raise CarrierTooSmall(
            f"carrier of {len(carrier)} points cannot give {N}-tuplewise independence "
            f"(needs card - 1 >= N and card >= 3)")
    theta = as_rational(theta)
    return FieldModel(d, N, (Level.lexicographic(carrier, theta),), "single",
                      {"theta": format_rational(theta)})


def lemma_3_1_field(d: int, N: int, n: int, theta, M: int | None = None) -> FieldModel:
    """Grid-carrier field with ``4 alpha(n) = rho*(1) = theta`` and ``rho*(n+1) = 0``."""
    if d < 1 or n < 1:
        raise ValueError("Lemma 3.1 requires d >= 1 and n >= 1")
    if N < 2:
        raise ValueError("Lemma 3.1 requires N >= 2")
    if M is None:
        M = smallest_block_side(d, N)
    elif M < 2 or M ** d - 1 < N:
        raise CarrierTooSmall(f"M={M} violates M >= 2 and M^d - 1 >= N")
    theta = as_rational(theta)
    base = single_level_field(lattice_block_lambda(d, M, n), theta, d, N)
    return FieldModel(d, N, base.levels, "lemma31",
                      {"M": M, "n": n, "theta": format_rational(theta)})


def lemma_4_1_field(d: int, N: int, n: int) -> FieldModel:
    """Shell-carrier field with ``rho*(n) = 1``, ``rho(1) = 1`` and ``rho(2) = 0``."""
    if d < 2:
        raise BadDimension(f"Lemma 4.1 requires d >= 2, got d={d}")
    if N < 2 or n < 1:
        raise ValueError("Lemma 4.1 requires N >= 2 and n >= 1")
    n_eff = max(n, N + 1)
    base = single_level_field(shell_gamma(d, n_eff), 1, d, N)
    return FieldModel(d, N, base.levels, "lemma41", {"n": n, "n_effective": n_eff})


def stack_fields(models: Sequence[FieldModel]) -> FieldModel:
    if not models:
        raise ValueError("nothing to stack")
    d = models[0].d
    if any(m.d != d for m in models):
        raise DimensionMismatch("stacked fields must share the dimension d")
    if len(models) == 1:
        return models[0]
    levels = tuple(lvl for m in models for lvl in m.levels)
    parts = [{"construction": m.construction, "params": m.params} for m in models]
    return FieldModel(d, min(m.N for m in models), levels, "stack", {"parts": parts})


def theorem_1_4_field(d: int, N: int, rates: Sequence) -> FieldModel:
    """Stack whose coefficients at separation ``n`` equal ``rates[n-1]`` for ``n <= len(rates)``."""
    rates = parse_rates(rates)
    M = smallest_block_side(d, N)
    parts = [lemma_3_1_field(d, N, i + 1, c, M) for i, c in enumerate(rates)]
    stacked = stack_fields(parts)
    return FieldModel(d, N, stacked.levels, "thm14",
                      {"M": M, "L": len(rates), "rates": [format_rational(c) for c in rates]})


def lemma_4_2_field(d: int, N: int, L: int) -> FieldModel:
    if d < 2:
        raise BadDimension(f"Lemma 4.2 requires d >= 2, got d={d}")
    if L < 1:
        raise ValueError("truncation level L must be positive")
    parts = [lemma_4_1_field(d, N, n) for n in range(1, L + 1)]
    stacked = stack_fields(parts)
    return FieldModel(d, N, stacked.levels, "lemma42",
                      {"L": L, "n_effective": [p.params["n_effective"] for p in parts]})


def theorem_1_5_field(d: int, N: int, rates: Sequence, L: int) -> FieldModel:
    if d < 2:
        raise BadDimension(f"Theorem 1.5 requires d >= 2, got d={d}")
    rates = parse_rates(rates)
    y = theorem_1_4_field(d, N, rates)
    z = lemma_4_2_field(d, N, L)
    stacked = stack_fields([y, z])
    return FieldModel(d, N, stacked.levels, "thm15",
                      {"M": y.params["M"], "L": L,
                       "rates": [format_rational(c) for c in rates],
                       "n_effective": z.params["n_effective"]})


# ---- exact laws ---------------------------------------------------------

@dataclass(frozen=True)
class CopyFactor:
    """Contribution of one copy ``(level, offset)`` to a pair of site sets.

    ``row_slots``/``col_slots`` name the bits the copy feeds on each side as
    ``(site index in sorted order, bit position)``; the table's labels are
    the corresponding sign tuples.
    """
    level: int
    offset: Point
    row_slots: tuple[tuple[int, int], ...]
    col_slots: tuple[tuple[int, int], ...]
    table: JointTable

    @property
    def shared(self) -> bool:
        return bool(self.row_slots) and bool(self.col_slots)

    def key(self):
        """Translation-free description, used to compare factorizations."""
        return (self.level, self.row_slots, self.col_slots)


def _copy_table(spec: NuSpec, a_idx: tuple[int, ...], b_idx: tuple[int, ...]) -> JointTable:
    law = nu_marginal(spec, a_idx + b_idx)
    k = len(a_idx)
    pairs = FiniteDistribution(((x[:k], x[k:]), p) for x, p in law)
    return JointTable.from_distribution(pairs)


def factored_joint_table(model: FieldModel, s_set: Iterable[Point], t_set: Iterable[Point],
                         *, max_cells: int = 1 << 20) -> list[CopyFactor]:
    """The joint law of (X_S, X_T) as independent per-copy tables."""
    s_sorted, t_sorted = sorted_points(s_set), sorted_points(t_set)
    if set(s_sorted) & set(t_sorted):
        raise ValueError("S and T must be disjoint")
    s_pos = {k: i for i, k in enumerate(s_sorted)}
    t_pos = {k: i for i, k in enumerate(t_sorted)}
    factors = []
    for (li, u), js in model.copies_touching(s_sorted + t_sorted).items():
        lvl = model.levels[li]
        a = [j for j in js if tuple(x + y for x, y in zip(u, j)) in s_pos]
        b = [j for j in js if tuple(x + y for x, y in zip(u, j)) in t_pos]
        if (1 << len(a)) * (1 << len(b)) > max_cells:
            raise TooManyAtoms(f"copy table with {len(a)}+{len(b)} sign coordinates exceeds cap")

        def slots(points, pos):
            return tuple((pos[tuple(x + y for x, y in zip(u, j))], model.bit_position(li, j))
                         for j in points)

        table = _copy_table(lvl.nu, tuple(lvl.phi[j] for j in a), tuple(lvl.phi[j] for j in b))
        factors.append(CopyFactor(li, u, slots(a, s_pos), slots(b, t_pos), table))
    return factors


def _joint_weights(model: FieldModel, pts: Sequence[Point], max_bits: int):
    """Integer weights of the concatenated bits of ``pts`` (in the given order).

    Every bit of every site comes from exactly one copy, so the law of the
    concatenated bits is a product of per-copy laws on disjoint bit axes,
    built here as a broadcast product of integer tensors.  Returns the
    flattened weights and their common denominator.
    """
    width = model.alphabet_bits
    bits = len(pts) * width
    if bits > max_bits:
        raise TooManyAtoms(f"joint law of {len(pts)} sites needs 2^{bits} atoms (cap 2^{max_bits})")
    pos = {k: i for i, k in enumerate(pts)}
    factors = []
    denom = 1
    for (li, u), js in model.copies_touching(pts).items():
        lvl = model.levels[li]
        law = nu_marginal(lvl.nu, tuple(lvl.phi[j] for j in js))
        scale = (1 << lvl.size) * lvl.theta.denominator
        # most significant bit of each site first
        axes = [pos[tuple(x + y for x, y in zip(u, j))] * width + width - 1 - model.bit_position(li, j)
                for j in js]
        weights = {tuple((s + 1) // 2 for s in x): int(p * scale) for x, p in law}
        factors.append((axes, weights))
        denom *= scale
    dtype = np.int64 if denom.bit_length() < 63 else object
    total = np.ones((2,) * bits, dtype=dtype)
    for axes, weights in factors:
        tensor = np.zeros((2,) * len(axes), dtype=dtype)
        for idx, w in weights.items():
            tensor[idx] = w
        shape = [1] * bits
        for a in axes:
            shape[a] = 2
        total = total * np.transpose(tensor, np.argsort(axes)).reshape(shape)
    return total.reshape(-1), denom


def _labels(count: int, width: int):
    mask = (1 << width) - 1
    return [tuple((code >> (width * (count - 1 - i))) & mask for i in range(count))
            for code in range(1 << (width * count))]


def joint_dist(model: FieldModel, points: Iterable[Point], *,
               max_bits: int = JOINT_BITS_CAP) -> FiniteDistribution:
    """Exact law of ``(X_k, k in sorted(points))``, labels are value tuples."""
    pts = sorted_points(points)
    flat, denom = _joint_weights(model, pts, max_bits)
    width = model.alphabet_bits
    mask = (1 << width) - 1
    mass = {}
    for code in np.flatnonzero(flat):
        code = int(code)
        label = tuple((code >> (width * (len(pts) - 1 - i))) & mask for i in range(len(pts)))
        mass[label] = Fraction(int(flat[code]), denom)
    return FiniteDistribution._trusted(mass)


def joint_table(model: FieldModel, s_set: Iterable[Point], t_set: Iterable[Point], *,
                max_bits: int = JOINT_BITS_CAP) -> JointTable:
    """Joint pmf between the atoms of sigma(X_k, k in S) and sigma(X_k, k in T).

    Row and column labels are value tuples over the sorted points of S and T.
    """
    s_sorted, t_sorted = sorted_points(s_set), sorted_points(t_set)
    if not s_sorted or not t_sorted:
        raise ValueError("S and T must be nonempty")
    if set(s_sorted) & set(t_sorted):
        raise ValueError("S and T must be disjoint")
    flat, denom = _joint_weights(model, s_sorted + t_sorted, max_bits)
    width = model.alphabet_bits
    rows, cols = 1 << (width * len(s_sorted)), 1 << (width * len(t_sorted))
    return JointTable.from_integers(_labels(len(s_sorted), width), _labels(len(t_sorted), width),
                                    flat.reshape(rows, cols), denom)


def marginal_of_point(model: FieldModel, k: Point, *, max_bits: int = 20) -> FiniteDistribution:
    law = joint_dist(model, [tuple(k)], max_bits=max_bits)
    return FiniteDistribution._trusted({x[0]: p for x, p in law})


def _subsets(window: Sequence[Point], size: int, cap: int):
    total = math.comb(len(window), size)
    if total > cap:
        raise TooManyAtoms(f"{total} subsets of size {size} exceed cap {cap}")
    return itertools.combinations(window, size)


def check_ntuplewise(model: FieldModel, window: Iterable[Point], N: int | None = None, *,
                     method: str = "factored", max_subsets: int = NTUPLE_SUBSET_CAP,
                     max_bits: int = JOINT_BITS_CAP) -> bool:
    """Exact test that every ``N`` sites of ``window`` carry independent values.

    ``method="factored"`` checks, copy by copy, that the bits a copy feeds
    to distinct sites are independent; because copies are independent and
    each value is an injective function of its bits, this is equivalent to
    independence of the values.  ``method="joint"`` builds the full joint
    law of each tuple instead.
    """
    N = model.N if N is None else N
    pts = sorted_points(window)
    if len(pts) < N:
        return True
    for subset in _subsets(pts, N, max_subsets):
        if method == "joint":
            law = joint_dist(model, subset, max_bits=max_bits)
            if not is_independent(law, [(i,) for i in range(N)]):
                return False
            continue
        for (li, _), js in model.copies_touching(subset).items():
            if len(js) < 2:
                continue
            lvl = model.levels[li]
            law = nu_marginal(lvl.nu, tuple(lvl.phi[j] for j in js))
            if not is_independent(law, [(i,) for i in range(len(js))]):
                return False
    return True
