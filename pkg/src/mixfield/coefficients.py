"""Windowed dependence coefficients of a :class:`FieldModel`.

The four coefficients ``alpha(n)``, ``rho(n)``, ``rho'(n)`` and ``rho*(n)``
are suprema over pairs of site sets ``(S, T)`` with a prescribed geometry:

* ``alpha``/``rho``: complementary half-spaces ``{k_u <= j}`` and
  ``{k_u >= j + n}`` along one axis ``u``;
* ``rho_prime``: unions of coordinate slabs ``{k_u in G}`` and
  ``{k_u in H}`` with ``dist(G, H) >= n`` (possibly interlaced);
* ``rho_star``: arbitrary disjoint sets at Euclidean distance ``>= n``.

Here every set is intersected with a finite window ``W``.  Two methods are
available.

``structural``
    Copies are independent, so the maximal correlation of ``(X_S, X_T)``
    is the largest per-copy value; a copy contributes its ``theta`` when
    the sites it feeds in ``S`` and ``T`` together cover its whole carrier
    with both sides nonempty, and zero otherwise.  Enlarging ``S`` or ``T``
    can only increase the value, so the windowed supremum is the largest
    ``theta`` over carrier translates ``C + v`` inside ``W`` that can be
    split by an admissible pair.  That split exists for ``rho*`` iff the
    graph joining carrier points closer than ``n`` is disconnected, and
    for ``rho``/``rho'`` iff the carrier's projection on some axis has a
    gap of at least ``n``.
``numeric``
    Enumerates admissible pairs directly, evaluating each with an SVD of
    the per-copy joint tables.  Only pairs that are maximal (neither side
    can grow) are evaluated, which loses nothing since the value is
    monotone in both sets.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .dependence import JointTable, alpha_exact, rho_svd
from .errors import TooManyAtoms, WindowTooLarge
from .exact import FiniteDistribution, format_rational
from .field import FieldModel
from .lattice import (Point, components, dilated_box, norm2, shortlex, sorted_points,
                      translates_inside)
from .nu import NuSpec, nu_marginal

WINDOW_CAP = 14
NUMERIC_CELL_CAP = 1 << 16
TIE_TOL = 1e-12


class CoefficientKind(str, enum.Enum):
    ALPHA = "alpha"
    RHO = "rho"
    RHO_PRIME = "rho_prime"
    RHO_STAR = "rho_star"


@dataclass(frozen=True)
class CoefficientReport:
    kind: CoefficientKind
    n: int
    window: tuple[Point, ...]
    value: Fraction | float | None
    witness: tuple[tuple[Point, ...], tuple[Point, ...]] | None
    method: str
    bracket: tuple[Fraction | float, Fraction | float] | None = None
    evaluated: int = 0

    @property
    def tight(self) -> bool:
        return self.bracket is None or self.bracket[0] == self.bracket[1]

    def to_dict(self) -> dict:
        def num(x):
            if x is None:
                return None
            return format_rational(x) if isinstance(x, Fraction) else x

        return {
            "kind": self.kind.value,
            "n": self.n,
            "method": self.method,
            "value": num(self.value),
            "value_float": None if self.value is None else float(self.value),
            "witness": None if self.witness is None else
            {"S": [list(p) for p in self.witness[0]], "T": [list(p) for p in self.witness[1]]},
            "bracket": None if self.bracket is None else [num(b) for b in self.bracket],
            "window_size": len(self.window),
            "evaluated": self.evaluated,
        }


def auto_window(model: FieldModel, n: int) -> frozenset[Point]:
    """Bounding box of all carriers, dilated by ``n`` in each direction."""
    return dilated_box(model.carriers, n)


# ---- single pairs -------------------------------------------------------

def _covering_copies(model: FieldModel, s_set: frozenset, t_set: frozenset):
    union = s_set | t_set
    for li, lvl in enumerate(model.levels):
        anchor = lvl.encoding[0]
        for w in sorted(union):
            u = tuple(a - b for a, b in zip(w, anchor))
            shifted = [tuple(a + b for a, b in zip(c, u)) for c in lvl.encoding]
            if all(p in union for p in shifted):
                if any(p in s_set for p in shifted) and any(p in t_set for p in shifted):
                    yield li, u


def rho_structural(model: FieldModel, s_set: Iterable[Point], t_set: Iterable[Point]) -> Fraction:
    """Exact maximal correlation of (X_S, X_T) from the copy-cover rule."""
    s_set, t_set = frozenset(s_set), frozenset(t_set)
    if not s_set or not t_set or s_set & t_set:
        raise ValueError("S and T must be nonempty and disjoint")
    best = Fraction(0)
    for li, _ in _covering_copies(model, s_set, t_set):
        best = max(best, model.levels[li].theta)
    return best


def _shared_copies(model: FieldModel, s_set: frozenset, t_set: frozenset):
    for (li, u), js in model.copies_touching(s_set | t_set).items():
        lvl = model.levels[li]
        a, b = [], []
        for j in js:
            site = tuple(x + y for x, y in zip(u, j))
            (a if site in s_set else b).append(lvl.phi[j])
        if a and b:
            yield lvl.nu, tuple(a), tuple(b)


@lru_cache(maxsize=1 << 16)
def _copy_table(spec: NuSpec, a_idx: tuple[int, ...], b_idx: tuple[int, ...]) -> JointTable:
    if (1 << len(a_idx)) * (1 << len(b_idx)) > NUMERIC_CELL_CAP:
        raise TooManyAtoms(
            f"copy table with {len(a_idx)}+{len(b_idx)} sign coordinates exceeds {NUMERIC_CELL_CAP} cells")
    law = nu_marginal(spec, a_idx + b_idx)
    k = len(a_idx)
    return JointTable.from_distribution(FiniteDistribution(((x[:k], x[k:]), p) for x, p in law))


@lru_cache(maxsize=1 << 16)
def _copy_rho(spec: NuSpec, a_idx, b_idx) -> float:
    return rho_svd(_copy_table(spec, a_idx, b_idx))


@lru_cache(maxsize=1 << 16)
def _copy_alpha(spec: NuSpec, a_idx, b_idx) -> Fraction:
    return alpha_exact(_copy_table(spec, a_idx, b_idx))


def rho_numeric(model: FieldModel, s_set: Iterable[Point], t_set: Iterable[Point]) -> float:
    """Maximal correlation of (X_S, X_T) as the largest SVD value over shared copies.

    Copies feeding only one side are independent of everything else and
    cannot raise the value; the shared ones are independent pairs, whose
    join has the largest of their maximal correlations.
    """
    s_set, t_set = frozenset(s_set), frozenset(t_set)
    return max((_copy_rho(*c) for c in _shared_copies(model, s_set, t_set)), default=0.0)


def alpha_lower_numeric(model: FieldModel, s_set, t_set) -> Fraction:
    """Largest exact per-copy alpha; a lower bound for alpha(X_S, X_T)."""
    s_set, t_set = frozenset(s_set), frozenset(t_set)
    return max((_copy_alpha(*c) for c in _shared_copies(model, s_set, t_set)), default=Fraction(0))


# ---- candidate geometry --------------------------------------------------

def _slab(window, axis, values) -> frozenset:
    return frozenset(w for w in window if w[axis] in values)


def _half_space_pairs(window: frozenset, n: int):
    d = len(next(iter(window)))
    for axis in range(d):
        coords = sorted({w[axis] for w in window})
        for j in range(coords[0], coords[-1] - n + 1):
            s = frozenset(w for w in window if w[axis] <= j)
            t = frozenset(w for w in window if w[axis] >= j + n)
            if s and t:
                yield s, t


def _closed_pairs(points: Sequence, n: int, far):
    """Pairs (G, H) of disjoint nonempty subsets at distance >= n where each
    side is exactly the set of points far from the other."""
    m = len(points)
    for mask in range(1, 1 << m):
        g = [points[i] for i in range(m) if mask >> i & 1]
        h = [p for i, p in enumerate(points) if not mask >> i & 1 and far(p, g)]
        if not h:
            continue
        closure = [p for p in points if p not in h and far(p, h)]
        if len(closure) != len(g):
            continue
        yield g, h


def _slab_pairs(window: frozenset, n: int, cap: int):
    d = len(next(iter(window)))
    for axis in range(d):
        coords = sorted({w[axis] for w in window})
        if len(coords) > cap:
            raise WindowTooLarge(f"{len(coords)} slab coordinates exceed cap {cap}")

        def far(x, group):
            return all(abs(x - y) >= n for y in group)

        for g, h in _closed_pairs(coords, n, far):
            yield _slab(window, axis, set(g)), _slab(window, axis, set(h))


def _free_pairs(window: frozenset, n: int, cap: int):
    pts = sorted_points(window)
    if len(pts) > cap:
        raise WindowTooLarge(f"window of {len(pts)} points exceeds the rho* cap {cap}")
    limit = n * n

    def far(p, group):
        return all(norm2(tuple(a - b for a, b in zip(p, q))) >= limit for q in group)

    for g, h in _closed_pairs(pts, n, far):
        yield frozenset(g), frozenset(h)


def candidate_pairs(kind: CoefficientKind, n: int, window: Iterable[Point], *, cap: int = WINDOW_CAP):
    """Maximal admissible (S, T) pairs inside ``window`` for ``kind``."""
    window = frozenset(window)
    kind = CoefficientKind(kind)
    if kind in (CoefficientKind.ALPHA, CoefficientKind.RHO):
        return list(_half_space_pairs(window, n))
    if kind is CoefficientKind.RHO_PRIME:
        return list(_slab_pairs(window, n, cap))
    return list(_free_pairs(window, n, cap))


def is_admissible(kind: CoefficientKind, n: int, s_set: Iterable[Point], t_set: Iterable[Point],
                  window: Iterable[Point] | None = None) -> bool:
    """Whether ``(S, T)`` has the geometry required by ``kind`` (within ``window``)."""
    s_set, t_set = frozenset(s_set), frozenset(t_set)
    if not s_set or not t_set or s_set & t_set:
        return False
    kind = CoefficientKind(kind)
    win = frozenset(window) if window is not None else None
    if win is not None and not (s_set | t_set) <= win:
        return False
    d = len(next(iter(s_set)))
    if kind is CoefficientKind.RHO_STAR:
        return all(norm2(tuple(a - b for a, b in zip(s, t))) >= n * n for s in s_set for t in t_set)
    for axis in range(d):
        gs = {p[axis] for p in s_set}
        hs = {p[axis] for p in t_set}
        if kind is CoefficientKind.RHO_PRIME:
            if gs & hs or min(abs(a - b) for a in gs for b in hs) < n:
                continue
            if win is not None and (s_set != _slab(win, axis, gs) or t_set != _slab(win, axis, hs)):
                continue
            return True
        j = max(gs)
        if min(hs) < j + n:
            continue
        if win is not None:
            if s_set != frozenset(w for w in win if w[axis] <= j):
                continue
            if t_set != frozenset(w for w in win if w[axis] >= min(hs)):
                continue
        return True
    return False


# ---- structural reduction ----------------------------------------------

def _structural_witnesses(model: FieldModel, kind: CoefficientKind, n: int, window: frozenset):
    """Yield ``(theta, sort key, S, T)`` for every carrier translate in the
    window that an admissible pair can split."""
    for li, lvl in enumerate(model.levels):
        for v in translates_inside(lvl.carrier, window):
            placed = frozenset(tuple(a + b for a, b in zip(c, v)) for c in lvl.carrier)
            base = (norm2(v), v)
            if kind is CoefficientKind.RHO_STAR:
                comps = components(placed, n)
                if len(comps) < 2:
                    continue
                s = min(comps, key=shortlex)
                yield lvl.theta, base, s, placed - s
                continue
            for axis in range(model.d):
                values = sorted({p[axis] for p in placed})
                runs = [[values[0]]]
                for a, b in zip(values, values[1:]):
                    if b - a >= n:
                        runs.append([])
                    runs[-1].append(b)
                if len(runs) < 2:
                    continue
                if kind is CoefficientKind.RHO_PRIME:
                    for run in runs:
                        rest = {x for r in runs if r is not run for x in r}
                        yield (lvl.theta, base, _slab(window, axis, set(run)),
                               _slab(window, axis, rest))
                else:
                    for left, right in zip(runs, runs[1:]):
                        j = left[-1]
                        s = frozenset(w for w in window if w[axis] <= j)
                        t = frozenset(w for w in window if w[axis] >= j + n)
                        yield lvl.theta, base, s, t


def _default_witness(kind: CoefficientKind, n: int, window: frozenset, cap: int):
    if kind is CoefficientKind.RHO_STAR:
        pts = sorted_points(window)
        first = pts[0]
        far = frozenset(p for p in pts if norm2(tuple(a - b for a, b in zip(p, first))) >= n * n)
        return (frozenset([first]), far) if far else None
    if kind is CoefficientKind.RHO_PRIME:
        axis = 0
        coords = sorted({w[axis] for w in window})
        h = {c for c in coords if c >= coords[0] + n}
        if not h:
            return None
        return _slab(window, axis, {coords[0]}), _slab(window, axis, h)
    pairs = _half_space_pairs(window, n)
    return next(pairs, None)


def _pack(s, t):
    return sorted_points(s), sorted_points(t)


def _structural(model, kind, n, window, cap) -> CoefficientReport:
    best = None
    count = 0
    for theta, base, s, t in _structural_witnesses(model, kind, n, window):
        count += 1
        key = (-theta, base, shortlex(s), shortlex(t))
        if best is None or key < best[0]:
            best = (key, theta, s, t)
    if best is None or best[1] == 0:
        value = Fraction(0)
        default = _default_witness(kind, n, window, cap)
        witness = None if default is None else _pack(*default)
        if best is not None:
            witness = _pack(best[2], best[3])
    else:
        value = best[1]
        witness = _pack(best[2], best[3])
    bracket = None
    if kind is CoefficientKind.ALPHA:
        # lower: one fully split copy has alpha = theta / 4; upper: rho / 4
        bracket = (value / 4, value / 4)
        value = value / 4
    return CoefficientReport(kind, n, sorted_points(window), value, witness,
                             "structural", bracket, count)


# ---- numeric enumeration ------------------------------------------------

def _evaluate_chunk(model, kind, chunk):
    out = []
    for s, t in chunk:
        if kind is CoefficientKind.ALPHA:
            out.append((rho_numeric(model, s, t), alpha_lower_numeric(model, s, t)))
        else:
            out.append((rho_numeric(model, s, t), None))
    return out


def _numeric(model, kind, n, window, cap, threads) -> CoefficientReport:
    pairs = candidate_pairs(kind, n, window, cap=cap)
    if threads > 1 and len(pairs) > 1:
        size = math.ceil(len(pairs) / threads)
        chunks = [pairs[i:i + size] for i in range(0, len(pairs), size)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = [r for part in pool.map(lambda c: _evaluate_chunk(model, kind, c), chunks)
                       for r in part]
    else:
        results = _evaluate_chunk(model, kind, pairs)
    if not results:
        return CoefficientReport(kind, n, sorted_points(window), 0.0, None, "numeric",
                                 (Fraction(0), 0.0) if kind is CoefficientKind.ALPHA else None, 0)
    top = max(r for r, _ in results)
    best = min((shortlex(s), shortlex(t), i) for i, ((s, t), (r, _)) in enumerate(zip(pairs, results))
               if r >= top - TIE_TOL)
    s, t = pairs[best[2]]
    witness = _pack(s, t)
    if kind is CoefficientKind.ALPHA:
        lower = max(a for _, a in results)
        upper = top / 4
        value = float(lower) if abs(float(lower) - upper) <= 1e-9 else None
        return CoefficientReport(kind, n, sorted_points(window), value, witness, "numeric",
                                 (lower, upper), len(pairs))
    return CoefficientReport(kind, n, sorted_points(window), top, witness, "numeric",
                             None, len(pairs))


def windowed_coefficient(model: FieldModel, kind: CoefficientKind | str, n: int,
                         window: Iterable[Point] | None = None, method: str = "structural", *,
                         cap: int = WINDOW_CAP, threads: int = 1) -> CoefficientReport:
    """Coefficient ``kind`` at separation ``n`` restricted to ``window``.

    ``window=None`` uses :func:`auto_window`.  For ``alpha`` the report
    carries a bracket ``(lower, upper)``; ``value`` is set only when the
    bracket is tight.
    """
    kind = CoefficientKind(kind)
    if n < 1:
        raise ValueError("separation n must be positive")
    window = auto_window(model, n) if window is None else frozenset(window)
    if not window:
        raise ValueError("empty window")
    if any(len(p) != model.d for p in window):
        raise ValueError(f"window points must have dimension {model.d}")
    if method == "structural":
        return _structural(model, kind, n, window, cap)
    if method == "numeric":
        return _numeric(model, kind, n, window, cap, threads)
    raise ValueError(f"unknown method {method!r}")
