"""Finite index sets in the integer lattice Z^d.

Points are tuples of ints; an index set is a ``frozenset`` of points of one
arity.  Distances are compared through squared norms so that every test
``dist(S, T) >= n`` is exact integer arithmetic.
"""
from __future__ import annotations

import itertools
import re
from collections import deque
from typing import Iterable, Sequence

from .errors import BadDimension

Point = tuple[int, ...]
IndexSet = frozenset


def index_set(points: Iterable[Sequence[int]]) -> frozenset[Point]:
    pts = frozenset(tuple(int(c) for c in p) for p in points)
    if len({len(p) for p in pts}) > 1:
        raise ValueError("points of mixed dimension")
    return pts


def sorted_points(points: Iterable[Point]) -> tuple[Point, ...]:
    return tuple(sorted(points))


def shortlex(points: Iterable[Point]) -> tuple[int, tuple[Point, ...]]:
    pts = sorted_points(points)
    return len(pts), pts


def norm2(k: Point) -> int:
    return sum(c * c for c in k)


def translate(points: Iterable[Point], v: Point) -> frozenset[Point]:
    return frozenset(tuple(a + b for a, b in zip(p, v)) for p in points)


def sub(a: Point, b: Point) -> Point:
    return tuple(x - y for x, y in zip(a, b))


def dist2(s_set: Iterable[Point], t_set: Iterable[Point]) -> int:
    """Squared Euclidean distance between two nonempty sets."""
    t_list = list(t_set)
    return min(norm2(sub(s, t)) for s in s_set for t in t_list)


def far_enough(s_set: Iterable[Point], t_set: Iterable[Point], n: int) -> bool:
    return dist2(s_set, t_set) >= n * n


def box(lo: Sequence[int], hi: Sequence[int]) -> frozenset[Point]:
    return frozenset(itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))))


def bounding_box(points: Iterable[Point]) -> tuple[Point, Point]:
    pts = list(points)
    d = len(pts[0])
    lo = tuple(min(p[i] for p in pts) for i in range(d))
    hi = tuple(max(p[i] for p in pts) for i in range(d))
    return lo, hi


def dilated_box(points: Iterable[Point], n: int) -> frozenset[Point]:
    lo, hi = bounding_box(points)
    return box(tuple(a - n for a in lo), tuple(b + n for b in hi))


def lattice_block_lambda(d: int, M: int, n: int) -> frozenset[Point]:
    """The grid ``{0, n, ..., (M-1) n}^d``."""
    if d < 1 or n < 1 or M < 2:
        raise ValueError("need d >= 1, n >= 1, M >= 2")
    return frozenset(itertools.product(range(0, M * n, n), repeat=d))


def shell_gamma0(d: int, n: int) -> frozenset[Point]:
    """Boundary of the cube ``{-n..n}^d``."""
    if d < 2:
        raise BadDimension(f"the shell carrier needs d >= 2, got d={d}")
    if n < 1:
        raise ValueError("n must be positive")
    return frozenset(k for k in itertools.product(range(-n, n + 1), repeat=d)
                     if any(abs(c) == n for c in k))


def shell_gamma(d: int, n: int) -> frozenset[Point]:
    """Cube shell of radius ``n`` together with the origin."""
    return shell_gamma0(d, n) | {(0,) * d}


def translates_inside(carrier: Iterable[Point], window: frozenset[Point]) -> list[Point]:
    """Offsets ``v`` with ``carrier + v`` contained in ``window``, sorted by (norm, lex)."""
    carrier = sorted_points(carrier)
    anchor = carrier[0]
    found = []
    for w in window:
        v = sub(w, anchor)
        if all(tuple(a + b for a, b in zip(c, v)) in window for c in carrier):
            found.append(v)
    return sorted(found, key=lambda v: (norm2(v), v))


def components(points: Iterable[Point], n: int) -> list[frozenset[Point]]:
    """Connected components of the graph joining points closer than ``n``.

    Two groups of a bipartition are at distance ``>= n`` exactly when each
    group is a union of these components.
    """
    pts = sorted_points(points)
    limit = n * n
    seen: set[Point] = set()
    comps = []
    for start in pts:
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for q in pts:
                if q not in seen and norm2(sub(p, q)) < limit:
                    seen.add(q)
                    comp.add(q)
                    queue.append(q)
        comps.append(frozenset(comp))
    return comps


def chain(carrier: frozenset[Point], start: Point, end: Point, step: int) -> list[Point] | None:
    """Path inside ``carrier`` from ``start`` to ``end`` moving ``+-step`` along one axis."""
    d = len(start)
    moves = [tuple(s * step if i == u else 0 for i in range(d)) for u in range(d) for s in (1, -1)]
    prev: dict[Point, Point | None] = {start: None}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        if p == end:
            path = [p]
            while prev[path[-1]] is not None:
                path.append(prev[path[-1]])
            return path[::-1]
        for mv in moves:
            q = tuple(a + b for a, b in zip(p, mv))
            if q in carrier and q not in prev:
                prev[q] = p
                queue.append(q)
    return None


def chain_witness(carrier: frozenset[Point], s_set: frozenset[Point], t_set: frozenset[Point],
                  step: int) -> Point | None:
    """A carrier point in neither set, found by walking a chain from S to T.

    Returns ``None`` when the sets miss the carrier on one side.  When both
    sets meet the carrier, cover it, and sit at distance greater than
    ``step``, no chain step can cross from S to T, so this function raises.
    """
    in_s = sorted(carrier & s_set)
    in_t = sorted(carrier & t_set)
    if not in_s or not in_t:
        return None
    path = chain(carrier, in_s[0], in_t[0], step)
    if path is None:
        raise ValueError("carrier is not chain-connected")
    for p in path:
        if p not in s_set and p not in t_set:
            return p
    for a, b in zip(path, path[1:]):
        if a in s_set and b in t_set or a in t_set and b in s_set:
            raise ValueError("chain crosses directly between S and T")
    raise AssertionError("unreachable: chain starts in S and ends in T")


_BOX = re.compile(r"^\{\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*\}(?:\^(\d+))?$")


def parse_window(text: str, d: int) -> frozenset[Point]:
    """Parse ``"{a..b}^d"``, ``"{a..b}x{c..e}"`` or ``"(0,0);(1,2)"``."""
    text = text.strip()
    if not text:
        raise ValueError("empty window")
    if text.startswith("{"):
        factors = []
        for part in text.split("x"):
            m = _BOX.match(part.strip())
            if not m:
                raise ValueError(f"malformed box {part!r}")
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ValueError(f"empty range {part!r}")
            reps = int(m.group(3)) if m.group(3) else (d if len(text.split("x")) == 1 else 1)
            factors += [range(lo, hi + 1)] * reps
        if len(factors) != d:
            raise ValueError(f"window has dimension {len(factors)}, field has d={d}")
        return frozenset(itertools.product(*factors))
    points = []
    for item in text.split(";"):
        item = item.strip().strip("()")
        if not item:
            continue
        try:
            p = tuple(int(c) for c in item.split(","))
        except ValueError:
            raise ValueError(f"malformed point {item!r}") from None
        if len(p) != d:
            raise ValueError(f"point {p} does not have dimension {d}")
        points.append(p)
    if not points:
        raise ValueError("empty window")
    return frozenset(points)
