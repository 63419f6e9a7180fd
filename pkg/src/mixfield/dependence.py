"""Measures of dependence between two finite sigma-fields.

A pair of finite sigma-fields is described by the joint pmf of their atoms,
a :class:`JointTable`.  Two dependence measures are computed from it:

* the strong mixing measure ``alpha``: sup over events of
  ``|P(A & B) - P(A) P(B)|``, computed exactly in rational arithmetic;
* the maximal correlation ``rho``: the second singular value of the
  normalized matrix ``P(a, b) / sqrt(P(a) P(b))``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Sequence

import numpy as np

from .errors import NumericFailure, TooManyAtoms
from .exact import FiniteDistribution

ALPHA_ATOM_CAP = 20
BRUTEFORCE_ATOM_CAP = 12
RHO_CELL_CAP = 1 << 24
TOP_SINGULAR_TOL = 1e-6


class JointTable:
    """Joint pmf between the atoms of two finite sigma-fields.

    Rows are the atoms of the first sigma-field, columns those of the
    second.  Row and column atoms all have positive probability.
    """

    __slots__ = ("row_labels", "col_labels", "cells", "row_probs", "col_probs")

    def __init__(self, row_labels: Sequence[Hashable], col_labels: Sequence[Hashable],
                 cells: Sequence[Sequence[Fraction]]):
        cells = tuple(tuple(Fraction(c) for c in row) for row in cells)
        if len(cells) != len(row_labels) or any(len(r) != len(col_labels) for r in cells):
            raise ValueError("cell matrix shape does not match the labels")
        if len(set(row_labels)) != len(row_labels) or len(set(col_labels)) != len(col_labels):
            raise ValueError("duplicate atom labels")
        if any(c < 0 for row in cells for c in row):
            raise ValueError("negative cell probability")
        row_probs = tuple(sum(row, Fraction(0)) for row in cells)
        col_probs = tuple(sum(col, Fraction(0)) for col in zip(*cells)) if cells else ()
        if sum(row_probs, Fraction(0)) != 1:
            raise ValueError("cells do not sum to 1")
        if any(p == 0 for p in row_probs) or any(p == 0 for p in col_probs):
            raise ValueError("every row and column atom needs positive probability")
        self.row_labels = tuple(row_labels)
        self.col_labels = tuple(col_labels)
        self.cells = cells
        self.row_probs = row_probs
        self.col_probs = col_probs

    @classmethod
    def from_distribution(cls, joint: FiniteDistribution) -> "JointTable":
        """Build from a distribution whose labels are ``(row, col)`` pairs."""
        rows: dict[Hashable, int] = {}
        cols: dict[Hashable, int] = {}
        for (r, c), _ in joint:
            rows.setdefault(r, len(rows))
            cols.setdefault(c, len(cols))
        order_r = sorted(rows, key=_sort_key)
        order_c = sorted(cols, key=_sort_key)
        ri = {r: i for i, r in enumerate(order_r)}
        ci = {c: i for i, c in enumerate(order_c)}
        cells = [[Fraction(0)] * len(order_c) for _ in order_r]
        for (r, c), p in joint:
            cells[ri[r]][ci[c]] += p
        return cls(order_r, order_c, cells)

    @classmethod
    def from_integers(cls, row_labels: Sequence[Hashable], col_labels: Sequence[Hashable],
                      weights: np.ndarray, denom: int) -> "JointTable":
        """Table with cells ``weights / denom``; rows and columns of zero mass are dropped."""
        weights = np.asarray(weights)
        row_w, col_w = weights.sum(axis=1), weights.sum(axis=0)
        keep_r = [i for i in range(len(row_labels)) if row_w[i] != 0]
        keep_c = [i for i in range(len(col_labels)) if col_w[i] != 0]
        if sum(int(row_w[i]) for i in keep_r) != denom or (weights < 0).any():
            raise ValueError("integer weights do not form a probability table")
        self = object.__new__(cls)
        self.row_labels = tuple(row_labels[i] for i in keep_r)
        self.col_labels = tuple(col_labels[i] for i in keep_c)
        sub = weights[np.ix_(keep_r, keep_c)]
        self.cells = tuple(tuple(Fraction(int(w), denom) for w in row) for row in sub)
        self.row_probs = tuple(Fraction(int(row_w[i]), denom) for i in keep_r)
        self.col_probs = tuple(Fraction(int(col_w[i]), denom) for i in keep_c)
        return self

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_labels), len(self.col_labels)

    def transpose(self) -> "JointTable":
        return JointTable(self.col_labels, self.row_labels, tuple(zip(*self.cells)))

    def as_float(self) -> np.ndarray:
        return np.array([[float(c) for c in row] for row in self.cells], dtype=float)

    def scaled_integers(self) -> tuple[np.ndarray, int]:
        """Cells times their common denominator ``D``, plus ``D``."""
        denom = 1
        for row in self.cells:
            for c in row:
                denom = math.lcm(denom, c.denominator)
        ints = [[c.numerator * (denom // c.denominator) for c in row] for row in self.cells]
        # D**2 times the atom count bounds every intermediate of the alpha engines.
        if denom * denom * max(self.shape) < (1 << 62):
            return np.array(ints, dtype=np.int64), denom
        return np.array(ints, dtype=object), denom

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JointTable):
            return NotImplemented
        return (self.row_labels, self.col_labels, self.cells) == (
            other.row_labels, other.col_labels, other.cells)

    def __hash__(self) -> int:
        return hash((self.row_labels, self.col_labels, self.cells))

    def __repr__(self) -> str:
        return f"JointTable({self.shape[0]}x{self.shape[1]})"


def _sort_key(label):
    return (repr(type(label)), label) if not isinstance(label, tuple) else ("tuple", label)


def product_table(tables: Sequence[JointTable]) -> JointTable:
    """Joint table of the joins of independent pairs (Kronecker product)."""
    rows = list(itertools.product(*(t.row_labels for t in tables)))
    cols = list(itertools.product(*(t.col_labels for t in tables)))
    row_idx = list(itertools.product(*(range(t.shape[0]) for t in tables)))
    col_idx = list(itertools.product(*(range(t.shape[1]) for t in tables)))
    cells = [
        [math.prod((t.cells[i][j] for t, i, j in zip(tables, ri, cj)), start=Fraction(1))
         for cj in col_idx]
        for ri in row_idx
    ]
    return JointTable(rows, cols, cells)


def _subset_masks(k: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(k, dtype=np.int64)) & 1).astype(np.int64)


def alpha_exact(j: JointTable, *, max_atoms: int = ALPHA_ATOM_CAP) -> Fraction:
    """Exact ``alpha`` by enumerating the events of the smaller side only.

    For a fixed event ``B`` the best ``A`` collects the atoms ``a`` with
    ``P(a & B) > P(a) P(B)``; the positive and negative parts of that
    difference have equal mass, so the optimum is the positive mass.
    """
    if j.shape[1] > j.shape[0]:
        j = j.transpose()
    k = j.shape[1]
    if k > max_atoms:
        raise TooManyAtoms(f"alpha_exact needs one side with <= {max_atoms} atoms, got {j.shape}")
    cells, denom = j.scaled_integers()
    rows = cells.sum(axis=1)
    best = 0
    chunk = 1 << 14
    for start in range(0, 1 << k, chunk):
        masks = _subset_masks(k, start, min(start + chunk, 1 << k))
        if cells.dtype == object:
            masks = masks.astype(object)
        joint_b = masks @ cells.T                     # (events, rows): D * P(a & B)
        mass_b = joint_b.sum(axis=1)                  # D * P(B)
        diff = denom * joint_b - mass_b[:, None] * rows[None, :]
        pos = np.where(diff > 0, diff, 0).sum(axis=1)
        neg = np.where(diff < 0, -diff, 0).sum(axis=1)
        best = max(best, int(max(pos.max(), neg.max())))
    return Fraction(best, denom * denom)


def alpha_bruteforce(j: JointTable, *, max_atoms: int = BRUTEFORCE_ATOM_CAP) -> Fraction:
    """Exact ``alpha`` by enumerating every pair of events (oracle)."""
    r, c = j.shape
    if r > max_atoms or c > max_atoms:
        raise TooManyAtoms(f"alpha_bruteforce caps both sides at {max_atoms} atoms, got {j.shape}")
    cells, denom = j.scaled_integers()
    mask_b = _subset_masks(c, 0, 1 << c)
    if cells.dtype == object:
        mask_b = mask_b.astype(object)
    col_part = cells @ mask_b.T                       # (rows, eventsB)
    mass_b = col_part.sum(axis=0)
    best = 0
    chunk = 256
    for start in range(0, 1 << r, chunk):
        mask_a = _subset_masks(r, start, min(start + chunk, 1 << r))
        if cells.dtype == object:
            mask_a = mask_a.astype(object)
        both = mask_a @ col_part                      # D * P(A & B)
        mass_a = mask_a @ cells.sum(axis=1)           # D * P(A)
        diff = denom * both - mass_a[:, None] * mass_b[None, :]
        best = max(best, int(np.abs(diff).max()))
    return Fraction(best, denom * denom)


def normalized_matrix(j: JointTable) -> np.ndarray:
    p = j.as_float()
    r = np.array([float(x) for x in j.row_probs])
    c = np.array([float(x) for x in j.col_probs])
    return p / np.sqrt(np.outer(r, c))


def rho_svd(j: JointTable, *, max_cells: int = RHO_CELL_CAP) -> float:
    """Maximal correlation: second singular value of the normalized matrix."""
    if j.shape[0] * j.shape[1] > max_cells:
        raise TooManyAtoms(f"table {j.shape} exceeds {max_cells} cells")
    if min(j.shape) == 1:
        return 0.0
    try:
        s = np.linalg.svd(normalized_matrix(j), compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    if abs(s[0] - 1.0) > TOP_SINGULAR_TOL:
        raise NumericFailure(f"top singular value {s[0]!r} is not 1")
    return float(min(max(s[1], 0.0), 1.0))


def csaki_fischer_join(tables: Sequence[JointTable]) -> float:
    """Maximal correlation of the joins of independent pairs: the largest factor value."""
    if not tables:
        return 0.0
    return max(rho_svd(t) for t in tables)


@dataclass(frozen=True)
class JoinCheck:
    joined: float
    product: float
    ok: bool


def verify_csaki_fischer(tables: Sequence[JointTable], *, tol: float = 1e-8,
                         max_cells: int = 1 << 20, max_factors: int = 3) -> JoinCheck:
    """Materialize the tensor-product table and compare its rho with the join."""
    if len(tables) > max_factors:
        raise TooManyAtoms(f"verification handles at most {max_factors} factors")
    cells = math.prod(t.shape[0] * t.shape[1] for t in tables)
    if cells > max_cells:
        raise TooManyAtoms(f"product table would have {cells} cells")
    joined = csaki_fischer_join(tables)
    prod = rho_svd(product_table(tables))
    return JoinCheck(joined, prod, abs(joined - prod) <= tol)
