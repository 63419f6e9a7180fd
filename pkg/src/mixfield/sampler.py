"""Seeded Monte Carlo samples of a field on a finite window.

Every copy ``(level, offset)`` gets its own Philox stream derived from
``(seed, level, offset)``; row ``r`` of the batch is the ``r``-th draw of
each stream.  Output therefore does not depend on how the copies are
scheduled across worker threads.
"""
from __future__ import annotations

import csv
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import stats

from .errors import InsufficientSamples, MissingUniformized, TooManyAtoms
from .exact import FiniteDistribution
from .field import FieldModel
from .lattice import Point, sorted_points

UNIFORM_GRID_MIN_BITS = 20
CHI2_MIN_EXPECTED = 5.0
MIN_SAMPLES = 10


def _zigzag(x: int) -> int:
    return 2 * x if x >= 0 else -2 * x - 1


def copy_stream(seed: int, level: int, offset: Point) -> np.random.Generator:
    entropy = [int(seed) & ((1 << 64) - 1), level, len(offset), *(_zigzag(c) for c in offset)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def sample_nu(rng: np.random.Generator, m: int, theta: Fraction, count: int) -> np.ndarray:
    """``count`` sign vectors from nu(m, theta): ``m - 1`` fair signs, then the
    parity completion kept with probability ``(1 + theta) / 2``."""
    head = rng.integers(0, 2, size=(count, m - 1), dtype=np.int8) * 2 - 1
    par = np.prod(head, axis=1, dtype=np.int8)
    p, q = theta.numerator, theta.denominator
    keep = rng.integers(0, 2 * q, size=count) < q + p
    last = np.where(keep, par, -par).astype(np.int8)
    return np.concatenate([head, last[:, None]], axis=1)


@dataclass(frozen=True)
class SampleBatch:
    window: tuple[Point, ...]
    rows: np.ndarray
    seed: int
    alphabet_bits: int
    uniformized: np.ndarray | None = field(default=None)

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    def column(self, k: Point) -> np.ndarray:
        return self.rows[:, self.window.index(tuple(k))]


def sample_window(model: FieldModel, window: Iterable[Point], count: int, seed: int, *,
                  threads: int = 1) -> SampleBatch:
    if count < 1:
        raise ValueError("count must be positive")
    pts = sorted_points(window)
    if any(len(p) != model.d for p in pts):
        raise ValueError(f"window points must have dimension {model.d}")
    pos = {k: i for i, k in enumerate(pts)}
    wide = model.alphabet_bits > 63
    copies = list(model.copies_touching(pts).items())

    def draw(item):
        (li, u), js = item
        lvl = model.levels[li]
        signs = sample_nu(copy_stream(seed, li, u), lvl.size, lvl.theta, count)
        out = []
        for j in js:
            site = pos[tuple(a + b for a, b in zip(u, j))]
            bits = (signs[:, lvl.phi[j]] > 0)
            out.append((site, model.bit_position(li, j), bits))
        return out

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(draw, copies))
    else:
        parts = [draw(c) for c in copies]

    if wide:
        rows = np.zeros((count, len(pts)), dtype=object)
        for part in parts:
            for site, bit, bits in part:
                rows[:, site] += bits.astype(object) * (1 << bit)
    else:
        rows = np.zeros((count, len(pts)), dtype=np.uint64)
        for part in parts:
            for site, bit, bits in part:
                rows[:, site] |= bits.astype(np.uint64) << np.uint64(bit)
    return SampleBatch(pts, rows, seed, model.alphabet_bits)


# ---- quantile uniformization ---------------------------------------------

@dataclass(frozen=True)
class MarginalCdf:
    """CDF of the uniform law on ``{0, ..., size - 1}``."""
    size: int

    def F(self, x):
        return Fraction(x + 1, self.size)

    def G(self, x):
        return Fraction(x, self.size)

    def inverse(self, u):
        """Generalized inverse ``inf{x : F(x) >= u}`` for ``u`` in (0, 1)."""
        u = np.asarray(u, dtype=float)
        x = np.ceil(u * self.size) - 1
        return np.clip(x, 0, self.size - 1).astype(np.int64)


def quantile_uniformize(x, v, size: int):
    """``G(x) + v (F(x) - G(x))`` for the uniform law on ``size`` values."""
    cdf = MarginalCdf(size)
    return cdf.G(x) + v * (cdf.F(x) - cdf.G(x))


def uniformize(batch: SampleBatch, seed2: int) -> SampleBatch:
    """Attach ``U = G(X) + V (F(X) - G(X))`` with fresh noise ``V``.

    ``V`` is drawn on the midpoints of a dyadic grid of ``2^r`` cells with
    ``r = 52 - alphabet_bits``, so ``U`` is an exact float and never lands
    on a jump of ``F``.
    """
    b = batch.alphabet_bits
    r = 52 - b
    if r < UNIFORM_GRID_MIN_BITS:
        raise TooManyAtoms(f"alphabet of 2^{b} values is too large for exact float uniformization")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed2) & ((1 << 64) - 1), 1])))
    cells = rng.integers(0, 1 << r, size=batch.rows.shape, dtype=np.int64)
    x = batch.rows.astype(np.int64)
    numer = 2 * ((x << r) + cells) + 1
    u = numer.astype(np.float64) / float(1 << (b + r + 1))
    return replace(batch, uniformized=u)


def deuniformize_check(batch: SampleBatch) -> bool:
    if batch.uniformized is None:
        raise MissingUniformized("batch has no uniformized values")
    recovered = MarginalCdf(1 << batch.alphabet_bits).inverse(batch.uniformized)
    return bool(np.array_equal(recovered, batch.rows.astype(np.int64)))


def ks_uniform(values: np.ndarray) -> float:
    return float(stats.kstest(np.ravel(values), "uniform").statistic)


# ---- empirical checks ---------------------------------------------------

def empirical_law(columns: np.ndarray) -> dict[tuple, float]:
    values, counts = np.unique(np.asarray(columns), axis=0, return_counts=True)
    total = counts.sum()
    return {tuple(int(v) for v in row): c / total for row, c in zip(values, counts)}


def tv_distance(empirical: dict, law: FiniteDistribution) -> float:
    labels = set(empirical) | set(law.labels)
    return 0.5 * sum(abs(empirical.get(x, 0.0) - float(law.prob(x))) for x in labels)


def extract_copy_signs(batch: SampleBatch, model: FieldModel, level: int, offset: Point) -> np.ndarray:
    """Recover the sign vector of copy ``(level, offset)`` from sampled values.

    Needs the whole translate ``carrier + offset`` inside the window.
    """
    lvl = model.levels[level]
    cols = []
    for j in lvl.encoding:
        site = tuple(a + b for a, b in zip(offset, j))
        bit = model.bit_position(level, j)
        col = batch.column(site)
        bits = np.array([(int(v) >> bit) & 1 for v in col]) if col.dtype == object \
            else ((col >> np.uint64(bit)) & np.uint64(1)).astype(np.int64)
        cols.append(2 * bits - 1)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class SubsetTest:
    points: tuple[Point, ...]
    statistic: float
    df: int
    p_value: float
    method: str
    flagged: bool


@dataclass
class IndependenceReport:
    N: int
    level: float
    threshold: float
    count: int
    tested: int
    total_subsets: int
    results: list[SubsetTest]

    @property
    def flagged(self) -> list[SubsetTest]:
        return [r for r in self.results if r.flagged]

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "level": self.level,
            "bonferroni_threshold": self.threshold,
            "count": self.count,
            "tested": self.tested,
            "total_subsets": self.total_subsets,
            "flagged": [[list(p) for p in r.points] for r in self.flagged],
            "subsets": [
                {"points": [list(p) for p in r.points], "statistic": r.statistic, "df": r.df,
                 "p_value": r.p_value, "method": r.method, "flagged": r.flagged}
                for r in self.results
            ],
        }


def _codes(columns: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    codes, margins = [], []
    for col in columns.T:
        _, inv, counts = np.unique(col, return_inverse=True, return_counts=True)
        codes.append(inv.ravel())
        margins.append(counts)
    return np.stack(codes, axis=1), margins


def _chi2_stat(codes: np.ndarray, margins: list[np.ndarray]) -> float:
    total = codes.shape[0]
    cells, observed = np.unique(codes, axis=0, return_counts=True)
    expected = np.full(len(cells), float(total))
    for i, m in enumerate(margins):
        expected *= m[cells[:, i]] / total
    # sum (O - E)^2 / E over all cells; empty cells contribute their E
    return float(np.sum(observed.astype(float) ** 2 / expected) - total)


def chi_square_independence(columns: np.ndarray, *, permutations: int = 999,
                            seed: int = 0) -> tuple[float, int, float, str]:
    """Test mutual independence of the columns against the product of margins.

    Uses the asymptotic chi-square law when every expected cell count is at
    least 5, otherwise a seeded permutation test on the same statistic.
    """
    codes, margins = _codes(np.asarray(columns))
    total = codes.shape[0]
    sizes = [len(m) for m in margins]
    df = math.prod(sizes) - 1 - sum(s - 1 for s in sizes)
    stat = _chi2_stat(codes, margins)
    if df == 0:
        return stat, 0, 1.0, "degenerate"
    min_expected = total * math.prod(m.min() / total for m in margins)
    if min_expected >= CHI2_MIN_EXPECTED:
        return stat, df, float(stats.chi2.sf(stat, df)), "chi2"
    rng = np.random.default_rng(seed)
    exceed = 0
    shuffled = codes.copy()
    for _ in range(permutations):
        for i in range(1, shuffled.shape[1]):
            shuffled[:, i] = rng.permutation(codes[:, i])
        if _chi2_stat(shuffled, margins) >= stat - 1e-9:
            exceed += 1
    return stat, df, (exceed + 1) / (permutations + 1), "permutation"


def empirical_independence(batch: SampleBatch, N: int, *, level: float = 0.001,
                           max_subsets: int = 200, seed: int = 0) -> IndependenceReport:
    """Chi-square test of every ``N``-subset of the window (Bonferroni-corrected)."""
    if batch.count < MIN_SAMPLES:
        raise InsufficientSamples(f"{batch.count} samples; at least {MIN_SAMPLES} needed")
    if N < 2 or N > len(batch.window):
        raise ValueError(f"cannot form {N}-subsets of a {len(batch.window)}-point window")
    idx_subsets = list(itertools.combinations(range(len(batch.window)), N))
    total = len(idx_subsets)
    if total > max_subsets:
        rng = np.random.default_rng(seed)
        chosen = sorted(rng.choice(total, size=max_subsets, replace=False))
        idx_subsets = [idx_subsets[i] for i in chosen]
    threshold = level / len(idx_subsets)
    results = []
    for i, subset in enumerate(idx_subsets):
        cols = batch.rows[:, list(subset)]
        if cols.dtype == object:
            cols = np.array([[hash(v) for v in row] for row in cols])
        stat, df, p, method = chi_square_independence(cols, seed=seed + i)
        results.append(SubsetTest(tuple(batch.window[j] for j in subset), stat, df, p, method,
                                   p < threshold))
    return IndependenceReport(N, level, threshold, batch.count, len(idx_subsets), total, results)


# ---- CSV ---------------------------------------------------------------

def format_point(k: Point) -> str:
    return str(k[0]) if len(k) == 1 else "(" + ",".join(str(c) for c in k) + ")"


def parse_point(text: str) -> Point:
    text = text.strip().strip("()")
    return tuple(int(c) for c in text.split(","))


def write_csv(batch: SampleBatch, path: str | Path) -> None:
    names = [f"k={format_point(k)}" for k in batch.window]
    header = names + ([n + "_u" for n in names] if batch.uniformized is not None else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for r in range(batch.count):
            row = [str(int(v)) for v in batch.rows[r]]
            if batch.uniformized is not None:
                row += [repr(float(u)) for u in batch.uniformized[r]]
            writer.writerow(row)


def read_csv(path: str | Path, alphabet_bits: int = 0, seed: int = 0) -> SampleBatch:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InsufficientSamples(f"{path} is empty") from None
        data = list(reader)
    value_cols = [i for i, h in enumerate(header) if not h.endswith("_u")]
    u_cols = [i for i, h in enumerate(header) if h.endswith("_u")]
    window = tuple(parse_point(header[i][2:]) for i in value_cols)
    ints = [[int(row[i]) for i in value_cols] for row in data]
    wide = any(v >= (1 << 63) for row in ints for v in row)
    rows = np.array(ints, dtype=object if wide else np.uint64).reshape(len(data), len(value_cols))
    uni = None
    if u_cols:
        uni = np.array([[float(row[i]) for i in u_cols] for row in data], dtype=float)
    return SampleBatch(window, rows, seed, alphabet_bits, uni)
