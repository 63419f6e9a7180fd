from fractions import Fraction as F

import numpy as np
import pytest

from mixfield.errors import InsufficientSamples, MissingUniformized
from mixfield.field import lemma_3_1_field, single_level_field
from mixfield.lattice import box
from mixfield.nu import NuSpec, nu_dist
from mixfield.sampler import (MarginalCdf, SampleBatch, copy_stream, deuniformize_check,
                              empirical_independence, empirical_law, extract_copy_signs,
                              format_point, ks_uniform, parse_point, quantile_uniformize,
                              read_csv, sample_nu, sample_window, tv_distance, uniformize,
                              write_csv)

L31 = lemma_3_1_field(1, 2, 2, F(3, 4))


def test_sample_nu_law():
    rng = copy_stream(5, 0, (0,))
    x = sample_nu(rng, 4, F(1, 3), 200_000)
    emp = empirical_law(x)
    assert tv_distance(emp, nu_dist(NuSpec(4, F(1, 3)))) < 0.01
    assert set(np.unique(x)) == {-1, 1}


def test_theta_one_is_even():
    x = sample_nu(copy_stream(1, 0, (0,)), 5, F(1), 1000)
    assert (np.prod(x, axis=1) == 1).all()


def test_uniform_marginal_bands():
    f = lemma_3_1_field(1, 2, 2, 0)
    batch = sample_window(f, [(0,)], 100_000, seed=3)
    counts = np.bincount(batch.rows[:, 0].astype(np.int64), minlength=8)
    p = 1 / 8
    sigma = np.sqrt(100_000 * p * (1 - p))
    assert np.all(np.abs(counts - 100_000 * p) < 4 * sigma)


def test_determinism_and_threads():
    w = box((0,), (7,))
    a = sample_window(L31, w, 5000, seed=11)
    b = sample_window(L31, w, 5000, seed=11, threads=4)
    c = sample_window(L31, w, 5000, seed=12)
    assert np.array_equal(a.rows, b.rows)
    assert not np.array_equal(a.rows, c.rows)


def test_window_order_does_not_matter():
    a = sample_window(L31, [(0,), (3,)], 100, seed=2)
    b = sample_window(L31, [(3,), (0,)], 100, seed=2)
    assert np.array_equal(a.rows, b.rows)
    wider = sample_window(L31, box((0,), (3,)), 100, seed=2)
    assert np.array_equal(wider.column((3,)), a.column((3,)))


def test_copy_signs_and_correlation():
    batch = sample_window(L31, box((0,), (4,)), 100_000, seed=7)
    y = extract_copy_signs(batch, L31, 0, (0,))
    assert tv_distance(empirical_law(y), nu_dist(NuSpec(3, F(3, 4)))) < 0.02
    # the optimal functions across the split {0} | {2, 4} are y0 and y2 * y4
    corr = np.corrcoef(y[:, 0], y[:, 1] * y[:, 2])[0, 1]
    assert abs(corr - 0.75) < 0.02


def test_quantile_examples():
    assert quantile_uniformize(0, F(3, 10), 2) == F(3, 20)
    assert quantile_uniformize(5, 0, 8) == F(5, 8)
    cdf = MarginalCdf(8)
    assert cdf.inverse(np.array([0.001, 0.125, 0.126, 0.999])).tolist() == [0, 0, 1, 7]


def test_uniformize_round_trip():
    batch = uniformize(sample_window(L31, box((0,), (3,)), 20_000, seed=1), 99)
    u = batch.uniformized
    assert u.shape == batch.rows.shape and (u >= 0).all() and (u < 1).all()
    assert deuniformize_check(batch)
    assert ks_uniform(u[:, 0]) < 1.63 / np.sqrt(20_000)
    shifted = SampleBatch(batch.window, batch.rows, batch.seed, batch.alphabet_bits, (u + 0.5) % 1)
    assert not deuniformize_check(shifted)
    with pytest.raises(MissingUniformized):
        deuniformize_check(sample_window(L31, [(0,)], 5, seed=1))


def test_trivial_alphabet():
    rows = np.zeros((50, 1), dtype=np.uint64)
    batch = uniformize(SampleBatch(((0,),), rows, 0, 0), 3)
    assert deuniformize_check(batch)


def test_independence_report():
    batch = sample_window(L31, box((0,), (5,)), 20_000, seed=4)
    report = empirical_independence(batch, 2)
    assert report.tested == 15 and not report.flagged
    triple = single_level_field({(0,), (1,), (2,)}, 1, 1, 2)
    bad = empirical_independence(sample_window(triple, box((0,), (2,)), 5000, seed=4), 3)
    assert [r.points for r in bad.flagged] == [((0,), (1,), (2,))]


def test_iid_synthetic_not_flagged():
    rng = np.random.default_rng(0)
    rows = rng.integers(0, 4, size=(20_000, 5)).astype(np.uint64)
    batch = SampleBatch(tuple((i,) for i in range(5)), rows, 0, 2)
    assert not empirical_independence(batch, 2).flagged


def test_sparse_cells_use_permutation_test():
    rng = np.random.default_rng(1)
    rows = rng.integers(0, 64, size=(300, 2)).astype(np.uint64)
    batch = SampleBatch(((0,), (1,)), rows, 0, 6)
    report = empirical_independence(batch, 2)
    assert report.results[0].method == "permutation" and not report.flagged


def test_insufficient_samples():
    with pytest.raises(InsufficientSamples):
        empirical_independence(sample_window(L31, box((0,), (2,)), 5, seed=1), 2)


def test_csv_round_trip(tmp_path):
    f2 = lemma_3_1_field(2, 2, 1, F(1, 2))
    batch = uniformize(sample_window(f2, box((0, 0), (1, 1)), 30, seed=5), 6)
    path = tmp_path / "s.csv"
    write_csv(batch, path)
    back = read_csv(path, alphabet_bits=batch.alphabet_bits)
    assert back.window == batch.window
    assert np.array_equal(back.rows, batch.rows)
    assert np.array_equal(back.uniformized, batch.uniformized)
    assert format_point((3,)) == "3" and parse_point("(1,-2)") == (1, -2)
    empty = tmp_path / "e.csv"
    empty.write_text("")
    with pytest.raises(InsufficientSamples):
        read_csv(empty)
