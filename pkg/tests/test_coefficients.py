from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from mixfield.coefficients import (CoefficientKind, auto_window, candidate_pairs, is_admissible,
                                   rho_numeric, rho_structural, windowed_coefficient)
from mixfield.dependence import rho_svd
from mixfield.errors import WindowTooLarge
from mixfield.field import (joint_table, lemma_3_1_field, lemma_4_2_field, single_level_field,
                            stack_fields, theorem_1_4_field, theorem_1_5_field)
from mixfield.lattice import box, shell_gamma, shell_gamma0, translate

KINDS = ["rho", "rho_prime", "rho_star"]
W7 = box((0,), (6,))


def coef(model, kind, n, window=None, method="structural"):
    return windowed_coefficient(model, kind, n, window, method)


def test_rho_structural_examples():
    f = lemma_3_1_field(1, 2, 2, F(3, 5))
    assert rho_structural(f, [(0,)], [(2,), (4,)]) == F(3, 5)
    assert rho_structural(f, [(0,)], [(2,)]) == 0
    assert rho_structural(f, [(0,)], [(5,)]) == 0
    assert abs(rho_svd(joint_table(f, [(0,)], [(2,), (4,)])) - 0.6) < 1e-9


def test_single_block_window():
    f = lemma_3_1_field(1, 2, 2, F(3, 4))
    r = coef(f, "rho_star", 1, W7)
    assert r.value == F(3, 4)
    s, t = r.witness
    carrier = f.levels[0].carrier
    assert any(translate(carrier, (v,)) <= set(s) | set(t) for v in range(-6, 7))
    assert coef(f, "rho_star", 3, W7).value == 0
    assert coef(f, "rho_star", 3, W7, "numeric").value < 1e-8
    a = coef(f, "alpha", 2, W7)
    assert a.bracket == (F(3, 16), F(3, 16)) and a.value == F(3, 16)


@pytest.mark.parametrize("kind", KINDS + ["alpha"])
def test_independent_field_is_zero(kind):
    f = lemma_3_1_field(1, 2, 2, 0)
    for n in (1, 2, 3):
        assert coef(f, kind, n, W7).value == 0
        assert coef(f, kind, n, W7, "numeric").value < 1e-9


def test_window_cap():
    f = lemma_3_1_field(1, 2, 2, F(1, 2))
    with pytest.raises(WindowTooLarge):
        coef(f, "rho_star", 1, box((0,), (14,)), "numeric")
    assert coef(f, "rho_star", 1, box((0,), (14,))).value == F(1, 2)


@settings(max_examples=25)
@given(st.integers(1, 4), st.sampled_from(KINDS), st.integers(1, 4),
       st.sets(st.integers(-3, 8), min_size=2, max_size=9))
def test_structural_matches_numeric(num, kind, n, pts):
    f = lemma_3_1_field(1, 2, 2, F(num, 4))
    window = frozenset((p,) for p in pts)
    s = coef(f, kind, n, window)
    q = coef(f, kind, n, window, "numeric")
    assert abs(float(s.value) - q.value) < 1e-8


@settings(max_examples=20)
@given(st.integers(0, 4), st.data())
def test_rho_structural_matches_numeric_and_svd(num, data):
    f = theorem_1_4_field(1, 2, [F(3, 4), F(num, 8)])
    pool = list(range(-4, 5))
    s = data.draw(st.sets(st.sampled_from(pool), min_size=1, max_size=2))
    t = data.draw(st.sets(st.sampled_from([p for p in pool if p not in s]), min_size=1, max_size=1))
    S, T = [(p,) for p in s], [(p,) for p in t]
    exact = rho_structural(f, S, T)
    assert abs(rho_numeric(f, S, T) - float(exact)) < 1e-9
    assert abs(rho_svd(joint_table(f, S, T, max_bits=18)) - float(exact)) < 1e-9


def test_structural_matches_numeric_2d():
    f = lemma_3_1_field(2, 2, 1, F(2, 3))
    window = box((0, 0), (2, 3))
    for kind in KINDS:
        for n in (1, 2):
            s, q = coef(f, kind, n, window), coef(f, kind, n, window, "numeric")
            assert abs(float(s.value) - q.value) < 1e-8, (kind, n)


@given(st.integers(1, 3), st.integers(-5, 5))
def test_translation_invariance(n, shift):
    f = theorem_1_4_field(1, 2, [F(3, 4), F(1, 2), F(1, 4)])
    w = box((0,), (9,))
    for kind in KINDS:
        assert coef(f, kind, n, w).value == coef(f, kind, n, translate(w, (shift,))).value


def test_monotone_and_ordered():
    f = theorem_1_5_field(2, 2, [1, F(1, 2)], 2)
    for n in (1, 2, 3):
        vals = [coef(f, k, n).value for k in KINDS]
        assert vals[0] <= vals[1] <= vals[2]
        a = coef(f, "alpha", n)
        assert 4 * a.bracket[1] <= vals[0]
    f1 = theorem_1_4_field(1, 2, [F(3, 4), F(1, 2), F(1, 4)])
    for kind in KINDS:
        vals = [coef(f1, kind, n).value for n in (1, 2, 3, 4)]
        assert vals == sorted(vals, reverse=True)


def test_stacking_takes_the_max():
    a = lemma_3_1_field(1, 2, 1, F(3, 4))
    b = lemma_3_1_field(1, 2, 2, F(1, 2))
    s = stack_fields([a, b])
    assert coef(s, "rho_star", 1).value == F(3, 4)
    assert coef(s, "rho_star", 2).value == F(1, 2)
    for n in (1, 2, 3):
        w = auto_window(s, n)
        assert coef(s, "rho_star", n, w).value == max(coef(a, "rho_star", n, w).value,
                                                       coef(b, "rho_star", n, w).value)


def test_rate_stack_edge_rates():
    zero = theorem_1_4_field(1, 2, [0])
    assert all(coef(zero, k, 1).value == 0 for k in KINDS + ["alpha"])
    ones = theorem_1_4_field(1, 2, [1, 1])
    assert coef(ones, "rho_star", 1).value == 1 == coef(ones, "rho_star", 2).value


def test_stacked_shells():
    f = lemma_4_2_field(2, 2, 2)
    assert coef(f, "rho_star", 1).value == 1 == coef(f, "rho_star", 2).value
    assert coef(f, "rho", 2).value == 0 == coef(f, "rho_prime", 2).value
    assert coef(lemma_4_2_field(2, 2, 1), "rho_star", 1).value == 1


def test_shell_field_unlifted():
    f = single_level_field(shell_gamma(2, 2), 1, 2, 2)
    r = coef(f, "rho_star", 2)
    assert r.value == 1
    assert r.witness[0] == ((0, 0),) and set(r.witness[1]) == shell_gamma0(2, 2)
    assert coef(f, "rho", 2).value == 0 and coef(f, "rho", 1).value == 1


def test_shell_plus_zero_rates():
    f = theorem_1_5_field(2, 2, [0, 0], 2)
    assert coef(f, "rho", 2).value == 0
    assert coef(f, "rho_star", 2).value == 1


@pytest.mark.parametrize("kind", list(CoefficientKind))
def test_candidate_pairs_admissible(kind):
    window = box((0, 0), (2, 2))
    pairs = candidate_pairs(kind, 2, window)
    assert pairs
    for s, t in pairs:
        assert is_admissible(kind, 2, s, t, window)


def test_report_json():
    f = lemma_3_1_field(1, 2, 2, F(3, 4))
    d = coef(f, "alpha", 2, W7).to_dict()
    assert d["bracket"] == ["3/16", "3/16"] and d["value"] == "3/16"
