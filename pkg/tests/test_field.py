import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from mixfield.dependence import rho_svd
from mixfield.errors import BadDimension, BadRates, CarrierTooSmall, DimensionMismatch, TooManyAtoms
from mixfield.exact import uniform
from mixfield.field import (FieldModel, Level, check_ntuplewise, joint_dist, joint_table,
                            lemma_3_1_field, lemma_4_1_field, lemma_4_2_field, marginal_of_point,
                            single_level_field, stack_fields, theorem_1_4_field, theorem_1_5_field)
from mixfield.lattice import box, lattice_block_lambda, shell_gamma, translate


def lemma31(theta=F(3, 4), d=1):
    return lemma_3_1_field(d, 2, 2, theta)


def test_single_block_sides():
    assert lemma_3_1_field(1, 2, 2, F(1, 2)).params["M"] == 3
    assert lemma_3_1_field(2, 2, 2, F(1, 2)).params["M"] == 2
    assert lemma31().levels[0].carrier == lattice_block_lambda(1, 3, 2)


def test_shell_lifts_n():
    # n=2 is lifted to 3 > N, so the shell has radius 3: 7^2 - 5^2 + 1 points
    f = lemma_4_1_field(2, 2, 2)
    assert f.levels[0].size == 25 and f.levels[0].theta == 1
    assert f.params["n_effective"] == 3
    assert single_level_field(shell_gamma(2, 2), 1, 2, 2).levels[0].size == 17
    assert lemma_4_1_field(2, 2, 1).params["n_effective"] == 3
    assert lemma_4_1_field(2, 4, 2).params["n_effective"] == 5
    with pytest.raises(BadDimension):
        lemma_4_1_field(1, 2, 2)


def test_construction_errors():
    with pytest.raises(CarrierTooSmall):
        single_level_field({(0,), (1,), (2,)}, 1, 1, 3)
    with pytest.raises(BadRates):
        theorem_1_4_field(1, 2, [F(1, 4), F(1, 2)])
    with pytest.raises(BadDimension):
        lemma_4_2_field(1, 2, 2)
    with pytest.raises(BadDimension):
        theorem_1_5_field(1, 2, [1], 2)
    with pytest.raises(DimensionMismatch):
        stack_fields([lemma31(d=1), lemma31(d=2)])


def test_stack_identity_and_levels():
    f = lemma31()
    s = stack_fields([f])
    assert s.levels == f.levels
    t = theorem_1_4_field(1, 2, [F(3, 4), F(1, 2), F(1, 4)])
    assert [lv.theta for lv in t.levels] == [F(3, 4), F(1, 2), F(1, 4)]
    assert t.alphabet_bits == 9


@pytest.mark.parametrize("model", [
    lemma31(), lemma_4_1_field(2, 2, 2), theorem_1_4_field(1, 2, [F(1, 2), F(1, 3)]),
    theorem_1_5_field(2, 2, [1, F(1, 2)], 2),
])
def test_json_round_trip(model):
    again = FieldModel.from_json(model.to_json())
    assert again == model
    assert again.to_json() == model.to_json()


def test_bad_rates_in_edited_json():
    data = theorem_1_4_field(1, 2, [F(1, 2), F(1, 4)]).to_dict()
    data["params"]["rates"] = ["1/4", "1/2"]
    with pytest.raises(BadRates):
        FieldModel.from_dict(data)


def test_marginals_uniform():
    f = lemma31()
    assert marginal_of_point(f, (0,)) == uniform(range(8))
    two = stack_fields([single_level_field({(0,), (1,), (2,)}, F(1, 2), 1, 2),
                        single_level_field({(0,), (1,), (2,), (3,)}, 1, 1, 2)])
    assert marginal_of_point(two, (5,)) == uniform(range(128))
    assert marginal_of_point(two, (5,)) == marginal_of_point(two, (-3,))


def test_joint_tables():
    f = lemma31(F(3, 5))
    assert rho_svd(joint_table(f, [(0,)], [(5,)])) < 1e-12
    assert abs(rho_svd(joint_table(f, [(0,)], [(2,), (4,)])) - 0.6) < 1e-9
    with pytest.raises(TooManyAtoms):
        joint_table(lemma_4_1_field(2, 2, 2), [(0, 0)], [(3, 3)])


FIELDS = [lemma31(), lemma31(d=2), theorem_1_4_field(1, 2, [F(3, 4), F(1, 2)]),
          lemma_3_1_field(1, 3, 1, F(1, 2))]


@pytest.mark.parametrize("model", FIELDS)
def test_stationarity(model):
    rng = random.Random(7)
    d = model.d
    pts = sorted(box((0,) * d, (3,) * d))
    for _ in range(10):
        s = rng.sample(pts, 1)
        t = rng.sample([p for p in pts if p not in s], min(3, 16 // model.alphabet_bits - 1))
        v = tuple(rng.randint(-5, 5) for _ in range(d))
        assert joint_table(model, s, t) == joint_table(model, translate(s, v), translate(t, v))


@pytest.mark.parametrize("model", FIELDS)
def test_ntuplewise(model):
    w = box((0,) * model.d, (5,) * model.d if model.d == 1 else (2, 2))
    assert check_ntuplewise(model, w)


def test_ntuplewise_joint_method_agrees():
    f = lemma31(F(1, 2))
    w = box((0,), (5,))
    assert check_ntuplewise(f, w, method="joint")
    assert not check_ntuplewise(f, {(0,), (2,), (4,)}, 3, method="joint")


def test_parity_triple_fails():
    f = single_level_field({(0,), (1,), (2,)}, 1, 1, 2)
    assert not check_ntuplewise(f, {(5,), (6,), (7,)}, 3)
    assert check_ntuplewise(f, {(5,)}, 1)


@given(st.integers(0, 4), st.integers(-3, 3))
def test_pair_independence_any_offset(num, shift):
    f = lemma31(F(num, 4))
    law = joint_dist(f, [(0,), (shift if shift else 1,)])
    assert all(p == F(1, 64) for _, p in law) and len(law) == 64


def test_level_validation():
    with pytest.raises(CarrierTooSmall):
        Level(((0,), (1,)), 1)
    with pytest.raises(ValueError):
        Level(((0,), (0,), (1,)), 1)


@pytest.mark.parametrize("model", FIELDS[:2])
def test_joint_table_matches_generic_construction(model):
    from mixfield.dependence import JointTable
    from mixfield.exact import FiniteDistribution
    d = model.d
    s, t = [(0,) * d], [(2,) + (0,) * (d - 1), (4,) + (1,) * (d - 1)]
    law = joint_dist(model, s + t)
    pairs = FiniteDistribution(((x[:1], x[1:]), p) for x, p in law)
    assert joint_table(model, s, t) == JointTable.from_distribution(pairs)
