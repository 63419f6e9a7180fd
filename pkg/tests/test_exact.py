from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from mixfield.errors import BadArity, DuplicateLabel, NegativeProb, SumNotOne, TooManyAtoms
from mixfield.exact import (as_rational, dist_new, format_rational, is_independent, marginal,
                            point_mass, product, push_forward, uniform)
from mixfield.nu import NuSpec, nu_dist

SIGN = uniform([-1, 1])
COIN = uniform([(-1,), (1,)])


def test_fair_coin():
    d = dist_new([("H", F(1, 2)), ("T", F(1, 2))])
    assert len(d) == 2 and d.prob("H") == F(1, 2)


def test_two_atoms():
    d = dist_new([("a", F(1, 4)), ("b", F(3, 4))])
    assert d.prob("b") == F(3, 4) and d.prob("zzz") == 0


def test_errors():
    with pytest.raises(SumNotOne):
        dist_new([("a", F(1, 3)), ("b", F(1, 3))])
    with pytest.raises(NegativeProb):
        dist_new([("a", F(-1, 2)), ("b", F(3, 2))])
    with pytest.raises(DuplicateLabel):
        dist_new([("a", F(1, 2)), ("a", F(1, 2))])


def test_zero_atoms_dropped():
    d = dist_new([("a", 1), ("b", 0)])
    assert d.labels == ("a",)


def test_as_rational_rejects_floats():
    assert as_rational("3/4") == F(3, 4)
    assert as_rational(1) == 1
    with pytest.raises((TypeError, ValueError)):
        as_rational(0.5)
    with pytest.raises(ValueError):
        as_rational("0.5")
    assert format_rational(F(2, 4)) == "1/2"


def test_marginal_of_nu():
    law = nu_dist(NuSpec(3, 1))
    assert marginal(law, (0,)) == COIN
    assert marginal(nu_dist(NuSpec(4, F(1, 2))), (0, 1, 2)) == product([SIGN] * 3)


def test_marginal_identity_and_errors():
    joint = product([SIGN, uniform([0, 1, 2])])
    assert marginal(joint, (0,)) == COIN
    with pytest.raises(BadArity):
        marginal(joint, (5,))


def test_is_independent():
    joint = product([SIGN, SIGN])
    assert is_independent(joint, [(0,), (1,)])
    law = nu_dist(NuSpec(3, 1))
    assert not is_independent(law, [(0,), (1,), (2,)])
    assert is_independent(marginal(law, (0, 1)), [(0,), (1,)])


def test_push_forward():
    assert push_forward(COIN, lambda x: x) == COIN
    bit = push_forward(uniform([-1, 1]), lambda x: (x + 1) // 2)
    assert bit == uniform([0, 1])
    assert push_forward(uniform("abcd"), lambda x: 0) == point_mass(0)


def test_product_cap():
    with pytest.raises(TooManyAtoms):
        product([SIGN] * 10, max_atoms=100)


@given(st.lists(st.integers(1, 20), min_size=1, max_size=6))
def test_random_distribution_sums_to_one(weights):
    total = sum(weights)
    d = dist_new([(i, F(w, total)) for i, w in enumerate(weights)])
    assert sum(p for _, p in d) == 1
    assert push_forward(d, lambda x: x % 2).prob(0) == sum(F(w, total) for i, w in enumerate(weights) if i % 2 == 0)
