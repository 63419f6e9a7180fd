import pytest
from hypothesis import given, strategies as st

from mixfield.errors import BadDimension
from mixfield.lattice import (box, chain, chain_witness, components, dist2, far_enough,
                              lattice_block_lambda, parse_window, shell_gamma, shell_gamma0,
                              translates_inside)


def test_block_lambda():
    assert lattice_block_lambda(2, 2, 3) == {(0, 0), (0, 3), (3, 0), (3, 3)}
    assert lattice_block_lambda(1, 3, 2) == {(0,), (2,), (4,)}
    assert lattice_block_lambda(1, 2, 1) == {(0,), (1,)}


def test_shell():
    assert len(shell_gamma(2, 1)) == 9
    g = shell_gamma(2, 2)
    assert len(g) == 17
    assert dist2(shell_gamma0(2, 2), {(0, 0)}) == 4
    assert len(shell_gamma(3, 1)) == 27
    with pytest.raises(BadDimension):
        shell_gamma(1, 2)


def test_translates_inside():
    window = box((0,), (6,))
    assert translates_inside({(0,), (2,), (4,)}, window) == [(0,), (1,), (2,)]
    assert translates_inside({(0,), (7,)}, window) == []


def test_components():
    pts = {(0,), (1,), (4,), (5,), (9,)}
    assert sorted(map(sorted, components(pts, 2))) == [[(0,), (1,)], [(4,), (5,)], [(9,)]]
    assert len(components(pts, 5)) == 1


@given(st.integers(2, 3), st.integers(2, 4))
def test_shell_chain_connected(d, n):
    g0 = shell_gamma0(d, n)
    start, end = min(g0), max(g0)
    path = chain(g0, start, end, 1)
    assert path[0] == start and path[-1] == end
    assert all(p in g0 for p in path)


@given(st.data())
def test_chain_witness_finds_gap(data):
    g0 = shell_gamma0(2, 3)
    pts = sorted(g0)
    s = frozenset(data.draw(st.sets(st.sampled_from(pts), min_size=1, max_size=6)))
    rest = [p for p in pts if p not in s]
    t = frozenset(data.draw(st.sets(st.sampled_from(rest), min_size=1, max_size=6)))
    if far_enough(s, t, 2):
        w = chain_witness(g0, s, t, 1)
        assert w is not None and w in g0 and w not in s and w not in t


def test_parse_window():
    assert parse_window("{0..2}^2", 2) == box((0, 0), (2, 2))
    assert parse_window("{0..2}", 2) == box((0, 0), (2, 2))
    assert parse_window("{0..1}x{3..4}", 2) == box((0, 3), (1, 4))
    assert parse_window("(0,0);(1,2)", 2) == {(0, 0), (1, 2)}
    assert parse_window("3;5", 1) == {(3,), (5,)}
    for bad in ("{0..2", "{3..1}", "(0,0,1)", "", "{0..1}^3"):
        with pytest.raises(ValueError):
            parse_window(bad, 2)
