import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialectdecomp.poset import (
    MessagePattern,
    MessageUniverse,
    WidthMismatchError,
    build_poset,
    iter_bits,
    minimal_elements,
    upper_set,
)

from conftest import posets


def brute_covers(p):
    n = len(p)
    sub = lambda x, y: p.elements[x].issubset(p.elements[y]) and x != y
    return {
        (x, y)
        for x in range(n)
        for y in range(n)
        if sub(x, y) and not any(sub(x, z) and sub(z, y) for z in range(n))
    }


def test_universe_rejects_duplicates():
    with pytest.raises(ValueError, match="duplicate"):
        MessageUniverse(("a", "b", "a"))


def test_pattern_roundtrip_names():
    u = MessageUniverse(("x", "y", "z"))
    p = u.pattern(["z", "x"])
    assert p.indices() == (0, 2)
    assert u.names_of(p) == ["x", "z"]
    with pytest.raises(KeyError):
        u.pattern(["w"])


def test_width_mismatch():
    a = MessagePattern(1, 2)
    b = MessagePattern(1, 3)
    with pytest.raises(WidthMismatchError):
        a <= b
    with pytest.raises(WidthMismatchError):
        build_poset([a, b])


def test_bits_must_fit():
    with pytest.raises(ValueError):
        MessagePattern(8, 3)


def test_diamond(diamond):
    assert [diamond.label(i) for i in range(4)] == [[], ["B"], ["C"], ["B", "C"]]
    assert sorted(diamond.hasse_edges) == [(0, 1), (0, 2), (1, 3), (2, 3)]
    assert diamond.upper_set(1) == {1, 3}
    assert upper_set(diamond, 0) == {0, 1, 2, 3}
    assert minimal_elements(diamond, {1, 2, 3}) == {1, 2}


def test_duplicates_collapse():
    p = build_poset([MessagePattern(3, 2), MessagePattern(3, 2), MessagePattern(1, 2)])
    assert len(p) == 2
    assert p.hasse_edges == ((0, 1),)


def test_canonical_order_is_a_linear_extension():
    # {B} before {C}: fewer messages first, then by message index
    u = MessageUniverse(("A", "B", "C"))
    p = build_poset([u.pattern(["C"]), u.pattern(["A", "B"]), u.pattern(["B"])], u)
    assert [p.label(i) for i in range(3)] == [["B"], ["C"], ["A", "B"]]


def test_wide_patterns_use_several_words():
    width = 130
    lo = MessagePattern.from_indices([3, 120], width)
    hi = MessagePattern.from_indices([3, 64, 120], width)
    other = MessagePattern.from_indices([64, 129], width)
    p = build_poset([hi, other, lo])
    assert p.leq(p.index_of(lo), p.index_of(hi))
    assert not p.leq(p.index_of(lo), p.index_of(other))


def test_unknown_pattern():
    u = MessageUniverse(("B",))
    p = build_poset([u.pattern(["B"])], u)
    with pytest.raises(KeyError):
        p.index_of(u.pattern(()))


@given(posets(max_width=6, max_size=14))
@settings(max_examples=200, deadline=None)
def test_covers_match_brute_force(p):
    assert set(p.hasse_edges) == brute_covers(p)


@given(posets(max_width=6, max_size=14))
@settings(max_examples=200, deadline=None)
def test_order_queries_agree(p):
    n = len(p)
    for x, y in itertools.product(range(n), repeat=2):
        inc = p.elements[x].issubset(p.elements[y])
        assert p.leq(x, y) == inc
        assert p.less(x, y) == (inc and x != y)
        assert (y in p.upper_set(x)) == inc
        if p.less(x, y):
            assert x < y
    for y in range(n):
        assert set(p.upper_covers(y)) == {z for x, z in p.hasse_edges if x == y}


@given(posets(), st.data())
def test_minimal_elements_definition(p, data):
    subset = data.draw(st.sets(st.integers(0, len(p) - 1)))
    got = minimal_elements(p, subset)
    assert got == {y for y in subset if not any(p.less(x, y) for x in subset)}


def test_iter_bits():
    assert list(iter_bits(0b101001)) == [0, 3, 5]
    assert list(iter_bits(0)) == []


def test_upward_closed(diamond):
    assert diamond.is_upward_closed({1, 3})
    assert not diamond.is_upward_closed({1})
