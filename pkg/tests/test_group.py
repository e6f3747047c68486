from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings, strategies as st

from gihard.errors import ArityError
from gihard.group import (
    Coset,
    FiniteAbelianGroup,
    coset_contains,
    is_p_group,
    span,
    sum_kernel,
)

Z2 = FiniteAbelianGroup((2,))
Z3 = FiniteAbelianGroup((3,))
Z6 = FiniteAbelianGroup((2, 3))


def test_span_trivial():
    assert span(Z6, 1, []).elements == (((0, 0),),)


def test_span_of_order_two_element():
    assert span(Z6, 1, [[(1, 0)]]).elements == (((0, 0),), ((1, 0),))


def test_span_generator_of_full_group():
    assert span(Z6, 1, [[(1, 1)]]).order == 6


def test_span_arity_mismatch():
    with pytest.raises(ArityError):
        span(Z6, 2, [[(1, 0)]])


def test_sum_kernel_examples():
    assert sum_kernel(Z2, 1, (1,)).elements == (((0,),),)
    k = sum_kernel(Z2, 3, (1, 1, 1))
    assert set(k.elements) == {
        ((0,), (0,), (0,)), ((1,), (1,), (0,)), ((1,), (0,), (1,)), ((0,), (1,), (1,))
    }
    k = sum_kernel(Z3, 2, (1, -1))
    assert set(k.elements) == {((a,), (a,)) for a in range(3)}


def test_sum_kernel_generators_span_kernel():
    for g in (Z2, Z3, Z6):
        for k in range(1, 4):
            for signs in itertools.product((1, -1), repeat=k):
                ker = sum_kernel(g, k, signs)
                assert span(g, k, ker.generators) == ker


def test_coset_membership_examples():
    ker = sum_kernel(Z2, 3, (1, 1, 1))
    c = Coset(ker, ((1,), (0,), (0,)))
    assert coset_contains(c, ((1,), (1,), (1,)))
    assert not coset_contains(c, ((0,), (0,), (0,)))
    assert coset_contains(Coset(ker, ((0,),) * 3), ((0,),) * 3)
    with pytest.raises(ArityError):
        coset_contains(c, ((1,),))


def test_coset_json_round_trip():
    ker = sum_kernel(Z6, 3, (1, -1, 1))
    c = Coset(ker, ((1, 2), (0, 0), (0, 1)))
    assert Coset.from_json(Z6, c.to_json()) == c


def test_is_p_group():
    assert is_p_group(8) == 2
    assert is_p_group(9) == 3
    assert is_p_group(6) is None
    assert is_p_group(1) is None


@settings(max_examples=40, deadline=None)
@given(
    group=st.sampled_from([Z2, Z3, Z6, FiniteAbelianGroup((2, 2))]),
    k=st.integers(1, 3),
    data=st.data(),
)
def test_span_is_subgroup(group, k, data):
    elems = list(group.power_elements(k))
    gens = data.draw(st.lists(st.sampled_from(elems), max_size=3))
    s = span(group, k, gens)
    assert (group.zero,) * k in s
    for a in s.elements:
        assert group.tuple_neg(a) in s
        for b in s.elements:
            assert group.tuple_add(a, b) in s
    assert group.order**k % s.order == 0
    shift = data.draw(st.sampled_from(elems))
    c = Coset(s, shift)
    assert len(c.elements) == s.order
    for x in elems:
        assert coset_contains(c, x) == (x in c.element_set)


@pytest.mark.parametrize("group", [Z2, Z3, Z6])
def test_sum_kernel_size(group):
    for k in range(1, 5):
        assert sum_kernel(group, k, (1,) * k).order == group.order ** (k - 1)
