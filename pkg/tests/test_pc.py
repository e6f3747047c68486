from __future__ import annotations

import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gihard.cfi import ColoredGraph, GraphPair, cfi_pair
from gihard.csp import CSPInstance, boolean_tseitin, tseitin
from gihard.errors import BudgetError, DomainError
from gihard.graphcore import DiGraph, complete_graph, cycle_graph
from gihard.group import FiniteAbelianGroup
from gihard.pc import (
    ONE,
    DerivableSpace,
    MultilinearPoly,
    PolySystem,
    Substitution,
    apply_substitution,
    builtin_reductions,
    check_side_conditions,
    classify_substituted,
    degree_d_derivable,
    identity_substitution,
    lemma_d0,
    min_refutation_degree,
    min_refutation_search,
    monomial_count,
    p_csp,
    p_iso,
    reduction_boolean_tseitin,
    reduction_component_fix,
    reduction_csp_to_iso,
    reduction_iso_to_csp,
    semantically_satisfiable,
)

Z2 = FiniteAbelianGroup((2,))
K4 = DiGraph.orient(complete_graph(4))
TRI = DiGraph.orient(cycle_graph(3))
X = MultilinearPoly.var


def naive_closure(S: PolySystem, p: int, d: int) -> tuple[bool, int]:
    """Textbook sparse elimination over dict rows, used as an independent oracle."""

    def bits(m):
        return [i for i in range(m.bit_length()) if m >> i & 1]

    def key(m):
        return (m.bit_count(), [-i for i in bits(m)])

    basis: dict[int, dict[int, int]] = {}

    def insert(f):
        f = {m: c % p for m, c in f.items() if c % p}
        while f:
            lead = max(f, key=key)
            if lead not in basis:
                inv = pow(f[lead], -1, p)
                basis[lead] = {m: c * inv % p for m, c in f.items()}
                return True
            c = f[lead]
            for m, bc in basis[lead].items():
                f[m] = (f.get(m, 0) - c * bc) % p
                if not f[m]:
                    del f[m]
        return False

    for a in S.axioms:
        if 0 <= a.degree <= d:
            insert(dict(a.terms))
    grew = True
    while grew:
        grew = False
        for b in list(basis.values()):
            if max(m.bit_count() for m in b) < d:
                for i in range(S.n):
                    g: dict[int, int] = {}
                    for m, c in b.items():
                        g[m | 1 << i] = g.get(m | 1 << i, 0) + c
                    grew |= insert(g)
    return 0 in basis, len(basis)


def random_system(rng: random.Random, n: int, p: int) -> PolySystem:
    axioms = []
    for _ in range(rng.randint(1, 5)):
        terms = {}
        for _ in range(rng.randint(1, 4)):
            m = 0
            for i in rng.sample(range(n), rng.randint(0, min(3, n))):
                m |= 1 << i
            terms[m] = rng.randrange(1, p)
        axioms.append(MultilinearPoly(terms))
    return PolySystem(tuple(f"y{i}" for i in range(n)), tuple(axioms))


# -- arithmetic and formats ----------------------------------------------------------------


def test_multilinear_reduction_and_degree():
    x, y = X(0), X(1)
    assert x * x == x
    f = (x + y) * (x - y)
    assert f.terms == {1: 1, 2: -1}
    assert (x * y).degree == 2
    assert MultilinearPoly({}).degree == -1
    assert (x * 3).mod(3).is_zero


def test_poly_text_round_trip():
    f = MultilinearPoly({0b101: 2, 0b10: -1, 0: 1})
    assert MultilinearPoly.from_text(f.to_text()) == f
    S = PolySystem(("a", "b", "c"), (f, X(1) - ONE))
    T = PolySystem.from_text(S.to_text(p=3))
    assert T.axioms == S.axioms and T.n == 3
    with pytest.raises(DomainError):
        MultilinearPoly.from_text("2*z3")


def test_axiom_outside_universe_rejected():
    with pytest.raises(DomainError):
        PolySystem(("a",), (X(3),))


# -- encodings --------------------------------------------------------------------------------


def test_p_iso_single_vertex():
    g = ColoredGraph(("a",), (0,), ())
    S = p_iso(g, g)
    assert S.n == 1
    assert set(S.axioms) == {X(0) - ONE}
    assert min_refutation_degree(S, 2, 2) is None


def test_p_iso_edge_against_non_edge():
    k2 = ColoredGraph(("a", "a"), (0, 1), ((0, 1, ""),))
    e2 = ColoredGraph(("a", "a"), (0, 1), ())
    S = p_iso(k2, e2)
    assert (S.n, len(S.axioms)) == (4, 10)
    assert not semantically_satisfiable(S, 2)
    # discovered by search; the naive closure agrees on every degree
    assert min_refutation_degree(S, 2, 5) == 2
    assert min_refutation_degree(S, 3, 5) == 2
    assert [naive_closure(S, 2, d)[0] for d in range(4)] == [False, False, True, True]


def test_p_iso_cfi_k4_variable_count():
    pair = cfi_pair(tseitin(K4, Z2, {0: (1,)}))
    assert p_iso(pair.left, pair.right).n == 88


def test_p_csp_single_variable():
    C = CSPInstance(("x",), (0, 1), ())
    S = p_csp(C)
    assert set(S.axioms) == {X(0) + X(1) - ONE, X(0) * X(1)}
    assert min_refutation_degree(S, 2, S.n + 1) is None


def test_p_csp_k4_boolean_tseitin_counts():
    S = p_csp(boolean_tseitin(K4, 2, {0: 1}))
    kinds = Counter(label.split(":")[0] for label in S.labels)
    assert S.n == 12
    assert kinds == {"sum": 6, "excl": 6, "forbid": 16}


def test_unsat_triangle_tseitin_degrees():
    for p in (2, 3):
        S = p_csp(boolean_tseitin(TRI, p, {0: 1}))
        assert not semantically_satisfiable(S, 2)
        assert [min_refutation_degree(S, q, 7) for q in (2, 3)] == [2, 2]


def test_k4_tseitin_degrees_match_naive_oracle():
    for p in (2, 3):
        S = p_csp(boolean_tseitin(K4, p, {0: 1}))
        for q in (2, 3):
            for d in range(5):
                space = DerivableSpace(S, q, d)
                assert (space.contains_one(), space.dimension) == naive_closure(S, q, d)
            assert min_refutation_degree(S, q, 6) == 3


# -- derivability -------------------------------------------------------------------------------


def test_trivial_derivations():
    x = X(0)
    assert degree_d_derivable(PolySystem(("x",), (x, x - ONE)), 2, 1, ONE)
    for d in range(3):
        assert not degree_d_derivable(PolySystem(("x",), (x - ONE,)), 3, d, ONE)


def test_derivable_non_constant_target():
    x, y = X(0), X(1)
    S = PolySystem(("x", "y"), (x - ONE,))
    assert degree_d_derivable(S, 2, 2, x * y - y)
    assert not degree_d_derivable(S, 2, 1, x * y - y)
    assert not degree_d_derivable(S, 2, 2, y)


def test_budget_and_field_checks():
    S = PolySystem(tuple(range(30)), (X(0),))
    with pytest.raises(BudgetError):
        DerivableSpace(S, 2, 5, budget=1000)
    with pytest.raises(DomainError):
        DerivableSpace(S, 4, 1)
    assert monomial_count(30, 2) == 1 + 30 + 435


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 6), st.sampled_from([2, 3, 5]))
def test_closure_matches_naive_oracle(seed, n, p):
    S = random_system(random.Random(seed), n, p)
    for d in range(n + 2):
        space = DerivableSpace(S, p, d)
        assert (space.contains_one(), space.dimension) == naive_closure(S, p, d)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 8), st.sampled_from([2, 3]))
def test_soundness_and_completeness(seed, n, p):
    S = random_system(random.Random(seed), n, p)
    unsat = not semantically_satisfiable(S, p)
    assert degree_d_derivable(S, p, n + 1, ONE) == unsat
    for d in range(n + 1):
        if degree_d_derivable(S, p, d, ONE):
            assert unsat


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(2, 7), st.sampled_from([2, 3]))
def test_monotone_in_degree(seed, n, p):
    S = random_system(random.Random(seed), n, p)
    dims = []
    for d in range(n + 2):
        space = DerivableSpace(S, p, d)
        assert space.dims == sorted(space.dims)
        assert space.dimension <= monomial_count(n, d)
        dims.append(space.contains_one())
    assert dims == sorted(dims)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(2, 7), st.sampled_from([2, 3]))
def test_cut_elimination_on_random_splits(seed, n, p):
    S = random_system(random.Random(seed), n, p)
    full = min_refutation_degree(S, p, n + 2)
    # the full system cannot be refuted below the degree of its own axioms
    floor = max(f.degree for f in S.axioms)
    for y in range(n):
        parts = [min_refutation_degree(S.restrict(y, v), p, n + 1) for v in (0, 1)]
        if None not in parts:
            assert full is not None and full <= max(floor, 1 + max(parts))


def test_search_report_records_rounds():
    S = p_csp(boolean_tseitin(TRI, 2, {0: 1}))
    res = min_refutation_search(S, 2, 4)
    js = res.to_json()
    assert js["min_degree"] == 2
    assert js["tried"][-1]["refutes"] and js["tried"][-1]["dims_per_round"]


# -- substitutions -------------------------------------------------------------------------------


def test_identity_substitution():
    S = p_csp(boolean_tseitin(TRI, 2, {0: 1}))
    assert apply_substitution(identity_substitution(S), S).axioms == S.axioms


def test_substitution_errors():
    S = PolySystem(("a", "b"), (X(0) * X(1),))
    with pytest.raises(DomainError):
        apply_substitution(Substitution(("u",), {"a": X(0)}, 1), S)
    with pytest.raises(DomainError):
        Substitution(("u", "v"), {"a": X(0) * X(1)}, 1)


def test_apply_substitution_multiplies_images():
    S = PolySystem(("a", "b"), (X(0) * X(1) - ONE,))
    sub = Substitution(("u", "v"), {"a": X(0) + X(1), "b": X(1)}, 1)
    assert apply_substitution(sub, S).axioms == (X(0) * X(1) + X(1) - ONE,)


def test_d0_value():
    assert lemma_d0(3, 2) == 197


def test_catalog_lists_four_reductions():
    cat = builtin_reductions()
    assert set(cat) == {"csp-to-iso", "iso-to-csp", "component-fix", "boolean-tseitin"}


@pytest.mark.parametrize("charge", [{}, {0: (1,)}])
def test_csp_iso_round_trip(charge):
    C = tseitin(TRI, Z2, charge)
    sub_a, csp_sys, iso_sys = reduction_csp_to_iso(C)
    sub_b, iso_src, csp_tgt = reduction_iso_to_csp(C)
    assert sub_a.d2 == lemma_d0(2, 2)
    # side conditions, well inside the proof's degree k|G|+1 = 5
    assert check_side_conditions(sub_a, csp_sys, iso_sys, 2, 4).ok
    assert check_side_conditions(sub_b, iso_src, csp_tgt, 2, 2).ok
    refutable = [min_refutation_degree(csp_sys, 2, 3) is not None, min_refutation_degree(iso_sys, 2, 3) is not None]
    assert refutable == [bool(charge)] * 2


def test_component_fix_maps_axioms_to_axioms_or_zero():
    k2 = ColoredGraph(("a", "a"), (0, 1), ((0, 1, ""),))
    e2 = ColoredGraph(("a", "a"), (0, 1), ())
    pairs = [GraphPair(k2, e2), GraphPair(k2, k2)]
    for pos in (0, 1):
        sub, src, tgt = reduction_component_fix(pairs, pos)
        kinds = set(classify_substituted(apply_substitution(sub, tgt), src, 2))
        assert kinds <= {"zero", "axiom"}
        assert "axiom" in kinds


@pytest.mark.parametrize("p", [2, 3])
def test_boolean_tseitin_embedding(p):
    sub, src, tgt = reduction_boolean_tseitin(K4, 0, p)
    for q in (2, 3):
        rep = check_side_conditions(sub, src, tgt, q, 4)
        assert rep.checked and rep.ok


def test_side_conditions_skipped_when_too_large():
    C = tseitin(TRI, Z2, {})
    sub, src, tgt = reduction_iso_to_csp(C)
    rep = check_side_conditions(sub, src, tgt, 2, 12, budget=1000)
    assert not rep.checked and rep.ok is None
