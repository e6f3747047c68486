from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from gihard import graphcore as gc
from gihard.cfi import ColoredGraph, GraphPair, brute_force_isomorphic, cfi_pair, extended_pair, is_partial_isomorphism, or_pair
from gihard.csp import IOTA2, IOTA3, edge_var, extended_tseitin_disjunction, fix_arbitrary, tseitin
from gihard.errors import BudgetError, PreconditionError, QueryError
from gihard.group import FiniteAbelianGroup
from gihard.linsys import PairwiseIsoSystem, lcsp_system, liso_system, verify
from gihard.witness import (
    ExtendedLift,
    LiftedIsoOracle,
    StarOracle,
    lift_csp_to_iso,
    lift_extended,
    psi,
    psi_subgroup,
    star_psi,
    theorem41_pipeline,
)

Z2 = FiniteAbelianGroup((2,))
Z3 = FiniteAbelianGroup((3,))
Z6 = FiniteAbelianGroup((2, 3))
K4G = gc.complete_graph(4)
K4 = gc.DiGraph.orient(K4G)


def test_psi_examples():
    o = psi(K4, Z2, {}, 3)
    assert o(()) == 1
    assert o(((edge_var(0), (1,)),)) == Fraction(1, 2)
    # all three edges at vertex 0 with a net charge of 1 violate C(0)
    at0 = [e for e in range(6) if 0 in K4.arcs[e]]
    bad = tuple((edge_var(e), (1,) if e == at0[0] else (0,)) for e in at0)
    assert o(bad) == 0
    with pytest.raises(QueryError):
        psi(K4, Z2, {}, 1)(((edge_var(0), (1,)), (edge_var(1), (1,))))


def test_psi_subgroup_examples():
    delta = [(0, 0), (0, 1), (0, 2)]
    o = psi_subgroup(K4, Z6, delta, {}, 3)
    assert o.p == 3
    assert o(((edge_var(0), (0, 1)),)) == Fraction(1, 3)
    assert o(((edge_var(0), (1, 0)),)) == 0
    for ell in (1, 2, 3):
        assert verify(lcsp_system(tseitin(K4, Z6), ell), psi_subgroup(K4, Z6, delta, {}, ell).assignment()).ok
    with pytest.raises(PreconditionError):
        psi_subgroup(K4, Z6, [(0, 0), (1, 0), (0, 1)], {}, 1)
    with pytest.raises(PreconditionError):
        psi_subgroup(K4, Z6, [(0, 0), (1, 1), (0, 2), (1, 0), (0, 1), (1, 2)], {}, 1)
    with pytest.raises(PreconditionError):
        psi_subgroup(K4, Z6, delta, {0: (1, 0)}, 1)


@pytest.mark.parametrize("grp", [Z2, Z3, Z6])
@pytest.mark.parametrize("ell", [1, 2, 3])
def test_psi_solves_k4(grp, ell):
    sigma = {0: grp.elements[1]}
    assert verify(lcsp_system(tseitin(K4, grp, sigma), ell), psi(K4, grp, sigma, ell).assignment()).ok


def _good_random_cubic():
    for seed in range(100):
        g = gc.random_regular_2connected(10, 3, seed)
        if gc.expander_profile(g).ell_suggest >= 3:
            return seed, g
    raise AssertionError("no seed found")


def test_psi_solves_random_cubic_within_expansion_bound():
    seed, g = _good_random_cubic()
    assert seed == 1
    H = gc.DiGraph.orient(g)
    for grp in (Z2, Z3):
        sigma = {0: grp.elements[1]}
        for ell in (1, 2, 3):
            assert verify(lcsp_system(tseitin(H, grp, sigma), ell), psi(H, grp, sigma, ell).assignment()).ok


def test_psi_can_fail_beyond_expansion_bound():
    g = gc.random_regular_2connected(10, 3, 0)
    assert gc.expander_profile(g).ell_suggest < 3
    H = gc.DiGraph.orient(g)
    sigma = {0: (1,)}
    assert not verify(lcsp_system(tseitin(H, Z2, sigma), 3), psi(H, Z2, sigma, 3).assignment()).ok


def test_psi_extension_branches():
    """Closed edges extend uniquely, free edges extend with every value."""
    g = gc.petersen()
    H = gc.DiGraph.orient(g)
    o = psi(H, Z3, {0: (2,)}, 4)
    rng = random.Random(3)
    for _ in range(60):
        X = rng.sample(range(H.m), rng.randint(0, 3))
        base = tuple((edge_var(e), (rng.randrange(3),)) for e in X)
        val = o(base)
        if not val:
            continue
        x = rng.choice([e for e in range(H.m) if e not in X])
        vals = [o(base + ((edge_var(x), (c,)),)) for c in range(3)]
        if x in gc.closure(g, X):
            assert sorted(vals) == [0, 0, val]
        else:
            assert vals == [val / 3] * 3


def test_star_wrapper_cases():
    s = star_psi(K4, 0, 2, 4)
    assert s.p == 2
    e = edge_var(1)
    assert s((("x*", (1, 0)),)) == 1
    assert s((("x*", (0, 1)),)) == 0
    assert s((("x*", (0, 0)),)) == 0
    assert s(((e, (1, 0)), (e, (0, 0)))) == 0
    assert s(((e, (1, 0)), ("x*", (1, 0)))) == s.inner(((e, (1, 0)),))


@pytest.mark.parametrize("p,iota", [(2, IOTA2), (3, IOTA3)])
def test_star_solves_fixed_extended_csp(p, iota):
    Cs = extended_tseitin_disjunction(K4, 0)
    Cp = fix_arbitrary(Cs, iota)
    for ell in (1, 2):
        assert verify(lcsp_system(Cp, ell), star_psi(K4, 0, p, ell).assignment()).ok


@pytest.mark.parametrize("grp", [Z2, Z3])
@pytest.mark.parametrize("ell", [1, 2])
def test_lift_csp_to_iso_verifies(grp, ell):
    sigma = {0: grp.elements[1]}
    C = tseitin(K4, grp, sigma)
    lifted = lift_csp_to_iso(psi(K4, grp, sigma, 3 * ell), C, ell)
    p = cfi_pair(C)
    assert verify(liso_system(p.left, p.right, ell), lifted.assignment()).ok


def test_lift_examples():
    C = tseitin(K4, Z3, {0: (1,)})
    lifted = lift_csp_to_iso(psi(K4, Z3, {0: (1,)}, 3), C, 1)
    G, H = lifted.pair.left, lifted.pair.right
    assert lifted(()) == 1
    v, w = G.index[("var", "x0", (2,))], H.index[("var", "x0", (0,))]
    assert lifted(((v, w),)) == lifted.phi((("x0", (2,)),)) == Fraction(1, 3)
    c = H.index[("con", "C0", H.tags[[i for i, t in enumerate(H.tags) if t[0] == "con"][0]][2])]
    assert lifted(((v, c),)) == 0


def test_lift_preserves_p_class():
    C = tseitin(K4, Z6)
    lifted = lift_csp_to_iso(psi_subgroup(K4, Z6, [(0, 0), (1, 0)], {}, 3), C, 1)
    assert lifted.value_class == "p-solution" and lifted.p == 2
    pair = cfi_pair(C)
    assert verify(liso_system(pair.left, pair.right, 1), lifted.assignment()).ok


def _plain(n, edges):
    return ColoredGraph(("a",) * n, tuple(range(n)), tuple((u, v, "") for u, v in edges))


def test_or_lift_with_isomorphism_indicator():
    P, Pb = _plain(3, [(0, 1), (1, 2)]), _plain(3, [(0, 2), (2, 1)])
    K3 = _plain(3, [(0, 1), (1, 2), (0, 2)])
    good = GraphPair(P, Pb)
    iso = set(brute_force_isomorphic(P, Pb).items())
    indicator = lambda key: int(set(key) <= iso)
    for position, pairs in ((1, [good, GraphPair(P, K3)]), (2, [GraphPair(K3, P), good])):
        pair = or_pair(pairs)
        for ell in (1, 2, 3):
            lift = ExtendedLift(indicator, pair, position, ell, good)
            assert verify(liso_system(pair.left, pair.right, ell, budget=10**6), lift.assignment()).ok


def test_extended_lift_examples():
    Cs = extended_tseitin_disjunction(K4, 0)
    C2 = fix_arbitrary(Cs, IOTA2)
    inner = LiftedIsoOracle(star_psi(K4, 0, 2, 8), C2, 2)
    ext = lift_extended(inner, Cs, 2, IOTA2)
    assert ext.position == 2
    G, H = ext.pair.left, ext.pair.right
    # an identity pair outside the pinned position
    k = 0
    v = next(i for i, t in enumerate(G.tags) if t[0] == k and t[1][0] == 1)
    w = next(i for i, t in enumerate(H.tags) if t[0] == ext.match[k] and t[1] == G.tags[v][1])
    assert ext(((v, w),)) == 1
    other = next(i for i, t in enumerate(H.tags) if t[0] != ext.match[k] and t[1] == G.tags[v][1])
    assert ext(((v, other),)) == 0
    # inside the pinned position the component value is used
    v2 = next(i for i, t in enumerate(G.tags) if t[0] == k and t[1][0] == 2 and t[1][1][0] == "var")
    w2 = next(i for i, t in enumerate(H.tags) if t[0] == ext.match[k] and t[1][0] == 2 and t[1][1][:2] == G.tags[v2][1][1][:2])
    assert ext(((v2, w2),)) in (Fraction(1, 2), Fraction(1), 0)


@pytest.fixture(scope="module")
def k4_pair_forms():
    Cs = extended_tseitin_disjunction(K4, 0)
    out = {}
    pair = extended_pair(Cs)
    for p, iota in ((2, IOTA2), (3, IOTA3)):
        inner = LiftedIsoOracle(star_psi(K4, 0, p, 8), fix_arbitrary(Cs, iota), 2)
        ext = lift_extended(inner, Cs, 2, iota, pair)
        out[p] = (ext, ext.pair_assignment())
    return pair, out


@pytest.mark.parametrize("p", [2, 3])
def test_pair_form_matches_generic_oracle(k4_pair_forms, p):
    pair, forms = k4_pair_forms
    ext, pa = forms[p]
    rng = random.Random(p)
    S = pa.support
    for _ in range(300):
        a, b = rng.sample(S, 2)
        key = tuple(sorted((a, b)))
        if is_partial_isomorphism(pair.left, pair.right, key):
            assert pa(key) == ext(key)
    for a in rng.sample(S, 100):
        assert pa((a,)) == ext((a,))
    # zeros propagate: atoms outside the support have zero pair values
    outside = [(v, w) for v in range(0, pair.left.n, 37) for w in range(pair.right.n) if pair.left.colors[v] == pair.right.colors[w] and (v, w) not in pa.pos]
    for a in rng.sample(outside, min(100, len(outside))):
        assert ext((a,)) == 0
        b = rng.choice(S)
        if a[0] != b[0] and a[1] != b[1]:
            assert ext(tuple(sorted((a, b)))) == 0


@pytest.mark.parametrize("p", [2, 3])
def test_pair_forms_verify_level2(k4_pair_forms, p):
    pair, forms = k4_pair_forms
    _, pa = forms[p]
    assert verify(PairwiseIsoSystem(pair.left, pair.right, 2), pa).ok


def test_pairwise_verifier_catches_corruption(k4_pair_forms):
    pair, forms = k4_pair_forms
    _, pa = forms[2]
    from gihard.linsys import PairAssignment

    bad = pa.single_num.copy()
    bad[0] += 1
    broken = PairAssignment(pa.support, bad, pa.scale, pa.block, "rational")
    assert not verify(PairwiseIsoSystem(pair.left, pair.right, 1), broken).ok


def test_pipeline_level1_without_oracle():
    res = theorem41_pipeline(K4G, 1, check_noniso=False)
    rep = res.report
    assert rep["levels"] == {"iso": 1, "csp": 4}
    assert rep["pair"]["vertices"] == 1472
    assert rep["integral"]["verified"]
    assert rep["integral"]["alpha"] * 2 ** rep["integral"]["z"] + rep["integral"]["beta"] * 3 ** rep["integral"]["z"] == 1
    assert res.solution.value_class == "integral"


def test_pipeline_preconditions():
    with pytest.raises(PreconditionError):
        theorem41_pipeline(gc.cycle_graph(5), 1)
    with pytest.raises(BudgetError):
        theorem41_pipeline(K4G, 3)
