"""Explicit solutions of the CSP and isomorphism systems, and the end-to-end lower-bound pipeline.

Every assignment here is a pure oracle with memoization.  The heavy level-2
checks on or-pairs go through ``PairAssignment`` objects whose pair values
come from tables indexed by the partial maps that vertex pairs induce on the
underlying CSP.
"""

from __future__ import annotations

import hashlib
import json
import sys
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from . import graphcore as gc
from .cfi import GraphPair, brute_force_isomorphic, cfi_pair, extended_pair, is_partial_isomorphism
from .csp import IOTA2, IOTA3, STAR, ExtendedGroupCSP, GroupCSP, edge_var, extended_tseitin_disjunction, fix_arbitrary
from .errors import BudgetError, PreconditionError, QueryError, VerificationError
from .group import FiniteAbelianGroup, Subgroup, is_p_group
from .linsys import Assignment, PairAssignment, PairwiseIsoSystem, combine_pq, lcsp_system, p_depth, verify


class _Memo:
    """Thread-safe memo table; values are pure, so races only cost duplicate work."""

    def __init__(self):
        self._d: dict = {}
        self._lock = threading.Lock()

    def get(self, key, compute: Callable[[], Fraction]) -> Fraction:
        v = self._d.get(key)
        if v is None:
            v = compute()
            with self._lock:
                self._d.setdefault(key, v)
        return v


# -- the closed-form CSP solution ---------------------------------------------------------


class PsiOracle:
    """A partial assignment gets ``|D|^(-rank(domain))`` when robustly consistent with values in the subgroup ``D``, else 0."""

    def __init__(self, H: gc.DiGraph, group: FiniteAbelianGroup, sigma: Mapping[int, Any], ell: int, delta: Sequence | None = None, p: int | None = None):
        if len(gc.components(H.graph, range(H.m))) != 1:
            raise PreconditionError("the base graph must be connected")
        self.H, self.group, self.ell = H, group, ell
        self.sigma = {v: tuple(sigma.get(v, group.zero)) for v in range(H.n)}
        self.delta = frozenset(tuple(d) for d in delta) if delta is not None else frozenset(group.elements)
        self.base = len(self.delta)
        self.p = p
        self.var_edge = {edge_var(e): e for e in range(H.m)}
        self._memo = _Memo()

    @property
    def value_class(self) -> str:
        return "p-solution" if self.p else "rational"

    def _edge_map(self, key: Iterable) -> dict[int, Any] | None:
        psi: dict[int, Any] = {}
        for x, g in key:
            e = self.var_edge.get(x)
            if e is None:
                raise QueryError(f"unknown variable {x!r}")
            g = tuple(g)
            if psi.get(e, g) != g:
                return None
            psi[e] = g
        return psi

    def __call__(self, key) -> Fraction:
        key = tuple(key)
        if len(key) > self.ell:
            raise QueryError(f"partial assignment of size {len(key)} exceeds level {self.ell}")
        return self._memo.get(frozenset(key), lambda: self._value(key))

    def _value(self, key) -> Fraction:
        psi = self._edge_map(key)
        if psi is None or any(g not in self.delta for g in psi.values()):
            return Fraction(0)
        if not gc.is_robustly_consistent(self.H, self.group, self.sigma, psi):
            return Fraction(0)
        return Fraction(1, self.base ** gc.rank(self.H.graph, psi))

    def assignment(self) -> Assignment:
        return Assignment(oracle=self, value_class=self.value_class, p=self.p)


def psi(H: gc.DiGraph, group: FiniteAbelianGroup, sigma: Mapping[int, Any] | None, ell: int) -> PsiOracle:
    return PsiOracle(H, group, sigma or {}, ell)


def _subgroup_elements(group: FiniteAbelianGroup, delta) -> list:
    if isinstance(delta, Subgroup):
        return [t[0] for t in delta.elements]
    return [tuple(d) for d in delta]


def psi_subgroup(H: gc.DiGraph, group: FiniteAbelianGroup, delta, sigma: Mapping[int, Any] | None, ell: int) -> PsiOracle:
    """The closed form over a p-subgroup, extended by zero outside it."""
    elems = _subgroup_elements(group, delta)
    es = set(elems)
    if group.zero not in es or any(group.add(a, b) not in es for a in elems for b in elems):
        raise PreconditionError("the value set is not a subgroup")
    p = is_p_group(len(es))
    if p is None:
        raise PreconditionError(f"subgroup order {len(es)} is not a prime power")
    sigma = sigma or {}
    if any(tuple(s) not in es for s in sigma.values()):
        raise PreconditionError("a charge lies outside the subgroup")
    return PsiOracle(H, group, sigma, ell, elems, p)


class StarOracle:
    """Wraps the closed form for the CSP with the extra variable pinned to ``iota``."""

    def __init__(self, inner: PsiOracle, iota, other_iotas: Sequence = ()):
        self.inner, self.iota = inner, tuple(iota)
        self.other = {tuple(o) for o in other_iotas}
        self.p = inner.p
        self.ell = inner.ell + 1

    @property
    def value_class(self) -> str:
        return self.inner.value_class

    def __call__(self, key) -> Fraction:
        key = tuple(key)
        seen: dict = {}
        for x, g in key:
            g = tuple(g)
            if seen.get(x, g) != g:
                return Fraction(0)
            seen[x] = g
        if STAR in seen:
            # a value other than iota (including the group zero) is not a partial solution
            if seen[STAR] != self.iota:
                return Fraction(0)
            key = tuple((x, g) for x, g in key if x != STAR)
        return self.inner(key)

    def assignment(self) -> Assignment:
        return Assignment(oracle=self, value_class=self.value_class, p=self.p)


def star_psi(H: gc.DiGraph, vstar: int, p: int, level: int) -> StarOracle:
    """The p-solution for the extended Tseitin disjunction pinned to the order-p charge value."""
    group = FiniteAbelianGroup((2, 3))
    iota, other = (IOTA2[0], IOTA3[0]) if p == 2 else (IOTA3[0], IOTA2[0])
    delta = [(a, 0) for a in range(2)] if p == 2 else [(0, b) for b in range(3)]
    inner = psi_subgroup(H, group, delta, {vstar: iota}, level)
    return StarOracle(inner, iota, [other])


# -- CSP to isomorphism ---------------------------------------------------------------------


def fragment(C: GroupCSP, tag_v, tag_w) -> tuple | None:
    """The partial map a vertex pair induces; None if the tags do not match up."""
    grp = C.group
    if tag_v[0] != tag_w[0] or tag_v[1] != tag_w[1]:
        return None
    if tag_v[0] == "var":
        return ((tag_v[1], grp.sub(tag_v[2], tag_w[2])),)
    scope = C.constraint(tag_v[1]).scope
    return tuple((x, grp.sub(a, b)) for x, a, b in zip(scope, tag_v[2], tag_w[2]))


def merge(frags: Iterable[tuple]) -> tuple | None:
    out: dict = {}
    for fr in frags:
        for x, g in fr:
            if out.get(x, g) != g:
                return None
            out[x] = g
    return tuple(sorted(out.items()))


class LiftedIsoOracle:
    """Isomorphism-system values read off the CSP oracle through the induced partial maps."""

    def __init__(self, phi: Callable, C: GroupCSP, ell: int, pair: GraphPair | None = None):
        self.phi, self.C, self.ell = phi, C, ell
        self.pair = pair or cfi_pair(C)
        self.p = getattr(phi, "p", None)
        self._memo = _Memo()

    @property
    def value_class(self) -> str:
        return "p-solution" if self.p else "rational"

    def psi_of(self, key) -> tuple | None:
        G, H = self.pair.left, self.pair.right
        frags = []
        for v, w in key:
            fr = fragment(self.C, G.tags[v], H.tags[w])
            if fr is None:
                return None
            frags.append(fr)
        return merge(frags)

    def __call__(self, key) -> Fraction:
        key = tuple(key)
        if len(key) > self.ell:
            raise QueryError(f"partial map of size {len(key)} exceeds level {self.ell}")
        return self._memo.get(key, lambda: self._value(key))

    def _value(self, key) -> Fraction:
        if not key:
            return Fraction(1)
        G, H = self.pair.left, self.pair.right
        if not is_partial_isomorphism(G, H, key):
            return Fraction(0)
        psi_ = self.psi_of(key)
        if psi_ is None:
            return Fraction(0)
        return Fraction(self.phi(psi_))

    def assignment(self) -> Assignment:
        return Assignment(oracle=self, value_class=self.value_class, p=self.p)


def lift_csp_to_iso(phi: Callable, C: GroupCSP, ell: int) -> LiftedIsoOracle:
    return LiftedIsoOracle(phi, C, ell)


# -- or-pairs -------------------------------------------------------------------------------


@dataclass
class _Vertex:
    comp: int
    position: int | None  # 1-based position inside the sequence graph, None for connectors
    inner: Any  # tag inside the position graph, or the connector tag


def _describe(side) -> list[_Vertex]:
    out = []
    for k, t in side.tags:
        i, inner = t
        out.append(_Vertex(k, None, t) if i == "S" else _Vertex(k, i, inner))
    return out


class ExtendedLift:
    """Values for the or-pair obtained from a solution of one component pair.

    Components are matched by flipping the selection bit at ``position``.
    On a matched pair of components the value is the identity indicator away
    from ``position`` times the component value there (forward or transposed
    according to the selection bit); the value of a set spread over several
    matched pairs is the product of the per-pair values, and 0 as soon as a
    vertex is sent to a component other than its match.
    """

    def __init__(self, inner: Callable, pair: GraphPair, position: int, ell: int, inner_pair: GraphPair):
        if pair.layout is None:
            raise PreconditionError("not an or-pair")
        self.inner, self.pair, self.position, self.ell = inner, pair, position, ell
        self.inner_pair = inner_pair
        self.p = getattr(inner, "p", None)
        sel0, sel1 = pair.layout.selections
        where1 = {a: k for k, a in enumerate(sel1)}
        self.match = {}
        for k, a in enumerate(sel0):
            b = tuple(x ^ (1 if i == position - 1 else 0) for i, x in enumerate(a))
            self.match[k] = where1[b]
        self.forward = {k: a[position - 1] == 0 for k, a in enumerate(sel0)}
        self.left = _describe(pair.left)
        self.right = _describe(pair.right)
        self._lidx = inner_pair.left.index
        self._ridx = inner_pair.right.index
        self._memo = _Memo()

    @property
    def value_class(self) -> str:
        return "p-solution" if self.p else "rational"

    def split(self, key) -> dict[int, list] | None:
        """Group a set by matched component pair; None if the set leaves the matching or identity."""
        groups: dict[int, list] = {}
        for v, w in key:
            a, b = self.left[v], self.right[w]
            if self.match[a.comp] != b.comp or a.position != b.position:
                return None
            groups.setdefault(a.comp, [])
            if a.position != self.position:
                if a.inner != b.inner:
                    return None
                continue
            if self.forward[a.comp]:
                groups[a.comp].append((self._lidx[a.inner], self._ridx[b.inner]))
            else:
                groups[a.comp].append((self._lidx[b.inner], self._ridx[a.inner]))
        return groups

    def __call__(self, key) -> Fraction:
        key = tuple(key)
        if len(key) > self.ell:
            raise QueryError(f"partial map of size {len(key)} exceeds level {self.ell}")
        return self._memo.get(key, lambda: self._value(key))

    def _value(self, key) -> Fraction:
        G, H = self.pair.left, self.pair.right
        if key and not is_partial_isomorphism(G, H, key):
            return Fraction(0)
        groups = self.split(key)
        if groups is None:
            return Fraction(0)
        out = Fraction(1)
        for comp in sorted(groups):
            sub = tuple(sorted(groups[comp]))
            out *= Fraction(self.inner(sub))
            if not out:
                break
        return out

    def assignment(self) -> Assignment:
        return Assignment(oracle=self, value_class=self.value_class, p=self.p)

    # -- closed form for the pairwise verifier --------------------------------------------

    def pair_assignment(self) -> PairAssignment:
        """Enumerate the nonzero singletons and tabulate pair values by induced partial map.

        Needs the inner oracle to be a ``LiftedIsoOracle`` so that a vertex
        pair's contribution is a fragment of a CSP partial map.
        """
        inner = self.inner
        if not isinstance(inner, LiftedIsoOracle):
            raise PreconditionError("the closed form needs a lifted CSP oracle inside")
        G, H = self.pair.left, self.pair.right
        IL, IR = self.inner_pair.left, self.inner_pair.right
        by_color: dict[str, list[int]] = {}
        for w, c in enumerate(H.colors):
            by_color.setdefault(c, []).append(w)
        classes: dict[tuple, int] = {(): 0}
        support, cls, comp = [], [], []
        for v, c in enumerate(G.colors):
            a = self.left[v]
            target = self.match[a.comp]
            for w in by_color.get(c, ()):
                b = self.right[w]
                if b.comp != target or a.position != b.position:
                    continue
                if a.position != self.position:
                    if a.inner != b.inner:
                        continue
                    fr = ()
                else:
                    if self.forward[a.comp]:
                        fr = fragment(inner.C, IL.tags[self._lidx[a.inner]], IR.tags[self._ridx[b.inner]])
                    else:
                        fr = fragment(inner.C, IL.tags[self._lidx[b.inner]], IR.tags[self._ridx[a.inner]])
                    if fr is None:
                        continue
                    fr = merge([fr])
                    if fr is None or not inner.phi(fr):
                        continue
                g = classes.setdefault(fr, len(classes))
                support.append((v, w))
                cls.append(g)
                comp.append(a.comp)
        frs = [None] * len(classes)
        for fr, g in classes.items():
            frs[g] = fr
        T = [[Fraction(0)] * len(frs) for _ in frs]
        if self.ell < 2:
            for i, fi in enumerate(frs):
                T[i][0] = T[0][i] = Fraction(inner.phi(fi))
        for i, fi in enumerate(frs):
            # level 1 only needs singleton values, which sit in column 0
            for j in range(i, len(frs)) if self.ell >= 2 else [0] if i == 0 else []:
                m = merge([fi, frs[j]])
                T[i][j] = T[j][i] = Fraction(inner.phi(m)) if m is not None else Fraction(0)
        depth = 0
        p = self.p
        for row in T:
            for x in row:
                if x and p:
                    depth = max(depth, p_depth(x, p))
        if p and self.ell >= 2:
            # products across components need twice the singleton depth
            depth = max(depth, 2 * max((p_depth(T[g][0], p) for g in range(len(frs)) if T[g][0]), default=0))
        scale = p**depth if p else 1
        if not p:
            from math import lcm

            for row in T:
                for x in row:
                    scale = lcm(scale, x.denominator)
        Tn = np.array([[int(x * scale) for x in row] for row in T], dtype=np.int64)
        single_vals = np.array([int(T[g][0] * scale) for g in range(len(frs))], dtype=np.int64)
        cls_a = np.array(cls, dtype=np.int64)
        comp_a = np.array(comp, dtype=np.int64)
        single = single_vals[cls_a]

        def block(I, J):
            I, J = np.asarray(I), np.asarray(J)
            same = comp_a[I][:, None] == comp_a[J][None, :]
            within = Tn[cls_a[I][:, None], cls_a[J][None, :]]
            across = (single[I][:, None] * single[J][None, :]) // scale
            return np.where(same, within, across)

        meta = {"classes": len(frs), "support": len(support), "scale": scale}
        return PairAssignment(support, single, scale, block, self.value_class, p, meta)


def lift_or(inner: Callable, pair: GraphPair, position: int, ell: int, inner_pair: GraphPair) -> ExtendedLift:
    return ExtendedLift(inner, pair, position, ell, inner_pair)


def lift_extended(phi_gamma: LiftedIsoOracle, Cstar: ExtendedGroupCSP, ell: int, gamma, pair: GraphPair | None = None) -> ExtendedLift:
    """Lift a solution for the component fixed to ``gamma`` to the or-pair of ``Cstar``."""
    gamma = tuple(tuple(x) for x in gamma)
    if gamma not in Cstar.arb_relation:
        raise PreconditionError(f"{gamma} is not in R_arb")
    position = Cstar.arb_relation.index(gamma) + 1
    pair = pair or extended_pair(Cstar)
    return ExtendedLift(phi_gamma, pair, position, ell, phi_gamma.pair)


# -- the pipeline ---------------------------------------------------------------------------


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _log(msg: str, t0: float) -> None:
    print(f"[{time.time() - t0:8.1f}s] {msg}", file=sys.stderr, flush=True)


@dataclass
class PipelineResult:
    pair: GraphPair
    solution: PairAssignment
    report: dict = field(default_factory=dict)


def theorem41_pipeline(G: gc.UGraph, ell: int, vstar: int = 0, check_noniso: bool = True, oracle_budget: int = 200_000, quiet: bool = True) -> PipelineResult:
    """Non-isomorphic pair plus a verified integral solution of its isomorphism system at the given level.

    Timing goes to stderr only so that the report is reproducible byte for byte.
    """
    t0 = time.time()
    log = (lambda m: None) if quiet else (lambda m: _log(m, t0))
    if not G.is_regular(3) or not gc.is_two_connected(G, range(G.m)):
        raise PreconditionError("the base graph must be 3-regular and 2-connected")
    if ell not in (1, 2):
        raise BudgetError("the pipeline verifies levels 1 and 2 only")
    H = gc.DiGraph.orient(G)
    Cstar = extended_tseitin_disjunction(H, vstar)
    pair = extended_pair(Cstar)
    arity = max(len(c.scope) for c in Cstar.base.constraints)
    csp_level = arity * ell
    log(f"pair built: {pair.left.n} vertices per side")
    system = PairwiseIsoSystem(pair.left, pair.right, ell)
    parts = {}
    report: dict = {
        "graph": {"n": G.n, "m": G.m, "edges": [list(e) for e in G.edges]},
        "vstar": vstar,
        "levels": {"iso": ell, "csp": csp_level},
        "pair": {"vertices": pair.left.n, "edges": len(pair.left.edges), "hash": _digest(pair.to_json())},
    }
    for p, iota in ((2, IOTA2), (3, IOTA3)):
        star = star_psi(H, vstar, p, csp_level)
        Cp = fix_arbitrary(Cstar, iota)
        lifted = LiftedIsoOracle(star, Cp, ell)
        ext = lift_extended(lifted, Cstar, ell, iota, pair)
        pa = ext.pair_assignment()
        rep = verify(system, pa)
        log(f"p={p}: support {pa.meta['support']}, classes {pa.meta['classes']}, verified={rep.ok}")
        if not rep.ok:
            raise VerificationError("or-pair p-solution", f"p={p} or-pair solution fails at {rep.label}: {rep.lhs} != {rep.rhs}")
        parts[p] = pa
        report[f"p{p}"] = {"support": pa.meta["support"], "classes": pa.meta["classes"], "scale": pa.scale, "verified": rep.ok, "equations": rep.equations}
    combined = combine_pq(system, parts[2], parts[3])
    rep = verify(system, combined)
    if not rep.ok:
        raise VerificationError("p,q combination", f"combined solution fails at {rep.label}")
    nz = int(np.count_nonzero(combined.single_num))
    report["integral"] = {
        "verified": True,
        "equations": rep.equations,
        "support": len(combined.support),
        "nonzero_singletons": nz,
        "z": combined.meta["z"],
        "alpha": combined.meta["alpha"],
        "beta": combined.meta["beta"],
    }
    log("integral solution verified")
    if check_noniso:
        iso = brute_force_isomorphic(pair.left, pair.right, budget=oracle_budget)
        if iso is not None:
            raise VerificationError("or-pair non-isomorphism", "the or-pair turned out isomorphic")
        report["non_isomorphic"] = {"verified": True, "method": "exhaustive individualization-refinement search"}
        log("non-isomorphism certified")
    return PipelineResult(pair, combined, report)
