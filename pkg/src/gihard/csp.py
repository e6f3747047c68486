"""CSP data model: explicit instances, group CSPs with coset constraints,
extended group CSPs with one arbitrary small constraint, Tseitin generators,
and a brute-force backtracking oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Iterable, Mapping, Sequence

from .errors import ArityError, BudgetError, DegenerateConstraintError, DomainError
from .graphcore import DiGraph
from .group import Coset, FiniteAbelianGroup, singleton_coset, sum_kernel

Value = Hashable


@dataclass(frozen=True)
class Constraint:
    scope: tuple[str, ...]
    relation: frozenset
    name: str = ""


@dataclass(frozen=True)
class CSPInstance:
    """Variables, an explicit domain, and constraints given by explicit tuple sets."""

    variables: tuple[str, ...]
    domain: tuple
    constraints: tuple[Constraint, ...]

    def __post_init__(self):
        known = set(self.variables)
        dom = set(self.domain)
        if len(known) != len(self.variables):
            raise DomainError("duplicate variable names")
        for c in self.constraints:
            if not set(c.scope) <= known:
                raise DomainError(f"constraint {c.name or c.scope} uses undeclared variables")
            for t in c.relation:
                if len(t) != len(c.scope):
                    raise ArityError(f"tuple {t} does not match scope {c.scope}")
                if not set(t) <= dom:
                    raise DomainError(f"tuple {t} leaves the domain")

    @property
    def arity(self) -> int:
        return max((len(c.scope) for c in self.constraints), default=0)

    def satisfies(self, phi: Mapping[str, Value]) -> bool:
        return all(tuple(phi[x] for x in c.scope) in c.relation for c in self.constraints)

    def violated(self, phi: Mapping[str, Value]) -> Constraint | None:
        for c in self.constraints:
            if tuple(phi[x] for x in c.scope) not in c.relation:
                return c
        return None

    @cached_property
    def _by_var(self) -> dict[str, tuple[Constraint, ...]]:
        out: dict[str, list[Constraint]] = {x: [] for x in self.variables}
        for c in self.constraints:
            for x in set(c.scope):
                out[x].append(c)
        return {x: tuple(v) for x, v in out.items()}

    def is_partial_solution(self, psi: Mapping[str, Value]) -> bool:
        """Whether ``psi`` satisfies every constraint whose scope lies inside its domain."""
        seen: set[int] = set()
        for x in psi:
            for c in self._by_var.get(x, ()):
                if id(c) in seen:
                    continue
                seen.add(id(c))
                if all(y in psi for y in c.scope) and tuple(psi[y] for y in c.scope) not in c.relation:
                    return False
        return True

    def as_explicit(self) -> "CSPInstance":
        return self

    def to_json(self) -> dict:
        return {
            "domain": [_jsonable(d) for d in self.domain],
            "variables": list(self.variables),
            "constraints": [
                {"name": c.name, "scope": list(c.scope), "tuples": sorted([_jsonable(v) for v in t] for t in c.relation)}
                for c in self.constraints
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "CSPInstance":
        dom = tuple(_unjson(d) for d in data["domain"])
        cons = tuple(
            Constraint(tuple(c["scope"]), frozenset(tuple(_unjson(v) for v in t) for t in c["tuples"]), c.get("name", ""))
            for c in data["constraints"]
        )
        return cls(tuple(data["variables"]), dom, cons)


def _jsonable(v):
    return list(v) if isinstance(v, tuple) else v


def _unjson(v):
    return tuple(v) if isinstance(v, list) else v


@dataclass(frozen=True)
class GroupConstraint:
    scope: tuple[str, ...]
    coset: Coset
    name: str


@dataclass(frozen=True)
class GroupCSP:
    group: FiniteAbelianGroup
    variables: tuple[str, ...]
    constraints: tuple[GroupConstraint, ...]

    def __post_init__(self):
        known = set(self.variables)
        for c in self.constraints:
            if c.coset.arity != len(c.scope):
                raise ArityError(f"constraint {c.name}: coset arity {c.coset.arity} vs scope {len(c.scope)}")
            if not set(c.scope) <= known:
                raise DomainError(f"constraint {c.name} uses undeclared variables")
        names = [c.name for c in self.constraints]
        if len(set(names)) != len(names):
            raise DomainError("constraint names must be unique")

    @property
    def arity(self) -> int:
        return max((len(c.scope) for c in self.constraints), default=0)

    @cached_property
    def explicit(self) -> CSPInstance:
        return CSPInstance(
            self.variables,
            self.group.elements,
            tuple(Constraint(c.scope, c.coset.element_set, c.name) for c in self.constraints),
        )

    def as_explicit(self) -> CSPInstance:
        return self.explicit

    def satisfies(self, phi: Mapping[str, Value]) -> bool:
        return self.explicit.satisfies(phi)

    def is_partial_solution(self, psi: Mapping[str, Value]) -> bool:
        return self.explicit.is_partial_solution(psi)

    def constraint(self, name: str) -> GroupConstraint:
        for c in self.constraints:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "group": self.group.to_json(),
            "variables": list(self.variables),
            "constraints": [{"name": c.name, "scope": list(c.scope), "coset": c.coset.to_json()} for c in self.constraints],
        }

    @classmethod
    def from_json(cls, data: dict) -> "GroupCSP":
        g = FiniteAbelianGroup.from_json(data["group"])
        cons = tuple(
            GroupConstraint(tuple(c["scope"]), Coset.from_json(g, c["coset"]), c["name"]) for c in data["constraints"]
        )
        return cls(g, tuple(data["variables"]), cons)


@dataclass(frozen=True)
class ExtendedGroupCSP:
    base: GroupCSP
    arb_scope: tuple[str, ...]
    arb_relation: tuple[tuple, ...]
    e: int

    def __post_init__(self):
        rel = tuple(sorted(set(tuple(tuple(x) for x in t) for t in self.arb_relation)))
        object.__setattr__(self, "arb_relation", rel)
        if len(rel) > self.e:
            raise DomainError(f"|R_arb| = {len(rel)} exceeds e = {self.e}")
        for t in rel:
            self.base.group.check_tuple(t, len(self.arb_scope))
        if not set(self.arb_scope) <= set(self.base.variables):
            raise DomainError("arbitrary constraint uses undeclared variables")

    @property
    def group(self) -> FiniteAbelianGroup:
        return self.base.group

    @property
    def variables(self) -> tuple[str, ...]:
        return self.base.variables

    @cached_property
    def explicit(self) -> CSPInstance:
        b = self.base.explicit
        arb = Constraint(self.arb_scope, frozenset(self.arb_relation), "Carb")
        return CSPInstance(b.variables, b.domain, b.constraints + (arb,))

    def as_explicit(self) -> CSPInstance:
        return self.explicit

    def satisfies(self, phi) -> bool:
        return self.explicit.satisfies(phi)

    def to_json(self) -> dict:
        d = self.base.to_json()
        d["arb"] = {"scope": list(self.arb_scope), "tuples": [[list(x) for x in t] for t in self.arb_relation], "e": self.e}
        return d

    @classmethod
    def from_json(cls, data: dict) -> "ExtendedGroupCSP":
        base = GroupCSP.from_json({k: v for k, v in data.items() if k != "arb"})
        arb = data["arb"]
        tuples = tuple(tuple(tuple(x) for x in t) for t in arb["tuples"])
        return cls(base, tuple(arb["scope"]), tuples, arb.get("e", len(tuples)))


def load_instance(data: dict):
    if "arb" in data:
        return ExtendedGroupCSP.from_json(data)
    if "group" in data:
        return GroupCSP.from_json(data)
    return CSPInstance.from_json(data)


# -- generators -------------------------------------------------------------------


def edge_var(e: int) -> str:
    return f"x{e}"


STAR = "x*"


def _vertex_scope(H: DiGraph, v: int) -> tuple[tuple[str, ...], tuple[int, ...]]:
    inc = H.signed_incidence(v)
    if not inc:
        raise DegenerateConstraintError(f"vertex {v} has no incident edges")
    return tuple(edge_var(e) for e, _ in inc), tuple(s for _, s in inc)


def _charge(group: FiniteAbelianGroup, sigma: Mapping[int, Any] | None, v: int):
    if sigma is None or v not in sigma:
        return group.zero
    val = tuple(sigma[v]) if not isinstance(sigma[v], int) else (sigma[v],)
    return group.element(val)


def tseitin(H: DiGraph, group: FiniteAbelianGroup, sigma: Mapping[int, Any] | None = None) -> GroupCSP:
    """One coset constraint per vertex: signed sum over incident edges equals ``sigma(v)``."""
    cons = []
    for v in range(H.n):
        scope, signs = _vertex_scope(H, v)
        shift = [group.zero] * len(scope)
        # with signs in {+1,-1}, putting signs[0]*sigma in slot 0 gives the right total
        shift[0] = group.scale(signs[0], _charge(group, sigma, v))
        cons.append(GroupConstraint(scope, Coset(sum_kernel(group, len(scope), signs), tuple(shift)), f"C{v}"))
    return GroupCSP(group, tuple(edge_var(e) for e in range(H.m)), tuple(cons))


def boolean_tseitin(H: DiGraph, p: int, sigma: Mapping[int, int] | None = None) -> CSPInstance:
    """The same mod-``p`` vertex equations, but over the Boolean domain ``{0,1}``."""
    import itertools

    cons = []
    for v in range(H.n):
        scope, signs = _vertex_scope(H, v)
        target = (sigma or {}).get(v, 0) % p
        rel = frozenset(
            t for t in itertools.product((0, 1), repeat=len(scope)) if sum(s * x for s, x in zip(signs, t)) % p == target
        )
        cons.append(Constraint(scope, rel, f"C{v}"))
    return CSPInstance(tuple(edge_var(e) for e in range(H.m)), (0, 1), tuple(cons))


def homogenize(C: GroupCSP) -> GroupCSP:
    return GroupCSP(
        C.group, C.variables, tuple(GroupConstraint(c.scope, c.coset.homogeneous(), c.name) for c in C.constraints)
    )


def fix_arbitrary(Cstar: ExtendedGroupCSP, gamma: Sequence) -> GroupCSP:
    gamma = tuple(tuple(x) for x in gamma)
    if gamma not in Cstar.arb_relation:
        raise DomainError(f"{gamma} is not in R_arb")
    fixed = GroupConstraint(Cstar.arb_scope, singleton_coset(Cstar.group, gamma), "Carb")
    b = Cstar.base
    return GroupCSP(b.group, b.variables, b.constraints + (fixed,))


IOTA2 = ((1, 0),)
IOTA3 = ((0, 1),)


def extended_tseitin_disjunction(H: DiGraph, vstar: int) -> ExtendedGroupCSP:
    """Tseitin over Z2 x Z3 with zero charge, except that the charge of ``vstar`` is a new
    variable ``x*`` restricted to ``{(1,0), (0,1)}``."""
    if not 0 <= vstar < H.n:
        raise DomainError(f"vertex {vstar} not in graph")
    g = FiniteAbelianGroup((2, 3))
    base = tseitin(H, g)
    cons = list(base.constraints)
    scope, signs = _vertex_scope(H, vstar)
    scope, signs = scope + (STAR,), signs + (-1,)
    zero = (g.zero,) * len(scope)
    cons[vstar] = GroupConstraint(scope, Coset(sum_kernel(g, len(scope), signs), zero), f"C{vstar}")
    b = GroupCSP(g, base.variables + (STAR,), tuple(cons))
    return ExtendedGroupCSP(b, (STAR,), (IOTA2, IOTA3), 2)


# -- brute force --------------------------------------------------------------------


def brute_force_solve(C, count: bool = False, budget: int = 10**7):
    """First satisfying assignment in lexicographic order (or the number of solutions)."""
    inst = C.as_explicit()
    xs, dom = inst.variables, inst.domain
    if len(dom) ** len(xs) > budget:
        raise BudgetError(f"|D|^|X| = {len(dom)}^{len(xs)} exceeds budget {budget}")
    pos = {x: i for i, x in enumerate(xs)}
    # each constraint is checked once its last variable (in search order) is set
    check_at: list[list[Constraint]] = [[] for _ in xs]
    for c in inst.constraints:
        if c.scope:
            check_at[max(pos[x] for x in c.scope)].append(c)
        elif () not in c.relation:
            return 0 if count else None
    vals: list = [None] * len(xs)
    total = 0

    def ok(i: int) -> bool:
        return all(tuple(vals[pos[x]] for x in c.scope) in c.relation for c in check_at[i])

    i, choice = 0, [0] * (len(xs) + 1)
    if not xs:
        return 1 if count else {}
    while i >= 0:
        if choice[i] == len(dom):
            choice[i] = 0
            i -= 1
            if i >= 0:
                choice[i] += 1
            continue
        vals[i] = dom[choice[i]]
        if ok(i):
            if i == len(xs) - 1:
                if not count:
                    return dict(zip(xs, vals))
                total += 1
                choice[i] += 1
            else:
                i += 1
        else:
            choice[i] += 1
    return total if count else None


def sigma_total(group: FiniteAbelianGroup, sigma: Mapping[int, Any], n: int):
    return group.total(_charge(group, sigma, v) for v in range(n))
