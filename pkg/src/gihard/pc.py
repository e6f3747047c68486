"""Polynomial calculus over prime fields.

Polynomials are multilinear by construction (``x*x`` collapses to ``x``), so the
Boolean axioms ``x^2 - x`` never appear explicitly.  Degree-bounded derivability
is decided by computing the closure of the axiom span under multiplication by
variables, truncated at the degree bound, with exact row reduction mod ``p``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import BudgetError, DomainError, UnsupportedInstanceError

DEFAULT_MONOMIAL_BUDGET = 100_000
_CHUNK = 256

Mask = int


# -- polynomials ----------------------------------------------------------------------


def _bits(mask: Mask) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(frozen=True)
class MultilinearPoly:
    """Sparse multilinear polynomial; monomials are bitmasks over variable ids.

    ``p == 0`` means integer coefficients (used for encodings that are later read
    over several fields).  Zero coefficients are never stored.
    """

    terms: Mapping[Mask, int]
    p: int = 0

    def __post_init__(self):
        clean = {}
        for m, c in self.terms.items():
            if m < 0:
                raise DomainError("monomial masks are non-negative")
            c = c % self.p if self.p else c
            if c:
                clean[m] = c
        object.__setattr__(self, "terms", clean)

    # constructors
    @classmethod
    def const(cls, c: int, p: int = 0) -> "MultilinearPoly":
        return cls({0: c}, p)

    @classmethod
    def var(cls, i: int, p: int = 0) -> "MultilinearPoly":
        return cls({1 << i: 1}, p)

    @classmethod
    def monomial(cls, ids: Iterable[int], c: int = 1, p: int = 0) -> "MultilinearPoly":
        m = 0
        for i in ids:
            m |= 1 << i
        return cls({m: c}, p)

    @property
    def degree(self) -> int:
        return max((m.bit_count() for m in self.terms), default=-1)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def variables(self) -> set[int]:
        acc = 0
        for m in self.terms:
            acc |= m
        return set(_bits(acc))

    def mod(self, p: int) -> "MultilinearPoly":
        return MultilinearPoly(self.terms, p)

    def _field(self, other: "MultilinearPoly") -> int:
        if self.p and other.p and self.p != other.p:
            raise DomainError(f"mixing F_{self.p} and F_{other.p}")
        return self.p or other.p

    def __add__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return MultilinearPoly(out, self._field(other))

    def __neg__(self) -> "MultilinearPoly":
        return MultilinearPoly({m: -c for m, c in self.terms.items()}, self.p)

    def __sub__(self, other: "MultilinearPoly") -> "MultilinearPoly":
        return self + (-other)

    def __mul__(self, other: "MultilinearPoly | int") -> "MultilinearPoly":
        if isinstance(other, int):
            return MultilinearPoly({m: c * other for m, c in self.terms.items()}, self.p)
        out: dict[Mask, int] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = m1 | m2
                out[m] = out.get(m, 0) + c1 * c2
        return MultilinearPoly(out, self._field(other))

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultilinearPoly):
            return NotImplemented
        p = self.p or other.p
        return (self - other).mod(p).is_zero if p else (self - other).is_zero

    def __hash__(self) -> int:
        return hash((self.p, frozenset(self.terms.items())))

    def evaluate(self, assignment: Mapping[int, int] | Sequence[int]) -> int:
        total = 0
        for m, c in self.terms.items():
            if all(assignment[i] for i in _bits(m)):
                total += c
        return total % self.p if self.p else total

    def restrict(self, i: int, value: int) -> "MultilinearPoly":
        bit = 1 << i
        out: dict[Mask, int] = {}
        for m, c in self.terms.items():
            if m & bit:
                if not value:
                    continue
                m ^= bit
            out[m] = out.get(m, 0) + c
        return MultilinearPoly(out, self.p)

    def sorted_terms(self) -> list[tuple[Mask, int]]:
        return sorted(self.terms.items(), key=lambda t: (-t[0].bit_count(), _bits(t[0])))

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            mono = "*".join(f"x{i}" for i in _bits(m)) or "1"
            parts.append(f"{c}*{mono}")
        return " + ".join(parts)

    @classmethod
    def from_text(cls, text: str, p: int = 0) -> "MultilinearPoly":
        text = text.strip()
        if text == "0":
            return cls({}, p)
        out: dict[Mask, int] = {}
        for part in text.split("+"):
            factors = [f.strip() for f in part.strip().split("*")]
            try:
                c = int(factors[0])
            except ValueError as exc:
                raise DomainError(f"bad coefficient in {part!r}") from exc
            m = 0
            for f in factors[1:]:
                if f == "1":
                    continue
                if not f.startswith("x") or not f[1:].isdigit():
                    raise DomainError(f"bad variable {f!r}")
                m |= 1 << int(f[1:])
            out[m] = out.get(m, 0) + c
        return cls(out, p)

    def __repr__(self) -> str:
        suffix = f" (mod {self.p})" if self.p else ""
        return f"MultilinearPoly({self.to_text()}{suffix})"


ONE = MultilinearPoly.const(1)


@dataclass(frozen=True)
class PolySystem:
    """Axioms over the variables ``0..len(variables)-1``; ``variables`` holds their names."""

    variables: tuple[Hashable, ...]
    axioms: tuple[MultilinearPoly, ...]
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.variables)
        for f in self.axioms:
            if any(m >> n for m in f.terms):
                raise DomainError("axiom mentions a variable outside the universe")

    @property
    def n(self) -> int:
        return len(self.variables)

    def index(self) -> dict[Hashable, int]:
        return {v: i for i, v in enumerate(self.variables)}

    def var(self, name: Hashable) -> MultilinearPoly:
        return MultilinearPoly.var(self.index()[name])

    def restrict(self, i: int, value: int) -> "PolySystem":
        return PolySystem(self.variables, tuple(f.restrict(i, value) for f in self.axioms), self.labels)

    def to_text(self, p: int | None = None) -> str:
        lines = [f"# vars {self.n}"]
        if p is not None:
            lines.append(f"# field {p}")
        lines += [f"# var {i} {_name_str(v)}" for i, v in enumerate(self.variables)]
        lines += [f.to_text() for f in self.axioms]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PolySystem":
        names: dict[int, str] = {}
        n = None
        axioms = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                bits = line[1:].split(maxsplit=2)
                if bits and bits[0] == "vars":
                    n = int(bits[1])
                elif bits and bits[0] == "var":
                    names[int(bits[1])] = bits[2] if len(bits) > 2 else bits[1]
                continue
            axioms.append(MultilinearPoly.from_text(line))
        if n is None:
            acc = 0
            for f in axioms:
                for m in f.terms:
                    acc |= m
            n = acc.bit_length()
        return cls(tuple(names.get(i, f"x{i}") for i in range(n)), tuple(axioms))


def _name_str(v) -> str:
    return repr(v).replace("\n", " ")


def field_text(p: int) -> str:
    return f"F{p}"


# -- encodings --------------------------------------------------------------------------


def p_iso(G, H) -> PolySystem:
    """Bijection and partial-isomorphism axioms for coloured graphs.

    Only colour-compatible pairs ``[v->w]`` become variables; the others are fixed to 0.
    """
    from .linsys import IsoUniverse

    U = IsoUniverse(G, H)
    n = len(U.atoms)
    axioms: list[MultilinearPoly] = []
    labels: list[str] = []
    for (kind, node), ids in U.slots:
        terms = {1 << i: 1 for i in ids}
        terms[0] = -1
        axioms.append(MultilinearPoly(terms))
        labels.append(f"{kind}{node}")
    for a in range(n):
        for b in range(a + 1, n):
            if not U.pair_ok(a, b):
                axioms.append(MultilinearPoly({(1 << a) | (1 << b): 1}))
                labels.append(f"P{a},{b}")
    return PolySystem(tuple(U.atoms), tuple(axioms), tuple(labels))


def p_csp(C) -> PolySystem:
    """Indicator variables ``(x, g)`` for every variable and domain value."""
    inst = C.as_explicit()
    names = [(x, g) for x in inst.variables for g in inst.domain]
    idx = {v: i for i, v in enumerate(names)}
    axioms: list[MultilinearPoly] = []
    labels: list[str] = []
    for x in inst.variables:
        terms = {1 << idx[(x, g)]: 1 for g in inst.domain}
        terms[0] = -1
        axioms.append(MultilinearPoly(terms))
        labels.append(f"sum:{x}")
    for x in inst.variables:
        for g, h in itertools.combinations(inst.domain, 2):
            axioms.append(MultilinearPoly({(1 << idx[(x, g)]) | (1 << idx[(x, h)]): 1}))
            labels.append(f"excl:{x}")
    for c in inst.constraints:
        for t in itertools.product(inst.domain, repeat=len(c.scope)):
            if t in c.relation:
                continue
            m = 0
            for x, g in zip(c.scope, t):
                m |= 1 << idx[(x, g)]
            axioms.append(MultilinearPoly({m: 1}))
            labels.append(f"forbid:{c.name}")
    return PolySystem(tuple(names), tuple(axioms), tuple(labels))


# -- semantics ------------------------------------------------------------------------------


def semantic_solutions(S: PolySystem, p: int, limit_vars: int = 22) -> np.ndarray:
    """Boolean vector of length ``2^n``: which 0/1 points satisfy every axiom mod ``p``."""
    if S.n > limit_vars:
        raise BudgetError(f"{S.n} variables exceed the brute-force limit {limit_vars}")
    pts = np.arange(1 << S.n, dtype=np.int64)
    ok = np.ones(1 << S.n, dtype=bool)
    for f in S.axioms:
        val = np.zeros(1 << S.n, dtype=np.int64)
        for m, c in f.terms.items():
            val += c * ((pts & m) == m)
        ok &= (val % p) == 0
    return ok


def semantically_satisfiable(S: PolySystem, p: int) -> bool:
    return bool(semantic_solutions(S, p).any())


def entails(S: PolySystem, p: int, g: MultilinearPoly) -> bool:
    """Whether every 0/1 solution of ``S`` over ``F_p`` is a root of ``g``."""
    sols = np.flatnonzero(semantic_solutions(S, p))
    for pt in sols:
        if g.evaluate([(int(pt) >> i) & 1 for i in range(S.n)]) % p:
            return False
    return True


# -- degree-bounded closure -------------------------------------------------------------------


def monomial_count(n: int, d: int) -> int:
    return sum(comb(n, i) for i in range(min(n, d) + 1))


class _Monomials:
    """Columns ordered by degree (highest first), then lexicographically by sorted ids."""

    def __init__(self, n: int, d: int):
        self.n, self.d = n, min(d, n)
        masks: list[Mask] = []
        degs: list[int] = []
        for k in range(self.d, -1, -1):
            for ids in itertools.combinations(range(n), k):
                m = 0
                for i in ids:
                    m |= 1 << i
                masks.append(m)
                degs.append(k)
        self.masks = masks
        self.deg = np.array(degs, dtype=np.int64)
        self.col = {m: j for j, m in enumerate(masks)}
        self.M = len(masks)
        # first column whose monomial may still be multiplied by a variable
        self.lo = int(np.searchsorted(-self.deg, -(d - 1), side="left")) if d >= 1 else self.M
        self._mul: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def mul_plan(self, i: int):
        """Columns of degree < d split by whether they already contain ``i``."""
        if i not in self._mul:
            bit = 1 << i
            has, lacks, tgt = [], [], []
            for j in range(self.lo, self.M):
                m = self.masks[j]
                if m & bit:
                    has.append(j)
                else:
                    lacks.append(j)
                    tgt.append(self.col[m | bit])
            self._mul[i] = (np.array(has, dtype=np.int64), np.array(lacks, dtype=np.int64), np.array(tgt, dtype=np.int64))
        return self._mul[i]

    def vector(self, f: MultilinearPoly, p: int) -> np.ndarray:
        v = np.zeros(self.M)
        for m, c in f.terms.items():
            if m not in self.col:
                raise DomainError("polynomial exceeds the degree bound")
            v[self.col[m]] = c % p
        return v

    def poly(self, v: np.ndarray, p: int) -> MultilinearPoly:
        return MultilinearPoly({self.masks[j]: int(v[j]) for j in np.flatnonzero(v)}, p)


def _inverse_table(p: int) -> np.ndarray:
    inv = np.zeros(p)
    for a in range(1, p):
        inv[a] = pow(a, -1, p)
    return inv


class DerivableSpace:
    """Row-reduced basis (mod ``p``) of everything derivable in degree at most ``d``.

    ``B[:r]`` is in reduced row echelon form with pivot columns ``pivots``; every
    row is scaled so its pivot is 1.  ``dims`` records the dimension after the
    axiom insertion and after each multiplication round.
    """

    def __init__(self, S: PolySystem, p: int, d: int, budget: int | None = DEFAULT_MONOMIAL_BUDGET,
                 stop_at_one: bool = False):
        if p < 2 or any(p % q == 0 for q in range(2, int(p**0.5) + 1)):
            raise DomainError(f"{p} is not prime")
        if d < 0:
            raise DomainError("degree must be non-negative")
        count = monomial_count(S.n, d)
        if budget is not None and count > budget:
            raise BudgetError(f"{count} monomials of degree <= {d} over {S.n} variables exceed budget {budget}")
        if (p - 1) ** 2 * max(count, _CHUNK) >= 2**52:
            raise BudgetError("field too large for exact floating-point reduction")
        self.S, self.p, self.d = S, p, d
        self.mon = _Monomials(S.n, d)
        self.inv = _inverse_table(p)
        self.B = np.zeros((min(64, self.mon.M), self.mon.M))
        self.r = 0
        self.pivots: list[int] = []
        self.dims: list[int] = []
        self.rounds = 0
        self._run(stop_at_one)

    # insertion
    def _reduce(self, V: np.ndarray) -> np.ndarray:
        if self.r:
            P = np.array(self.pivots, dtype=np.int64)
            V = V - V[:, P] @ self.B[: self.r]
        return np.mod(V, self.p)

    def _insert(self, V: np.ndarray) -> int:
        """Add the rows of ``V``; returns how many new pivots appeared."""
        added = 0
        for s in range(0, V.shape[0], _CHUNK):
            R = self._reduce(V[s : s + _CHUNK])
            R = R[R.any(axis=1)]
            if not len(R):
                continue
            new_rows: list[np.ndarray] = []
            new_piv: list[int] = []
            N = np.zeros((0, self.mon.M))
            for row in R:
                if new_piv:
                    row = np.mod(row - row[new_piv] @ N, self.p)
                nz = np.flatnonzero(row)
                if not len(nz):
                    continue
                c = int(nz[0])
                row = np.mod(row * self.inv[int(row[c])], self.p)
                if len(N):
                    N = np.mod(N - np.outer(N[:, c], row), self.p)
                N = np.vstack([N, row])
                new_piv.append(c)
            if not new_piv:
                continue
            if self.r:
                self.B[: self.r] = np.mod(self.B[: self.r] - self.B[: self.r][:, new_piv] @ N, self.p)
            k = len(new_piv)
            if self.r + k > self.B.shape[0]:
                grow = np.zeros((max(self.B.shape[0] * 2, self.r + k), self.mon.M))
                grow[: self.r] = self.B[: self.r]
                self.B = grow
            self.B[self.r : self.r + k] = N
            self.r += k
            self.pivots += new_piv
            added += k
        return added

    def _run(self, stop_at_one: bool) -> None:
        usable = [f for f in self.S.axioms if 0 <= f.degree <= self.d]
        if usable:
            self._insert(np.stack([self.mon.vector(f, self.p) for f in usable]))
        self.dims.append(self.r)
        fresh_from = 0
        while True:
            if stop_at_one and self.contains_one():
                return
            # rows added in the previous step whose leading monomial has degree < d
            fresh = [j for j in range(fresh_from, self.r) if self.pivots[j] >= self.mon.lo]
            fresh_from = self.r
            if not fresh:
                return
            # later insertions only add newer rows to these, and those get multiplied next round
            rows = self.B[fresh]
            added = 0
            for i in range(self.S.n):
                has, lacks, tgt = self.mon.mul_plan(i)
                for s in range(0, len(fresh), _CHUNK):
                    part = rows[s : s + _CHUNK]
                    out = np.zeros((len(part), self.mon.M))
                    out[:, has] = part[:, has]
                    out[:, tgt] += part[:, lacks]
                    added += self._insert(np.mod(out, self.p))
                if stop_at_one and self.contains_one():
                    break
            self.rounds += 1
            self.dims.append(self.r)
            if not added:
                return

    # queries
    @property
    def dimension(self) -> int:
        return self.r

    def contains_one(self) -> bool:
        return self.mon.M - 1 in self.pivots

    def contains(self, f: MultilinearPoly) -> bool:
        if f.degree > self.mon.d:
            return False
        v = self._reduce(self.mon.vector(f, self.p)[None, :])
        return not v.any()

    def normal_form(self, f: MultilinearPoly) -> MultilinearPoly:
        v = self._reduce(self.mon.vector(f, self.p)[None, :])[0]
        return self.mon.poly(v, self.p)

    def report(self) -> dict:
        return {
            "field": self.p,
            "degree": self.d,
            "monomials": self.mon.M,
            "dimension": self.r,
            "dims_per_round": list(self.dims),
            "refutes": self.contains_one(),
        }


def degree_d_derivable(S: PolySystem, p: int, d: int, target: MultilinearPoly = ONE,
                       budget: int | None = DEFAULT_MONOMIAL_BUDGET) -> bool:
    if target.degree > d:
        return False
    if target.degree < 0:
        return True
    is_one = target.terms == {0: 1} or (target.mod(p).terms == {0: 1})
    space = DerivableSpace(S, p, d, budget, stop_at_one=True)
    if space.contains_one():
        return True
    return False if is_one else space.contains(target.mod(p))


@dataclass
class DegreeSearch:
    field: int
    degree: int | None
    tried: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"field": self.field, "min_degree": self.degree, "tried": self.tried}


def min_refutation_search(S: PolySystem, p: int, d_max: int, d_min: int = 0,
                          budget: int | None = DEFAULT_MONOMIAL_BUDGET) -> DegreeSearch:
    res = DegreeSearch(p, None)
    for d in range(d_min, d_max + 1):
        space = DerivableSpace(S, p, d, budget, stop_at_one=True)
        res.tried.append(space.report())
        if space.contains_one():
            res.degree = d
            break
    return res


def min_refutation_degree(S: PolySystem, p: int, d_max: int, budget: int | None = DEFAULT_MONOMIAL_BUDGET) -> int | None:
    return min_refutation_search(S, p, d_max, budget=budget).degree


# -- reductions ----------------------------------------------------------------------------------


@dataclass(frozen=True)
class Substitution:
    """``images[y]`` is a polynomial over ``source_vars``; one image per target variable."""

    source_vars: tuple[Hashable, ...]
    images: Mapping[Hashable, MultilinearPoly]
    d1: int
    d2: int | None = None
    name: str = ""
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for y, f in self.images.items():
            if f.degree > self.d1:
                raise DomainError(f"image of {y!r} has degree {f.degree} > {self.d1}")


def identity_substitution(S: PolySystem) -> Substitution:
    return Substitution(S.variables, {v: MultilinearPoly.var(i) for i, v in enumerate(S.variables)}, 1, 1, "identity")


def apply_substitution(sub: Substitution, target: PolySystem) -> PolySystem:
    missing = [y for y in target.variables if y not in sub.images]
    if missing:
        raise DomainError(f"substitution does not cover {missing[0]!r}")
    images = [sub.images[y] for y in target.variables]
    cache: dict[Mask, MultilinearPoly] = {0: ONE}

    def mono(m: Mask) -> MultilinearPoly:
        if m not in cache:
            low = m & -m
            cache[m] = images[low.bit_length() - 1] * mono(m ^ low)
        return cache[m]

    out = []
    for q in target.axioms:
        acc = MultilinearPoly({})
        for m, c in q.terms.items():
            acc = acc + mono(m) * c
        out.append(acc)
    return PolySystem(sub.source_vars, tuple(out), target.labels)


def booleanity_ok(sub: Substitution, p: int) -> bool:
    """``f^2 - f`` is identically zero after multilinear reduction for every image."""
    return all((f * f - f).mod(p).is_zero for f in sub.images.values())


@dataclass
class SideConditionReport:
    checked: bool
    ok: bool | None
    degree: int | None
    failures: list[int] = field(default_factory=list)
    note: str = ""

    def to_json(self) -> dict:
        return {"checked": self.checked, "ok": self.ok, "degree": self.degree,
                "failures": self.failures, "note": self.note}


def check_side_conditions(sub: Substitution, source: PolySystem, target: PolySystem, p: int, d2: int,
                          budget: int | None = DEFAULT_MONOMIAL_BUDGET) -> SideConditionReport:
    """Every substituted target axiom must be degree-``d2`` derivable from ``source``."""
    if not booleanity_ok(sub, p):
        return SideConditionReport(True, False, d2, note="an image is not Boolean")
    subbed = apply_substitution(sub, target)
    if monomial_count(source.n, d2) > (budget or float("inf")):
        return SideConditionReport(False, None, d2, note="asserted by the reduction argument; too large to check")
    space = DerivableSpace(source, p, d2, budget)
    bad = [i for i, f in enumerate(subbed.axioms) if not space.contains(f.mod(p))]
    return SideConditionReport(True, not bad, d2, bad)


def lemma_d0(k: int, group_order: int) -> int:
    """Degree constant of the CSP/isomorphism reductions: ``(k|G| + |G|^k)^2 + 1``."""
    return (k * group_order + group_order**k) ** 2 + 1


def _vertex(G, tag):
    try:
        return G.index[tag]
    except KeyError as exc:
        raise UnsupportedInstanceError(f"vertex tag {tag!r} missing; graph was not built from this CSP") from exc


def reduction_csp_to_iso(C) -> tuple[Substitution, PolySystem, PolySystem]:
    """Images of isomorphism variables as products of CSP indicators.

    Returns ``(substitution, source P_csp(C), target P_iso(G(C), G~(C)))``.
    """
    from .cfi import cfi_pair

    pair = cfi_pair(C)
    source, target = p_csp(C), p_iso(pair.left, pair.right)
    sidx = source.index()
    grp = C.group
    images: dict[Hashable, MultilinearPoly] = {}
    for v, w in target.variables:
        tv, tw = pair.left.tags[v], pair.right.tags[w]
        img = MultilinearPoly({})
        if tv[0] == "var" and tw[0] == "var" and tv[1] == tw[1]:
            alpha = grp.sub(tv[2], tw[2])
            img = MultilinearPoly.var(sidx[(tv[1], alpha)])
        elif tv[0] == "con" and tw[0] == "con" and tv[1] == tw[1]:
            con = C.constraint(tv[1])
            alpha = grp.tuple_sub(tv[2], tw[2])
            if alpha in con.coset:
                img = MultilinearPoly.monomial(sidx[(x, a)] for x, a in zip(con.scope, alpha))
        elif tv[0] not in ("var", "con") or tw[0] not in ("var", "con"):
            raise UnsupportedInstanceError(f"unexpected vertex tags {tv!r}, {tw!r}")
        images[(v, w)] = img
    k = C.arity
    sub = Substitution(source.variables, images, max(k, 1), lemma_d0(k, grp.order), "csp-to-iso",
                       {"k": k, "group_order": grp.order})
    return sub, source, target


def reduction_iso_to_csp(C) -> tuple[Substitution, PolySystem, PolySystem]:
    """CSP indicator ``(x, g)`` becomes the isomorphism variable ``[0^(x) -> (-g)^(x)]``.

    Returns ``(substitution, source P_iso(G(C), G~(C)), target P_csp(C))``.
    """
    from .cfi import cfi_pair, var_tag

    pair = cfi_pair(C)
    source, target = p_iso(pair.left, pair.right), p_csp(C)
    sidx = source.index()
    grp = C.group
    images = {}
    for x, g in target.variables:
        key = (_vertex(pair.left, var_tag(x, grp.zero)), _vertex(pair.right, var_tag(x, grp.neg(g))))
        images[(x, g)] = MultilinearPoly.var(sidx[key]) if key in sidx else MultilinearPoly({})
    k = C.arity
    sub = Substitution(source.variables, images, 1, lemma_d0(k, grp.order), "iso-to-csp",
                       {"k": k, "group_order": grp.order})
    return sub, source, target


def reduction_component_fix(pairs, position: int) -> tuple[Substitution, PolySystem, PolySystem]:
    """Fix every component of an or-pair except ``position``.

    Source is ``P_iso`` of ``pairs[position]``; target is ``P_iso`` of the or-pair.
    Vertices at other positions and the connectors map identically (image 1).
    """
    from .cfi import or_pair

    if not 0 <= position < len(pairs):
        raise DomainError("position out of range")
    orp = or_pair(pairs)
    lay = orp.layout
    comp = pairs[position]
    source = p_iso(comp.left, comp.right)
    target = p_iso(orp.left, orp.right)
    sidx = source.index()
    right_of = {a: k for k, a in enumerate(lay.selections[1])}

    images = {}
    for v, w in target.variables:
        kv, tv = orp.left.tags[v]
        kw, tw = orp.right.tags[w]
        a = lay.selections[0][kv]
        b = tuple(x ^ (1 if i == position else 0) for i, x in enumerate(a))
        img = MultilinearPoly({})
        if right_of.get(b) == kw:
            if tv[0] == "S" or tv[0] != position + 1:
                if tv == tw:
                    img = ONE
            elif tw[0] == position + 1:
                lv, lw = tv[1], tw[1]
                if a[position] == 0:
                    key = (comp.left.index[lv], comp.right.index[lw])
                else:
                    key = (comp.left.index[lw], comp.right.index[lv])
                if key in sidx:
                    img = MultilinearPoly.var(sidx[key])
        images[(v, w)] = img
    sub = Substitution(source.variables, images, 1, 2, "component-fix", {"position": position})
    return sub, source, target


def reduction_boolean_tseitin(H, vstar: int, p: int) -> tuple[Substitution, PolySystem, PolySystem]:
    """Boolean mod-``p`` Tseitin (charge 1 at ``vstar``) into the extended Z2xZ3 instance.

    Returns ``(substitution, source P_csp(Boolean Tseitin), target P_csp(C*))``.
    """
    from .csp import IOTA2, IOTA3, STAR, boolean_tseitin, extended_tseitin_disjunction

    if p not in (2, 3):
        raise DomainError("the embedding exists for p in {2, 3}")
    iota = (IOTA2 if p == 2 else IOTA3)[0]
    B = boolean_tseitin(H, p, {vstar: 1})
    Cstar = extended_tseitin_disjunction(H, vstar)
    source, target = p_csp(B), p_csp(Cstar)
    sidx = source.index()
    zero = Cstar.group.zero
    images = {}
    for x, g in target.variables:
        if x == STAR:
            images[(x, g)] = ONE if g == iota else MultilinearPoly({})
        elif g == zero:
            images[(x, g)] = MultilinearPoly.var(sidx[(x, 0)])
        elif g == iota:
            images[(x, g)] = MultilinearPoly.var(sidx[(x, 1)])
        else:
            images[(x, g)] = MultilinearPoly({})
    sub = Substitution(source.variables, images, 1, B.arity + 1, f"boolean-tseitin-z{p}", {"p": p, "vstar": vstar})
    return sub, source, target


@dataclass(frozen=True)
class ReductionEntry:
    name: str
    d1: str
    d2: str
    build: Callable[..., tuple[Substitution, PolySystem, PolySystem]]
    direction: str


def builtin_reductions() -> dict[str, ReductionEntry]:
    return {
        "csp-to-iso": ReductionEntry("csp-to-iso", "k", "d0 = (k|G| + |G|^k)^2 + 1", reduction_csp_to_iso,
                                     "P_csp(C) derives substituted P_iso(G(C), G~(C))"),
        "iso-to-csp": ReductionEntry("iso-to-csp", "1", "d0", reduction_iso_to_csp,
                                     "P_iso(G(C), G~(C)) derives substituted P_csp(C)"),
        "component-fix": ReductionEntry("component-fix", "1", "2", reduction_component_fix,
                                        "P_iso(component) derives substituted P_iso(or-pair)"),
        "boolean-tseitin": ReductionEntry("boolean-tseitin", "1", "k + 1", reduction_boolean_tseitin,
                                          "P_csp(Boolean Tseitin) derives substituted P_csp(C*)"),
    }


def classify_substituted(subbed: PolySystem, source: PolySystem, p: int) -> list[str]:
    """Label each substituted axiom as ``zero``, ``axiom`` (up to sign) or ``other``."""
    known = {f.mod(p) for f in source.axioms} | {(-f).mod(p) for f in source.axioms}
    out = []
    for f in subbed.axioms:
        g = f.mod(p)
        if g.is_zero:
            out.append("zero")
        elif g in known:
            out.append("axiom")
        else:
            out.append("other")
    return out
