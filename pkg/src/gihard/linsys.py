"""Leveled linear systems for isomorphism and CSPs, exact verification, and solvers.

Both systems share one shape.  There is a finite set of *atoms* (a vertex pair
``(v, w)`` or an assignment ``(x, g)``) grouped into *slots* (all atoms with
a fixed ``v``, all atoms with a fixed ``w``, all atoms with a fixed ``x``).  A
variable is a set of at most ``level`` atoms, and every equation says that summing
over one slot extends a set ``s`` to ``[s]``.  Variables whose set is not a
partial isomorphism (resp. partial solution) are pinned to zero; they are
dropped from the universe instead of being emitted, and equations are only
produced for valid ``s`` (for invalid ``s`` every term vanishes anyway).
Equations whose slot already meets ``s`` are identities and are skipped.

Variable keys are canonical: the tuple of atoms of the set in atom order.  The
empty set is the empty tuple and always has index 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import BudgetError, DomainError, PreconditionError

Key = tuple
DEFAULT_BUDGET = 50_000


# -- universes ------------------------------------------------------------------------


class Universe:
    """Atoms, slots and the hereditary validity predicate of an extension system."""

    atoms: list[Hashable]
    slots: list[tuple[Hashable, tuple[int, ...]]]
    atom_slots: list[tuple[int, ...]]

    def compatible(self, chosen: Sequence[int], a: int) -> bool:  # pragma: no cover - abstract
        raise NotImplementedError

    def key(self, ids: Sequence[int]) -> Key:
        return tuple(self.atoms[i] for i in ids)


class IsoUniverse(Universe):
    def __init__(self, G, H):
        self.G, self.H = G, H
        palette = {c: i + 1 for i, c in enumerate(sorted({c for _, _, c in G.edges} | {c for _, _, c in H.edges}))}
        self.EG = _edge_matrix(G, palette)
        self.EH = _edge_matrix(H, palette)
        by_color: dict[str, list[int]] = {}
        for w, c in enumerate(H.colors):
            by_color.setdefault(c, []).append(w)
        self.atoms = [(v, w) for v, c in enumerate(G.colors) for w in by_color.get(c, ())]
        self.av = np.array([a[0] for a in self.atoms], dtype=np.int64)
        self.aw = np.array([a[1] for a in self.atoms], dtype=np.int64)
        left: list[list[int]] = [[] for _ in range(G.n)]
        right: list[list[int]] = [[] for _ in range(H.n)]
        for i, (v, w) in enumerate(self.atoms):
            left[v].append(i)
            right[w].append(i)
        # column sums (one slot per w) come first, then row sums (one per v)
        self.slots = [(("R", w), tuple(ids)) for w, ids in enumerate(right)]
        self.slots += [(("L", v), tuple(ids)) for v, ids in enumerate(left)]
        self.atom_slots = [(w, H.n + v) for v, w in self.atoms]

    def pair_ok(self, a: int, b: int) -> bool:
        v, w = self.atoms[a]
        v2, w2 = self.atoms[b]
        return v != v2 and w != w2 and self.EG[v, v2] == self.EH[w, w2]

    def compatible(self, chosen: Sequence[int], a: int) -> bool:
        return all(self.pair_ok(b, a) for b in chosen)


def _edge_matrix(G, palette: Mapping[str, int]) -> np.ndarray:
    M = np.zeros((G.n, G.n), dtype=np.int32)
    for u, v, c in G.edges:
        M[u, v] = M[v, u] = palette[c]
    return M


class CSPUniverse(Universe):
    def __init__(self, C):
        self.C = C.as_explicit()
        X = self.C.variables
        self.atoms = []
        self.slots = []
        for x in X:
            ids = []
            for g in self.C.domain:
                if self.C.is_partial_solution({x: g}):
                    ids.append(len(self.atoms))
                    self.atoms.append((x, g))
            self.slots.append((("X", x), tuple(ids)))
        pos = {x: i for i, x in enumerate(X)}
        self.atom_slots = [(pos[x],) for x, _ in self.atoms]

    def compatible(self, chosen: Sequence[int], a: int) -> bool:
        x, g = self.atoms[a]
        psi = {}
        for b in chosen:
            y, h = self.atoms[b]
            if y == x:
                return False
            psi[y] = h
        psi[x] = g
        return self.C.is_partial_solution(psi)


# -- systems --------------------------------------------------------------------------


@dataclass(frozen=True)
class Equation:
    """``sum(coef * [key]) == rhs``."""

    terms: tuple[tuple[Key, int], ...]
    rhs: int
    label: str


@dataclass
class LinSystem:
    universe: Universe
    ell: int
    kind: str
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.ell < 1:
            raise DomainError("level must be at least 1")

    def levels(self, top: int, budget: int | None = None) -> Iterator[tuple[int, ...]]:
        """Valid atom sets of size ``<= top`` in canonical order (by size, then lexicographic)."""
        U = self.universe
        level: list[tuple[int, ...]] = [()]
        count = 0
        for size in range(top + 1):
            for s in level:
                count += 1
                if budget is not None and count > budget:
                    raise BudgetError(f"more than {budget} variables at level {self.ell}")
                yield s
            if size == top:
                break
            nxt = []
            n_atoms = len(U.atoms)
            for s in level:
                start = s[-1] + 1 if s else 0
                for a in range(start, n_atoms):
                    if U.compatible(s, a):
                        nxt.append(s + (a,))
            level = nxt

    def extensions(self, s: tuple[int, ...], slot: int) -> list[tuple[int, ...]]:
        U = self.universe
        out = []
        for a in U.slots[slot][1]:
            if U.compatible(s, a):
                out.append(tuple(sorted(s + (a,))))
        return out

    def touched(self, s: tuple[int, ...]) -> set[int]:
        U = self.universe
        return {t for a in s for t in U.atom_slots[a]}

    def equation_ids(self) -> Iterator[tuple[tuple[tuple[int, ...], ...], tuple[int, ...], str, int]]:
        """Yield ``(extensions, base, label, slot)`` meaning ``sum [ext] - [base] == 0``.

        The closing equation ``[()] = 1`` is not included here.
        """
        U = self.universe
        for s in self.levels(self.ell - 1):
            used = self.touched(s)
            for t, (slot_key, _) in enumerate(U.slots):
                if t in used:
                    continue
                yield tuple(self.extensions(s, t)), s, f"{_slot_str(slot_key)} over {U.key(s)!r}", t

    def equations(self) -> Iterator[Equation]:
        U = self.universe
        for exts, s, label, _ in self.equation_ids():
            yield Equation(tuple((U.key(e), 1) for e in exts) + ((U.key(s), -1),), 0, label)
        yield Equation((((), 1),), 1, "empty set is one")

    @cached_property
    def variables(self) -> list[Key]:
        U = self.universe
        return [U.key(s) for s in self.levels(self.ell, self.budget)]

    @cached_property
    def index(self) -> dict[Key, int]:
        return {k: i for i, k in enumerate(self.variables)}

    def is_variable(self, key: Key) -> bool:
        return key in self.index

    def materialize(self) -> tuple[list[dict[int, int]], list[int], list[str]]:
        idx = self.index
        rows, rhs, labels = [], [], []
        for eq in self.equations():
            row: dict[int, int] = {}
            for k, c in eq.terms:
                j = idx[k]
                row[j] = row.get(j, 0) + c
            row = {j: c for j, c in row.items() if c}
            rows.append(row)
            rhs.append(eq.rhs)
            labels.append(eq.label)
        return rows, rhs, labels


def _slot_str(slot_key) -> str:
    kind, v = slot_key
    return {"R": "column sum at w=", "L": "row sum at v=", "X": "extension of "}[kind] + str(v)


def liso_system(G, H, ell: int, budget: int = DEFAULT_BUDGET) -> LinSystem:
    return LinSystem(IsoUniverse(G, H), ell, "iso", budget)


def lcsp_system(C, ell: int, budget: int = DEFAULT_BUDGET) -> LinSystem:
    return LinSystem(CSPUniverse(C), ell, "csp", budget)


# -- assignments ----------------------------------------------------------------------


@dataclass
class Assignment:
    """Exact rational values on variable keys, as a map (default 0) or a pure oracle."""

    values: Mapping[Key, Any] | None = None
    oracle: Callable[[Key], Any] | None = None
    value_class: str = "rational"
    p: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.values is None) == (self.oracle is None):
            raise DomainError("give exactly one of values / oracle")
        if self.value_class not in ("integral", "p-solution", "rational"):
            raise DomainError(f"unknown value class {self.value_class}")
        if self.value_class == "p-solution" and not self.p:
            raise DomainError("p-solutions need p")

    def __call__(self, key: Key) -> Fraction:
        if self.oracle is not None:
            return Fraction(self.oracle(key))
        return Fraction(self.values.get(key, 0))

    def to_json(self, system: LinSystem | None = None) -> dict:
        if self.values is None:
            raise DomainError("only materialized assignments can be exported")
        out = {}
        for k, v in self.values.items():
            v = Fraction(v)
            if v:
                name = str(system.index[k]) if system is not None else json.dumps(_jsonable_key(k))
                out[name] = f"{v.numerator}/{v.denominator}"
        return dict(sorted(out.items(), key=lambda kv: (len(kv[0]), kv[0])))


def _jsonable_key(k):
    if isinstance(k, tuple):
        return [_jsonable_key(x) for x in k]
    return k


def in_class(value: Fraction, value_class: str, p: int | None) -> bool:
    if value_class == "rational":
        return True
    if value_class == "integral":
        return value.denominator == 1
    if value == 0:
        return True
    if value < 0:
        return False
    return _is_power(value.numerator, p) and _is_power(value.denominator, p)


def _is_power(n: int, p: int) -> bool:
    while n % p == 0:
        n //= p
    return n == 1


def p_depth(value: Fraction, p: int) -> int:
    """Exponent ``z`` with ``value * p**z`` integral (0 for integers)."""
    d, z = value.denominator, 0
    while d % p == 0:
        d //= p
        z += 1
    if d != 1:
        raise DomainError(f"{value} is not a {p}-adic fraction")
    return z


# -- verification ---------------------------------------------------------------------


@dataclass
class Report:
    ok: bool
    equations: int = 0
    index: int | None = None
    label: str = ""
    lhs: Fraction | None = None
    rhs: Fraction | None = None
    message: str = ""
    max_depth: int = 0

    def to_json(self) -> dict:
        d = {"ok": self.ok, "equations_checked": self.equations}
        if not self.ok:
            d.update(index=self.index, label=self.label, lhs=str(self.lhs), rhs=str(self.rhs), message=self.message)
        return d


def verify(system, a: Assignment, check_eliminated: bool = True) -> Report:
    """Evaluate every equation exactly and stop at the first violation.

    ``system`` may also be any object with its own ``verify(assignment)``
    method (the pairwise verifier for large level-2 isomorphism systems).
    """
    if isinstance(system, tuple):
        system = RowSystem(*system)
    if not isinstance(system, LinSystem):
        return system.verify(a)
    U = system.universe
    cache: dict[tuple[int, ...], Fraction] = {}
    depth = 0

    def val(s: tuple[int, ...]) -> Fraction:
        nonlocal depth
        x = cache.get(s)
        if x is None:
            x = cache[s] = a(U.key(s))
            if a.value_class == "p-solution" and x:
                depth = max(depth, p_depth(x, a.p))
        return x

    def bad_class(s, x) -> Report:
        return Report(False, n, n, f"value class at {U.key(s)!r}", x, None, f"value {x} is not {a.value_class}")

    if a.values is not None and check_eliminated:
        for k, v in a.values.items():
            if Fraction(v) and not _key_valid(system, k):
                return Report(False, 0, None, f"eliminated variable {k!r}", Fraction(v), Fraction(0), "nonzero value on a non-valid set")
    n = 0
    for exts, s, label, slot in system.equation_ids():
        lhs = Fraction(0)
        for e in exts:
            x = val(e)
            if not in_class(x, a.value_class, a.p):
                return bad_class(e, x)
            lhs += x
        r = val(s)
        if lhs != r:
            return Report(False, n + 1, n, label, lhs, r, "extension sum differs")
        if check_eliminated and a.oracle is not None:
            bad = _eliminated_probe(system, s, slot, a)
            if bad is not None:
                return Report(False, n + 1, n, f"eliminated variable {bad[0]!r}", bad[1], Fraction(0), "nonzero value on a non-valid set")
        n += 1
    if val(()) != 1:
        return Report(False, n + 1, n, "empty set is one", val(()), Fraction(1), "[()] must be 1")
    return Report(True, n + 1, max_depth=depth)


def _key_valid(system: LinSystem, key: Key) -> bool:
    return len(key) <= system.ell and key in system.index


def _eliminated_probe(system: LinSystem, s, slot: int, a: Assignment):
    """Query the invalid one-atom extensions of ``s`` inside ``slot``; they must read 0."""
    U = system.universe
    for b in U.slots[slot][1]:
        if not U.compatible(s, b):
            key = U.key(tuple(sorted(s + (b,))))
            x = a(key)
            if x:
                return key, x
    return None


# -- sparse elimination ---------------------------------------------------------------


class _Eliminator:
    """Sparse Gaussian elimination with unit pivots (integers) or over ``F_p``.

    Rows are dicts ``col -> coef``.  Every pivot is a unimodular row
    operation, so integrality is preserved exactly.  When ``track`` is set
    each row also carries its combination of the original rows.
    """

    def __init__(self, rows: list[dict[int, int]], rhs: list[int], modulus: int | None, track: bool):
        self.mod = modulus
        self.rows = [dict(r) for r in rows]
        self.rhs = list(rhs)
        if modulus:
            self.rows = [{j: c % modulus for j, c in r.items() if c % modulus} for r in self.rows]
            self.rhs = [b % modulus for b in self.rhs]
        self.combo = [{i: 1} for i in range(len(rows))] if track else None
        self.col_rows: dict[int, set[int]] = {}
        for i, r in enumerate(self.rows):
            for j in r:
                self.col_rows.setdefault(j, set()).add(i)
        self.active = set(range(len(rows)))
        self.pivots: list[tuple[int, dict[int, int], int]] = []
        self.inconsistent: int | None = None

    def _is_unit(self, c: int) -> bool:
        return True if self.mod else abs(c) == 1

    def run(self) -> None:
        import heapq

        heap = [(len(r), i) for i, r in enumerate(self.rows)]
        heapq.heapify(heap)
        while heap:
            ln, i = heapq.heappop(heap)
            if i not in self.active or ln != len(self.rows[i]):
                continue
            row = self.rows[i]
            if not row:
                self.active.discard(i)
                if self.rhs[i] and self.inconsistent is None:
                    self.inconsistent = i
                continue
            units = [j for j, c in row.items() if self._is_unit(c)]
            if not units:
                continue
            col = min(units, key=lambda j: (len(self.col_rows[j]), j))
            touched = self._pivot(i, col)
            for r in touched:
                heapq.heappush(heap, (len(self.rows[r]), r))

    def _pivot(self, i: int, col: int) -> list[int]:
        mod = self.mod
        row, b = self.rows[i], self.rhs[i]
        piv = row[col]
        inv = pow(piv, -1, mod) if mod else piv  # ±1 is its own inverse
        self.active.discard(i)
        for j in row:
            self.col_rows[j].discard(i)
        self.pivots.append((col, dict(row), b))
        touched = []
        for r in list(self.col_rows.get(col, ())):
            tgt = self.rows[r]
            f = tgt[col] * inv
            if mod:
                f %= mod
            for j, c in row.items():
                nv = tgt.get(j, 0) - f * c
                if mod:
                    nv %= mod
                if nv:
                    if j not in tgt:
                        self.col_rows[j].add(r)
                    tgt[j] = nv
                elif j in tgt:
                    del tgt[j]
                    self.col_rows[j].discard(r)
            self.rhs[r] -= f * b
            if mod:
                self.rhs[r] %= mod
            if self.combo is not None:
                cr = self.combo[r]
                for k, c in self.combo[i].items():
                    nv = cr.get(k, 0) - f * c
                    if mod:
                        nv %= mod
                    if nv:
                        cr[k] = nv
                    else:
                        cr.pop(k, None)
            touched.append(r)
        return touched

    def residual(self) -> list[int]:
        return sorted(i for i in self.active if self.rows[i])

    def back_substitute(self, free: Mapping[int, Any]) -> dict[int, Any]:
        x: dict[int, Any] = dict(free)
        mod = self.mod
        for col, row, b in reversed(self.pivots):
            s = b
            for j, c in row.items():
                if j != col:
                    s -= c * x.get(j, 0)
            piv = row[col]
            x[col] = (s * pow(piv, -1, mod)) % mod if mod else s * piv
        return x


# -- Hermite normal form ----------------------------------------------------------------


@dataclass
class HNF:
    H: np.ndarray
    U: np.ndarray
    pivots: list[tuple[int, int]]


def hermite_column(A: np.ndarray) -> HNF:
    """Column-style Hermite normal form: ``A @ U == H`` with ``U`` unimodular.

    ``H`` is lower triangular in echelon form (pivot ``k`` sits in column
    ``k``), pivots are positive and entries left of a pivot are reduced into
    ``[0, pivot)``.  Arithmetic is over Python integers.
    """
    A = np.array(A, dtype=object)
    m, n = A.shape
    M = np.vstack([A, np.eye(n, dtype=int).astype(object)]) if n else np.zeros((m, 0), dtype=object)
    r = 0
    pivots = []
    for i in range(m):
        if r == n:
            break
        while True:
            nz = [j for j in range(r, n) if M[i, j] != 0]
            if len(nz) <= 1:
                break
            j0 = min(nz, key=lambda j: (abs(M[i, j]), j))
            for j in nz:
                if j != j0:
                    q = M[i, j] // M[i, j0]
                    M[:, j] -= q * M[:, j0]
        if not nz:
            continue
        j0 = nz[0]
        if j0 != r:
            M[:, [r, j0]] = M[:, [j0, r]]
        if M[i, r] < 0:
            M[:, r] = -M[:, r]
        for j in range(r):
            q = M[i, j] // M[i, r]
            if q:
                M[:, j] -= q * M[:, r]
        pivots.append((i, r))
        r += 1
    H, U = M[:m], M[m:]
    if not np.array_equal(A.dot(U), H):
        raise AssertionError("HNF transform does not reproduce H")
    return HNF(H, U, pivots)


def _bareiss_det(U: np.ndarray) -> int:
    M = [list(r) for r in U]
    n = len(M)
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            sw = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if sw is None:
                return 0
            M[k], M[sw] = M[sw], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1] if n else 1


def hnf_solve(A: np.ndarray, b: Sequence[int]) -> tuple[list[int] | None, list[Fraction] | None, HNF]:
    """Integral solution of ``A x = b`` or a rational row vector ``z`` with ``zA`` integral, ``zb`` not."""
    hn = hermite_column(A)
    H = hn.H
    m = H.shape[0]
    piv_rows = [i for i, _ in hn.pivots]
    r = len(piv_rows)
    b = [int(v) for v in b]
    y: list[int] = []
    for k, i in enumerate(piv_rows):
        s = b[i] - sum(H[i, j] * y[j] for j in range(k))
        if s % H[i, k]:
            z = _left_inverse_row(H, piv_rows, k)
            cert = [Fraction(0)] * m
            for a, i2 in enumerate(piv_rows):
                cert[i2] = z[a]
            return None, cert, hn
        y.append(s // H[i, k])
    for i in range(m):
        lhs = sum(H[i, j] * y[j] for j in range(r))
        if lhs != b[i]:
            c = _row_in_pivot_basis(H, piv_rows, [H[i, j] for j in range(r)])
            z = [Fraction(0)] * m
            z[i] = Fraction(1)
            for a, i2 in enumerate(piv_rows):
                z[i2] -= c[a]
            zb = sum(zv * bv for zv, bv in zip(z, b))
            return None, [zv / (2 * zb) for zv in z], hn
    n = H.shape[1]
    yy = np.array(y + [0] * (n - r), dtype=object)
    x = hn.U.dot(yy) if n else np.zeros(0, dtype=object)
    return [int(v) for v in x], None, hn


def _row_in_pivot_basis(H, piv_rows, target) -> list[Fraction]:
    """Solve ``c @ H_P == target`` for the lower-triangular pivot block ``H_P``."""
    r = len(piv_rows)
    c = [Fraction(0)] * r
    for bcol in range(r - 1, -1, -1):
        s = Fraction(target[bcol]) - sum(c[a] * H[piv_rows[a], bcol] for a in range(bcol + 1, r))
        c[bcol] = s / H[piv_rows[bcol], bcol]
    return c


def _left_inverse_row(H, piv_rows, k) -> list[Fraction]:
    r = len(piv_rows)
    return _row_in_pivot_basis(H, piv_rows, [1 if j == k else 0 for j in range(r)])


# -- solvers ----------------------------------------------------------------------------


@dataclass
class SolveResult:
    feasible: bool
    field: str
    solution: Assignment | None = None
    certificate: dict[int, Fraction] | None = None
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {"feasible": self.feasible, "field": self.field, "stats": self.stats}
        if self.certificate is not None:
            d["certificate"] = {str(i): f"{v.numerator}/{v.denominator}" for i, v in sorted(self.certificate.items())}
        return d


@dataclass
class RowSystem:
    """An explicit sparse system; assignments are keyed by the entries of ``names``."""

    rows: list[dict[int, int]]
    rhs: list[int]
    names: list

    def verify(self, a: Assignment) -> Report:
        depth = 0
        for i, (r, b) in enumerate(zip(self.rows, self.rhs)):
            lhs = Fraction(0)
            for j, c in r.items():
                x = a(self.names[j])
                if not in_class(x, a.value_class, a.p):
                    return Report(False, i + 1, i, f"value class at {self.names[j]!r}", x, None, f"value {x} is not {a.value_class}")
                if a.value_class == "p-solution" and x:
                    depth = max(depth, p_depth(x, a.p))
                lhs += c * x
            if lhs != b:
                return Report(False, i + 1, i, f"row {i}", lhs, Fraction(b), "row violated")
        return Report(True, len(self.rows), max_depth=depth)


def _system_rows(system) -> tuple[list[dict[int, int]], list[int], list[Key]]:
    if isinstance(system, LinSystem):
        rows, rhs, _ = system.materialize()
        return rows, rhs, system.variables
    if isinstance(system, RowSystem):
        return [dict(r) for r in system.rows], list(system.rhs), list(system.names)
    rows, rhs, names = system
    return [dict(r) for r in rows], list(rhs), list(names)


def _check_budget(nvars: int, budget: int | None) -> None:
    if budget is not None and nvars > budget:
        raise BudgetError(f"{nvars} variables exceed the budget of {budget}")


def solve_integer(system, budget: int | None = DEFAULT_BUDGET) -> SolveResult:
    """Integral solution or a certificate ``y`` (rational, ``yA`` integral, ``yb`` not).

    ``system`` is a ``LinSystem`` or a triple ``(rows, rhs, names)`` of sparse
    integer rows.
    """
    rows, rhs, names = _system_rows(system)
    _check_budget(len(names), budget)
    el = _Eliminator(rows, rhs, None, track=False)
    el.run()
    stats = {"variables": len(names), "equations": len(rows), "unit_pivots": len(el.pivots)}
    if el.inconsistent is None:
        res = el.residual()
        stats["residual_rows"] = len(res)
        cols = sorted({j for i in res for j in el.rows[i]})
        stats["residual_cols"] = len(cols)
        A = np.array([[el.rows[i].get(j, 0) for j in cols] for i in res], dtype=object).reshape(len(res), len(cols))
        x_res, z, _ = hnf_solve(A, [el.rhs[i] for i in res])
        if x_res is not None:
            x = el.back_substitute(dict(zip(cols, x_res)))
            sol = {names[j]: int(v) for j, v in sorted(x.items()) if v}
            _verify_rows(rows, rhs, x, None)
            a = Assignment(values=sol, value_class="integral")
            if isinstance(system, (LinSystem, RowSystem)):
                rep = verify(system, a)
                if not rep.ok:
                    raise AssertionError(f"integral solution failed verification: {rep}")
            return SolveResult(True, "Z", a, None, stats)
    # infeasible: redo the elimination with row combinations to build the certificate
    el = _Eliminator(rows, rhs, None, track=True)
    el.run()
    if el.inconsistent is not None:
        i = el.inconsistent
        y = {k: Fraction(c, 2 * el.rhs[i]) for k, c in el.combo[i].items()}
    else:
        res = el.residual()
        cols = sorted({j for i in res for j in el.rows[i]})
        A = np.array([[el.rows[i].get(j, 0) for j in cols] for i in res], dtype=object).reshape(len(res), len(cols))
        _, z, _ = hnf_solve(A, [el.rhs[i] for i in res])
        y = {}
        for zr, i in zip(z, res):
            if zr:
                for k, c in el.combo[i].items():
                    y[k] = y.get(k, 0) + zr * c
        y = {k: v for k, v in y.items() if v}
    if not check_integer_certificate(rows, rhs, y):
        raise AssertionError("integer infeasibility certificate failed its check")
    return SolveResult(False, "Z", None, dict(sorted(y.items())), stats)


def check_integer_certificate(rows, rhs, y: Mapping[int, Fraction]) -> bool:
    col: dict[int, Fraction] = {}
    for i, c in y.items():
        for j, a in rows[i].items():
            col[j] = col.get(j, 0) + c * a
    yb = sum(Fraction(c) * rhs[i] for i, c in y.items())
    return all(Fraction(v).denominator == 1 for v in col.values()) and Fraction(yb).denominator != 1


def _verify_rows(rows, rhs, x: Mapping[int, Any], mod: int | None) -> None:
    for i, (r, b) in enumerate(zip(rows, rhs)):
        s = sum(c * x.get(j, 0) for j, c in r.items()) - b
        if (s % mod if mod else s) != 0:
            raise AssertionError(f"row {i} violated by solver output")


def solve_mod_p(system, p: int, budget: int | None = DEFAULT_BUDGET) -> SolveResult:
    """Solution over ``F_p``, or a certificate ``y`` with ``yA = 0`` and ``yb != 0`` mod p."""
    if p < 2 or any(p % d == 0 for d in range(2, math.isqrt(p) + 1)):
        raise DomainError(f"{p} is not prime")
    rows, rhs, names = _system_rows(system)
    _check_budget(len(names), budget)
    el = _Eliminator(rows, rhs, p, track=False)
    el.run()
    stats = {"variables": len(names), "equations": len(rows), "pivots": len(el.pivots)}
    if el.inconsistent is None:
        x = el.back_substitute({})
        _verify_rows(rows, rhs, x, p)
        sol = {names[j]: int(v) for j, v in sorted(x.items()) if v}
        return SolveResult(True, f"F{p}", Assignment(values=sol, value_class="integral", meta={"modulus": p}), None, stats)
    el = _Eliminator(rows, rhs, p, track=True)
    el.run()
    y = {k: Fraction(c) for k, c in sorted(el.combo[el.inconsistent].items())}
    if not check_mod_certificate(rows, rhs, y, p):
        raise AssertionError("mod-p infeasibility certificate failed its check")
    return SolveResult(False, f"F{p}", None, y, stats)


def check_mod_certificate(rows, rhs, y: Mapping[int, Fraction], p: int) -> bool:
    col: dict[int, int] = {}
    for i, c in y.items():
        for j, a in rows[i].items():
            col[j] = (col.get(j, 0) + int(c) * a) % p
    yb = sum(int(c) * rhs[i] for i, c in y.items()) % p
    return all(v == 0 for v in col.values()) and yb != 0


def verify_mod_p(system: LinSystem, a: Assignment, p: int) -> Report:
    """Check an ``F_p`` assignment (integer representatives) equation by equation."""
    n = 0
    for eq in system.equations():
        lhs = sum(c * a(k) for k, c in eq.terms)
        if (lhs - eq.rhs) % p:
            return Report(False, n + 1, n, eq.label, Fraction(lhs), Fraction(eq.rhs), f"violated mod {p}")
        n += 1
    return Report(True, n)


# -- combining p- and q-solutions ----------------------------------------------------------


def bezout(a: int, b: int) -> tuple[int, int, int]:
    """``(g, s, t)`` with ``s*a + t*b == g == gcd(a, b)``."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return a, s0, t0


def combine_pq(system, x: Assignment, y: Assignment) -> Assignment:
    """Integral solution ``alpha p^z x + beta q^z y`` from a p-solution and a q-solution."""
    p, q = x.p, y.p
    if not p or not q or x.value_class != "p-solution" or y.value_class != "p-solution":
        raise PreconditionError("both inputs must be tagged p-solutions")
    if math.gcd(p, q) != 1:
        raise DomainError(f"p={p} and q={q} are not coprime")
    if isinstance(system, tuple):
        system = RowSystem(*system)
    rx, ry = verify(system, x), verify(system, y)
    if not rx.ok:
        raise PreconditionError(f"p-solution fails verification: {rx.label}")
    if not ry.ok:
        raise PreconditionError(f"q-solution fails verification: {ry.label}")
    for inp in (x, y):
        if inp.values is not None and all(Fraction(v).denominator == 1 for v in inp.values.values()):
            return Assignment(values=dict(inp.values), value_class="integral", meta={"combined": "input already integral"})
    z = max(rx.max_depth, ry.max_depth, _scale_depth(x), _scale_depth(y))
    P, Q = p**z, q**z
    g, alpha, beta = bezout(P, Q)
    assert g == 1 and alpha * P + beta * Q == 1
    meta = {"z": z, "alpha": alpha, "beta": beta, "p": p, "q": q}
    if hasattr(system, "combine"):
        out = system.combine(x, y, alpha * P, beta * Q, meta)
    elif x.values is not None and y.values is not None:
        keys = sorted(set(x.values) | set(y.values), key=lambda k: (len(k), k))
        vals = {}
        for k in keys:
            v = alpha * P * x(k) + beta * Q * y(k)
            if v:
                vals[k] = int(v)
        out = Assignment(values=vals, value_class="integral", meta=meta)
    else:
        out = Assignment(oracle=lambda k: alpha * P * x(k) + beta * Q * y(k), value_class="integral", meta=meta)
    rep = verify(system, out)
    if not rep.ok:
        raise AssertionError(f"combined solution failed verification: {rep.label}")
    return out


def _scale_depth(a) -> int:
    scale = getattr(a, "scale", None)
    return p_depth(Fraction(1, scale), a.p) if scale else a.meta.get("depth", 0)


# -- file formats -----------------------------------------------------------------------


def write_system(system: LinSystem, fh) -> None:
    rows, rhs, _ = system.materialize()
    fh.write(f"vars {len(system.variables)} eqs {len(rows)}\n")
    for r, b in zip(rows, rhs):
        items = sorted(r.items())
        fh.write(" ".join(["eq", str(b), str(len(items))] + [f"{j} {c}" for j, c in items]) + "\n")


def read_system(fh) -> tuple[list[dict[int, int]], list[int], list[int]]:
    header = fh.readline().split()
    if header[0] != "vars" or header[2] != "eqs":
        raise DomainError("not a sparse system file")
    nvars, neqs = int(header[1]), int(header[3])
    rows, rhs = [], []
    for _ in range(neqs):
        tok = fh.readline().split()
        k = int(tok[2])
        rows.append({int(tok[3 + 2 * i]): int(tok[4 + 2 * i]) for i in range(k)})
        rhs.append(int(tok[1]))
    return rows, rhs, list(range(nvars))


def variable_dictionary(system: LinSystem) -> list:
    return [_jsonable_key(k) for k in system.variables]


# -- pairwise form for large isomorphism systems at levels 1 and 2 ----------------------------


class PairAssignment:
    """A level 1 or 2 isomorphism assignment in closed form, scaled to integers.

    ``support`` lists the atoms ``(v, w)`` whose singleton value may be
    nonzero; every other singleton is zero, and every pair value that
    involves an atom outside the support is zero (the witnesses below are
    built so that zeros propagate upward).  Values are ``numerator / scale``;
    ``block(I, J)`` returns pair numerators for support positions ``I x J``
    (entries for pairs that are not partial isomorphisms are ignored).
    """

    def __init__(self, support, single_num, scale: int, block, value_class: str = "rational", p: int | None = None, meta=None):
        self.support = [tuple(a) for a in support]
        self.pos = {a: i for i, a in enumerate(self.support)}
        self.single_num = np.asarray(single_num, dtype=np.int64)
        self.scale = int(scale)
        self.block = block
        self.value_class = value_class
        self.p = p
        self.meta = dict(meta or {})
        self.values = None

    def __call__(self, key: Key) -> Fraction:
        if len(key) == 0:
            return Fraction(1)
        idx = [self.pos.get(a) for a in key]
        if any(i is None for i in idx):
            return Fraction(0)
        if len(key) == 1:
            return Fraction(int(self.single_num[idx[0]]), self.scale)
        if len(key) == 2:
            m = self.block(np.array([idx[0]]), np.array([idx[1]]))
            return Fraction(int(m[0, 0]), self.scale)
        raise DomainError("pair assignments only cover sets of size at most 2")


class PairwiseIsoSystem:
    """The isomorphism system of ``(G, H)`` at level 1 or 2, verified in bulk against a ``PairAssignment``."""

    def __init__(self, G, H, ell: int, chunk: int = 512):
        if ell not in (1, 2):
            raise BudgetError("the pairwise verifier covers levels 1 and 2 only")
        self.G, self.H, self.ell, self.chunk = G, H, ell, chunk
        palette = {c: i + 1 for i, c in enumerate(sorted({c for _, _, c in G.edges} | {c for _, _, c in H.edges}))}
        self.EG = _edge_matrix(G, palette)
        self.EH = _edge_matrix(H, palette)

    def verify(self, a) -> Report:
        if not isinstance(a, PairAssignment):
            raise PreconditionError("the pairwise verifier needs a PairAssignment")
        G, H = self.G, self.H
        S = a.support
        if any(G.colors[v] != H.colors[w] for v, w in S):
            return Report(False, 0, None, "support", message="support contains a colour-incompatible pair")
        av = np.array([v for v, _ in S], dtype=np.int64).reshape(-1)
        aw = np.array([w for _, w in S], dtype=np.int64).reshape(-1)
        D = a.scale
        n_eq = 1
        # level-1 equations: every slot sums to [()]
        sum_v = np.zeros(G.n, dtype=np.int64)
        sum_w = np.zeros(H.n, dtype=np.int64)
        np.add.at(sum_v, av, a.single_num)
        np.add.at(sum_w, aw, a.single_num)
        if a.value_class != "rational":
            bad = _class_violation(a.single_num, D, a.value_class, a.p)
            if bad is not None:
                return Report(False, 0, None, "value class", Fraction(bad, D), None, f"singleton value not {a.value_class}")
        for w in range(H.n):
            if sum_w[w] != D:
                return Report(False, n_eq, n_eq - 1, f"column sum at w={w} over ()", Fraction(int(sum_w[w]), D), Fraction(1))
            n_eq += 1
        for v in range(G.n):
            if sum_v[v] != D:
                return Report(False, n_eq, n_eq - 1, f"row sum at v={v} over ()", Fraction(int(sum_v[v]), D), Fraction(1))
            n_eq += 1
        if self.ell == 1:
            return Report(True, n_eq)
        k = len(S)
        inc = sp.csr_matrix(
            (np.ones(2 * k, dtype=np.int64), (np.concatenate([aw, H.n + av]), np.concatenate([np.arange(k), np.arange(k)]))),
            shape=(H.n + G.n, k),
        )
        all_idx = np.arange(k)
        for start in range(0, k, self.chunk):
            I = all_idx[start : start + self.chunk]
            M = np.asarray(a.block(I, all_idx), dtype=np.int64)
            valid = (av[I][:, None] != av[None, :]) & (aw[I][:, None] != aw[None, :])
            valid &= self.EG[av[I][:, None], av[None, :]] == self.EH[aw[I][:, None], aw[None, :]]
            M = np.where(valid, M, 0)
            if a.value_class != "rational":
                bad = _class_violation(M[valid], D, a.value_class, a.p)
                if bad is not None:
                    return Report(False, n_eq, None, "value class", Fraction(bad, D), None, f"pair value not {a.value_class}")
            sums = np.asarray(inc @ M.T)  # slots x chunk
            target = a.single_num[I][None, :]
            diff = sums != target
            diff[aw[I], np.arange(len(I))] = False
            diff[H.n + av[I], np.arange(len(I))] = False
            if diff.any():
                slot, col = map(int, np.argwhere(diff.T)[0][::-1])
                b = S[int(I[col])]
                where = f"column sum at w={slot}" if slot < H.n else f"row sum at v={slot - H.n}"
                return Report(False, n_eq, None, f"{where} over ({b!r},)", Fraction(int(sums[slot, col]), D), Fraction(int(target[0, col]), D))
            n_eq += len(I) * (G.n + H.n - 2)
        return Report(True, n_eq)

    def combine(self, x: PairAssignment, y: PairAssignment, cx: int, cy: int, meta: dict) -> PairAssignment:
        """``cx * x + cy * y`` for coefficients making the result integral."""
        fx, fy = Fraction(cx, x.scale), Fraction(cy, y.scale)
        if fx.denominator != 1 or fy.denominator != 1:
            raise PreconditionError("combination coefficients do not clear the denominators")
        fx, fy = int(fx), int(fy)
        support = sorted(set(x.support) | set(y.support))
        ix = np.array([x.pos.get(s, -1) for s in support], dtype=np.int64)
        iy = np.array([y.pos.get(s, -1) for s in support], dtype=np.int64)
        single = np.zeros(len(support), dtype=np.int64)
        mx, my = ix >= 0, iy >= 0
        single[mx] += fx * x.single_num[ix[mx]]
        single[my] += fy * y.single_num[iy[my]]

        def part(src: PairAssignment, idx, I, J):
            out = np.zeros((len(I), len(J)), dtype=np.int64)
            rI, rJ = idx[I], idx[J]
            ri, rj = np.nonzero(rI >= 0)[0], np.nonzero(rJ >= 0)[0]
            if len(ri) and len(rj):
                out[np.ix_(ri, rj)] = src.block(rI[ri], rJ[rj])
            return out

        def block(I, J):
            return fx * part(x, ix, I, J) + fy * part(y, iy, I, J)

        return PairAssignment(support, single, 1, block, "integral", None, meta)


def _class_violation(nums: np.ndarray, D: int, value_class: str, p: int | None):
    for v in np.unique(nums):
        if not in_class(Fraction(int(v), D), value_class, p):
            return int(v)
    return None
