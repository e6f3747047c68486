"""Base-graph machinery: regular graphs, bridges and blocks, the bond-matroid
closure and rank, 2-connected cores, expansion, and k-consistency of partial
edge assignments for Tseitin systems.

Edges are identified by integer ids.  Functions that work on a subgraph take an
iterable of edge ids, so "the graph minus X" is simply ``set(range(m)) - X``.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import BudgetError, DomainError, GenerationError
from .group import Element, FiniteAbelianGroup


@dataclass(frozen=True)
class UGraph:
    """Simple undirected graph on ``0..n-1``; edge ids index the sorted edge list."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        canon = set()
        for u, v in self.edges:
            if u == v:
                raise DomainError(f"self-loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise DomainError(f"edge {(u, v)} outside 0..{self.n - 1}")
            canon.add((min(u, v), max(u, v)))
        if len(canon) != len(self.edges):
            raise DomainError("parallel edges are not allowed")
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_id(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def incidence(self) -> tuple[tuple[int, ...], ...]:
        """Edge ids incident to each vertex, ascending."""
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for i, (u, v) in enumerate(self.edges):
            inc[u].append(i)
            inc[v].append(i)
        return tuple(tuple(x) for x in inc)

    def degree(self, v: int) -> int:
        return len(self.incidence[v])

    def other(self, e: int, v: int) -> int:
        a, b = self.edges[e]
        return b if v == a else a

    def boundary(self, W: Iterable[int]) -> set[int]:
        W = set(W)
        return {i for i, (u, v) in enumerate(self.edges) if (u in W) != (v in W)}

    def is_regular(self, d: int) -> bool:
        return all(len(x) == d for x in self.incidence)

    def to_edge_list(self) -> str:
        return "".join(f"{u} {v}\n" for u, v in self.edges)

    @classmethod
    def from_edge_list(cls, text: str, n: int | None = None) -> "UGraph":
        edges = []
        for line in text.splitlines():
            line = line.split("#")[0].strip()
            if line:
                u, v = map(int, line.split()[:2])
                edges.append((u, v))
        if n is None:
            n = 1 + max((max(e) for e in edges), default=-1)
        return cls(n, tuple(edges))


@dataclass(frozen=True)
class DiGraph:
    """An orientation of a simple graph.  ``arcs[i]`` is the orientation of edge id ``i``."""

    n: int
    arcs: tuple[tuple[int, int], ...]
    graph: UGraph = field(init=False, compare=False)

    def __post_init__(self):
        arcs = tuple((int(a), int(b)) for a, b in self.arcs)
        g = UGraph(self.n, arcs)
        # store arcs in the id order of the underlying undirected graph
        by_edge = {(min(a, b), max(a, b)): (a, b) for a, b in arcs}
        object.__setattr__(self, "arcs", tuple(by_edge[e] for e in g.edges))
        object.__setattr__(self, "graph", g)

    @classmethod
    def orient(cls, g: UGraph, flip: Iterable[int] = ()) -> "DiGraph":
        """Orient every edge from its smaller to its larger endpoint, except ids in ``flip``."""
        flip = set(flip)
        return cls(g.n, tuple((v, u) if i in flip else (u, v) for i, (u, v) in enumerate(g.edges)))

    @property
    def m(self) -> int:
        return len(self.arcs)

    def out_edges(self, v: int) -> list[int]:
        return [i for i in self.graph.incidence[v] if self.arcs[i][0] == v]

    def in_edges(self, v: int) -> list[int]:
        return [i for i in self.graph.incidence[v] if self.arcs[i][1] == v]

    def signed_incidence(self, v: int) -> list[tuple[int, int]]:
        """``(edge id, +1 out / -1 in)`` for edges at ``v``, sorted by edge id."""
        return [(i, 1 if self.arcs[i][0] == v else -1) for i in self.graph.incidence[v]]


# -- named graphs --------------------------------------------------------------


def complete_graph(n: int) -> UGraph:
    return UGraph(n, tuple(itertools.combinations(range(n), 2)))


def cycle_graph(n: int) -> UGraph:
    if n < 3:
        raise DomainError("a cycle needs at least 3 vertices")
    return UGraph(n, tuple((i, (i + 1) % n) for i in range(n)))


def petersen() -> UGraph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return UGraph(10, tuple(outer + spokes + inner))


def cube() -> UGraph:
    return UGraph(8, tuple((u, u ^ (1 << b)) for u in range(8) for b in range(3) if u < u ^ (1 << b)))


def random_regular_2connected(n: int, d: int, seed: int, max_tries: int = 2000) -> UGraph:
    """Sample a simple ``d``-regular 2-connected graph with the pairing model."""
    if (n * d) % 2:
        raise DomainError(f"n*d must be even (n={n}, d={d})")
    if n <= d:
        raise DomainError(f"need n > d (n={n}, d={d})")
    rng = random.Random(seed)
    points = [v for v in range(n) for _ in range(d)]
    for _ in range(max_tries):
        rng.shuffle(points)
        pairs = list(zip(points[::2], points[1::2]))
        canon = {(min(a, b), max(a, b)) for a, b in pairs}
        if any(a == b for a, b in pairs) or len(canon) != len(pairs):
            continue
        g = UGraph(n, tuple(sorted(canon)))
        if is_two_connected(g, range(g.m)):
            return g
    raise GenerationError(f"no simple 2-connected {d}-regular graph on {n} vertices after {max_tries} tries")


# -- connectivity ---------------------------------------------------------------


def components(g: UGraph, edge_ids: Iterable[int]) -> list[list[int]]:
    """Vertex sets of the connected components of ``(V, edge_ids)``, each sorted, ordered by minimum."""
    parent = list(range(g.n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for e in edge_ids:
        u, v = g.edges[e]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    groups: dict[int, list[int]] = {}
    for v in range(g.n):
        groups.setdefault(find(v), []).append(v)
    return sorted(groups.values())


def _adjacency(g: UGraph, edge_ids: Iterable[int]) -> list[list[tuple[int, int]]]:
    adj: list[list[tuple[int, int]]] = [[] for _ in range(g.n)]
    for e in sorted(edge_ids):
        u, v = g.edges[e]
        adj[u].append((v, e))
        adj[v].append((u, e))
    return adj


def _dfs_lowpoints(g: UGraph, edge_ids: Iterable[int]):
    """Iterative DFS yielding tree structure and low points; shared by bridges and blocks."""
    adj = _adjacency(g, edge_ids)
    disc = [-1] * g.n
    low = [0] * g.n
    events = []  # (kind, data) in DFS order for block extraction
    t = 0
    for root in range(g.n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, pe, it = stack[-1]
            advanced = False
            for w, e in it:
                if e == pe:
                    continue
                if disc[w] < 0:
                    disc[w] = low[w] = t
                    t += 1
                    events.append(("tree", v, w, e))
                    stack.append((w, e, iter(adj[w])))
                    advanced = True
                    break
                if disc[w] < disc[v]:
                    low[v] = min(low[v], disc[w])
                    events.append(("back", v, w, e))
            if not advanced:
                stack.pop()
                if stack:
                    u = stack[-1][0]
                    low[u] = min(low[u], low[v])
                    events.append(("done", u, v, pe))
    return disc, low, events


def bridges(g: UGraph, edge_ids: Iterable[int]) -> set[int]:
    """Bridges of the spanning subgraph ``(V, edge_ids)`` (Tarjan)."""
    disc, low, events = _dfs_lowpoints(g, edge_ids)
    return {e for kind, u, v, e in events if kind == "done" and low[v] > disc[u]}


def blocks(g: UGraph, edge_ids: Iterable[int]) -> list[frozenset[int]]:
    """Edge sets of the biconnected components (blocks) of ``(V, edge_ids)``."""
    disc, low, events = _dfs_lowpoints(g, edge_ids)
    out: list[frozenset[int]] = []
    stack: list[int] = []
    for kind, u, v, e in events:
        if kind in ("tree", "back"):
            stack.append(e)
        elif low[v] >= disc[u]:
            blk = []
            while True:
                x = stack.pop()
                blk.append(x)
                if x == e:
                    break
            out.append(frozenset(blk))
    return out


def block_vertices(g: UGraph, blk: Iterable[int]) -> set[int]:
    return {x for e in blk for x in g.edges[e]}


def is_two_connected(g: UGraph, edge_ids: Iterable[int]) -> bool:
    """Whether the subgraph formed by ``edge_ids`` (on the vertices it touches) is 2-connected."""
    edge_ids = list(edge_ids)
    verts = block_vertices(g, edge_ids)
    if len(verts) < 3:
        return False
    blks = blocks(g, edge_ids)
    return len(blks) == 1


# -- bond matroid ----------------------------------------------------------------


def closure(g: UGraph, X: Iterable[int]) -> frozenset[int]:
    """Smallest closed superset of ``X``: add bridges of ``G - X`` until none remain."""
    cur = set(X)
    everything = set(range(g.m))
    while True:
        extra = bridges(g, everything - cur)
        if not extra:
            return frozenset(cur)
        cur |= extra


def rank(g: UGraph, X: Iterable[int], order: Sequence[int] | None = None) -> int:
    """Matroid rank by the greedy rule: keep ``x`` unless it lies in the closure of the kept set."""
    items = list(X) if order is None else list(order)
    kept: list[int] = []
    cl = closure(g, ())
    for x in items:
        if x not in cl:
            kept.append(x)
            cl = closure(g, kept)
    return len(kept)


def rank_formula(g: UGraph, X: Iterable[int]) -> int:
    """Closed-form rank of the bond matroid: ``|X| - c(G - X) + c(G)``."""
    X = set(X)
    rest = set(range(g.m)) - X
    return len(X) - len(components(g, rest)) + len(components(g, range(g.m)))


@dataclass(frozen=True)
class CoreResult:
    hull: frozenset[int]
    core: frozenset[int]
    ratio: Fraction


def two_connected_core(g: UGraph, X: Iterable[int]) -> CoreResult:
    """Keep the largest block of ``G - X`` (ties: smallest minimum vertex); hull is the rest."""
    X = frozenset(X)
    rest = set(range(g.m)) - X
    best: frozenset[int] = frozenset()
    best_key = None
    for blk in blocks(g, rest):
        verts = block_vertices(g, blk)
        if len(verts) < 3:
            continue
        key = (-len(blk), min(verts))
        if best_key is None or key < best_key:
            best, best_key = blk, key
    hull = frozenset(range(g.m)) - best
    if best and not is_two_connected(g, best):
        raise AssertionError("core block is not 2-connected")
    return CoreResult(hull, best, Fraction(len(hull), max(1, len(X))))


# -- expansion -----------------------------------------------------------------------


@dataclass(frozen=True)
class Expansion:
    value: Fraction | None
    witness: tuple[int, ...] = ()
    interval: tuple[float, float] | None = None
    mode: str = "exact"


def expansion_ratio(g: UGraph, mode: str = "exact", max_exact_n: int = 20) -> Expansion:
    if mode == "exact":
        if g.n > max_exact_n:
            raise BudgetError(f"exact expansion limited to n <= {max_exact_n}, got {g.n}")
        if g.n < 2:
            raise DomainError("expansion ratio needs at least 2 vertices")
        masks = np.arange(1, 1 << g.n, dtype=np.int64)
        size = np.zeros_like(masks)
        for v in range(g.n):
            size += (masks >> v) & 1
        bnd = np.zeros_like(masks)
        for u, v in g.edges:
            bnd += ((masks >> u) ^ (masks >> v)) & 1
        ok = size <= g.n // 2
        best: tuple[Fraction, int] | None = None
        for s in range(1, g.n // 2 + 1):
            sel = np.nonzero(ok & (size == s))[0]
            idx = sel[np.argmin(bnd[sel])]
            cand = Fraction(int(bnd[idx]), s)
            if best is None or cand < best[0]:
                best = (cand, int(masks[idx]))
        assert best is not None
        witness = tuple(v for v in range(g.n) if best[1] >> v & 1)
        return Expansion(best[0], witness)
    if mode == "spectral":
        degs = {g.degree(v) for v in range(g.n)}
        if len(degs) != 1:
            raise DomainError("spectral bound requires a regular graph")
        d = degs.pop()
        A = np.zeros((g.n, g.n))
        for u, v in g.edges:
            A[u, v] = A[v, u] = 1.0
        vals, vecs = np.linalg.eigh(A)
        lam2, x = vals[-2], vecs[:, -2]
        resid = float(np.linalg.norm(A @ x - lam2 * x))
        lo = (d - (lam2 + resid)) / 2
        hi = (d - (lam2 - resid)) / 2
        return Expansion(None, (), (float(lo), float(hi)), "spectral")
    raise DomainError(f"unknown expansion mode {mode!r}")


@dataclass(frozen=True)
class ExpanderProfile:
    n: int
    m: int
    h: Fraction | None
    c_estimate: Fraction
    ell_suggest: int

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "h": None if self.h is None else str(self.h),
            "c_estimate": str(self.c_estimate),
            "ell_suggest": self.ell_suggest,
        }


def expander_profile(g: UGraph, seed: int = 0, max_pairs: int = 2000) -> ExpanderProfile:
    h = expansion_ratio(g).value if g.n <= 20 else None
    samples: list[tuple[int, ...]] = [(e,) for e in range(g.m)]
    pairs = list(itertools.combinations(range(g.m), 2))
    if len(pairs) > max_pairs:
        pairs = random.Random(seed).sample(pairs, max_pairs)
        pairs.sort()
    samples += pairs
    c = max((two_connected_core(g, X).ratio for X in samples), default=Fraction(1))
    ell = int((g.m - 1) // (3 * c)) if c > 0 else 0
    return ExpanderProfile(g.n, g.m, h, c, max(0, ell))


# -- consistency of partial edge assignments ------------------------------------------


def component_charge_ok(
    H: DiGraph,
    group: FiniteAbelianGroup,
    sigma: Mapping[int, Element],
    psi: Mapping[int, Element],
    W: Iterable[int],
) -> bool:
    """Check the implied constraint of ``W``: signed sum over its boundary equals ``sigma(W)``."""
    W = set(W)
    acc = group.zero
    for e, (a, b) in enumerate(H.arcs):
        if (a in W) == (b in W):
            continue
        val = psi[e]
        acc = group.add(acc, val) if a in W else group.sub(acc, val)
    return acc == group.total(sigma[v] for v in W)


def is_k_consistent(
    H: DiGraph,
    group: FiniteAbelianGroup,
    sigma: Mapping[int, Element],
    psi: Mapping[int, Element],
    k: int,
) -> bool:
    """k-consistency, checked only on the components of ``G - dom(psi)`` with at most ``k`` vertices."""
    dom = set(psi)
    rest = set(range(H.m)) - dom
    for W in components(H.graph, rest):
        if len(W) <= k and not component_charge_ok(H, group, sigma, psi, W):
            return False
    return True


def is_robustly_consistent(H: DiGraph, group: FiniteAbelianGroup, sigma, psi) -> bool:
    return is_k_consistent(H, group, sigma, psi, H.n // 3)


def named_graph(name: str) -> UGraph:
    """Resolve ``k4``, ``triangle``, ``petersen``, ``cube``, ``kN``, ``cycleN`` or ``random:n:seed``."""
    key = name.lower()
    if key == "triangle":
        return complete_graph(3)
    if key == "petersen":
        return petersen()
    if key == "cube":
        return cube()
    if key.startswith("cycle"):
        return cycle_graph(int(key[5:]))
    if key.startswith("random:"):
        _, n, seed = key.split(":")
        return random_regular_2connected(int(n), 3, int(seed))
    if key.startswith("k") and key[1:].isdigit():
        return complete_graph(int(key[1:]))
    raise DomainError(f"unknown graph name {name!r}")
