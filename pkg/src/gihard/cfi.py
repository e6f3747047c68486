"""Coloured graphs, CFI graphs over group CSPs, sequence graphs and the
or-construction, the solution/isomorphism translations, and an exact
individualization-refinement isomorphism oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .csp import ExtendedGroupCSP, GroupCSP, fix_arbitrary, homogenize
from .errors import BudgetError, DomainError, PreconditionError

Tag = Hashable


@dataclass(frozen=True)
class ColoredGraph:
    """Vertices ``0..n-1`` with colour names and audit tags; edges ``(u, v, colour)`` with ``u < v``.

    The empty string stands for "no edge colour".
    """

    colors: tuple[str, ...]
    tags: tuple[Tag, ...]
    edges: tuple[tuple[int, int, str], ...]

    def __post_init__(self):
        if len(self.colors) != len(self.tags):
            raise DomainError("one colour and one tag per vertex")
        seen = {}
        for u, v, c in self.edges:
            if u == v:
                raise DomainError(f"loop at {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DomainError(f"parallel edge {key}")
            seen[key] = c
        object.__setattr__(self, "edges", tuple(sorted((a, b, c) for (a, b), c in seen.items())))

    @property
    def n(self) -> int:
        return len(self.colors)

    @cached_property
    def index(self) -> dict[Tag, int]:
        idx = {t: i for i, t in enumerate(self.tags)}
        if len(idx) != self.n:
            raise DomainError("vertex tags must be unique")
        return idx

    @cached_property
    def adj(self) -> tuple[dict[int, str], ...]:
        out: list[dict[int, str]] = [dict() for _ in range(self.n)]
        for u, v, c in self.edges:
            out[u][v] = c
            out[v][u] = c
        return tuple(out)

    def edge_color(self, u: int, v: int) -> str | None:
        return self.adj[u].get(v)

    @cached_property
    def color_classes(self) -> dict[str, tuple[int, ...]]:
        out: dict[str, list[int]] = {}
        for v, c in enumerate(self.colors):
            out.setdefault(c, []).append(v)
        return {c: tuple(vs) for c, vs in out.items()}

    def to_json(self) -> dict:
        return {
            "vertices": [{"id": i, "color": c, "tag": _tag_json(t)} for i, (c, t) in enumerate(zip(self.colors, self.tags))],
            "edges": [{"u": u, "v": v, "color": c} for u, v, c in self.edges],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ColoredGraph":
        verts = sorted(data["vertices"], key=lambda d: d["id"])
        return cls(
            tuple(d["color"] for d in verts),
            tuple(_tag_unjson(d["tag"]) for d in verts),
            tuple((e["u"], e["v"], e.get("color") or "") for e in data["edges"]),
        )

    def to_dimacs(self) -> str:
        """Plain vertex-coloured export: each coloured edge is subdivided by a vertex of colour ``E:<colour>``."""
        palette = sorted(set(self.colors) | {f"E:{c}" for _, _, c in self.edges if c})
        pid = {c: i for i, c in enumerate(palette)}
        colors = [pid[c] for c in self.colors]
        plain: list[tuple[int, int]] = []
        for u, v, c in self.edges:
            if c:
                t = len(colors)
                colors.append(pid[f"E:{c}"])
                plain += [(u, t), (v, t)]
            else:
                plain.append((u, v))
        lines = [f"p edge {len(colors)} {len(plain)}"]
        lines += [f"c color {i} {c}" for i, c in enumerate(palette)]
        lines += [f"n {i + 1} {c}" for i, c in enumerate(colors)]
        lines += [f"e {u + 1} {v + 1}" for u, v in plain]
        return "\n".join(lines) + "\n"


def _tag_json(t):
    if isinstance(t, tuple):
        return [_tag_json(x) for x in t]
    return t


def _tag_unjson(t):
    if isinstance(t, list):
        return tuple(_tag_unjson(x) for x in t)
    return t


@dataclass(frozen=True)
class GraphPair:
    left: ColoredGraph
    right: ColoredGraph
    provenance: str = ""
    layout: Any = field(default=None, compare=False)

    def __post_init__(self):
        if set(self.left.colors) != set(self.right.colors):
            raise DomainError("the two sides of a pair must use the same colour palette")

    def swapped(self) -> "GraphPair":
        return GraphPair(self.right, self.left, self.provenance + "^T", self.layout)

    def to_json(self) -> dict:
        return {"provenance": self.provenance, "left": self.left.to_json(), "right": self.right.to_json()}

    @classmethod
    def from_json(cls, data: dict) -> "GraphPair":
        return cls(ColoredGraph.from_json(data["left"]), ColoredGraph.from_json(data["right"]), data.get("provenance", ""))


# -- CFI graphs ---------------------------------------------------------------------


def var_tag(x: str, gamma) -> Tag:
    return ("var", x, gamma)


def con_tag(name: str, beta) -> Tag:
    return ("con", name, beta)


def cfi_graph(C: GroupCSP) -> ColoredGraph:
    colors: list[str] = []
    tags: list[Tag] = []
    where: dict[Tag, int] = {}
    for x in C.variables:
        for g in C.group.elements:
            where[var_tag(x, g)] = len(tags)
            tags.append(var_tag(x, g))
            colors.append(f"L:{x}")
    edges = []
    for c in C.constraints:
        for beta in c.coset.elements:
            b = len(tags)
            tags.append(con_tag(c.name, beta))
            colors.append(f"L:{c.name}")
            for i, (x, bi) in enumerate(zip(c.scope, beta), start=1):
                edges.append((b, where[var_tag(x, bi)], f"M:{i}"))
    return ColoredGraph(tuple(colors), tuple(tags), tuple(edges))


def cfi_pair(C: GroupCSP) -> GraphPair:
    """``(G(C), G~(C))``; both use the constraint names of ``C``, so colours are shared."""
    return GraphPair(cfi_graph(C), cfi_graph(homogenize(C)), "cfi")


def sequence_graph(graphs: Sequence[ColoredGraph]) -> ColoredGraph:
    """Glue graphs in order via connectors ``v_i``; component colours are prefixed by position."""
    colors: list[str] = []
    tags: list[Tag] = []
    edges: list[tuple[int, int, str]] = []
    ranges = []
    for i, g in enumerate(graphs, start=1):
        off = len(tags)
        colors += [f"{i}|{c}" for c in g.colors]
        tags += [(i, t) for t in g.tags]
        edges += [(u + off, v + off, c) for u, v, c in g.edges]
        ranges.append(range(off, off + g.n))
    for i in range(1, len(graphs) + 1):
        s = len(tags)
        colors.append(f"S:{i}")
        tags.append(("S", i))
        nbrs = list(ranges[i - 1]) + (list(ranges[i - 2]) if i >= 2 else [])
        edges += [(s, w, "") for w in nbrs]
    return ColoredGraph(tuple(colors), tuple(tags), tuple(edges))


def disjoint_union(graphs: Sequence[ColoredGraph]) -> ColoredGraph:
    colors: list[str] = []
    tags: list[Tag] = []
    edges: list[tuple[int, int, str]] = []
    for k, g in enumerate(graphs):
        off = len(tags)
        colors += g.colors
        tags += [(k, t) for t in g.tags]
        edges += [(u + off, v + off, c) for u, v, c in g.edges]
    return ColoredGraph(tuple(colors), tuple(tags), tuple(edges))


@dataclass(frozen=True)
class OrLayout:
    """Which selection tuple sits in which component of each side, and component offsets."""

    selections: tuple[tuple[tuple[int, ...], ...], tuple[tuple[int, ...], ...]]
    offsets: tuple[tuple[int, ...], tuple[int, ...]]
    sizes: tuple[int, ...]  # vertices per position in every component
    component_size: int


def or_pair(pairs: Sequence[GraphPair]) -> GraphPair:
    ell = len(pairs)
    if ell < 1:
        raise DomainError("or-construction needs at least one pair")
    sides = []
    sels = []
    offs = []
    for j in (0, 1):
        chosen = [a for a in itertools.product((0, 1), repeat=ell) if sum(a) % 2 == j]
        comps = [sequence_graph([pairs[i].right if a[i] else pairs[i].left for i in range(ell)]) for a in chosen]
        sides.append(disjoint_union(comps))
        sels.append(tuple(chosen))
        o, acc = [], 0
        for c in comps:
            o.append(acc)
            acc += c.n
        offs.append(tuple(o))
    sizes = tuple(p.left.n for p in pairs)
    layout = OrLayout((sels[0], sels[1]), (offs[0], offs[1]), sizes, sum(sizes) + ell)
    return GraphPair(sides[0], sides[1], "or", layout)


def extended_pair(Cstar: ExtendedGroupCSP) -> GraphPair:
    if not Cstar.arb_relation:
        raise DomainError("R_arb must be non-empty")
    pairs = [cfi_pair(fix_arbitrary(Cstar, g)) for g in Cstar.arb_relation]
    p = or_pair(pairs)
    return GraphPair(p.left, p.right, "extended", p.layout)


# -- isomorphisms ---------------------------------------------------------------------


def is_isomorphism(G: ColoredGraph, H: ColoredGraph, pi: Mapping[int, int]) -> bool:
    if G.n != H.n or len(pi) != G.n or set(pi) != set(range(G.n)) or set(pi.values()) != set(range(H.n)):
        return False
    if any(G.colors[v] != H.colors[pi[v]] for v in range(G.n)):
        return False
    if len(G.edges) != len(H.edges):
        return False
    return all(H.edge_color(pi[u], pi[v]) == c for u, v, c in G.edges)


def is_partial_isomorphism(G: ColoredGraph, H: ColoredGraph, pi: Iterable[tuple[int, int]]) -> bool:
    pi = list(pi)
    dom = [v for v, _ in pi]
    img = [w for _, w in pi]
    if len(set(dom)) != len(dom) or len(set(img)) != len(img) or len(set(pi)) != len(pi):
        return False
    for v, w in pi:
        if G.colors[v] != H.colors[w]:
            return False
    for (v, w), (v2, w2) in itertools.combinations(pi, 2):
        if G.edge_color(v, v2) != H.edge_color(w, w2):
            return False
    return True


def iso_from_solution(C: GroupCSP, phi: Mapping[str, Any]) -> dict[int, int]:
    bad = C.explicit.violated(phi)
    if bad is not None:
        raise PreconditionError(f"assignment violates constraint {bad.name}")
    pair = cfi_pair(C)
    G, H = pair.left, pair.right
    grp = C.group
    pi = {}
    for v, t in enumerate(G.tags):
        if t[0] == "var":
            _, x, g = t
            pi[v] = H.index[var_tag(x, grp.sub(g, phi[x]))]
        else:
            _, name, beta = t
            scope = C.constraint(name).scope
            pi[v] = H.index[con_tag(name, grp.tuple_sub(beta, tuple(phi[x] for x in scope)))]
    if not is_isomorphism(G, H, pi):
        raise AssertionError("constructed map is not an isomorphism")
    return pi


def solution_from_iso(C: GroupCSP, pi: Mapping[int, int]) -> dict[str, Any]:
    pair = cfi_pair(C)
    G, H = pair.left, pair.right
    if not is_isomorphism(G, H, pi):
        raise PreconditionError("map is not an isomorphism between the CFI graphs")
    inv = {w: v for v, w in pi.items()}
    phi = {x: G.tags[inv[H.index[var_tag(x, C.group.zero)]]][2] for x in C.variables}
    bad = C.explicit.violated(phi)
    if bad is not None:
        raise AssertionError(f"derived assignment violates {bad.name}")
    return phi


# -- isomorphism oracle -----------------------------------------------------------------


class _Plain:
    """Integer-coloured graph used inside the search (colours are ids shared by both sides)."""

    __slots__ = ("n", "colors", "edges")

    def __init__(self, n: int, colors: np.ndarray, edges: list[tuple[int, int, int]]):
        self.n = n
        self.colors = colors
        self.edges = edges


class _Refiner:
    """Exact colour refinement on the disjoint union ``G + H`` (H shifted by ``G.n``)."""

    def __init__(self, G: _Plain, H: _Plain):
        self.nG = G.n
        n = G.n + H.n
        src, dst, col = [], [], []
        for off, g in ((0, G), (G.n, H)):
            for u, v, c in g.edges:
                src += [u + off, v + off]
                dst += [v + off, u + off]
                col += [c, c]
        self.src = np.array(src, dtype=np.int64)
        self.dst = np.array(dst, dtype=np.int64)
        self.col = np.array(col, dtype=np.int64)
        self.n = n
        self.starts = np.searchsorted(np.sort(self.src), np.arange(n + 1))

    def refine(self, colors: np.ndarray) -> np.ndarray:
        colors = _relabel(colors)
        k = int(colors.max()) + 1 if self.n else 0
        if self.src.size == 0:
            return colors
        while True:
            code = self.col * k + colors[self.dst]
            order = np.lexsort((code, self.src))
            sc = code[order]
            st = self.starts
            sigs = [(int(colors[v]), sc[st[v]:st[v + 1]].tobytes()) for v in range(self.n)]
            uniq = {s: i for i, s in enumerate(sorted(set(sigs)))}
            new = np.fromiter((uniq[s] for s in sigs), dtype=np.int64, count=self.n)
            if len(uniq) == k:
                return new
            colors, k = new, len(uniq)


def _relabel(colors: np.ndarray) -> np.ndarray:
    _, inv = np.unique(colors, return_inverse=True)
    return inv.astype(np.int64).reshape(-1)


def _plain_pair(G: ColoredGraph, H: ColoredGraph) -> tuple[_Plain, _Plain]:
    palette = {c: i for i, c in enumerate(sorted(set(G.colors) | set(H.colors)))}
    epal = {c: i for i, c in enumerate(sorted({c for *_, c in G.edges} | {c for *_, c in H.edges}))}
    out = []
    for g in (G, H):
        out.append(
            _Plain(g.n, np.array([palette[c] for c in g.colors], dtype=np.int64), [(u, v, epal[c]) for u, v, c in g.edges])
        )
    return out[0], out[1]


def _plain_iso_ok(G: _Plain, H: _Plain, pi: np.ndarray) -> bool:
    if not np.array_equal(np.sort(pi), np.arange(H.n)):
        return False
    if not np.array_equal(G.colors, H.colors[pi]):
        return False
    he = {(min(u, v), max(u, v)): c for u, v, c in H.edges}
    return len(G.edges) == len(H.edges) and all(
        he.get((min(pi[u], pi[v]), max(pi[u], pi[v]))) == c for u, v, c in G.edges
    )


def _components(n: int, edges: list[tuple[int, int, int]], keep: np.ndarray) -> list[np.ndarray]:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    idx = np.nonzero(keep)[0]
    pos = -np.ones(n, dtype=np.int64)
    pos[idx] = np.arange(idx.size)
    rows, cols = [], []
    for u, v, _ in edges:
        if keep[u] and keep[v]:
            rows.append(pos[u])
            cols.append(pos[v])
    m = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(idx.size, idx.size))
    k, lab = connected_components(m, directed=False)
    return [idx[lab == i] for i in range(k)]


def _induced(g: _Plain, verts: np.ndarray, colors: np.ndarray) -> _Plain:
    pos = -np.ones(g.n, dtype=np.int64)
    pos[verts] = np.arange(verts.size)
    edges = [(int(pos[u]), int(pos[v]), c) for u, v, c in g.edges if pos[u] >= 0 and pos[v] >= 0]
    return _Plain(int(verts.size), colors[verts].copy(), edges)


class _Search:
    def __init__(self, budget: int, lookahead: int):
        self.budget = budget
        self.nodes = 0
        self.lookahead = lookahead

    def tick(self):
        self.nodes += 1
        if self.nodes > self.budget:
            raise BudgetError(f"isomorphism search exceeded {self.budget} nodes")

    def iso(self, G: _Plain, H: _Plain) -> np.ndarray | None:
        if G.n != H.n or len(G.edges) != len(H.edges):
            return None
        if not np.array_equal(np.sort(G.colors), np.sort(H.colors)):
            return None
        if G.n == 0:
            return np.zeros(0, dtype=np.int64)
        R = _Refiner(G, H)
        return self._node(G, H, R, np.concatenate([G.colors, H.colors]))

    def _node(self, G: _Plain, H: _Plain, R: _Refiner, c: np.ndarray) -> np.ndarray | None:
        self.tick()
        nG = G.n
        c = R.refine(c)
        k = int(c.max()) + 1
        cg = np.bincount(c[:nG], minlength=k)
        if not np.array_equal(cg, np.bincount(c[nG:], minlength=k)):
            return None
        if cg.max() == 1:
            pos = np.empty(k, dtype=np.int64)
            pos[c[nG:]] = np.arange(nG)
            pi = pos[c[:nG]]
            return pi if _plain_iso_ok(G, H, pi) else None
        split = self._split(G, H, c, cg)
        if split is not False:
            return split
        cell = self._choose_cell(R, c, cg, nG)
        v = int(np.nonzero(c[:nG] == cell)[0][0])
        for w in np.nonzero(c[nG:] == cell)[0]:
            c2 = c.copy()
            c2[v] = k
            c2[nG + int(w)] = k
            res = self._node(G, H, R, c2)
            if res is not None:
                return res
        return None

    def _split(self, G: _Plain, H: _Plain, c: np.ndarray, cg: np.ndarray):
        """If removing the singleton cells disconnects the graph, match the pieces independently.

        With a stable joint colouring, singleton vertices are forced and adjacency to them is
        encoded in the colours, so isomorphism reduces to a colour-preserving matching of pieces.
        Returns ``False`` when the graph does not split.
        """
        nG = G.n
        single = cg[c[:nG]] == 1
        compsG = _components(nG, G.edges, ~single)
        if len(compsG) < 2:
            return False
        compsH = _components(H.n, H.edges, ~(cg[c[nG:]] == 1))
        if len(compsH) != len(compsG):
            return None
        cgG, cgH = c[:nG], c[nG:]
        pi = np.full(nG, -1, dtype=np.int64)
        k = cg.size
        pos = np.full(k, -1, dtype=np.int64)
        sH = np.nonzero(cg[cgH] == 1)[0]
        pos[cgH[sH]] = sH
        sG = np.nonzero(single)[0]
        pi[sG] = pos[cgG[sG]]
        keyH: dict[bytes, list[int]] = {}
        for j, comp in enumerate(compsH):
            keyH.setdefault(np.sort(cgH[comp]).tobytes(), []).append(j)
        used = set()
        for comp in compsG:
            cands = keyH.get(np.sort(cgG[comp]).tobytes(), [])
            subG = _induced(G, comp, cgG)
            found = False
            for j in cands:
                if j in used:
                    continue
                subH = _induced(H, compsH[j], cgH)
                m = self.iso(subG, subH)
                if m is not None:
                    pi[comp] = compsH[j][m]
                    used.add(j)
                    found = True
                    break
            if not found:
                return None
        return pi if _plain_iso_ok(G, H, pi) else None

    def _choose_cell(self, R: _Refiner, c: np.ndarray, cg: np.ndarray, nG: int) -> int:
        cells = np.nonzero(cg > 1)[0]
        if self.lookahead <= 1 or cells.size == 1:
            return int(cells[np.argmin(cg[cells])])
        # try the smallest cells first; keep the one whose individualization splits most
        order = cells[np.lexsort((cells, cg[cells]))][: self.lookahead]
        k = int(c.max()) + 1
        best, best_score = int(order[0]), None
        for cell in order:
            v = int(np.nonzero(c[:nG] == cell)[0][0])
            c2 = c.copy()
            c2[v] = k
            r = R.refine(c2)
            score = (-np.unique(r[:nG]).size, int(cg[cell]), int(cell))
            if best_score is None or score < best_score:
                best, best_score = int(cell), score
        return best


def brute_force_isomorphic(
    G: ColoredGraph, H: ColoredGraph, budget: int = 200_000, lookahead: int = 8
) -> dict[int, int] | None:
    """A colour- and edge-colour-preserving isomorphism ``G -> H``, or ``None`` after exhaustive search.

    Individualization-refinement with exact joint colour refinement, histogram pruning,
    splitting into independent pieces once singleton cells disconnect the graph, and a
    lookahead choice of the branching cell.  ``budget`` bounds the number of search nodes.
    """
    if G.n != H.n or len(G.edges) != len(H.edges):
        return None
    if sorted(G.colors) != sorted(H.colors) or sorted(c for *_, c in G.edges) != sorted(c for *_, c in H.edges):
        return None
    pg, ph = _plain_pair(G, H)
    pi = _Search(budget, lookahead).iso(pg, ph)
    if pi is None:
        return None
    out = {v: int(w) for v, w in enumerate(pi)}
    if not is_isomorphism(G, H, out):
        raise AssertionError("search returned a map that is not an isomorphism")
    return out
