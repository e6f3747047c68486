"""Weisfeiler-Leman refinement: colour refinement (k = 1) and oblivious k-WL on k-tuples.

Both graphs of a comparison are refined together so that colour ids are shared.
New ids come from ``np.unique`` over full signature rows, which is exact (no
hashing), and the ids are canonical: they depend only on the multiset of
signatures, never on vertex order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BudgetError, DomainError

DEFAULT_TUPLE_BUDGET = 200_000
MAX_K = 3


@dataclass(frozen=True)
class WlColoring:
    k: int
    colors: np.ndarray  # shape (n,) * k
    rounds: int

    @property
    def histogram(self) -> dict[int, int]:
        vals, counts = np.unique(self.colors, return_counts=True)
        return {int(v): int(c) for v, c in zip(vals, counts)}

    @property
    def classes(self) -> int:
        return len(np.unique(self.colors))


@dataclass(frozen=True)
class WlVerdict:
    k: int
    distinguished: bool
    rounds: int
    classes: int

    def to_json(self) -> dict:
        return {"k": self.k, "distinguished": self.distinguished, "rounds": self.rounds, "classes": self.classes}


def _palettes(graphs) -> tuple[dict[str, int], dict[str, int]]:
    vnames = sorted({c for g in graphs for c in g.colors})
    enames = sorted({c for g in graphs for _, _, c in g.edges})
    return {c: i for i, c in enumerate(vnames)}, {c: i + 1 for i, c in enumerate(enames)}


def _edge_matrix(g, epal: dict[str, int]) -> np.ndarray:
    A = np.zeros((g.n, g.n), dtype=np.int64)
    for u, v, c in g.edges:
        A[u, v] = A[v, u] = epal[c]
    return A


def _relabel(rows: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Jointly map signature rows to dense canonical ids."""
    sizes = [len(r) for r in rows]
    stacked = np.concatenate(rows, axis=0)
    if stacked.ndim == 1:
        stacked = stacked[:, None]
    _, inv = np.unique(stacked, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    out, s = [], 0
    for n in sizes:
        out.append(inv[s : s + n].astype(np.int64))
        s += n
    return out


def _initial_tuples(g, k: int, vpal, epal) -> np.ndarray:
    """Atomic type of every k-tuple: vertex colours, equalities and edge colours."""
    n = g.n
    vc = np.array([vpal[c] for c in g.colors], dtype=np.int64)
    A = _edge_matrix(g, epal)
    idx = np.indices((n,) * k).reshape(k, -1)
    feats = [vc[idx[i]] for i in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            feats.append((idx[i] == idx[j]).astype(np.int64))
            feats.append(A[idx[i], idx[j]])
    return np.stack(feats, axis=1)


def _tuple_signature(C: np.ndarray, k: int) -> np.ndarray:
    """Own colour followed by, per position, the sorted colours after substituting that position."""
    n = C.shape[0]
    parts = [C.reshape(-1, 1)]
    for i in range(k):
        srt = np.sort(C, axis=i)
        moved = np.moveaxis(srt, i, -1)
        part = np.broadcast_to(np.expand_dims(moved, i), (n,) * k + (n,))
        parts.append(part.reshape(-1, n))
    return np.concatenate(parts, axis=1)


def _vertex_signature(C: np.ndarray, A: np.ndarray, width: int) -> np.ndarray:
    code = np.where(A > 0, A * width + C[None, :], -1)
    return np.concatenate([C[:, None], np.sort(code, axis=1)], axis=1)


def _refine(graphs, k: int, budget: int | None) -> tuple[list[np.ndarray], int, bool]:
    """Joint refinement; returns flat colour arrays, rounds, and whether histograms split early."""
    if k < 1:
        raise DomainError("k must be at least 1")
    for g in graphs:
        if budget is not None and g.n**k > budget:
            raise BudgetError(f"{g.n}^{k} tuples exceed budget {budget}")
    vpal, epal = _palettes(graphs)
    if k == 1:
        As = [_edge_matrix(g, epal) for g in graphs]
        cols = _relabel([np.array([vpal[c] for c in g.colors], dtype=np.int64)[:, None] for g in graphs])
    else:
        cols = _relabel([_initial_tuples(g, k, vpal, epal) for g in graphs])
    sizes = {len(c) for c in cols}
    rounds = 0
    while True:
        if len(sizes) > 1 or _histograms_differ(cols):
            return cols, rounds, True
        before = len(np.unique(np.concatenate(cols)))
        if k == 1:
            width = before + 1
            new = _relabel([_vertex_signature(c, A, width) for c, A in zip(cols, As)])
        else:
            new = _relabel([_tuple_signature(c.reshape((g.n,) * k), k) for c, g in zip(cols, graphs)])
        rounds += 1
        after = len(np.unique(np.concatenate(new)))
        cols = new
        if after == before:
            return cols, rounds, _histograms_differ(cols)


def _histograms_differ(cols: list[np.ndarray]) -> bool:
    hs = [np.bincount(c) for c in cols]
    m = max(len(h) for h in hs)
    hs = [np.pad(h, (0, m - len(h))) for h in hs]
    return any(not np.array_equal(hs[0], h) for h in hs[1:])


def wl_coloring(G, k: int = 1, budget: int | None = DEFAULT_TUPLE_BUDGET) -> WlColoring:
    cols, rounds, _ = _refine([G], k, budget)
    return WlColoring(k, cols[0].reshape((G.n,) * k), rounds)


def wl_verdict(G, H, k: int = 1, budget: int | None = DEFAULT_TUPLE_BUDGET) -> WlVerdict:
    if G.n != H.n:
        return WlVerdict(k, True, 0, 0)
    cols, rounds, differ = _refine([G, H], k, budget)
    return WlVerdict(k, differ, rounds, len(np.unique(np.concatenate(cols))))


def wl_distinguish(G, H, k: int = 1, budget: int | None = DEFAULT_TUPLE_BUDGET) -> bool:
    """True when the stable colourings certify that ``G`` and ``H`` are not isomorphic."""
    return wl_verdict(G, H, k, budget).distinguished


def wl_report(G, H, ks: Sequence[int] = (1, 2, 3), budget: int | None = DEFAULT_TUPLE_BUDGET) -> dict:
    verdicts = []
    for k in ks:
        try:
            verdicts.append(wl_verdict(G, H, k, budget).to_json())
        except BudgetError as exc:
            verdicts.append({"k": k, "distinguished": None, "skipped": str(exc)})
    first = next((v["k"] for v in verdicts if v.get("distinguished")), None)
    return {"n": [G.n, H.n], "verdicts": verdicts, "min_distinguishing_k": first}


def min_distinguishing_k(G, H, k_max: int = MAX_K, budget: int | None = DEFAULT_TUPLE_BUDGET) -> int | None:
    for k in range(1, k_max + 1):
        if wl_distinguish(G, H, k, budget):
            return k
    return None
