"""Command-line entry point and end-to-end checks.

Every subcommand prints exactly one JSON document on stdout (sorted keys) and
writes diagnostics to stderr.  Exit status: 0 success, 1 a verification
failed, 2 usage, input or budget problems.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import random
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import graphcore as gc
from .cfi import ColoredGraph, GraphPair, brute_force_isomorphic, cfi_pair, extended_pair, or_pair
from .csp import (
    ExtendedGroupCSP,
    GroupCSP,
    boolean_tseitin,
    brute_force_solve,
    extended_tseitin_disjunction,
    load_instance,
    tseitin,
)
from .errors import GiHardError, VerificationError
from .group import FiniteAbelianGroup
from .linsys import combine_pq, lcsp_system, liso_system, solve_integer, solve_mod_p, verify, write_system
from .pc import (
    PolySystem,
    apply_substitution,
    check_side_conditions,
    classify_substituted,
    degree_d_derivable,
    MultilinearPoly,
    min_refutation_search,
    p_csp,
    p_iso,
    reduction_boolean_tseitin,
    reduction_csp_to_iso,
    reduction_iso_to_csp,
)
from .witness import lift_csp_to_iso, psi, psi_subgroup, star_psi, theorem41_pipeline
from .wl import wl_report

ENV_PREFIX = "GIHARD_BUDGET_"
DEFAULT_BUDGETS = {
    "assign": 10**7,  # brute-force CSP assignments
    "hnf": 50_000,  # variables of a linear system
    "monomials": 100_000,  # polynomial calculus
    "iso": 200_000,  # isomorphism search nodes
    "tuples": 200_000,  # WL tuples
}


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    jobs: int = 1
    budgets: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_BUDGETS))
    args: argparse.Namespace | None = None


class UsageError(GiHardError):
    pass


# -- parsing helpers --------------------------------------------------------------------


def resolve_budgets(overrides: dict[str, int | None], environ=os.environ) -> dict[str, int]:
    out = dict(DEFAULT_BUDGETS)
    for name in out:
        env = environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            try:
                out[name] = int(env)
            except ValueError as exc:
                raise UsageError(f"{ENV_PREFIX}{name.upper()} must be an integer") from exc
        if overrides.get(name) is not None:
            out[name] = int(overrides[name])
        if out[name] <= 0:
            raise UsageError(f"budget {name} must be positive")
    return out


def parse_group(text: str) -> FiniteAbelianGroup:
    return FiniteAbelianGroup.parse(text)


def parse_sigma(text: str | None, group: FiniteAbelianGroup, n: int, rng: random.Random) -> dict[int, tuple]:
    """``zero``, ``odd:vK`` (generator charge at K), ``random`` or ``vK=a.b,...`` residues."""
    if not text or text == "zero":
        return {}
    if text.startswith("odd:"):
        v = _vertex_id(text[4:], n)
        return {v: group.element([1] * group.rank)}
    if text == "random":
        return {v: rng.choice(group.elements) for v in range(n)}
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise UsageError(f"bad charge {part!r}")
        v, val = part.split("=", 1)
        out[_vertex_id(v, n)] = group.element(int(r) for r in val.split("."))
    return out


def _vertex_id(text: str, n: int) -> int:
    text = text.strip().lstrip("v")
    if not text.isdigit() or int(text) >= n:
        raise UsageError(f"bad vertex {text!r}")
    return int(text)


def _sigma_json(sigma: dict) -> dict:
    return {str(v): list(g) for v, g in sorted(sigma.items())}


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, Fraction):
        return f"{o.numerator}/{o.denominator}"
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _write(path: str | None, text: str) -> dict:
    if not path:
        return {}
    with open(path, "w") as fh:
        fh.write(text)
    return {"written": path, "sha256": hashlib.sha256(text.encode()).hexdigest()}


def _read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _load_pair(path: str) -> GraphPair:
    data = _read_json(path)
    if "left" not in data:
        raise UsageError(f"{path} is not a graph pair")
    return GraphPair.from_json(data)


# -- verification pipelines ------------------------------------------------------------------

_SMALL_GRAPHS: list[tuple[str, gc.UGraph]] = [
    ("triangle", gc.complete_graph(3)),
    ("cycle4", gc.cycle_graph(4)),
    ("cycle5", gc.cycle_graph(5)),
    ("k4-e", gc.UGraph(4, ((0, 1), (0, 2), (0, 3), (1, 2), (2, 3)))),
    ("k4", gc.complete_graph(4)),
    ("k23", gc.UGraph(5, ((0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4)))),
]
_GROUPS = ["z2", "z3", "z2xz3"]


def lemma31_corpus(seed: int, count: int = 30) -> list[tuple[str, GroupCSP]]:
    """Seeded group CSPs (at most 8 variables) alternating between zero and non-zero total charge."""
    rng = random.Random(seed)
    out = []
    for i in range(count):
        gname, g = _SMALL_GRAPHS[i % len(_SMALL_GRAPHS)]
        grp = parse_group(_GROUPS[(i // len(_SMALL_GRAPHS)) % len(_GROUPS)])
        H = gc.DiGraph.orient(g, [e for e in range(g.m) if rng.random() < 0.5])
        sigma = {v: rng.choice(grp.elements) for v in range(g.n - 1)}
        total = grp.total(sigma.values())
        last = grp.neg(total)
        if i % 2:
            last = grp.add(last, rng.choice([x for x in grp.elements if x != grp.zero]))
        sigma[g.n - 1] = last
        out.append((f"{gname}/{grp}/{i}", tseitin(H, grp, sigma)))
    return out


def check_lemma31(seed: int = 0, count: int = 30, iso_budget: int = 200_000, assign_budget: int = 10**7) -> dict:
    rows = []
    for name, C in lemma31_corpus(seed, count):
        sat = brute_force_solve(C, budget=assign_budget) is not None
        pair = cfi_pair(C)
        iso = brute_force_isomorphic(pair.left, pair.right, budget=iso_budget) is not None
        rows.append({"instance": name, "satisfiable": sat, "isomorphic": iso, "vertices": pair.left.n, "agree": sat == iso})
    agree = sum(r["agree"] for r in rows)
    return {"check": "csp-iso-biconditional", "instances": rows, "agree": agree, "total": len(rows), "ok": agree == len(rows)}


def _plain(n: int, edges) -> ColoredGraph:
    return ColoredGraph(("a",) * n, tuple(range(n)), tuple((u, v, "") for u, v in edges))


def or_lemma_inputs():
    P3, P3b = _plain(3, [(0, 1), (1, 2)]), _plain(3, [(0, 2), (2, 1)])
    K3, E3 = _plain(3, [(0, 1), (1, 2), (0, 2)]), _plain(3, [])
    return [GraphPair(P3, P3b), GraphPair(K3, K3)], [GraphPair(P3, K3), GraphPair(K3, P3), GraphPair(E3, P3)]


def check_lemma32(levels: Sequence[int] = (1, 2, 3), iso_budget: int = 200_000) -> dict:
    iso_pairs, non_pairs = or_lemma_inputs()
    rows = []
    for ell in levels:
        for pattern in itertools.product((0, 1), repeat=ell):
            pairs = [iso_pairs[i % 2] if bit else non_pairs[i % 3] for i, bit in enumerate(pattern)]
            p = or_pair(pairs)
            iso = brute_force_isomorphic(p.left, p.right, budget=iso_budget) is not None
            rows.append({"level": ell, "pattern": list(pattern), "isomorphic": iso, "agree": iso == any(pattern)})
    return {"check": "or-construction", "cases": rows, "ok": all(r["agree"] for r in rows)}


def check_lemma33(graph: str = "k4", vstar: int = 0, iso_budget: int = 200_000, assign_budget: int = 10**7) -> dict:
    """Extended pair isomorphic iff the extended CSP is satisfiable, on one unsatisfiable and one satisfiable case."""
    g = gc.named_graph(graph)
    H = gc.DiGraph.orient(g)
    cases = []
    unsat = extended_tseitin_disjunction(H, vstar)
    z6 = FiniteAbelianGroup((2, 3))
    sat = ExtendedGroupCSP(tseitin(gc.DiGraph.orient(gc.complete_graph(3)), z6), ("x0",), (((0, 0),), ((1, 0),)), 2)
    for name, C in ((f"{graph}-disjunction", unsat), ("triangle-satisfiable", sat)):
        s = brute_force_solve(C, budget=assign_budget) is not None
        p = extended_pair(C)
        iso = brute_force_isomorphic(p.left, p.right, budget=iso_budget) is not None
        cases.append({"instance": name, "satisfiable": s, "isomorphic": iso, "vertices": p.left.n, "agree": s == iso})
    return {"check": "extended-pair", "cases": cases, "ok": all(c["agree"] for c in cases)}


def psi_cases(graph: str, group: FiniteAbelianGroup, sigma: dict, ell: int, subgroups: bool = True):
    """Closed-form solutions to check: the full group, plus the p-primary part for each prime p
    dividing the order (whenever it contains every charge)."""
    H = gc.DiGraph.orient(gc.named_graph(graph))
    yield "full", psi(H, group, sigma, ell), H
    if not subgroups:
        return
    for q in sorted({f for n in group.moduli for f in _prime_factors(n)}):
        delta = [x for x in group.elements if group.element_order(x) in _powers(q, group.order)]
        if all(tuple(s) in set(delta) for s in sigma.values()):
            yield f"{q}-subgroup", psi_subgroup(H, group, delta, sigma, ell), H


def _prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        while n % d == 0:
            out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _powers(q: int, limit: int) -> set[int]:
    out, x = set(), 1
    while x <= limit:
        out.add(x)
        x *= q
    return out


def check_psi(graph: str, group: FiniteAbelianGroup, sigma: dict, ell: int, budget: int = 10**6) -> dict:
    rows = []
    for name, oracle, H in psi_cases(graph, group, sigma, ell):
        C = tseitin(H, group, sigma)
        S = lcsp_system(C, ell, budget=budget)
        rep = verify(S, oracle.assignment())
        rows.append({"variant": name, "variables": len(S.variables), "equations": rep.equations, "ok": rep.ok, "message": rep.message})
    return {"check": "closed-form-solution", "graph": graph, "group": str(group), "level": ell,
            "sigma": _sigma_json(sigma), "variants": rows, "ok": all(r["ok"] for r in rows)}


def check_theorem41(graph: str, ell: int, iso_budget: int = 200_000, quiet: bool = True) -> dict:
    res = theorem41_pipeline(gc.named_graph(graph), ell, oracle_budget=iso_budget, quiet=quiet)
    rep = dict(res.report)
    rep["check"] = "theorem41"
    rep["summary"] = {"integral-solution": "OK", "non-isomorphic": "OK" if "non_isomorphic" in rep else "skipped"}
    rep["ok"] = True
    return rep


# -- subcommand handlers ------------------------------------------------------------------------


def _graph_and_charges(args, rng) -> tuple[gc.DiGraph, FiniteAbelianGroup, dict]:
    g = gc.named_graph(args.graph)
    grp = parse_group(args.group)
    return gc.DiGraph.orient(g), grp, parse_sigma(args.sigma, grp, g.n, rng)


def cmd_gen(cfg: RunConfig) -> tuple[dict, int]:
    a = cfg.args
    rng = random.Random(cfg.seed)
    kind = a.kind
    if kind == "tseitin":
        H, grp, sigma = _graph_and_charges(a, rng)
        obj = tseitin(H, grp, sigma).to_json()
    elif kind == "boolean-tseitin":
        g = gc.named_graph(a.graph)
        sigma = {_vertex_id(a.sigma[4:], g.n): 1} if a.sigma and a.sigma.startswith("odd:") else {}
        obj = boolean_tseitin(gc.DiGraph.orient(g), a.p, sigma).to_json()
    elif kind == "extended":
        obj = extended_tseitin_disjunction(gc.DiGraph.orient(gc.named_graph(a.graph)), a.vstar).to_json()
    elif kind == "cfi":
        if a.inputs:
            C = load_instance(_read_json(a.inputs[0]))
        else:
            H, grp, sigma = _graph_and_charges(a, rng)
            C = tseitin(H, grp, sigma)
        obj = (extended_pair(C) if isinstance(C, ExtendedGroupCSP) else cfi_pair(C)).to_json()
    elif kind == "or-pair":
        if not a.inputs:
            raise UsageError("or-pair needs --in pair files")
        obj = or_pair([_load_pair(p) for p in a.inputs]).to_json()
    else:
        raise UsageError(f"unknown generator {kind}")
    text = _dump(obj)
    report = {"command": "gen", "kind": kind, "sha256": hashlib.sha256(text.encode()).hexdigest()}
    report.update(_write(a.out, text))
    if not a.out:
        report["instance"] = obj
    return report, 0


def _load_any(path: str):
    data = _read_json(path)
    if "left" in data:
        return GraphPair.from_json(data)
    return load_instance(data)


def _system_for(obj, level: int, budget: int):
    if isinstance(obj, GraphPair):
        return liso_system(obj.left, obj.right, level, budget=budget)
    C = obj.explicit if isinstance(obj, ExtendedGroupCSP) else obj
    return lcsp_system(C, level, budget=budget)


def cmd_emit(cfg: RunConfig) -> tuple[dict, int]:
    a = cfg.args
    obj = _load_any(a.inputs[0])
    report: dict = {"command": "emit", "kind": a.kind}
    if a.kind in ("liso", "lcsp"):
        if (a.kind == "liso") != isinstance(obj, GraphPair):
            raise UsageError(f"{a.kind} needs a {'graph pair' if a.kind == 'liso' else 'CSP instance'}")
        S = _system_for(obj, a.level, cfg.budgets["hnf"])
        import io

        buf = io.StringIO()
        write_system(S, buf)
        text = buf.getvalue()
        report.update({"variables": len(S.variables), "level": a.level})
    else:
        if a.kind == "piso":
            if not isinstance(obj, GraphPair):
                raise UsageError("piso needs a graph pair")
            P = p_iso(obj.left, obj.right)
        else:
            if isinstance(obj, GraphPair):
                raise UsageError("pcsp needs a CSP instance")
            P = p_csp(obj)
        text = P.to_text()
        report.update({"variables": P.n, "axioms": len(P.axioms)})
    report["sha256"] = hashlib.sha256(text.encode()).hexdigest()
    report.update(_write(a.out, text))
    return report, 0


def cmd_solve(cfg: RunConfig) -> tuple[dict, int]:
    a = cfg.args
    obj = _load_any(a.inputs[0])
    S = _system_for(obj, a.level, cfg.budgets["hnf"])
    if a.kind == "integer":
        res = solve_integer(S, budget=cfg.budgets["hnf"])
    else:
        res = solve_mod_p(S, a.p, budget=cfg.budgets["hnf"])
    if res.feasible and res.solution is not None:
        rep = verify(S, res.solution, check_eliminated=False) if a.kind == "integer" else None
        if rep is not None and not rep.ok:
            raise VerificationError("solver", f"returned solution fails at {rep.label}")
    out = {"command": "solve", "kind": a.kind, "level": a.level, "variables": len(S.variables)}
    out.update(res.to_json())
    return out, 0


def cmd_witness(cfg: RunConfig) -> tuple[dict, int]:
    a = cfg.args
    rng = random.Random(cfg.seed)
    if a.kind == "psi":
        grp = parse_group(a.group)
        sigma = parse_sigma(a.sigma, grp, gc.named_graph(a.graph).n, rng)
        rep = check_psi(a.graph, grp, sigma, a.level, budget=cfg.budgets["hnf"] * 20)
        rep["command"] = "witness"
        return rep, 0 if rep["ok"] else 1
    if a.kind == "lift":
        H, grp, sigma = _graph_and_charges(a, rng)
        C = tseitin(H, grp, sigma)
        pair = cfi_pair(C)
        csp_level = max(len(c.scope) for c in C.constraints) * a.level
        lifted = lift_csp_to_iso(psi(H, grp, sigma, csp_level), C, a.level)
        S = liso_system(pair.left, pair.right, a.level, budget=cfg.budgets["hnf"] * 20)
        rep = verify(S, lifted.assignment())
        out = {"command": "witness", "kind": "lift", "level": a.level, "variables": len(S.variables),
               "equations": rep.equations, "ok": rep.ok, "message": rep.message}
        return out, 0 if rep.ok else 1
    if a.kind == "combine":
        H = gc.DiGraph.orient(gc.named_graph(a.graph))
        Cs = extended_tseitin_disjunction(H, a.vstar)
        arity = max(len(c.scope) for c in Cs.base.constraints)
        S = lcsp_system(Cs.explicit, a.level, budget=cfg.budgets["hnf"] * 20)
        x = star_psi(H, a.vstar, 2, arity * a.level).assignment()
        y = star_psi(H, a.vstar, 3, arity * a.level).assignment()
        z = combine_pq(S, x, y)
        rep = verify(S, z)
        out = {"command": "witness", "kind": "combine", "level": a.level, "variables": len(S.variables),
               "ok": rep.ok, "z": z.meta["z"], "alpha": z.meta["alpha"], "beta": z.meta["beta"]}
        return out, 0 if rep.ok else 1
    raise UsageError(f"unknown witness kind {a.kind}")


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    a = cfg.args
    iso = cfg.budgets["iso"]
    if a.kind == "lemma31":
        rep = check_lemma31(cfg.seed, a.count, iso, cfg.budgets["assign"])
    elif a.kind == "lemma32":
        rep = check_lemma32(tuple(range(1, a.level + 1)) if a.level else (1, 2, 3), iso)
    elif a.kind == "lemma33":
        rep = check_lemma33(a.graph, a.vstar, iso, cfg.budgets["assign"])
    elif a.kind == "psi":
        grp = parse_group(a.group)
        sigma = parse_sigma(a.sigma, grp, gc.named_graph(a.graph).n, random.Random(cfg.seed))
        rep = check_psi(a.graph, grp, sigma, a.level, budget=cfg.budgets["hnf"] * 20)
    elif a.kind == "theorem41":
        rep = check_theorem41(a.graph, a.level, iso, quiet=not a.verbose)
    else:
        raise UsageError(f"unknown check {a.kind}")
    rep["command"] = "verify"
    return rep, 0 if rep["ok"] else 1


def _read_poly(path: str) -> PolySystem:
    with open(path) as fh:
        return PolySystem.from_text(fh.read())


def cmd_pc(cfg: RunConfig) -> tuple[dict, int]:
    a = cfg.args
    budget = cfg.budgets["monomials"]
    if a.kind == "derivable":
        S = _read_poly(a.inputs[0])
        target = MultilinearPoly.from_text(a.target)
        ok = degree_d_derivable(S, a.field, a.degree, target, budget=budget)
        return {"command": "pc", "kind": "derivable", "field": a.field, "degree": a.degree,
                "target": target.to_text(), "derivable": ok}, 0
    if a.kind == "mindegree":
        S = _read_poly(a.inputs[0])
        fields = a.fields or [a.field]
        results = [min_refutation_search(S, p, a.dmax, budget=budget).to_json() for p in fields]
        return {"command": "pc", "kind": "mindegree", "variables": S.n, "axioms": len(S.axioms),
                "dmax": a.dmax, "results": results}, 0
    if a.kind == "reduce":
        rng = random.Random(cfg.seed)
        if a.reduction == "boolean-tseitin":
            sub, src, tgt = reduction_boolean_tseitin(gc.DiGraph.orient(gc.named_graph(a.graph)), a.vstar, a.p)
        else:
            H, grp, sigma = _graph_and_charges(a, rng)
            C = tseitin(H, grp, sigma)
            build = {"csp-to-iso": reduction_csp_to_iso, "iso-to-csp": reduction_iso_to_csp}.get(a.reduction)
            if build is None:
                raise UsageError(f"unknown reduction {a.reduction}")
            sub, src, tgt = build(C)
        side = check_side_conditions(sub, src, tgt, a.field, a.degree, budget=budget)
        kinds = classify_substituted(apply_substitution(sub, tgt), src, a.field)
        out = {"command": "pc", "kind": "reduce", "reduction": sub.name, "d1": sub.d1, "d2": sub.d2,
               "source_variables": src.n, "target_variables": tgt.n, "side_conditions": side.to_json(),
               "substituted": {k: kinds.count(k) for k in sorted(set(kinds))}}
        return out, 0 if side.ok is not False else 1
    raise UsageError(f"unknown pc command {a.kind}")


def cmd_wl(cfg: RunConfig) -> tuple[dict, int]:
    a = cfg.args
    pair = _load_pair(a.inputs[0])
    ks = [int(k) for k in a.k.split(",")]
    rep = wl_report(pair.left, pair.right, ks, budget=cfg.budgets["tuples"])
    rep["command"] = "wl"
    return rep, 0


def cmd_profile(cfg: RunConfig) -> tuple[dict, int]:
    a = cfg.args
    g = gc.named_graph(a.graph)
    if a.kind == "expansion":
        rep = gc.expander_profile(g, seed=cfg.seed).to_json()
    else:
        edges = [int(e) for e in a.edges.split(",")] if a.edges else []
        core = gc.two_connected_core(g, edges)
        rep = {"edges": edges, "core": sorted(core.core), "ratio": str(core.ratio),
               "two_connected": gc.is_two_connected(g, core.core) if core.core else True}
    rep.update({"command": "profile", "kind": a.kind, "graph": a.graph})
    return rep, 0


# -- argument parser --------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="parallel workers (1 keeps logs reproducible)")
    common.add_argument("--in", dest="inputs", action="append", default=[], help="input file (repeatable)")
    common.add_argument("-o", "--out", default=None)
    for name in DEFAULT_BUDGETS:
        common.add_argument(f"--budget-{name}", type=int, default=None, dest=f"budget_{name}")

    p = argparse.ArgumentParser(prog="gihard", description="CFI constructions, linear and algebraic isomorphism tests.")
    sub = p.add_subparsers(dest="command", required=True)

    def inst_args(sp, graph="k4"):
        sp.add_argument("--graph", default=graph)
        sp.add_argument("--group", default="z2")
        sp.add_argument("--sigma", default=None)

    g = sub.add_parser("gen", parents=[common])
    g.add_argument("kind", choices=["tseitin", "boolean-tseitin", "extended", "cfi", "or-pair"])
    inst_args(g)
    g.add_argument("--p", type=int, default=2)
    g.add_argument("--vstar", type=int, default=0)

    e = sub.add_parser("emit", parents=[common])
    e.add_argument("kind", choices=["liso", "lcsp", "piso", "pcsp"])
    e.add_argument("--level", type=int, default=1)

    s = sub.add_parser("solve", parents=[common])
    s.add_argument("kind", choices=["integer", "modp"])
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--p", type=int, default=2)

    w = sub.add_parser("witness", parents=[common])
    w.add_argument("kind", choices=["psi", "lift", "combine"])
    inst_args(w)
    w.add_argument("--level", type=int, default=1)
    w.add_argument("--vstar", type=int, default=0)

    v = sub.add_parser("verify", parents=[common])
    v.add_argument("kind", choices=["lemma31", "lemma32", "lemma33", "psi", "theorem41"])
    inst_args(v)
    v.add_argument("--level", type=int, default=None)
    v.add_argument("--count", type=int, default=30)
    v.add_argument("--vstar", type=int, default=0)
    v.add_argument("--verbose", action="store_true", help="progress on stderr")

    c = sub.add_parser("pc", parents=[common])
    c.add_argument("kind", choices=["derivable", "mindegree", "reduce"])
    c.add_argument("--field", type=int, default=2)
    c.add_argument("--fields", type=lambda t: [int(x) for x in t.split(",")], default=None)
    c.add_argument("--degree", type=int, default=2)
    c.add_argument("--dmax", type=int, default=4)
    c.add_argument("--target", default="1*1")
    c.add_argument("--reduction", default="boolean-tseitin",
                   choices=["boolean-tseitin", "csp-to-iso", "iso-to-csp"])
    inst_args(c)
    c.add_argument("--p", type=int, default=2)
    c.add_argument("--vstar", type=int, default=0)

    wl = sub.add_parser("wl", parents=[common])
    wl.add_argument("--k", default="1,2,3")

    pr = sub.add_parser("profile", parents=[common])
    pr.add_argument("kind", choices=["expansion", "core"])
    pr.add_argument("--graph", default="k4")
    pr.add_argument("--edges", default=None)
    return p


HANDLERS: dict[str, Callable[[RunConfig], tuple[dict, int]]] = {
    "gen": cmd_gen,
    "emit": cmd_emit,
    "solve": cmd_solve,
    "witness": cmd_witness,
    "verify": cmd_verify,
    "pc": cmd_pc,
    "wl": cmd_wl,
    "profile": cmd_profile,
}


def _needs_input(args) -> bool:
    if args.command in ("emit", "solve", "wl"):
        return True
    if args.command == "pc" and args.kind in ("derivable", "mindegree"):
        return True
    return args.command == "gen" and args.kind == "or-pair"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.jobs < 1:
            raise UsageError("--jobs must be positive")
        if _needs_input(args) and not args.inputs:
            raise UsageError(f"{args.command} needs --in")
        if args.command == "verify" and args.kind in ("psi", "theorem41") and args.level is None:
            args.level = 1
        budgets = resolve_budgets({k: getattr(args, f"budget_{k}") for k in DEFAULT_BUDGETS})
        cfg = RunConfig(args.command, args.seed, args.jobs, budgets, args)
        report, code = HANDLERS[args.command](cfg)
    except VerificationError as exc:
        print(_dump({"command": args.command, "ok": False, "error": str(exc)}))
        print(f"verification failed: {exc}", file=sys.stderr)
        return 1
    except (GiHardError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(_dump(report))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
