"""Batch front-end: builds structures, runs law suites, plays games, and
searches hyperbases, producing byte-reproducible JSON reports.

Exit codes: 0 pass, 1 check failure / negative search answer, 2 usage or
input error, 3 budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import _kernels as K
from . import axioms, bao, games, graphs, hyperbasis as hb, qea, ra, rainbow as rb

SCHEMA_VERSION = 1


class UsageError(Exception):
    pass


def _named_graph(spec: str) -> graphs.Graph:
    """c5 / k4 / path6 / petersen / band:8,4 / cliques:3,2 or a DIMACS path."""
    s = spec.lower()
    try:
        if s == "petersen":
            return graphs.petersen()
        if s.startswith("band:"):
            m, w = (int(t) for t in s[5:].split(","))
            return graphs.gen_band(m, w)
        if s.startswith("cliques:"):
            k, c = (int(t) for t in s[8:].split(","))
            return graphs.gen_clique_union(k, c)
        if s.startswith("c") and s[1:].isdigit():
            return graphs.cycle(int(s[1:]))
        if s.startswith("k") and s[1:].isdigit():
            return graphs.complete(int(s[1:]))
        if s.startswith("path") and s[4:].isdigit():
            return graphs.path(int(s[4:]))
    except ValueError as e:
        raise UsageError(f"bad graph spec {spec!r}: {e}")
    try:
        return graphs.read_dimacs(spec)
    except OSError as e:
        raise UsageError(f"unknown graph {spec!r} ({e})")


def _palette(spec: str) -> rb.Palette:
    """smooth:3 / descent:2 / weak:3,2,2[,1] (n, greens, reds[, yellow cap])."""
    try:
        name, _, args = spec.partition(":")
        if name == "smooth":
            return rb.smooth_preset(int(args))
        if name == "descent":
            return rb.descent_preset(int(args))
        if name == "weak":
            parts = [int(t) for t in args.split(",")]
            n, g, r = parts[:3]
            cap = parts[3] if len(parts) > 3 else None
            return rb.weak_preset(n, g, r, yellow_max_size=cap)
    except (ValueError, IndexError) as e:
        raise UsageError(f"bad preset {spec!r}: {e}")
    raise UsageError(f"unknown preset {spec!r}")


def _target(spec: str, bound: int):
    """kind:graph[:n] -> (kind, structure, extras)."""
    parts = spec.split(":")
    kind = parts[0]
    if kind not in ("alpha", "matn", "eta", "M"):
        raise UsageError(f"unknown build kind {kind!r}")
    if len(parts) < 2:
        raise UsageError("target needs a graph, e.g. matn:c5:3")
    g = _named_graph(parts[1])
    n = int(parts[2]) if len(parts) > 2 else 3
    if kind == "alpha":
        return kind, ra.graph_ra(g, n), {"graph": parts[1], "n": n}
    if kind == "matn":
        return kind, ra.basic_matrices(ra.graph_ra(g, n), n), {"graph": parts[1], "n": n}
    if kind == "eta":
        return kind, qea.PairStructure.build(g, n, atom_bound=bound).to_ca(), {"graph": parts[1], "n": n}
    return kind, ra.tuple_structure(g, n, atom_bound=bound), {"graph": parts[1], "n": n}


def _rle_bits(flat):
    """Run-length encoding of a 0/1 sequence: first value, then run lengths."""
    runs = []
    first = int(flat[0]) if len(flat) else 0
    cur, run = first, 0
    for b in flat:
        if int(b) == cur:
            run += 1
        else:
            runs.append(run)
            cur, run = int(b), 1
    runs.append(run)
    return {"first": first, "runs": runs}


def ra_to_json(s: ra.RaAtomStructure) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "ra",
        "atoms": s.atom_count,
        "identity": sorted(s.identity),
        "converse": [int(c) for c in s.converse],
        "consistent": _rle_bits(s.cons.reshape(-1)),
    }


def _emit(doc: dict, out):
    text = json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, frozenset):
        return sorted(obj)
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def graph_to_dot(g: graphs.Graph) -> str:
    lines = ["graph g {"]
    lines.extend(f"  {u};" for u in range(g.node_count))
    lines.extend(f"  {u} -- {v};" for u, v in sorted(g.edges))
    lines.append("}")
    return "\n".join(lines) + "\n"


def atom_to_dot(palette: rb.Palette, atom) -> str:
    part, edges, yellows = atom
    lines = ["graph atom {"]
    for c in sorted(set(part)):
        slots = [str(k) for k in range(palette.n) if part[k] == c]
        lines.append(f'  {c} [label="{"=".join(slots)}"];')
    for (p, q), lab in edges:
        lines.append(f'  {p} -- {q} [label="{_colour_name(lab)}"];')
    for b, s in yellows:
        lines.append(f'  // yellow {sorted(b)}: {sorted(s)}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _colour_name(lab):
    if lab[0] == "gi":
        return f"g{lab[1]}"
    if lab[0] == "g0":
        return f"g0^{lab[1]}"
    if lab[0] == "w":
        return f"w{lab[1]}"
    if lab[0] == "r":
        return f"r^{lab[1]}_{lab[2]}{lab[3]}"
    return "rho"


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_build(args) -> int:
    if args.kind == "rainbow":
        pal = _palette(args.preset)
        table = rb.default_table(pal)
        atoms = rb.enumerate_atoms(pal, table, atom_bound=args.budget)
        s = rb.atoms_to_ca(pal, atoms)
        doc = bao.to_json(s)
        doc["schema_version"] = SCHEMA_VERSION
        doc["summary"] = {"atom_count": s.atom_count, "preset": args.preset}
        _emit(doc, args.out)
        if args.dot and atoms:
            sys.stdout.write(atom_to_dot(pal, atoms[0]))
        return 0
    kind, s, extras = _target(f"{args.kind}:{args.graph}:{args.n}", args.budget)
    if kind == "alpha":
        doc = ra_to_json(s)
        doc["summary"] = {"atom_count": s.atom_count, **extras}
    else:
        doc = bao.to_json(s)
        doc["schema_version"] = SCHEMA_VERSION
        doc["summary"] = {"atom_count": s.atom_count, **extras}
    _emit(doc, args.out)
    if args.dot:
        sys.stdout.write(graph_to_dot(_named_graph(args.graph)))
    return 0


def cmd_check(args) -> int:
    doc = {"schema_version": SCHEMA_VERSION, "suite": args.suite, "target": args.target}
    ok = True
    if args.suite == "ra":
        _, s, _ = _target(args.target, args.budget)
        if not isinstance(s, ra.RaAtomStructure):
            raise UsageError("suite ra needs an alpha target")
        rep = ra.check_ra(s)
        doc["report"] = rep.to_json()
        ok = rep.ok
    elif args.suite in ("ca", "qea"):
        _, s, _ = _target(args.target, args.budget)
        system = "CA" if args.suite == "ca" else "QEA"
        reports = axioms.check_axioms(
            s, system, mode="randomized", trials=args.trials, seed=args.seed, jobs=args.jobs
        )
        fails = [r.to_json() for r in reports if r.status == "fail"]
        doc["report"] = {"instances": len(reports), "failures": fails}
        ok = not fails
    elif args.suite == "simple":
        _, s, _ = _target(args.target, args.budget)
        verdict, witness = bao.is_simple(s, seed=args.seed)
        doc["report"] = {"simple": verdict, "witness": witness.ids() if witness else None}
        ok = verdict
    elif args.suite == "basis":
        parts = args.target.split(":")
        g = _named_graph(parts[1])
        n = int(parts[2]) if len(parts) > 2 else 3
        a = ra.graph_ra(g, n)
        mats = ra.basic_matrices(a, n)
        rep = ra.check_cylindric_basis(mats, a, n)
        doc["report"] = rep.to_json()
        ok = rep.ok
    elif args.suite == "lemma2":
        parts = args.target.split(":")
        g = _named_graph(parts[1])
        n = int(parts[2]) if len(parts) > 2 else 3
        ps = qea.PairStructure.build(g, n, atom_bound=args.budget)
        rep = qea.check_frame_laws(ps)
        doc["report"] = rep.to_json()
        ok = rep.ok
    elif args.suite == "hyperbasis":
        parts = args.target.split(":")
        g = _named_graph(parts[1])
        n = int(parts[2]) if len(parts) > 2 else 3
        a = ra.graph_ra(g, n)
        mats = ra.basic_matrices(a, n)
        nets = [hb.from_matrix(mats, k) for k in range(mats.atom_count)]
        rep = hb.check_hyperbasis(a, nets)
        doc["report"] = rep.to_json()
        ok = rep.ok
    elif args.suite == "square":
        parts = args.target.split(":")
        g = _named_graph(parts[1])
        n = int(parts[2]) if len(parts) > 2 else 3
        a = ra.graph_ra(g, n)
        mats = ra.basic_matrices(a, n)
        members = list(range(mats.atom_count))
        model = hb.build_model(a, mats, members, stage_budget=1, component_cap=args.cap)
        fails = hb.check_square(model, members)
        doc["report"] = {
            "nodes": model.node_count,
            "stage": model.stage,
            "square_failures": len(fails),
        }
        ok = True  # partial models legitimately carry open demands
    else:
        raise UsageError(f"unknown suite {args.suite!r}")
    doc["ok"] = ok
    _emit(doc, args.out)
    return 0 if ok else 1


def cmd_game(args) -> int:
    doc = {"schema_version": SCHEMA_VERSION}
    if args.rounds == 0:
        doc.update({"verdict": "None", "moves": []})
        _emit(doc, args.out)
        return 0
    if args.script in ("pigeonhole", "descent"):
        pal = _palette(args.preset)
        game = games.RainbowGame(pal)
        script = (
            rb.ConePigeonholeScript(pal)
            if args.script == "pigeonhole"
            else rb.RedDescentScript(pal)
        )
        cfg = games.GameConfig("Fm", rounds=args.rounds, node_budget=args.budget)
        res = games.certify_forall(game, script, cfg)
        doc.update(
            {
                "verdict": res.winner,
                "preset": args.preset,
                "script": args.script,
                "rounds_survived": res.depth,
                "states": res.states,
            }
        )
        _emit(doc, args.out)
        return 0
    _, s, _ = _target(args.target, 200_000)
    cfg = games.GameConfig(args.kind, rounds=args.rounds, node_budget=args.budget)
    if args.play:
        game = games.MatrixGame(s)
        tr = games.play(game, cfg, "search", "least")
        doc.update({"verdict": tr.winner, "transcript": tr.to_json()["moves"]})
    else:
        res = games.solve(s, cfg)
        doc.update({"verdict": res.winner, "states": res.states})
    _emit(doc, args.out)
    return 0


def cmd_search(args) -> int:
    parts = args.target.split(":")
    g = _named_graph(parts[1])
    n = int(parts[2]) if len(parts) > 2 else 3
    a = ra.graph_ra(g, n)
    mats = ra.basic_matrices(a, n)
    out = hb.search_hyperbasis(
        a, mats, n, lambda_bound=args.lambda_bound, size_bound=args.size_bound, budget=args.budget
    )
    doc = {
        "schema_version": SCHEMA_VERSION,
        "status": out.status,
        "detail": out.detail,
        "size": len(out.members) if out.members else None,
        "members": out.members if args.full else None,
    }
    _emit(doc, args.out)
    if out.status == "found":
        return 0
    if out.status == "none-within-bounds":
        return 1
    return 3


def cmd_sample_graph(args) -> int:
    try:
        g = graphs.sample_high_girth_chromatic(args.girth_min, args.chi_min, args.budget, args.seed)
    except graphs.BudgetExhausted as e:
        _emit({"schema_version": SCHEMA_VERSION, "status": "exhausted", "detail": str(e)}, args.out)
        return 3
    if args.out:
        graphs.write_dimacs(g, args.out)
    else:
        sys.stdout.write(graph_to_dot(g) if args.dot else f"p {g.node_count} {len(g.edges)}\n")
    return 0


def cmd_report(args) -> int:
    with open(args.path) as fh:
        doc = json.load(fh)
    lines = [f"schema_version: {doc.get('schema_version')}"]
    for key in sorted(doc):
        if key == "schema_version":
            continue
        lines.append(f"{key}: {json.dumps(doc[key], sort_keys=True)[:240]}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cylalg", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build an atom structure and write it as JSON")
    b.add_argument("kind", choices=["alpha", "matn", "eta", "rainbow", "M"])
    b.add_argument("--graph", default="c5", help="named graph or DIMACS path")
    b.add_argument("--n", type=int, default=3)
    b.add_argument("--preset", default="smooth:3", help="rainbow palette preset")
    b.add_argument("--budget", type=int, default=200_000, help="atom bound")
    b.add_argument("--out", default=None)
    b.add_argument("--dot", action="store_true", help="also print a DOT rendering")
    b.set_defaults(fn=cmd_build)

    c = sub.add_parser("check", help="run a law suite and write a report")
    c.add_argument("suite", choices=["ra", "ca", "qea", "basis", "simple", "lemma2", "hyperbasis", "square"])
    c.add_argument("--target", required=True, help="kind:graph[:n], e.g. matn:c5:3")
    c.add_argument("--trials", type=int, default=axioms.DEFAULT_TRIALS)
    c.add_argument("--seed", type=lambda v: int(v, 0), default=axioms.DEFAULT_SEED)
    c.add_argument("--jobs", type=int, default=1)
    c.add_argument("--budget", type=int, default=200_000)
    c.add_argument("--cap", type=int, default=24, help="component cap for square models")
    c.add_argument("--out", default=None)
    c.set_defaults(fn=cmd_check)

    g = sub.add_parser("game", help="solve or certify a game")
    g.add_argument("--target", default="matn:c5:3")
    g.add_argument("--preset", default="smooth:3")
    g.add_argument("--script", default=None, choices=[None, "pigeonhole", "descent"])
    g.add_argument("--kind", default="Gk", choices=["Gk", "Fm"])
    g.add_argument("--rounds", type=int, default=2)
    g.add_argument("--budget", type=int, default=5, help="node budget")
    g.add_argument("--play", action="store_true", help="single transcript instead of solving")
    g.add_argument("--out", default=None)
    g.set_defaults(fn=cmd_game)

    s = sub.add_parser("search", help="search a hyperbasis")
    s.add_argument("--target", default="matn:c5:3")
    s.add_argument("--lambda-bound", type=int, default=1, dest="lambda_bound")
    s.add_argument("--size-bound", type=int, default=None, dest="size_bound")
    s.add_argument("--budget", type=int, default=64)
    s.add_argument("--full", action="store_true", help="list members in the certificate")
    s.add_argument("--out", default=None)
    s.set_defaults(fn=cmd_search)

    sg = sub.add_parser("sample-graph", help="rejection-sample a high-girth high-chi graph")
    sg.add_argument("--girth-min", type=int, required=True)
    sg.add_argument("--chi-min", type=int, required=True)
    sg.add_argument("--budget", type=int, default=10_000)
    sg.add_argument("--seed", type=lambda v: int(v, 0), default=0)
    sg.add_argument("--out", default=None, help="DIMACS output path")
    sg.add_argument("--dot", action="store_true")
    sg.set_defaults(fn=cmd_sample_graph)

    r = sub.add_parser("report", help="render a saved JSON report as text")
    r.add_argument("path")
    r.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        if "bound" in str(e) or "budget" in str(e):
            print(f"budget: {e}", file=sys.stderr)
            return 3
        print(f"error: {e}", file=sys.stderr)
        return 2
    except RuntimeError as e:
        print(f"budget: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
