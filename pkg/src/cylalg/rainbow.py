"""Finite rainbow palettes and coloured-graph machinery: the configurable
triangle-consistency table, atom enumeration over quotient labellings, the
colour-completion strategy, and the two scripted attacks (cone pigeonhole and
red descent).

Colour encoding (edge labels are oriented; storage is on sorted node pairs
with flip applied when read backwards):
    ("gi", i)        plain green, 1 <= i <= n-2
    ("g0", t)        tinted green, t a tint token
    ("w", i)         white, 0 <= i <= n-2
    ("r", t, k, l)   red copy t with ordered carrier pair (k, l), k != l
    ("rho",)         the extra shade; allowed only on model boards
Yellows label (n-1)-subsets whose internal edges are green-free.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from . import _kernels as K
from .bao import CaAtomStructure, Relation
from .graphs import Graph


@dataclass(frozen=True)
class Palette:
    n: int
    green_tints: tuple
    red_carrier: tuple
    t_count: int = 1
    ordered: bool = False
    yellow_universe: tuple = None
    yellow_max_size: int = None

    def __post_init__(self):
        if self.yellow_universe is None:
            object.__setattr__(self, "yellow_universe", tuple(self.green_tints))

    @property
    def g_count(self):
        return len(self.green_tints)

    @property
    def r_count(self):
        return len(self.red_carrier)

    def edge_colours(self, with_rho=False):
        # the plain greens g_1..g_{n-2} only exist alongside tinted cones
        out = [("gi", i) for i in range(1, self.n - 1)] if self.green_tints else []
        out += [("g0", t) for t in self.green_tints]
        out += [("w", i) for i in range(self.n - 1)]
        out += [
            ("r", t, k, l)
            for t in range(self.t_count)
            for k in self.red_carrier
            for l in self.red_carrier
            if k != l
        ]
        if with_rho:
            out.append(("rho",))
        return out

    def yellow_sets(self):
        """All admissible yellow value sets S, as frozensets."""
        uni = self.yellow_universe
        mx = self.yellow_max_size if self.yellow_max_size is not None else len(uni)
        out = []
        for r in range(mx + 1):
            out.extend(frozenset(c) for c in itertools.combinations(uni, r))
        return out


def smooth_preset(n: int) -> Palette:
    """n+2 green tints against n+1 red carrier points, unordered."""
    return Palette(n, tuple(range(n + 2)), tuple(range(n + 1)))


def descent_preset(q: int, n: int = 3) -> Palette:
    """Descending green tints 0, -1, ... against an ordered q-point carrier."""
    return Palette(n, tuple(-k for k in range(q + 3)), tuple(range(q)), ordered=True)


def weak_preset(n: int, g_count: int, r_count: int, yellow_max_size: int = None) -> Palette:
    return Palette(
        n, tuple(range(g_count)), tuple(range(r_count)), yellow_max_size=yellow_max_size
    )


def is_green(c):
    return c[0] in ("gi", "g0")


def flip(c):
    if c[0] == "r":
        return ("r", c[1], c[3], c[2])
    return c


@dataclass(frozen=True)
class ConsistencyTable:
    """Forbidden-triangle predicate plus the cone/yellow rule.

    The default rules: no green triangles; two distinctly tinted greens never
    close with w_0; two copies of g_i never close with w_i; red triangles must
    carry one copy index and compose along an assignment of carrier points to
    the corners; under `ordered`, a red edge between apexes of distinctly
    tinted cones must order its carrier pair like the tints.  Everything else
    is consistent; rho is unconstrained (and never usable in cones).
    """

    palette: Palette
    name: str = "default"

    def triangle_ok(self, exy, eyz, exz) -> bool:
        labs = (exy, eyz, exz)
        if any(l[0] == "rho" for l in labs):
            return True
        greens = [l for l in labs if is_green(l)]
        if len(greens) == 3:
            return False
        g0s = [l for l in labs if l[0] == "g0"]
        if ("w", 0) in labs and len(g0s) == 2 and g0s[0][1] != g0s[1][1]:
            return False
        for i in range(1, self.palette.n - 1):
            if ("w", i) in labs and sum(1 for l in labs if l == ("gi", i)) == 2:
                return False
        reds = [l for l in labs if l[0] == "r"]
        if len(reds) == 3:
            # corner assignment: f(x), f(y), f(z) read off the oriented labels
            (_, t1, fx1, fy1), (_, t2, fy2, fz2), (_, t3, fx3, fz3) = exy, eyz, exz
            if not (t1 == t2 == t3):
                return False
            if fy1 != fy2 or fx1 != fx3 or fz2 != fz3:
                return False
        if self.palette.ordered and len(reds) == 1 and len(g0s) == 2:
            # the red edge joins two cone apexes; s and t are the tints at its
            # first and second endpoint (in the red's orientation), and the
            # carrier pair must be ordered the same way
            if is_green(exy) and is_green(eyz):      # apexes x, z; red x -> z
                s, t, red = exy[1], eyz[1], exz
            elif is_green(exy) and is_green(exz):    # apexes y, z; red y -> z
                s, t, red = exy[1], exz[1], eyz
            else:                                    # apexes x, y; red x -> y
                s, t, red = exz[1], eyz[1], exy
            _, _, k, l = red
            if (s < t) != (k < l) or (s > t) != (k > l):
                return False
        return True

    def cone_tint_ok(self, tint, yellow_set) -> bool:
        return tint in yellow_set


def default_table(palette: Palette) -> ConsistencyTable:
    return ConsistencyTable(palette)


# ---------------------------------------------------------------------------
# Coloured-graph boards.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColouredGraph:
    """Complete edge-labelled graph on node ids, with yellow hyperlabels on
    green-free (n-1)-subsets.  Edges are stored on sorted pairs, oriented from
    the smaller node."""

    n: int
    nodes: tuple
    edges: dict
    yellows: dict = field(default_factory=dict)

    def label(self, u, v):
        if u == v:
            raise ValueError("no labels on loops")
        if u < v:
            return self.edges.get((u, v))
        lab = self.edges.get((v, u))
        return None if lab is None else flip(lab)

    def with_edge(self, u, v, lab):
        if u > v:
            u, v, lab = v, u, flip(lab)
        edges = dict(self.edges)
        edges[(u, v)] = lab
        return replace(self, edges=edges)

    def with_node(self, node):
        return replace(self, nodes=tuple(list(self.nodes) + [node]))

    def without_node(self, node):
        nodes = tuple(x for x in self.nodes if x != node)
        edges = {k: v for k, v in self.edges.items() if node not in k}
        yellows = {b: s for b, s in self.yellows.items() if node not in b}
        return replace(self, nodes=nodes, edges=edges, yellows=yellows)

    def with_yellow(self, subset, tints):
        yellows = dict(self.yellows)
        yellows[frozenset(subset)] = frozenset(tints)
        return replace(self, yellows=yellows)

    def complete(self) -> bool:
        return all(
            self.label(u, v) is not None for u, v in itertools.combinations(self.nodes, 2)
        )


def empty_graph(n: int) -> ColouredGraph:
    return ColouredGraph(n, (), {})


def check_consistency(cg: ColouredGraph, table: ConsistencyTable):
    """Complete labelling assumed (error otherwise); returns
    (ok, violating-triangle-or-None)."""
    if not cg.complete():
        raise ValueError("incomplete labelling")
    for x, y, z in itertools.combinations(sorted(cg.nodes), 3):
        if not table.triangle_ok(cg.label(x, y), cg.label(y, z), cg.label(x, z)):
            return False, (x, y, z)
    n = cg.n
    for base, tints in cg.yellows.items():
        if any(is_green(cg.label(u, v)) for u, v in itertools.combinations(sorted(base), 2)):
            return False, tuple(sorted(base))
        for apex, tint in cones_over(cg, base):
            if not table.cone_tint_ok(tint, tints):
                return False, (apex,) + tuple(sorted(base))
    return True, None


def cones_over(cg: ColouredGraph, base):
    """(apex, tint) pairs: some base node is joined g0^t, the remaining base
    nodes are joined by the plain greens g_1..g_{n-2} in some arrangement."""
    base = sorted(base)
    need = sorted(range(1, cg.n - 1))
    out = []
    for apex in cg.nodes:
        if apex in base:
            continue
        labs = [cg.label(apex, b) for b in base]
        if any(l is None for l in labs):
            continue
        tinted = [l for l in labs if l[0] == "g0"]
        plain = sorted(l[1] for l in labs if l[0] == "gi")
        if len(tinted) == 1 and plain == need:
            out.append((apex, tinted[0][1]))
    return out


# ---------------------------------------------------------------------------
# Atom enumeration (quotient view) and the induced PEA structure.
# ---------------------------------------------------------------------------


def _rgs_partitions(n):
    out = []

    def rec(prefix, mx):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for v in range(mx + 2):
            rec(prefix + [v], max(mx, v))

    rec([0], 0)
    return out


def _canon_rgs(raw):
    seen = {}
    return tuple(seen.setdefault(v, len(seen)) for v in raw)


def _quotient_graph(n, part, edge_lab, yellows):
    classes = sorted(set(part))
    cg = ColouredGraph(n, tuple(classes), dict(edge_lab), dict(yellows))
    return cg


def enumerate_atoms(palette: Palette, table: ConsistencyTable, atom_bound: int = 200_000):
    """Atoms are surjections of the n slots onto consistent coloured graphs,
    i.e. quotient labellings: slot partition + oriented edge labels on class
    pairs + yellow labels on green-free (n-1)-subsets of classes."""
    n = palette.n
    colours = palette.edge_colours()
    ysets = palette.yellow_sets()
    atoms = []
    for part in _rgs_partitions(n):
        classes = sorted(set(part))
        pairs = list(itertools.combinations(classes, 2))
        for labelling in itertools.product(colours, repeat=len(pairs)):
            edge_lab = dict(zip(pairs, labelling))
            cg = _quotient_graph(n, part, edge_lab, {})
            ok = True
            for x, y, z in itertools.combinations(classes, 3):
                if not table.triangle_ok(cg.label(x, y), cg.label(y, z), cg.label(x, z)):
                    ok = False
                    break
            if not ok:
                continue
            # yellow slots: green-free (n-1)-subsets of classes
            bases = [
                b
                for b in itertools.combinations(classes, n - 1)
                if len(classes) >= n - 1
                and not any(is_green(cg.label(u, v)) for u, v in itertools.combinations(b, 2))
            ]
            for ys in itertools.product(ysets, repeat=len(bases)):
                yellows = dict(zip((frozenset(b) for b in bases), ys))
                full = _quotient_graph(n, part, edge_lab, yellows)
                cone_ok = all(
                    table.cone_tint_ok(t, s)
                    for b, s in yellows.items()
                    for _, t in cones_over(full, b)
                )
                if cone_ok:
                    atoms.append(
                        (part, tuple(sorted(edge_lab.items())), tuple(sorted(yellows.items())))
                    )
                if len(atoms) > atom_bound:
                    raise ValueError(f"atom bound {atom_bound} exceeded")
    atoms.sort()
    return atoms


def atoms_to_ca(palette: Palette, atoms) -> CaAtomStructure:
    n = palette.n
    count = len(atoms)
    if count == 0:
        raise ValueError("no atoms under this palette/table")
    index = {a: k for k, a in enumerate(atoms)}

    def restrict_key(atom, i):
        part, edges, yellows = atom
        keep = [k for k in range(n) if k != i]
        seen = {}
        sub = tuple(seen.setdefault(part[k], len(seen)) for k in keep)
        sub_edges = []
        for (p, q), lab in edges:
            if p in seen and q in seen:
                a, b = seen[p], seen[q]
                sub_edges.append(((a, b), lab) if a < b else ((b, a), flip(lab)))
        sub_yellows = []
        for b, s in yellows:
            if all(c in seen for c in b):
                sub_yellows.append((frozenset(seen[c] for c in b), s))
        return (sub, tuple(sorted(sub_edges)), tuple(sorted(sub_yellows, key=lambda t: sorted(t[0]))))

    ci = [Relation.from_equiv_keys(count, [restrict_key(a, i) for a in atoms]) for i in range(n)]
    dij = {
        (i, j): K.pack_indices([k for k, a in enumerate(atoms) if a[0][i] == a[0][j]], count)
        for i in range(n)
        for j in range(n)
    }
    s_transp = {}
    for i in range(n):
        for j in range(i + 1, n):
            perm = [index[_swap_atom(a, i, j, n)] for a in atoms]
            s_transp[(i, j)] = Relation.from_perm(count, perm)
    return CaAtomStructure(
        n=n,
        kind="PEA",
        atom_count=count,
        ci=ci,
        dij=dij,
        s_repl={},
        s_transp=s_transp,
        labels=list(atoms),
        payload={"palette": palette},
    )


def _swap_atom(atom, i, j, n):
    part, edges, yellows = atom
    tau = list(range(n))
    tau[i], tau[j] = j, i
    raw = tuple(part[tau[k]] for k in range(n))
    new_part = _canon_rgs(raw)
    old_to_new = {}
    for k in range(n):
        old_to_new[part[tau[k]]] = new_part[k]
    new_edges = []
    for (p, q), lab in edges:
        a, b = old_to_new[p], old_to_new[q]
        new_edges.append(((a, b), lab) if a < b else ((b, a), flip(lab)))
    new_yellows = []
    for b, s in yellows:
        new_yellows.append((frozenset(old_to_new[c] for c in b), s))
    return (new_part, tuple(sorted(new_edges)), tuple(sorted(new_yellows, key=lambda t: sorted(t[0]))))


# ---------------------------------------------------------------------------
# The colour-completion strategy.
# ---------------------------------------------------------------------------


def complete_colouring(cg: ColouredGraph, new_node, face, table: ConsistencyTable, variant="rainbow"):
    """Complete the labelling after `new_node` arrived with edges to `face`
    already labelled: first white w_0 when no tinted-green co-cone forces a
    choice, else the least available white, else the extra shade; new
    green-free (n-1)-subsets receive the yellow of their realized cone tints.
    """
    if variant not in ("rainbow", "monk"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "monk":
        raise ValueError("the monk variant lives on model boards; see monk_complete")
    n = cg.n
    out = cg
    face = list(face)
    rest = [b for b in cg.nodes if b != new_node and b not in face]
    for beta in rest:
        lab = _strategy_colour(out, new_node, beta, face, table)
        out = out.with_edge(beta, new_node, lab)
    # yellows for new green-free (n-1)-subsets involving the new node
    for subset in itertools.combinations(sorted(out.nodes), n - 1):
        if new_node not in subset or frozenset(subset) in out.yellows:
            continue
        if any(is_green(out.label(u, v)) for u, v in itertools.combinations(subset, 2)):
            continue
        tints = frozenset(t for _, t in cones_over(out, subset))
        out = out.with_yellow(subset, tints if tints else frozenset(table.palette.yellow_universe))
    return out


def _strategy_colour(cg, delta, beta, face, table):
    n = cg.n
    joint_tinted = any(
        cg.label(beta, f) is not None
        and cg.label(delta, f) is not None
        and cg.label(beta, f)[0] == "g0"
        and cg.label(delta, f)[0] == "g0"
        for f in face
    )
    if not joint_tinted:
        return ("w", 0)
    for i in range(1, n - 1):
        if not any(
            cg.label(beta, f) == ("gi", i) and cg.label(delta, f) == ("gi", i) for f in face
        ):
            return ("w", i)
    return ("rho",)


# ---------------------------------------------------------------------------
# Monk-style model boards: labels (node, colour) over a seed graph plus the
# extra shades (rho, colour).
# ---------------------------------------------------------------------------


def monk_triangle_ok(g: Graph, a, b, c) -> bool:
    """Labels are ("node", u, i) or ("rho", i)."""
    cols = [lab[-1] for lab in (a, b, c)]
    if len(set(cols)) > 1:
        return True
    shades = [lab for lab in (a, b, c) if lab[0] == "rho"]
    if len(shades) >= 2:
        return True
    if len(shades) == 1:
        others = [lab[1] for lab in (a, b, c) if lab[0] == "node"]
        return g.has_edge(others[0], others[1]) if others[0] != others[1] else False
    return g.spans_edge([lab[1] for lab in (a, b, c)])


def monk_complete(cg: ColouredGraph, new_node, face, g: Graph):
    """The seed-graph completion move: pick a colour index absent from the
    face labels and join the new node to every non-face node by the shade in
    that colour."""
    n = cg.n
    used = {cg.label(new_node, f)[-1] for f in face if cg.label(new_node, f) is not None}
    free = [i for i in range(n) if i not in used]
    if not free:
        raise ValueError("no colour left for the shade")
    i = free[0]
    out = cg
    for beta in cg.nodes:
        if beta == new_node or beta in face:
            continue
        out = out.with_edge(beta, new_node, ("rho", i))
    return out


# ---------------------------------------------------------------------------
# The two scripted attacks.  Both produce cone demands for the game engine;
# the engine owns legality and exhaustion of the replies.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeDemand:
    base: tuple
    tint: object
    apex_hint: str = "fresh"  # "fresh" or a node id to recycle


class ConePigeonholeScript:
    """Same-base cones with pairwise distinct tints, cycling when the palette
    runs out; forces red edges between all live apexes."""

    def __init__(self, palette: Palette, cones: int = None):
        self.palette = palette
        self.cones = cones if cones is not None else palette.n + 3

    def initial(self):
        return "base-with-first-cone"

    def move(self, board, state, budget):
        k = state  # cones played so far
        if k >= self.cones:
            return None, state
        tint = self.palette.green_tints[k % len(self.palette.green_tints)]
        base = board.payload["base"]
        if len(board.graph.nodes) < budget:
            hint = "fresh"
        else:
            hint = board.payload["apexes"][0]  # recycle the oldest apex
        return ConeDemand(base=base, tint=tint, apex_hint=hint), k + 1


class RedDescentScript:
    """Cones with strictly descending tints; under the ordered table each new
    apex forces a strictly smaller carrier point."""

    def __init__(self, palette: Palette, rounds: int = None):
        if not palette.ordered:
            raise ValueError("red descent needs an ordered palette")
        self.palette = palette
        self.rounds = rounds if rounds is not None else len(palette.red_carrier) + 3

    def move(self, board, state, budget):
        k = state
        tints = sorted(self.palette.green_tints, reverse=True)  # 0, -1, -2, ...
        if k >= len(tints) or k >= self.rounds:
            return None, state
        base = board.payload["base"]
        if len(board.graph.nodes) < budget:
            hint = "fresh"
        else:
            hint = board.payload["apexes"][0]
        return ConeDemand(base=base, tint=tints[k], apex_hint=hint), k + 1
