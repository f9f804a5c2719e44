"""Relation-algebra atom structures seeded by a finite graph: the
identity-plus-coloured-nodes structure, its atom-level laws, n-dimensional
basic matrices, the direct labelled-tuple structure, and the monochromatic
composition obstruction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .bao import CaAtomStructure, Relation
from .bitset import AtomSet
from .graphs import Graph


@dataclass
class RaAtomStructure:
    """Atoms with identity set, converse map, and consistent-triple predicate.

    cons[a, b, c] holds iff atom a lies below the composition b;c.
    """

    atom_count: int
    identity: frozenset
    converse: np.ndarray
    cons: np.ndarray
    labels: list = None
    payload: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._comp_rows = None

    def comp_rows(self) -> np.ndarray:
        """Packed composition table: comp[b, c] = {a : a below b;c}."""
        if self._comp_rows is None:
            n = self.atom_count
            w = K.words_for(n)
            rows = np.zeros((n, n, w), dtype=np.uint64)
            for b in range(n):
                for c in range(n):
                    for a in np.nonzero(self.cons[:, b, c])[0]:
                        rows[b, c, a // 64] |= np.uint64(1 << (int(a) % 64))
            self._comp_rows = rows
        return self._comp_rows

    def compose(self, x: AtomSet, y: AtomSet) -> AtomSet:
        rows = self.comp_rows()
        out = K.empty_words(self.atom_count)
        for b in x.ids():
            for c in y.ids():
                out |= rows[b, c]
        return AtomSet(self.atom_count, out)

    def identity_set(self) -> AtomSet:
        return AtomSet.from_atoms(self.atom_count, sorted(self.identity))


def graph_ra(g: Graph, n: int) -> RaAtomStructure:
    """Atoms {identity} + nodes(g) x n colours; a triple is consistent iff it
    is an identity triple (e, x, x), has mixed colours, or is monochromatic
    with an edge of g among its nodes."""
    if n < 3:
        raise ValueError("need at least 3 colours")
    if g.node_count < 1:
        raise ValueError("graph must be nonempty")
    count = 1 + g.node_count * n
    labels = ["1'"] + [(u, i) for u in range(g.node_count) for i in range(n)]

    def node_of(a):
        return (a - 1) // n

    def colour_of(a):
        return (a - 1) % n

    cons = np.zeros((count, count, count), dtype=bool)
    for a in range(count):
        for b in range(count):
            for c in range(count):
                trip = (a, b, c)
                ids = [t == 0 for t in trip]
                if any(ids):
                    others = [t for t in trip if t != 0]
                    cons[a, b, c] = len(others) == 0 or (
                        len(others) == 2 and others[0] == others[1]
                    )
                    continue
                cols = {colour_of(t) for t in trip}
                if len(cols) > 1:
                    cons[a, b, c] = True
                else:
                    cons[a, b, c] = g.spans_edge([node_of(t) for t in trip])
    return RaAtomStructure(
        atom_count=count,
        identity=frozenset([0]),
        converse=np.arange(count, dtype=np.int64),
        cons=cons,
        labels=labels,
        payload={"graph": g, "n_colours": n},
    )


@dataclass
class RaCheckReport:
    identity_ok: bool
    identity_witness: tuple = None
    converse_ok: bool = True
    converse_witness: int = None
    peircean_ok: bool = True
    peircean_witness: tuple = None
    assoc_ok: bool = True
    assoc_witness: tuple = None

    @property
    def ok(self):
        return self.identity_ok and self.converse_ok and self.peircean_ok and self.assoc_ok

    def to_json(self):
        return {
            "ok": self.ok,
            "identity": {"ok": self.identity_ok, "witness": self.identity_witness},
            "converse": {"ok": self.converse_ok, "witness": self.converse_witness},
            "peircean": {"ok": self.peircean_ok, "witness": self.peircean_witness},
            "associativity": {"ok": self.assoc_ok, "witness": self.assoc_witness},
        }


def check_ra(ras: RaAtomStructure) -> RaCheckReport:
    """Identity law, converse involution, Peircean triangle closure, and
    complex-algebra associativity, all exhaustive over atoms."""
    n = ras.atom_count
    conv = ras.converse
    rep = RaCheckReport(identity_ok=True)

    for e in ras.identity:
        if int(conv[e]) not in ras.identity:
            rep.converse_ok = False
            rep.converse_witness = e
    for a in range(n):
        if int(conv[int(conv[a])]) != a:
            rep.converse_ok = False
            rep.converse_witness = a
            break

    for a in range(n):
        for c in range(n):
            left = any(ras.cons[a, e, c] for e in ras.identity)
            if left != (a == c):
                rep.identity_ok = False
                rep.identity_witness = (a, c, "e;x")
                break
            right = any(ras.cons[a, c, e] for e in ras.identity)
            if right != (a == c):
                rep.identity_ok = False
                rep.identity_witness = (a, c, "x;e")
                break
        if not rep.identity_ok:
            break

    for a in range(n):
        for b in range(n):
            for c in range(n):
                v = ras.cons[a, b, c]
                variants = (
                    ras.cons[conv[a], conv[c], conv[b]],
                    ras.cons[b, a, conv[c]],
                    ras.cons[conv[b], c, conv[a]],
                    ras.cons[c, conv[b], a],
                    ras.cons[conv[c], conv[a], b],
                )
                if any(x != v for x in variants):
                    rep.peircean_ok = False
                    rep.peircean_witness = (a, b, c)
                    break
            if not rep.peircean_ok:
                break
        if not rep.peircean_ok:
            break

    trip = K.assoc_scan(ras.comp_rows())
    if trip != (-1, -1, -1):
        rep.assoc_ok = False
        rep.assoc_witness = tuple(int(t) for t in trip)
    return rep


# ---------------------------------------------------------------------------
# Basic matrices.
# ---------------------------------------------------------------------------


def _entry_index(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def basic_matrices(ras: RaAtomStructure, n: int) -> CaAtomStructure:
    """All coherent n x n atom matrices as a polyadic-equality atom structure.

    Requires the RA laws to hold, a unique identity atom, and self-converse
    atoms (the enumeration fills the lower triangle by converse symmetry).
    """
    if n not in (3, 4):
        raise ValueError("basic matrices are supported for n in {3, 4}")
    report = check_ra(ras)
    if not report.ok:
        raise ValueError(f"relation-algebra laws fail: {report.to_json()}")
    if len(ras.identity) != 1:
        raise ValueError("basic matrices need a unique identity atom")
    if any(int(ras.converse[a]) != a for a in range(ras.atom_count)):
        raise ValueError("basic matrices are implemented for self-converse atoms")
    diag = next(iter(ras.identity))
    enum = K.enum_matrices3 if n == 3 else K.enum_matrices4
    rows = np.asarray(enum(ras.cons, diag), dtype=np.int64)
    rows = rows[np.lexsort(rows.T[::-1])] if len(rows) else rows
    count = len(rows)
    if count == 0:
        raise ValueError("no coherent matrices exist")
    entries = _entry_index(n)
    index = {tuple(int(v) for v in row): m for m, row in enumerate(rows)}

    def entry(m, i, j):
        if i == j:
            return diag
        key = (min(i, j), max(i, j))
        return int(rows[m, entries.index(key)])

    ci = []
    for i in range(n):
        keep = [e for e, (a, b) in enumerate(entries) if i not in (a, b)]
        ci.append(Relation.from_equiv_keys(count, [tuple(int(v) for v in rows[m, keep]) for m in range(count)]))
    dij = {}
    full = K.full_words(count)
    for i in range(n):
        for j in range(n):
            if i == j:
                dij[(i, j)] = full.copy()
            else:
                e = entries.index((min(i, j), max(i, j)))
                dij[(i, j)] = K.pack_indices(
                    [m for m in range(count) if int(rows[m, e]) == diag], count
                )
    s_transp = {}
    for i in range(n):
        for j in range(i + 1, n):
            tau = list(range(n))
            tau[i], tau[j] = j, i
            perm = np.empty(count, dtype=np.int64)
            for m in range(count):
                img = tuple(entry(m, tau[a], tau[b]) for a, b in entries)
                perm[m] = index[img]
            s_transp[(i, j)] = Relation.from_perm(count, perm)
    labels = [tuple(int(v) for v in row) for row in rows]
    return CaAtomStructure(
        n=n,
        kind="PEA",
        atom_count=count,
        ci=ci,
        dij=dij,
        s_repl={},
        s_transp=s_transp,
        labels=labels,
        payload={"ra": ras, "matrices": rows, "matrix_index": index, "diag_atom": diag},
    )


@dataclass
class BasisReport:
    coverage_ok: bool
    coverage_witness: int = None
    witness_ok: bool = True
    witness_witness: tuple = None
    substitution_ok: bool = True
    substitution_witness: tuple = None

    @property
    def ok(self):
        return self.coverage_ok and self.witness_ok and self.substitution_ok

    def to_json(self):
        return {
            "ok": self.ok,
            "coverage": {"ok": self.coverage_ok, "witness": self.coverage_witness},
            "witness": {"ok": self.witness_ok, "witness": self.witness_witness},
            "substitution": {"ok": self.substitution_ok, "witness": self.substitution_witness},
        }


def check_cylindric_basis(mats: CaAtomStructure, ras: RaAtomStructure, n: int, members=None) -> BasisReport:
    """Check the basis properties of a set of basic matrices: every RA atom
    appears as m_01, triangle splits have witnesses that agree off one index,
    and the set is closed under index transpositions."""
    rows = mats.payload["matrices"]
    diag = mats.payload["diag_atom"]
    entries = _entry_index(n)
    if members is None:
        members = range(len(rows))
    members = sorted(members)
    member_set = set(members)

    def entry(m, i, j):
        if i == j:
            return diag
        return int(rows[m, entries.index((min(i, j), max(i, j)))])

    rep = BasisReport(coverage_ok=True)

    seen = {entry(m, 0, 1) for m in members}
    for a in range(ras.atom_count):
        if a not in seen:
            rep.coverage_ok = False
            rep.coverage_witness = a
            break

    # splits[x] = the (a, c) pairs with x below a;c
    splits = [np.argwhere(ras.cons[x]) for x in range(ras.atom_count)]

    # presence set: (z, x, y, off-z entries, member(x,z), member(z,y)) over the
    # member set; the witness bullet reduces to membership queries
    offz_keys = {
        (m, z): tuple(entry(m, i, j) for i, j in entries if z not in (i, j))
        for m in members
        for z in range(n)
    }
    present = set()
    for m in members:
        for z in range(n):
            keep = offz_keys[(m, z)]
            for x in range(n):
                if x == z:
                    continue
                for y in range(n):
                    if y in (x, z):
                        continue
                    present.add((z, x, y, keep, entry(m, x, z), entry(m, z, y)))

    done = False
    for m in members:
        if done:
            break
        for x in range(n):
            if done:
                break
            for y in range(n):
                if y == x or done:
                    continue
                mxy = entry(m, x, y)
                for z in range(n):
                    if z in (x, y):
                        continue
                    keep = offz_keys[(m, z)]
                    for a, c in splits[mxy]:
                        if (z, x, y, keep, int(a), int(c)) not in present:
                            rep.witness_ok = False
                            rep.witness_witness = (m, x, y, z, int(a), int(c))
                            done = True
                            break
                    if done:
                        break
    index = mats.payload["matrix_index"]
    for m in members:
        for i in range(n):
            for j in range(i + 1, n):
                tau = list(range(n))
                tau[i], tau[j] = j, i
                img = tuple(entry(m, tau[a], tau[b]) for a, b in entries)
                if index.get(img) not in member_set:
                    rep.substitution_ok = False
                    rep.substitution_witness = (m, i, j)
                    return rep
    return rep


def automorphisms(ras: RaAtomStructure, limit: int = 100_000):
    """All atom permutations preserving identity, converse, and the
    consistent-triple predicate (backtracking with incremental checks)."""
    n = ras.atom_count
    ident = ras.identity
    conv = [int(c) for c in ras.converse]
    cons = ras.cons.tolist()
    out = []
    mapping = [-1] * n
    used = [False] * n

    def ok(a, b, assigned):
        if (a in ident) != (b in ident):
            return False
        ca, cb = conv[a], conv[b]
        if mapping[ca] >= 0 and mapping[ca] != cb:
            return False
        ca_, cb_ = cons[a], cons[b]
        for x in assigned:
            mx = mapping[x]
            ax, bx = ca_[x], cb_[mx]
            xa, xb = cons[x][a], cons[mx][b]
            for y in assigned:
                my = mapping[y]
                if ax[y] != bx[my] or xa[y] != xb[my] or cons[x][y][a] != cons[mx][my][b]:
                    return False
            if ca_[a][x] != cb_[b][mx] or ax[a] != bx[b] or xa[a] != xb[b]:
                return False
        if ca_[a][a] != cb_[b][b]:
            return False
        return True

    def rec(pos, assigned):
        if len(out) >= limit:
            return
        if pos == n:
            out.append(tuple(mapping))
            return
        if mapping[pos] >= 0:
            rec(pos + 1, assigned)
            return
        for b in range(n):
            if used[b] or not ok(pos, b, assigned):
                continue
            mapping[pos] = b
            used[b] = True
            rec(pos + 1, assigned + [pos])
            mapping[pos] = -1
            used[b] = False

    rec(0, [])
    return out


# ---------------------------------------------------------------------------
# Monochromatic obstruction: for P = {(l, s) : l in Y}, (P;P).P must vanish
# exactly when Y is independent.
# ---------------------------------------------------------------------------


@dataclass
class ObstructionCase:
    nodes: tuple
    colour: int
    product_size: int
    independent: bool
    edge_witnesses: tuple

    @property
    def ok(self):
        return (self.product_size == 0) == self.independent


def monochromatic_obstruction(ras: RaAtomStructure):
    """Exhaustive scan over all node subsets and colours; also covers the
    identity element, whose self-composition stays the identity.

    Returns (ok, cases, identity_case).
    """
    g: Graph = ras.payload["graph"]
    n = ras.payload["n_colours"]
    if g.node_count > 12:
        raise ValueError("subset scan is limited to 12 nodes")
    cases = []
    for bits in range(1, 1 << g.node_count):
        nodes = tuple(u for u in range(g.node_count) if bits >> u & 1)
        witnesses = tuple(
            (u, v) for u, v in sorted(g.edges) if u in nodes and v in nodes
        )
        for s in range(n):
            p = AtomSet.from_atoms(ras.atom_count, [1 + u * n + s for u in nodes])
            prod = ras.compose(p, p) & p
            cases.append(
                ObstructionCase(nodes, s, len(prod), not witnesses, witnesses)
            )
    ident = ras.identity_set()
    ident_prod = ras.compose(ident, ident) & ident
    identity_ok = ident_prod == ident and len(ident_prod) > 0
    ok = identity_ok and all(c.ok for c in cases)
    return ok, cases, identity_ok


# ---------------------------------------------------------------------------
# The labelled-tuple structure built directly from the graph, and the
# isomorphism check against the basic-matrix structure.
# ---------------------------------------------------------------------------


def _partitions(n):
    """All partitions of 0..n-1 as restricted-growth strings."""
    out = []

    def rec(prefix, mx):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for v in range(mx + 2):
            rec(prefix + [v], max(mx, v))

    rec([0], 0)
    return out


def tuple_structure(g: Graph, n: int, atom_bound: int = 200_000) -> CaAtomStructure:
    """Atoms are quotient labellings of n slots: a partition of the slots plus
    a (node, colour) label on every pair of distinct classes, subject to the
    mixed-colour-or-edge triangle rule.  This is the structure the basic
    matrices are expected to match up to isomorphism."""
    sig = [(u, i) for u in range(g.node_count) for i in range(n)]
    atoms = []
    for rgs in _partitions(n):
        classes = sorted(set(rgs))
        pairs = [(p, q) for p in classes for q in classes if p < q]
        for labelling in itertools.product(sig, repeat=len(pairs)):
            lab = dict(zip(pairs, labelling))
            ok = True
            for p, q, r in itertools.combinations(classes, 3):
                (a, i), (b, j), (c, l) = lab[(p, q)], lab[(q, r)], lab[(p, r)]
                if len({i, j, l}) > 1:
                    continue
                if not g.spans_edge([a, b, c]):
                    ok = False
                    break
            if ok:
                atoms.append((rgs, tuple(sorted(lab.items()))))
            if len(atoms) > atom_bound:
                raise ValueError(f"atom bound {atom_bound} exceeded")
    atoms.sort()
    index = {a: k for k, a in enumerate(atoms)}
    count = len(atoms)

    def restrict_key(atom, i):
        rgs, lab = atom
        keep = [k for k in range(n) if k != i]
        # partition restricted to the kept slots, classes renumbered in slot order
        seen = {}
        sub = tuple(seen.setdefault(rgs[k], len(seen)) for k in keep)
        sublab = []
        for (p, q), v in lab:
            if p in seen and q in seen:
                a, b = seen[p], seen[q]
                sublab.append(((min(a, b), max(a, b)), v))
        return (sub, tuple(sorted(sublab)))

    ci = [
        Relation.from_equiv_keys(count, [restrict_key(a, i) for a in atoms])
        for i in range(n)
    ]
    dij = {}
    for i in range(n):
        for j in range(n):
            dij[(i, j)] = K.pack_indices(
                [k for k, (rgs, _) in enumerate(atoms) if rgs[i] == rgs[j]], count
            )
    s_transp = {}
    for i in range(n):
        for j in range(i + 1, n):
            perm = np.empty(count, dtype=np.int64)
            for k, atom in enumerate(atoms):
                perm[k] = index[_apply_transposition(atom, i, j, n)]
            s_transp[(i, j)] = Relation.from_perm(count, perm)
    return CaAtomStructure(
        n=n,
        kind="PEA",
        atom_count=count,
        ci=ci,
        dij=dij,
        s_repl={},
        s_transp=s_transp,
        labels=atoms,
        payload={"graph": g},
    )


def _apply_transposition(atom, i, j, n):
    rgs, lab = atom
    tau = list(range(n))
    tau[i], tau[j] = j, i
    new_rgs_raw = tuple(rgs[tau[k]] for k in range(n))
    seen = {}
    new_rgs = tuple(seen.setdefault(v, len(seen)) for v in new_rgs_raw)
    # map old class ids to new ones through the slot permutation
    old_to_new = {}
    for k in range(n):
        old_to_new[rgs[tau[k]]] = new_rgs[k]
    new_lab = {}
    for (p, q), v in lab:
        np_, nq = old_to_new[p], old_to_new[q]
        new_lab[(min(np_, nq), max(np_, nq))] = v
    return (new_rgs, tuple(sorted(new_lab.items())))


def _base_colours(s: CaAtomStructure):
    count = s.atom_count
    return [
        tuple(K.testbit(s.dij[(i, j)], a) for i in range(s.n) for j in range(s.n))
        for a in range(count)
    ]


def _rank(values):
    """Canonical integer ids: identical value sets rank identically across
    isomorphic structures (unlike first-seen order)."""
    order = {v: r for r, v in enumerate(sorted(set(values)))}
    return [order[v] for v in values], len(order)


def _refine(s: CaAtomStructure, colours, max_rounds: int = 32):
    """Iterate colour refinement to stability: an atom's new colour combines
    its own colour, per-cylindrifier class colour profiles, and the colours of
    its transposition partners.  Colour ids are sorted-signature ranks, so two
    isomorphic structures refine to comparable ids."""
    count = s.atom_count
    for rel in s.ci:
        if rel.tag != "equiv":
            raise ValueError("isomorphism search expects equivalence-tagged cylindrifiers")
    perm_keys = sorted(s.s_transp)
    ids, n_colours = _rank(colours)
    for _ in range(max_rounds):
        class_profiles = []
        for i in range(s.n):
            rel = s.ci[i]
            prof = []
            for cid in range(len(rel.class_masks)):
                members = K.unpack_indices(rel.class_masks[cid])
                cnt = {}
                for b in members:
                    cnt[ids[b]] = cnt.get(ids[b], 0) + 1
                prof.append(tuple(sorted(cnt.items())))
            class_profiles.append(prof)
        new = []
        for a in range(count):
            sig = [ids[a]]
            for i in range(s.n):
                sig.append(class_profiles[i][int(s.ci[i].class_id[a])])
            for key in perm_keys:
                sig.append(ids[int(s.s_transp[key].perm[a])])
            new.append(tuple(sig))
        ids, n_now = _rank(new)
        if n_now == n_colours:
            break
        n_colours = n_now
    return ids


def _verify_mapping(s1, s2, mapping):
    count = s1.atom_count
    for (i, j), mask in s1.dij.items():
        img = K.pack_indices(sorted(mapping[a] for a in K.unpack_indices(mask)), count)
        if not np.array_equal(img, s2.dij[(i, j)]):
            return False
    for key, rel in s1.s_transp.items():
        p1, p2 = rel.perm, s2.s_transp[key].perm
        for a in range(count):
            if mapping[int(p1[a])] != int(p2[mapping[a]]):
                return False
    for i in range(s1.n):
        cls1, cls2 = s1.ci[i].class_id, s2.ci[i].class_id
        seenmap = {}
        for a in range(count):
            ca, cb = int(cls1[a]), int(cls2[mapping[a]])
            if seenmap.setdefault(ca, cb) != cb:
                return False
        if len(set(seenmap.values())) != len(seenmap):
            return False
    return True


def find_isomorphism(s1: CaAtomStructure, s2: CaAtomStructure, budget: int = 10_000_000):
    """Atom-structure isomorphism by individualization-refinement: refine
    colour partitions to stability, then split the smallest non-singleton
    class and recurse.  Returns a mapping list or None; raises on budget
    exhaustion.  The budget counts refinement passes."""
    from collections import Counter

    if (s1.n, s1.kind, s1.atom_count) != (s2.n, s2.kind, s2.atom_count):
        return None
    count = s1.atom_count
    raw1, raw2 = _base_colours(s1), _base_colours(s2)
    if sorted(set(raw1)) != sorted(set(raw2)):
        return None
    base1, _ = _rank(raw1)
    base2, _ = _rank(raw2)
    nodes = 0

    def rec(marks1, marks2):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise RuntimeError("isomorphism search budget exceeded")
        cols1 = list(base1)
        cols2 = list(base2)
        for k, a in enumerate(marks1):
            cols1[a] = -1 - k
        for k, b in enumerate(marks2):
            cols2[b] = -1 - k
        c1 = _refine(s1, cols1)
        c2 = _refine(s2, cols2)
        if Counter(c1) != Counter(c2):
            return None
        classes1 = {}
        classes2 = {}
        for a in range(count):
            classes1.setdefault(c1[a], []).append(a)
        for b in range(count):
            classes2.setdefault(c2[b], []).append(b)
        if any(len(v) != len(classes2.get(k, ())) for k, v in classes1.items()):
            return None
        split = min((v for v in classes1.values() if len(v) > 1), key=len, default=None)
        if split is None:
            mapping = [-1] * count
            for col, (a,) in ((k, v) for k, v in classes1.items()):
                mapping[a] = classes2[col][0]
            if _verify_mapping(s1, s2, mapping):
                return mapping
            return None
        a = split[0]
        colour = c1[a]
        for b in classes2[colour]:
            got = rec(marks1 + [a], marks2 + [b])
            if got is not None:
                return got
        return None

    return rec([], [])
