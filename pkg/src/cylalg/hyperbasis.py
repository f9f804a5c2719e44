"""Hypernetworks over a relation algebra (pairs carry atoms, other short
tuples carry alphabet labels), hyperbasis checking and bounded search, and the
step-by-step relativized model builder with its defect audits.

Arity conventions: atom-labelled tuples have length 2 (the relation-algebra
lifting) and the board dimension is m = 3 throughout the checking machinery;
cylindrifier-style coherence is read as the triangle law
N(x,y) <= N(x,z);N(z,y).  With a pair arity the first two defining conditions
(diagonal tuples and equal-prefix tuples sit under the diagonal) coincide;
both are reported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .bao import CaAtomStructure
from .ra import RaAtomStructure


@dataclass(frozen=True)
class HyperNet:
    """Total map from tuples over m (length <= n_wide) to atoms (length 2)
    or alphabet labels (other lengths; absent entries read lambda0)."""

    m: int
    n_wide: int
    amap: tuple   # atoms on ordered pairs, row-major m x m
    hyper: tuple  # sorted ((tuple), label) entries for lengths != 2
    lambda0: int = 0

    def atom(self, x, y):
        return self.amap[x * self.m + y]

    def hyperlabel(self, tup):
        for t, lab in self.hyper:
            if t == tuple(tup):
                return lab
        return self.lambda0

    def compose(self, sigma):
        """N∘sigma: the hypernetwork with (N∘sigma)(u) = N(sigma∘u)."""
        m = self.m
        amap = tuple(self.atom(sigma[x], sigma[y]) for x in range(m) for y in range(m))
        out_hyper = []
        if self.hyper:
            by_tuple = dict(self.hyper)
            for ln in range(1, self.n_wide + 1):
                if ln == 2:
                    continue
                for tup in itertools.product(range(m), repeat=ln):
                    img = tuple(sigma[t] for t in tup)
                    if img in by_tuple and by_tuple[img] != self.lambda0:
                        out_hyper.append((tup, by_tuple[img]))
        return HyperNet(m, self.n_wide, amap, tuple(sorted(out_hyper)), self.lambda0)

    def agrees_off(self, other: "HyperNet", avoid) -> bool:
        """Equal on every tuple avoiding the node set `avoid`."""
        m = self.m
        keep = [x for x in range(m) if x not in avoid]
        for x in keep:
            for y in keep:
                if self.atom(x, y) != other.atom(x, y):
                    return False
        for ln in range(1, self.n_wide + 1):
            if ln == 2:
                continue
            for tup in itertools.product(keep, repeat=ln):
                if self.hyperlabel(tup) != other.hyperlabel(tup):
                    return False
        return True


def from_matrix(mats: CaAtomStructure, member: int, n_wide: int = None, lambda0: int = 0) -> HyperNet:
    """Lift a basic matrix to a hypernetwork with constant hyperlabels."""
    n = mats.n
    rows = mats.payload["matrices"]
    diag = mats.payload["diag_atom"]
    entries = [(i, j) for i in range(n) for j in range(i + 1, n)]
    amap = []
    for x in range(n):
        for y in range(n):
            if x == y:
                amap.append(diag)
            else:
                amap.append(int(rows[member, entries.index((min(x, y), max(x, y)))]))
    return HyperNet(n, n_wide or n, tuple(amap), (), lambda0)


def matrix_id(mats: CaAtomStructure, net: HyperNet):
    """The member id of a hypernetwork's matrix part, if enumerated."""
    n = mats.n
    entries = [(i, j) for i in range(n) for j in range(i + 1, n)]
    key = tuple(net.atom(i, j) for i, j in entries)
    return mats.payload["matrix_index"].get(key)


def lambda_neat(net: HyperNet) -> bool:
    """Short hyperedges constantly labelled by lambda0."""
    return all(lab == net.lambda0 for _, lab in net.hyper)


@dataclass
class HyperNetReport:
    diagonal_ok: bool = True
    prefix_ok: bool = True
    triangle_ok: bool = True
    substitution_ok: bool = True
    hyperlabel_eq_ok: bool = True
    witness: tuple = None

    @property
    def ok(self):
        return (
            self.diagonal_ok
            and self.prefix_ok
            and self.triangle_ok
            and self.substitution_ok
            and self.hyperlabel_eq_ok
        )

    def to_json(self):
        return {
            "ok": self.ok,
            "conditions": {
                "diagonal": self.diagonal_ok,
                "prefix_diagonal": self.prefix_ok,
                "triangle": self.triangle_ok,
                "substitution": self.substitution_ok,
                "hyperlabel_equality": self.hyperlabel_eq_ok,
            },
            "witness": self.witness,
        }


def check_hypernet(ras: RaAtomStructure, net: HyperNet) -> HyperNetReport:
    """The five defining conditions, exhaustively over tuples."""
    if not 3 <= net.m <= net.n_wide:
        raise ValueError("need pair arity + 1 <= m <= n_wide")
    rep = HyperNetReport()
    m = net.m
    ident = ras.identity
    for x in range(m):
        if net.atom(x, x) not in ident:
            rep.diagonal_ok = False
            rep.prefix_ok = False
            rep.witness = ("diagonal", x)
            return rep
    for x in range(m):
        for y in range(m):
            a = net.atom(x, y)
            if net.atom(y, x) != int(ras.converse[a]):
                rep.substitution_ok = False
                rep.witness = ("substitution", x, y)
                return rep
            for z in range(m):
                if not ras.cons[a, net.atom(x, z), net.atom(z, y)]:
                    rep.triangle_ok = False
                    rep.witness = ("triangle", x, y, z)
                    return rep
    # equivalent tuples carry equal hyperlabels; x ~ y iff the pair label
    # falls under the identity
    sim = [[net.atom(x, y) in ident for y in range(m)] for x in range(m)]
    for ln in range(1, net.n_wide + 1):
        if ln == 2:
            continue
        tuples = list(itertools.product(range(m), repeat=ln))
        for tx in tuples:
            for ty in tuples:
                if all(sim[a][b] for a, b in zip(tx, ty)):
                    if net.hyperlabel(tx) != net.hyperlabel(ty):
                        rep.hyperlabel_eq_ok = False
                        rep.witness = ("hyperlabel", tx, ty)
                        return rep
    return rep


@dataclass
class HyperBasisReport:
    coverage_ok: bool = True
    witness_ok: bool = True
    amalgamation_ok: bool = True
    symmetry_ok: bool = True
    failure: tuple = None

    @property
    def ok(self):
        return self.coverage_ok and self.witness_ok and self.amalgamation_ok and self.symmetry_ok

    def named_failure(self):
        for name in ("coverage", "witness", "amalgamation", "symmetry"):
            if not getattr(self, f"{name}_ok"):
                return name
        return None

    def to_json(self):
        return {
            "ok": self.ok,
            "bullets": {
                "coverage": self.coverage_ok,
                "witness": self.witness_ok,
                "amalgamation": self.amalgamation_ok,
                "symmetry": self.symmetry_ok,
            },
            "failure": self.failure,
        }


def _entries3(net):
    return (net.atom(0, 1), net.atom(0, 2), net.atom(1, 2))


def check_hyperbasis(ras: RaAtomStructure, nets, precheck: bool = True) -> HyperBasisReport:
    """The four bullets over a set of 3-node hypernetworks: atom coverage at
    (0,1); triangle-split witnesses agreeing off the third node; amalgamation
    of overlap-agreeing pairs; closure under composition with every map.

    At three nodes any two members agree off a pair of nodes, so the
    amalgamation bullet reduces to: every combination of a realized (y,z)
    label with a realized (x,z) label extends to a member."""
    rep = HyperBasisReport()
    if not nets:
        rep.coverage_ok = False
        rep.failure = ("coverage", None)
        return rep
    m = nets[0].m
    if m != 3:
        raise ValueError("hyperbasis checking is implemented for 3-node hypernetworks")
    if precheck:
        for k, net in enumerate(nets):
            sub = check_hypernet(ras, net)
            if not sub.ok:
                raise ValueError(f"member {k} is not a hypernetwork: {sub.to_json()}")
        hypers = {net.hyper for net in nets}
        if len(hypers) > 1 or (nets and nets[0].hyper):
            raise ValueError("hyperbasis checking assumes constant hyperlabels")

    covered = {net.atom(0, 1) for net in nets}
    for a in range(ras.atom_count):
        if a not in covered:
            rep.coverage_ok = False
            rep.failure = ("coverage", a)
            return rep

    index = {net.amap for net in nets}
    # presence of (z, x, y, off-z entry, entry(x,z), entry(z,y)) over the
    # members is what the witness bullet queries
    present = set()
    for net in nets:
        for z in range(3):
            rest = [t for t in range(3) if t != z]
            for u in rest:
                for v in rest:
                    if u == v:
                        continue
                    present.add((z, u, v, net.atom(u, v), net.atom(u, z), net.atom(z, v)))

    for k, net in enumerate(nets):
        for x in range(3):
            for y in range(3):
                if x == y:
                    continue
                z = next(t for t in range(3) if t not in (x, y))
                lab = net.atom(x, y)
                for a, b in np.argwhere(ras.cons[lab]):
                    if (z, x, y, lab, int(a), int(b)) not in present:
                        rep.witness_ok = False
                        rep.failure = ("witness", k, x, y, int(a), int(b))
                        return rep

    realized = {}
    joint = {}
    for net in nets:
        for x in range(3):
            for y in range(3):
                if x == y:
                    continue
                z = next(t for t in range(3) if t not in (x, y))
                realized.setdefault((y, z), set()).add(net.atom(y, z))
                realized.setdefault((x, z), set()).add(net.atom(x, z))
                joint.setdefault((x, y), set()).add((net.atom(y, z), net.atom(x, z)))
    for x in range(3):
        for y in range(3):
            if x == y:
                continue
            z = next(t for t in range(3) if t not in (x, y))
            need = itertools.product(realized.get((y, z), ()), realized.get((x, z), ()))
            have = joint.get((x, y), set())
            for u, w in need:
                if (u, w) not in have:
                    rep.amalgamation_ok = False
                    rep.failure = ("amalgamation", x, y, int(u), int(w))
                    return rep

    for k, net in enumerate(nets):
        for sigma in itertools.product(range(3), repeat=3):
            img = net.compose(sigma)
            if img.amap not in index:
                rep.symmetry_ok = False
                rep.failure = ("symmetry", k, sigma)
                return rep
    return rep


# ---------------------------------------------------------------------------
# Bounded search: canonical seeds plus violation-driven repair sweeps.
# ---------------------------------------------------------------------------


@dataclass
class SearchOutcome:
    status: str  # "found" | "none-within-bounds" | "budget-exhausted"
    members: list = None
    detail: str = ""


def search_hyperbasis(
    ras: RaAtomStructure,
    mats: CaAtomStructure,
    n: int,
    lambda_bound: int = 1,
    size_bound: int = None,
    budget: int = 64,
) -> SearchOutcome:
    """Grow a symmetry-closed candidate from one seed per atom, sweeping in
    all witness/amalgamation repairs each round.  Sound: a found set passes
    check_hyperbasis; the provably impossible cases answer none-within-bounds.
    A bigger alphabet changes nothing here (constant hyperlabels stay valid),
    so lambda_bound only gates the argument."""
    if lambda_bound < 1:
        raise ValueError("lambda_bound must be >= 1")
    if n != 3:
        raise ValueError("search is implemented for 3-node hypernetworks")
    rows = mats.payload["matrices"]
    total = len(rows)
    if size_bound is None:
        size_bound = total
    if size_bound < ras.atom_count:
        return SearchOutcome("none-within-bounds", detail="fewer members than atoms to cover")
    first_with = {}
    for k in range(total):
        a = int(rows[k, 0])
        first_with.setdefault(a, k)
    missing = [a for a in range(ras.atom_count) if a not in first_with]
    if missing:
        return SearchOutcome(
            "none-within-bounds", detail=f"atom {missing[0]} appears in no matrix at (0,1)"
        )

    nets = [from_matrix(mats, k) for k in range(total)]
    lookup = {net.amap: k for k, net in enumerate(nets)}

    def close_symmetry(current):
        frontier = list(current)
        while frontier:
            k = frontier.pop()
            for sigma in itertools.product(range(3), repeat=3):
                got = lookup.get(nets[k].compose(sigma).amap)
                if got is not None and got not in current:
                    current.add(got)
                    frontier.append(got)
        return current

    members = close_symmetry(set(first_with.values()))
    for _ in range(budget):
        if len(members) > size_bound:
            return SearchOutcome("budget-exhausted", detail="size bound exceeded during repair")
        subset = sorted(members)
        rep = check_hyperbasis(ras, [nets[k] for k in subset], precheck=False)
        if rep.ok:
            return SearchOutcome("found", members=subset)
        new = set()
        # witness sweep: add the least matrix realizing each missing split
        present = set()
        for k in subset:
            net = nets[k]
            for z in range(3):
                rest = [t for t in range(3) if t != z]
                for u in rest:
                    for v in rest:
                        if u != v:
                            present.add((z, u, v, net.atom(u, v), net.atom(u, z), net.atom(z, v)))
        for k in subset:
            net = nets[k]
            for x in range(3):
                for y in range(3):
                    if x == y:
                        continue
                    z = next(t for t in range(3) if t not in (x, y))
                    lab = net.atom(x, y)
                    for a, b in np.argwhere(ras.cons[lab]):
                        if (z, x, y, lab, int(a), int(b)) in present:
                            continue
                        amap = list(net.amap)
                        amap[x * 3 + z] = int(a)
                        amap[z * 3 + x] = int(ras.converse[int(a)])
                        amap[z * 3 + y] = int(b)
                        amap[y * 3 + z] = int(ras.converse[int(b)])
                        got = lookup.get(tuple(amap))
                        if got is not None:
                            new.add(got)
        # amalgamation sweep
        if rep.named_failure() == "amalgamation":
            _, x, y, u, w = rep.failure
            z = next(t for t in range(3) if t not in (x, y))
            for cand, net in enumerate(nets):
                if net.atom(y, z) == u and net.atom(x, z) == w and cand not in members:
                    new.add(cand)
                    break
        new -= members
        if not new:
            return SearchOutcome(
                "none-within-bounds",
                detail=f"bullet {rep.named_failure()} cannot be repaired from the available hypernetworks",
            )
        members = close_symmetry(members | new)
    return SearchOutcome("budget-exhausted", detail="repair budget spent")


# ---------------------------------------------------------------------------
# Step-by-step relativized model building.
# ---------------------------------------------------------------------------


@dataclass
class RelModel:
    """Partial relativized model: atom-labelled edges plus the recorded
    covering embeddings (hypernetwork member, node tuple)."""

    ras: RaAtomStructure
    mats: CaAtomStructure
    n: int
    edges: dict = field(default_factory=dict)
    node_count: int = 0
    embeddings: list = field(default_factory=list)
    stage: int = 0

    def label(self, u, v):
        return self.edges.get((min(u, v), max(u, v)))

    def add_node(self):
        self.node_count += 1
        return self.node_count - 1

    def set_edge(self, u, v, atom):
        if u == v:
            return
        self.edges[(min(u, v), max(u, v))] = int(atom)

    def adjacency(self):
        adj = {}
        for (u, v) in self.edges:
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        return adj


def _matrix_entry(mats, member, i, j):
    if i == j:
        return mats.payload["diag_atom"]
    n = mats.n
    entries = [(a, b) for a in range(n) for b in range(a + 1, n)]
    return int(mats.payload["matrices"][member, entries.index((min(i, j), max(i, j)))])


def _maximal_strict_sets(mats, member):
    """Maximal S with no identity label between distinct members of S."""
    n = mats.n
    diag = mats.payload["diag_atom"]
    strict = []
    for size in range(n, 0, -1):
        for S in itertools.combinations(range(n), size):
            if any(
                _matrix_entry(mats, member, i, j) == diag for i, j in itertools.combinations(S, 2)
            ):
                continue
            if any(set(S) <= set(T) for T in strict):
                continue
            strict.append(S)
    return strict


def build_model(ras, mats, members, stage_budget: int = 1, component_cap: int = None) -> RelModel:
    """Stage 0: the disjoint union of the maximal strict restrictions of the
    members (optionally capped to a deterministic prefix, which keeps every
    audit exhaustive on the built part).  Each further stage adds one witness
    node per unresolved defect quadruple."""
    model = RelModel(ras, mats, mats.n)
    members = sorted(members)
    diag = mats.payload["diag_atom"]
    built = 0
    for member in members:
        if component_cap is not None and built >= component_cap:
            break
        for S in _maximal_strict_sets(mats, member):
            if component_cap is not None and built >= component_cap:
                break
            node_of = {s: model.add_node() for s in S}
            for a, b in itertools.combinations(S, 2):
                model.set_edge(node_of[a], node_of[b], _matrix_entry(mats, member, a, b))
            # v is total: each slot goes to its identity-linked representative
            v = []
            for i in range(mats.n):
                rep = next(s for s in S if s == i or _matrix_entry(mats, member, i, s) == diag)
                v.append(node_of[rep])
            model.embeddings.append((member, tuple(v)))
            built += 1
    member_set = set(members)
    for _ in range(stage_budget):
        defects = collect_defects(model, member_set)
        if not defects:
            break
        resolve_stage(model, defects)
        model.stage += 1
    return model


def collect_defects(model: RelModel, member_set):
    """Unresolved quadruples (member, v, k, other-member): the other member
    agrees off k with the embedded one but no node realizes its k-row."""
    out = []
    adj = model.adjacency()
    seen = set()
    for member, v in model.embeddings:
        for k in range(model.n):
            others = [i for i in range(model.n) if i != k]
            for cand in _agreeing_off(model.mats, member, k):
                if cand not in member_set:
                    continue
                sig = (tuple(v[i] for i in others), k, cand)
                if sig in seen:
                    continue
                seen.add(sig)
                if _witness_node(model, adj, v, k, cand) is None:
                    out.append((member, v, k, cand))
    return out


def _agreeing_off(mats, member, k):
    from . import _kernels as K

    rel = mats.ci[k]
    cid = int(rel.class_id[member])
    return K.unpack_indices(rel.class_masks[cid])


def _witness_node(model: RelModel, adj, v, k, cand):
    n = model.n
    diag = model.mats.payload["diag_atom"]
    others = [i for i in range(n) if i != k]
    want = {i: _matrix_entry(model.mats, cand, k, i) for i in others}
    # identity-linked slot: the witness is an existing embedded node
    for i in others:
        if want[i] == diag:
            w = v[i]
            if all(
                (w == v[j] and want[j] == diag) or model.label(w, v[j]) == want[j]
                for j in others
            ):
                return w
            return None
    pools = [adj.get(v[i], set()) for i in others]
    for w in sorted(set.intersection(*pools)) if pools and all(pools) else []:
        if all(model.label(w, v[i]) == want[i] for i in others):
            return w
    return None


def resolve_stage(model: RelModel, defects):
    for member, v, k, cand in defects:
        diag = model.mats.payload["diag_atom"]
        others = [i for i in range(model.n) if i != k]
        if any(_matrix_entry(model.mats, cand, k, i) == diag for i in others):
            continue  # identity-linked defects never enter the defect list
        pi = model.add_node()
        for i in others:
            model.set_edge(pi, v[i], _matrix_entry(model.mats, cand, k, i))
        new_v = list(v)
        new_v[k] = pi
        model.embeddings.append((cand, tuple(new_v)))
    return len(defects)


# ---------------------------------------------------------------------------
# Audits.
# ---------------------------------------------------------------------------


def audit_stage0(model: RelModel):
    """Every recorded embedding reproduces its member's matrix on the
    embedded nodes, and collapsed slots are exactly the identity-linked ones."""
    problems = []
    diag = model.mats.payload["diag_atom"]
    for member, v in model.embeddings:
        for i in range(model.n):
            for j in range(model.n):
                want = _matrix_entry(model.mats, member, i, j)
                if v[i] == v[j]:
                    if i != j and want != diag:
                        problems.append(("collapsed-non-identity", member, v, i, j))
                    continue
                if model.label(v[i], v[j]) != want:
                    problems.append(("edge-mismatch", member, v, i, j))
    return problems


def check_square(model: RelModel, members):
    """Failure signatures of the square condition over the recorded
    embeddings: every agreeing-off-k member needs a realized witness node."""
    adj = model.adjacency()
    member_set = set(members)
    out = []
    seen = set()
    for member, v in model.embeddings:
        for k in range(model.n):
            others = [i for i in range(model.n) if i != k]
            for cand in _agreeing_off(model.mats, member, k):
                if cand not in member_set:
                    continue
                sig = (tuple(v[i] for i in others), k, cand)
                if sig in seen:
                    continue
                seen.add(sig)
                if _witness_node(model, adj, v, k, cand) is None:
                    out.append(sig)
    return out


def tuple_profile(model: RelModel, tup, n):
    """The padded-tuple label matrix used by the collapse equivalences: the
    tuple is extended with copies of its head to length n."""
    padded = list(tup) + [tup[0]] * (n - len(tup))
    diag = model.mats.payload["diag_atom"]
    out = []
    for i in range(n):
        for j in range(n):
            if padded[i] == padded[j]:
                out.append(diag)
            else:
                out.append(model.label(padded[i], padded[j]))
    return tuple(out)


def check_smooth(model: RelModel, members, samples: int = 300, seed: int = 7):
    """The collapse relations E^t (equal padded-tuple profiles) must be
    equivalences on sampled clique tuples; failures list offending pairs."""
    rng = np.random.default_rng(seed)
    if not model.embeddings:
        return True, []
    n = model.n
    problems = []
    for t in range(1, n + 1):
        tuples = []
        for _ in range(samples):
            member, v = model.embeddings[int(rng.integers(0, len(model.embeddings)))]
            tup = tuple(v[int(rng.integers(0, n))] for _ in range(t))
            tuples.append(tup)
        prof = {tup: tuple_profile(model, tup, n) for tup in tuples}
        for a in tuples:
            if prof[a] != prof[a]:
                problems.append((t, a, a, "reflexive"))
        for a in tuples:
            for b in tuples:
                if (prof[a] == prof[b]) != (prof[b] == prof[a]):
                    problems.append((t, a, b, "symmetric"))
        for a in tuples:
            for b in tuples:
                for c in tuples:
                    if prof[a] == prof[b] and prof[b] == prof[c] and prof[a] != prof[c]:
                        problems.append((t, a, b, c, "transitive"))
    return not problems, problems
