"""The pair atom structure over a graph: atoms are pairs (K, ~) of a partial
slot-labelling K : n -> nodes x n and a slot partition ~, with the defining
clauses tying how much of K is defined to how coarse ~ is.  Ships with the
frame-law checker (five exhaustively tested laws) and the slot-permutation
action.

Convention: K(i) = K(j) also holds when both are undefined.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .bao import CaAtomStructure, Relation
from .graphs import Graph


@dataclass(frozen=True)
class PairAtom:
    """One atom: `part` is the partition of the n slots as a restricted-growth
    string; `slots` holds (node, copy) per slot, None where undefined."""

    part: tuple
    slots: tuple

    def classes(self):
        out = {}
        for k, c in enumerate(self.part):
            out.setdefault(c, []).append(k)
        return sorted(out.values())


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


def atom_is_valid(atom: PairAtom, g: Graph, n: int) -> bool:
    """The three defining clauses."""
    classes = atom.classes()
    defined = [k for k, v in enumerate(atom.slots) if v is not None]
    if len(classes) == n:
        if len(defined) != n:
            return False
        proj = {v[0] for v in atom.slots}
        return g.spans_edge(proj) if len(proj) > 1 else False
    if len(classes) == n - 1:
        two = next(c for c in classes if len(c) == 2)
        if sorted(defined) != sorted(two):
            return False
        return atom.slots[two[0]] == atom.slots[two[1]]
    return not defined


def enumerate_atoms(g: Graph, n: int, atom_bound: int = 200_000):
    sig = [(u, i) for u in range(g.node_count) for i in range(n)]
    atoms = []
    for part in _rgs_partitions(n):
        k_classes = len(set(part))
        if k_classes == n:
            for vals in itertools.product(sig, repeat=n):
                atom = PairAtom(part, tuple(vals))
                if atom_is_valid(atom, g, n):
                    atoms.append(atom)
                if len(atoms) > atom_bound:
                    raise ValueError(f"atom bound {atom_bound} exceeded")
        elif k_classes == n - 1:
            two = [c for c in range(n) if part.count(part[c]) == 2]
            for v in sig:
                slots = [None] * n
                slots[two[0]] = v
                slots[two[1]] = v
                atoms.append(PairAtom(part, tuple(slots)))
        else:
            atoms.append(PairAtom(part, (None,) * n))
        if len(atoms) > atom_bound:
            raise ValueError(f"atom bound {atom_bound} exceeded")
    atoms.sort(key=lambda a: (a.part, tuple((-1, -1) if v is None else v for v in a.slots)))
    return atoms


# --- relational definitions (the source of truth for the frame laws) -----------


def rel_equiv_i(a: PairAtom, b: PairAtom, i: int, n: int) -> bool:
    """Same slot-i value (both-undefined counts) and same partition off i."""
    if a.slots[i] != b.slots[i]:
        return False
    rest = [k for k in range(n) if k != i]
    return all(
        (a.part[p] == a.part[q]) == (b.part[p] == b.part[q])
        for p, q in itertools.combinations(rest, 2)
    )


def rel_equiv_ij(a: PairAtom, b: PairAtom, i: int, j: int, n: int) -> bool:
    """Slot swap: K and K' agree through the transposition [i,j], and the
    partitions agree (through [i,j] when i and j are inequivalent)."""
    if a.slots[i] != b.slots[j] or a.slots[j] != b.slots[i]:
        return False
    if any(a.slots[k] != b.slots[k] for k in range(n) if k not in (i, j)):
        return False
    if a.part[i] == a.part[j]:
        return a.part == b.part
    tau = list(range(n))
    tau[i], tau[j] = j, i
    return b.part == _canon_rgs(tuple(a.part[tau[k]] for k in range(n)))


@dataclass
class PairStructure:
    graph: Graph
    n: int
    atoms: list
    index: dict = field(repr=False)

    @classmethod
    def build(cls, g: Graph, n: int, atom_bound: int = 200_000) -> "PairStructure":
        if n < 3:
            raise ValueError("dimension must be at least 3")
        atoms = enumerate_atoms(g, n, atom_bound)
        return cls(g, n, atoms, {a: k for k, a in enumerate(atoms)})

    # encoded arrays for vectorized relation construction
    def encode(self):
        n, count = self.n, len(self.atoms)
        slot_enc = np.full((count, n), -1, dtype=np.int32)
        width = self.graph.node_count * n
        for k, a in enumerate(self.atoms):
            for s, v in enumerate(a.slots):
                if v is not None:
                    slot_enc[k, s] = v[0] * n + v[1]
        part_ids = {}
        part_of = np.empty(count, dtype=np.int32)
        for k, a in enumerate(self.atoms):
            part_of[k] = part_ids.setdefault(a.part, len(part_ids))
        return slot_enc, part_of, part_ids

    def equiv_ij_matrix(self, i: int, j: int) -> np.ndarray:
        """Boolean pair matrix of the slot-swap relation, vectorized."""
        slot_enc, part_of, part_ids = self.encode()
        count, n = len(self.atoms), self.n
        ok = np.ones((count, count), dtype=bool)
        ok &= slot_enc[:, i][:, None] == slot_enc[:, j][None, :]
        ok &= slot_enc[:, j][:, None] == slot_enc[:, i][None, :]
        for k in range(n):
            if k in (i, j):
                continue
            ok &= slot_enc[:, k][:, None] == slot_enc[:, k][None, :]
        tau = list(range(n))
        tau[i], tau[j] = j, i
        swap_of = np.empty(count, dtype=np.int32)
        for k, a in enumerate(self.atoms):
            if a.part[i] == a.part[j]:
                swap_of[k] = part_of[k]
            else:
                swap_of[k] = part_ids[_canon_rgs(tuple(a.part[tau[t]] for t in range(n)))]
        ok &= swap_of[:, None] == part_of[None, :]
        return ok

    def equiv_i_keys(self, i: int):
        keys = []
        for a in self.atoms:
            rest = [k for k in range(self.n) if k != i]
            sub = _canon_rgs(tuple(a.part[k] for k in rest))
            keys.append((a.slots[i], sub))
        return keys

    def transp_perm(self, i: int, j: int) -> np.ndarray:
        """Partner map of the slot-swap relation; raises if not a bijection."""
        mat = self.equiv_ij_matrix(i, j)
        rows = mat.sum(axis=1)
        cols = mat.sum(axis=0)
        if not ((rows == 1).all() and (cols == 1).all()):
            raise ValueError(f"slot-swap relation for ({i},{j}) is not a bijection")
        return np.argmax(mat, axis=1).astype(np.int64)

    def to_ca(self) -> CaAtomStructure:
        """Package as a polyadic-equality atom structure.  The replacement
        substitutions stay derived: s^i_j x = c_i(x & d_ij)."""
        count, n = len(self.atoms), self.n
        ci = [Relation.from_equiv_keys(count, self.equiv_i_keys(i)) for i in range(n)]
        dij = {}
        for i in range(n):
            for j in range(n):
                dij[(i, j)] = K.pack_indices(
                    [k for k, a in enumerate(self.atoms) if a.part[i] == a.part[j]], count
                )
        s_transp = {
            (i, j): Relation.from_perm(count, self.transp_perm(i, j))
            for i in range(n)
            for j in range(i + 1, n)
        }
        return CaAtomStructure(
            n=n,
            kind="PEA",
            atom_count=count,
            ci=ci,
            dij=dij,
            s_repl={},
            s_transp=s_transp,
            labels=list(self.atoms),
            payload={"pair_structure": self},
        )


def perm_action(tau, atom: PairAtom, g: Graph, n: int) -> PairAtom:
    """Relabel slots through the bijection tau; the result is re-verified to
    satisfy the defining clauses."""
    if sorted(tau) != list(range(n)):
        raise ValueError("tau must be a bijection on the slots")
    slots = tuple(atom.slots[tau[k]] for k in range(n))
    part = _canon_rgs(tuple(atom.part[tau[k]] for k in range(n)))
    out = PairAtom(part, slots)
    if not atom_is_valid(out, g, n):
        raise AssertionError(f"permuted atom fell outside the structure: {out}")
    return out


# --- the five frame laws, exhaustively ------------------------------------------


@dataclass
class FrameLawReport:
    identity_law_ok: bool = True
    symmetry_ok: bool = True
    functional_ok: bool = True
    witness_law_ok: bool = True
    closure_ok: bool = True
    witness: tuple = None

    @property
    def ok(self):
        return (
            self.identity_law_ok
            and self.symmetry_ok
            and self.functional_ok
            and self.witness_law_ok
            and self.closure_ok
        )

    def to_json(self):
        return {
            "ok": self.ok,
            "items": {
                "1_identity": self.identity_law_ok,
                "2_symmetry": self.symmetry_ok,
                "3_functional": self.functional_ok,
                "4_witness": self.witness_law_ok,
                "5_closure": self.closure_ok,
            },
            "witness": self.witness,
        }


def check_frame_laws(ps: PairStructure) -> FrameLawReport:
    """Exhaustive checks of the five slot-swap laws:
    1. the (i,i) swap relates an atom only to itself;
    2. the (i,j) and (j,i) swaps coincide;
    3. the swap relation is functional in both directions;
    4. on the diagonal d_ij, the i-cylindrifier factors through the
       j-cylindrifier followed by the swap;
    5. the swap maps the atom set onto the atom set.
    """
    rep = FrameLawReport()
    count, n = len(ps.atoms), ps.n

    # item 1: the raw relational definition with i = j relates a to b only at a = b
    for i in range(n):
        eq_ii = ps.equiv_ij_matrix(i, i)
        if not np.array_equal(eq_ii, np.eye(count, dtype=bool)):
            rep.identity_law_ok = False
            bad = np.argwhere(eq_ii != np.eye(count, dtype=bool))[0]
            rep.witness = ("item1", i, int(bad[0]), int(bad[1]))
            break

    mats = {}
    for i in range(n):
        for j in range(i + 1, n):
            mats[(i, j)] = ps.equiv_ij_matrix(i, j)
            if not np.array_equal(mats[(i, j)], ps.equiv_ij_matrix(j, i)):
                rep.symmetry_ok = False
                rep.witness = ("item2", i, j)
            rows = mats[(i, j)].sum(axis=1)
            cols = mats[(i, j)].sum(axis=0)
            if rows.max() > 1 or cols.max() > 1:
                rep.functional_ok = False
                rep.witness = ("item3", i, j, int(np.argmax(rows > 1)))
            if rows.min() < 1 or cols.min() < 1:
                rep.closure_ok = False
                rep.witness = ("item5", i, j)

    eq_i = {}
    for i in range(n):
        keys = ps.equiv_i_keys(i)
        ids = {}
        arr = np.array([ids.setdefault(k, len(ids)) for k in keys], dtype=np.int32)
        eq_i[i] = arr[:, None] == arr[None, :]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            key = (min(i, j), max(i, j))
            if key not in mats or not rep.functional_ok or not rep.closure_ok:
                continue
            partner = np.argmax(mats[key], axis=1)
            in_d = np.array([a.part[i] == a.part[j] for a in ps.atoms])
            # for a in d_ij:  a =_i a'  iff  a =_j partner(a')
            lhs = eq_i[i][in_d]
            rhs = eq_i[j][in_d][:, partner]
            if not np.array_equal(lhs, rhs):
                bad = np.argwhere(lhs != rhs)[0]
                rep.witness_law_ok = False
                rep.witness = ("item4", i, j, int(bad[0]), int(bad[1]))
    return rep
