"""Atom structures for diagonal-free through polyadic-equality signatures,
their complex-algebra operators, reducts, simplicity and completion checks.

Atoms are dense ids 0..N-1.  Complex-algebra elements are AtomSet bitsets;
full 2^N element tables are never materialized except in the explicit
finite-algebra helpers used by completion_embed_check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .bitset import AtomSet

KINDS = ("Df", "Sc", "CA", "PA", "PEA")

# operator families per signature kind
_OPS = {
    "Df": {"c"},
    "Sc": {"c", "sr"},
    "CA": {"c", "d"},
    "PA": {"c", "sr", "st"},
    "PEA": {"c", "d", "sr", "st"},
}


@dataclass(frozen=True)
class Signature:
    n: int
    kind: str

    def __post_init__(self):
        if not 2 <= self.n <= 4:
            raise ValueError("supported dimensions are 2..4")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def ops(self):
        return _OPS[self.kind]


class Relation:
    """Binary relation on atoms with a fast image operation.

    Storage is one of:
      rows  - packed successor masks, rows[a] = {b : (a,b) in R}
      equiv - an equivalence relation as class ids plus class masks
      perm  - a (partial) functional relation b -> the unique a with (a,b) in R
    Image semantics follow the complex-algebra operator:
    image(X) = {a : exists b in X with (a,b) in R}.
    """

    __slots__ = ("n", "tag", "rows", "class_id", "class_masks", "perm")

    def __init__(self, n, tag, rows=None, class_id=None, class_masks=None, perm=None):
        self.n = n
        self.tag = tag
        self.rows = rows
        self.class_id = class_id
        self.class_masks = class_masks
        self.perm = perm

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "Relation":
        rows = np.zeros((n, K.words_for(n)), dtype=np.uint64)
        for a, b in pairs:
            rows[a, b // 64] |= np.uint64(1 << (b % 64))
        return cls(n, "rows", rows=rows)

    @classmethod
    def from_equiv_keys(cls, n: int, keys) -> "Relation":
        """Equivalence relation whose classes are the fibres of `keys`."""
        index = {}
        class_id = np.zeros(n, dtype=np.int64)
        for a, key in enumerate(keys):
            class_id[a] = index.setdefault(key, len(index))
        masks = np.zeros((len(index), K.words_for(n)), dtype=np.uint64)
        for a in range(n):
            cid = class_id[a]
            masks[cid, a // 64] |= np.uint64(1 << (a % 64))
        return cls(n, "equiv", class_id=class_id, class_masks=masks)

    @classmethod
    def from_perm(cls, n: int, perm) -> "Relation":
        return cls(n, "perm", perm=np.asarray(perm, dtype=np.int64))

    def image_words(self, words: np.ndarray) -> np.ndarray:
        if self.tag == "rows":
            return K.image_any(self.rows, words)
        if self.tag == "equiv":
            return K.equiv_image(self.class_id, self.class_masks, words)
        return K.perm_image(self.perm, words, self.n)

    def pairs(self):
        if self.tag == "rows":
            for a in range(self.n):
                for b in K.unpack_indices(self.rows[a]):
                    yield (a, b)
        elif self.tag == "equiv":
            for cid in range(len(self.class_masks)):
                members = K.unpack_indices(self.class_masks[cid])
                for a in members:
                    for b in members:
                        yield (a, b)
        else:
            for b in range(self.n):
                a = int(self.perm[b])
                if a >= 0:
                    yield (a, b)

    def has(self, a: int, b: int) -> bool:
        if self.tag == "rows":
            return K.testbit(self.rows[a], b)
        if self.tag == "equiv":
            return self.class_id[a] == self.class_id[b]
        return int(self.perm[b]) == a

    def is_reflexive(self) -> bool:
        return all(self.has(a, a) for a in range(self.n))

    def is_symmetric(self) -> bool:
        if self.tag == "equiv":
            return True
        return all(self.has(b, a) for a, b in self.pairs())


@dataclass
class CaAtomStructure:
    """Frame for any signature between Df and PEA; relation slots are present
    exactly as the kind demands (s^i_j may be left derived when diagonals and
    cylindrifiers are available)."""

    n: int
    kind: str
    atom_count: int
    ci: list
    dij: dict = field(default_factory=dict)
    s_repl: dict = field(default_factory=dict)
    s_transp: dict = field(default_factory=dict)
    labels: list = None
    payload: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.atom_count < 1:
            raise ValueError("atom structures need at least one atom")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        ops = _OPS[self.kind]
        if len(self.ci) != self.n:
            raise ValueError("need one cylindrifier relation per dimension")
        if "d" in ops:
            for i in range(self.n):
                for j in range(self.n):
                    if (i, j) not in self.dij:
                        raise ValueError(f"missing diagonal slot d{i}{j}")

    @property
    def signature(self) -> Signature:
        return Signature(self.n, self.kind)

    def empty(self) -> AtomSet:
        return AtomSet.empty(self.atom_count)

    def full(self) -> AtomSet:
        return AtomSet.full(self.atom_count)

    def singleton(self, a: int) -> AtomSet:
        return AtomSet.from_atoms(self.atom_count, [a])

    def diag(self, i: int, j: int) -> AtomSet:
        if "d" not in _OPS[self.kind]:
            raise ValueError(f"kind {self.kind} has no diagonals")
        return AtomSet(self.atom_count, self.dij[(i, j)].copy())

    def repl_relation(self, i: int, j: int):
        """Stored s^i_j relation, or None when it is evaluated as c_i(x & d_ij)."""
        return self.s_repl.get((i, j))

    def frame_normal(self) -> bool:
        """Every cylindrifier relation reflexive and symmetric."""
        return all(r.is_reflexive() and r.is_symmetric() for r in self.ci)


def cm_apply(s: CaAtomStructure, op, args) -> AtomSet:
    """Apply one signature operator of the complex algebra Cm(s).

    op is ("c", i) | ("d", i, j) | ("sr", i, j) | ("st", i, j); args is a list
    of AtomSet (empty for diagonals).
    """
    ops = _OPS[s.kind]
    name = op[0]
    if name == "c":
        if "c" not in ops:
            raise ValueError(f"no cylindrifier in kind {s.kind}")
        (x,) = args
        return AtomSet(s.atom_count, s.ci[op[1]].image_words(x.words))
    if name == "d":
        if "d" not in ops:
            raise ValueError(f"no diagonals in kind {s.kind}")
        if args:
            raise ValueError("diagonals take no arguments")
        return s.diag(op[1], op[2])
    if name == "st":
        if "st" not in ops:
            raise ValueError(f"no transposition substitutions in kind {s.kind}")
        (x,) = args
        i, j = op[1], op[2]
        if i == j:
            return x
        key = (min(i, j), max(i, j))
        return AtomSet(s.atom_count, s.s_transp[key].image_words(x.words))
    if name == "sr":
        if "sr" not in ops:
            raise ValueError(f"no replacement substitutions in kind {s.kind}")
        (x,) = args
        i, j = op[1], op[2]
        if i == j:
            return x
        rel = s.repl_relation(i, j)
        if rel is not None:
            return AtomSet(s.atom_count, rel.image_words(x.words))
        if "d" not in ops:
            raise ValueError("s^i_j has no stored relation and no diagonals to derive it")
        inner = x.words & s.dij[(i, j)]
        return AtomSet(s.atom_count, s.ci[i].image_words(inner))
    raise ValueError(f"unknown operator {op!r}")


def materialize_repl(s: CaAtomStructure, i: int, j: int) -> Relation:
    """Explicit rows for the derived replacement s^i_j = c_i(x & d_ij)."""
    n = s.atom_count
    rows = np.zeros((n, K.words_for(n)), dtype=np.uint64)
    for b in range(n):
        img = cm_apply(s, ("sr", i, j), [s.singleton(b)])
        for a in img.ids():
            rows[a, b // 64] |= np.uint64(1 << (b % 64))
    return Relation(n, "rows", rows=rows)


_WEAKER = {
    "Df": {"Df"},
    "Sc": {"Df", "Sc"},
    "CA": {"Df", "Sc", "CA"},
    "PA": {"Df", "Sc", "PA"},
    "PEA": set(KINDS),
}


def reduct(s: CaAtomStructure, target: Signature) -> CaAtomStructure:
    """Drop relation slots down to the target signature; atoms unchanged."""
    if target.n != s.n:
        raise ValueError("reduct cannot change dimension")
    if target.kind not in _WEAKER[s.kind]:
        raise ValueError(f"{target.kind} is not a reduct of {s.kind}")
    ops = _OPS[target.kind]
    dij = {k: v.copy() for k, v in s.dij.items()} if "d" in ops else {}
    s_transp = dict(s.s_transp) if "st" in ops else {}
    s_repl = {}
    if "sr" in ops:
        for i in range(s.n):
            for j in range(s.n):
                if i == j:
                    continue
                rel = s.repl_relation(i, j)
                if rel is None:
                    # materialize before the diagonals are dropped
                    rel = materialize_repl(s, i, j)
                s_repl[(i, j)] = rel
    return CaAtomStructure(
        n=s.n,
        kind=target.kind,
        atom_count=s.atom_count,
        ci=list(s.ci),
        dij=dij,
        s_repl=s_repl,
        s_transp=s_transp,
        labels=s.labels,
        payload=dict(s.payload),
    )


def signature_ops(s: CaAtomStructure):
    """All unary operator ids of the structure's signature."""
    ops = []
    for i in range(s.n):
        ops.append(("c", i))
    if "sr" in _OPS[s.kind]:
        for i in range(s.n):
            for j in range(s.n):
                if i != j:
                    ops.append(("sr", i, j))
    if "st" in _OPS[s.kind]:
        for i in range(s.n):
            for j in range(i + 1, s.n):
                ops.append(("st", i, j))
    return ops


def term_closure(s: CaAtomStructure, generators, step_bound: int, size_cap: int = 20000):
    """Close `generators` under Boolean and signature operations.

    Runs at most step_bound rounds; returns (elements, reached_fixpoint).
    Raises if the closure exceeds size_cap elements.
    """
    if step_bound < 1:
        raise ValueError("step_bound must be >= 1")
    ops = signature_ops(s)
    consts = [s.empty()]
    if "d" in _OPS[s.kind]:
        consts.extend(s.diag(i, j) for i in range(s.n) for j in range(s.n))
    current = set(generators) | set(consts)
    fixpoint = False
    for _ in range(step_bound):
        new = set()
        items = list(current)
        for x in items:
            cand = [~x]
            cand.extend(cm_apply(s, op, [x]) for op in ops)
            for y in cand:
                if y not in current:
                    new.add(y)
        for x, y in itertools.combinations(items, 2):
            for z in (x | y, x & y):
                if z not in current:
                    new.add(z)
        if not new:
            fixpoint = True
            break
        current |= new
        if len(current) > size_cap:
            raise ValueError(f"term closure exceeded {size_cap} elements")
    return frozenset(current), fixpoint


def is_simple(s: CaAtomStructure, trials: int = 256, seed: int = 0xC0FFEE):
    """Discriminator check: c_0...c_{n-1} x must be the unit for nonzero x.

    Exhaustive over singletons, plus `trials` random nonempty sets.
    Returns (verdict, counterexample-or-None).
    """
    full = s.full()

    def discr(x: AtomSet) -> AtomSet:
        for i in range(s.n):
            x = cm_apply(s, ("c", i), [x])
        return x

    for a in range(s.atom_count):
        x = s.singleton(a)
        if discr(x) != full:
            return False, x
    rng = np.random.default_rng([seed, s.atom_count])
    w = K.words_for(s.atom_count)
    for _ in range(trials):
        words = rng.integers(0, 2**64, size=w, dtype=np.uint64)
        x = AtomSet(s.atom_count, words)
        if not x:
            continue
        if discr(x) != full:
            return False, x
    return True, None


# ---------------------------------------------------------------------------
# Explicit finite algebras (element tables) and the completion embedding.
# ---------------------------------------------------------------------------


@dataclass
class FiniteBao:
    """A finite atomic BAO given by explicit element tables.

    Elements are 0..size-1; `join` is a size x size table, `compl` a unary
    table; `unary_ops` maps operator ids to unary tables and `const_ops` maps
    diagonal ids to elements.  `atoms[k]` is the element matching frame atom k.
    """

    size: int
    join: np.ndarray
    compl: np.ndarray
    zero: int
    one: int
    atoms: list
    unary_ops: dict
    const_ops: dict

    def le(self, x: int, y: int) -> bool:
        return int(self.join[x, y]) == y


def powerset_algebra(s: CaAtomStructure) -> FiniteBao:
    """The full complex algebra of a small frame as an explicit table."""
    n = s.atom_count
    if n > 12:
        raise ValueError("explicit powerset tables are limited to 12 atoms")
    size = 1 << n
    elems = [AtomSet(n, K.pack_indices([i for i in range(n) if m >> i & 1], n)) for m in range(size)]
    index = {e: i for i, e in enumerate(elems)}
    join = np.empty((size, size), dtype=np.int64)
    for a in range(size):
        for b in range(size):
            join[a, b] = a | b
    compl = np.array([size - 1 ^ a for a in range(size)], dtype=np.int64)
    unary_ops = {}
    for op in signature_ops(s):
        table = np.empty(size, dtype=np.int64)
        for m in range(size):
            table[m] = index[cm_apply(s, op, [elems[m]])]
        unary_ops[op] = table
    const_ops = {}
    if "d" in _OPS[s.kind]:
        for i in range(s.n):
            for j in range(s.n):
                const_ops[("d", i, j)] = index[s.diag(i, j)]
    atoms = [1 << k for k in range(n)]
    return FiniteBao(size, join, compl, 0, size - 1, atoms, unary_ops, const_ops)


def completion_embed_check(algebra: FiniteBao, frame: CaAtomStructure):
    """Verify a |-> a* = {atoms below a} is a Boolean embedding of the algebra
    into Cm(frame) preserving every operator, and surjective (finite case).

    Returns (ok, failures) where failures is a list of readable findings.
    """
    n = frame.atom_count
    fails = []
    if len(algebra.atoms) != n:
        return False, [f"algebra has {len(algebra.atoms)} atoms, frame has {n}"]

    def star(a: int) -> AtomSet:
        return AtomSet.from_atoms(n, [k for k in range(n) if algebra.le(algebra.atoms[k], a)])

    stars = [star(a) for a in range(algebra.size)]
    if len(set(stars)) != algebra.size:
        fails.append("a -> a* is not injective")
    if stars[algebra.zero] != AtomSet.empty(n) or stars[algebra.one] != AtomSet.full(n):
        fails.append("a* does not send bounds to bounds")
    for a in range(algebra.size):
        for b in range(algebra.size):
            if stars[int(algebra.join[a, b])] != stars[a] | stars[b]:
                fails.append(f"join not preserved at ({a},{b})")
                break
        else:
            continue
        break
    for a in range(algebra.size):
        if stars[int(algebra.compl[a])] != ~stars[a]:
            fails.append(f"complement not preserved at {a}")
            break
    for op, table in algebra.unary_ops.items():
        for a in range(algebra.size):
            if stars[int(table[a])] != cm_apply(frame, op, [stars[a]]):
                fails.append(f"operator {op} not preserved at element {a}")
                break
    for op, elem in algebra.const_ops.items():
        if stars[int(elem)] != frame.diag(op[1], op[2]):
            fails.append(f"diagonal {op} not preserved")
    if not fails and algebra.size != (1 << n):
        fails.append("embedding is not surjective onto the complex algebra")
    return (not fails), fails


# ---------------------------------------------------------------------------
# Boolean algebras with a symmetric-group action, and the representation
# f(a) = {tau : s_tau(a) in F} over a principal ultrafilter F.
# ---------------------------------------------------------------------------


@dataclass
class TranspositionAlgebra:
    """Powerset Boolean algebra on `m` atoms with endomorphisms indexed by the
    permutations of 0..n-1.  Elements are bitmask ints; `atom_image[tau][b]`
    is the image of atom b under s_tau."""

    n: int
    m: int
    atom_image: dict

    def s(self, tau, x: int) -> int:
        out = 0
        imgs = self.atom_image[tau]
        b = 0
        while x >> b:
            if x >> b & 1:
                out |= imgs[b]
            b += 1
        return out

    def unit(self) -> int:
        return (1 << self.m) - 1


def _check_endomorphisms(alg: TranspositionAlgebra):
    perms = list(alg.atom_image)
    ident = tuple(range(alg.n))
    if ident not in alg.atom_image:
        raise ValueError("missing identity permutation")
    if any(alg.atom_image[ident][b] != 1 << b for b in range(alg.m)):
        raise ValueError("s_id is not the identity")
    for tau in perms:
        imgs = alg.atom_image[tau]
        cover = 0
        for b in range(alg.m):
            if cover & imgs[b]:
                raise ValueError(f"s_{tau} is not a Boolean endomorphism (atom images overlap)")
            cover |= imgs[b]
        if cover != alg.unit():
            raise ValueError(f"s_{tau} is not a Boolean endomorphism (atom images miss the unit)")
    # determine the composition convention and verify it
    def compose(a, b):
        return tuple(a[b[i]] for i in range(alg.n))

    for conv in ("left", "right"):
        ok = True
        for tau in perms:
            for sig in perms:
                want = compose(tau, sig) if conv == "left" else compose(sig, tau)
                if want not in alg.atom_image:
                    ok = False
                    break
                for b in range(alg.m):
                    if alg.s(tau, alg.s(sig, 1 << b)) != alg.s(want, 1 << b):
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            return conv
    raise ValueError("substitutions do not respect group composition")


def symmetric_group_repr(alg: TranspositionAlgebra, a: int):
    """Build f(x) = {tau : s_tau(x) in F} for F the principal ultrafilter of
    the least atom below `a`; verify f is a Boolean homomorphism.

    Returns (f, convention) with f a dict from elements actually probed; f is
    total over all elements when the algebra is small (m <= 12).
    """
    if a == 0:
        raise ValueError("a must be nonzero")
    convention = _check_endomorphisms(alg)
    u = (a & -a).bit_length() - 1  # least atom below a
    perms = list(alg.atom_image)

    def f(x: int):
        return frozenset(tau for tau in perms if alg.s(tau, x) >> u & 1)

    if alg.m <= 12:
        universe = range(1 << alg.m)
    else:
        universe = [0, alg.unit(), a, a ^ alg.unit()] + [1 << b for b in range(alg.m)]
    all_perms = frozenset(perms)
    for x in universe:
        if f(alg.unit() ^ x) != all_perms - f(x):
            raise AssertionError(f"f does not preserve complement at {x}")
    for x in universe:
        for y in (0, a, alg.unit()):
            if f(x | y) != f(x) | f(y):
                raise AssertionError(f"f does not preserve join at ({x},{y})")
    if not f(a):
        raise AssertionError("f(a) is empty")
    return f, convention


def right_translation_algebra(n: int) -> TranspositionAlgebra:
    """Powerset of the symmetric group S_n with s_tau = right translation."""
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    atom_image = {}
    for tau in perms:
        imgs = []
        for p in perms:
            q = tuple(p[tau[i]] for i in range(n))
            imgs.append(1 << index[q])
        atom_image[tau] = imgs
    return TranspositionAlgebra(n, len(perms), atom_image)


# ---------------------------------------------------------------------------
# JSON import/export of atom structures.
# ---------------------------------------------------------------------------


def to_json(s: CaAtomStructure) -> dict:
    doc = {
        "kind": s.kind,
        "n": s.n,
        "atoms": s.atom_count,
        "ci": [sorted(r.pairs()) for r in s.ci],
    }
    if "d" in _OPS[s.kind]:
        doc["dij"] = [
            K.unpack_indices(s.dij[(i, j)]) for i in range(s.n) for j in range(s.n)
        ]
    if "sr" in _OPS[s.kind]:
        doc["s_repl"] = {
            f"{i},{j}": (sorted(rel.pairs()) if (rel := s.repl_relation(i, j)) else None)
            for i in range(s.n)
            for j in range(s.n)
            if i != j
        }
    if "st" in _OPS[s.kind]:
        doc["s_transp"] = {
            f"{i},{j}": sorted(s.s_transp[(i, j)].pairs())
            for i in range(s.n)
            for j in range(i + 1, s.n)
        }
    return doc


def from_json(doc: dict) -> CaAtomStructure:
    n = doc["n"]
    kind = doc["kind"]
    count = doc["atoms"]
    ci = [Relation.from_pairs(count, doc["ci"][i]) for i in range(n)]
    dij = {}
    if "dij" in doc and doc["dij"] is not None:
        flat = doc["dij"]
        for i in range(n):
            for j in range(n):
                dij[(i, j)] = K.pack_indices(flat[i * n + j], count)
    s_repl = {}
    for key, pairs in (doc.get("s_repl") or {}).items():
        i, j = (int(t) for t in key.split(","))
        if pairs is not None:
            s_repl[(i, j)] = Relation.from_pairs(count, pairs)
    s_transp = {}
    for key, pairs in (doc.get("s_transp") or {}).items():
        i, j = (int(t) for t in key.split(","))
        s_transp[(i, j)] = Relation.from_pairs(count, pairs)
    return CaAtomStructure(
        n=n, kind=kind, atom_count=count, ci=ci, dij=dij, s_repl=s_repl, s_transp=s_transp
    )
