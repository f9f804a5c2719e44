"""Equational axiom tables for Df/Sc/CA and the polyadic-equality laws
Q1-Q11, plus the randomized/exhaustive checker over complex algebras.

The Q-table is reconstructed from the proof steps of the simplicity theorem
for the pair-structure algebras (the source axiomatization is external); it is
exported verbatim as docs/axiom_table.json.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .bao import CaAtomStructure, cm_apply
from .bitset import AtomSet

DEFAULT_SEED = 0xC0FFEE
DEFAULT_TRIALS = 10_000

# index quantifier tags
_QUANT = {
    "one": lambda n: [(i,) for i in range(n)],
    "lt": lambda n: [(i, j) for i in range(n) for j in range(i + 1, n)],
    "ne": lambda n: [(i, j) for i in range(n) for j in range(n) if i != j],
    "distinct3": lambda n: [t for t in itertools.permutations(range(n), 3)],
    "ne_plus_other": lambda n: [
        (i, j, k)
        for i in range(n)
        for j in range(n)
        if i != j
        for k in range(n)
        if k not in (i, j)
    ],
}


def _v(k):
    return ("var", k)


def _c(i, t):
    return ("c", i, t)


def _sr(i, j, t):
    return ("sr", i, j, t)


def _st(i, j, t):
    return ("st", i, j, t)


def _d(i, j):
    return ("diag", i, j)


X, Y = _v(0), _v(1)

# schema = (id, quantifier, index names, nvars, lhs builder, rhs builder)
DF_SCHEMAS = [
    ("C1", "one", ("i",), 1, lambda i: _c(i, ("zero",)), lambda i: ("zero",)),
    ("C2", "one", ("i",), 1, lambda i: ("inter", X, _c(i, X)), lambda i: X),
    ("C3", "one", ("i",), 2, lambda i: _c(i, ("inter", X, _c(i, Y))), lambda i: ("inter", _c(i, X), _c(i, Y))),
    ("C4", "lt", ("i", "j"), 1, lambda i, j: _c(i, _c(j, X)), lambda i, j: _c(j, _c(i, X))),
    ("Cadd", "one", ("i",), 2, lambda i: _c(i, ("union", X, Y)), lambda i: ("union", _c(i, X), _c(i, Y))),
]

CA_SCHEMAS = DF_SCHEMAS + [
    ("C5", "one", ("i",), 0, lambda i: _d(i, i), lambda i: ("one",)),
    ("Dsym", "lt", ("i", "j"), 0, lambda i, j: _d(i, j), lambda i, j: _d(j, i)),
    (
        "C6",
        "ne_plus_other",
        ("i", "j", "k"),
        0,
        lambda i, j, k: _d(i, j),
        lambda i, j, k: _c(k, ("inter", _d(i, k), _d(k, j))),
    ),
    (
        "C7",
        "ne",
        ("i", "j"),
        1,
        lambda i, j: ("inter", _c(i, ("inter", _d(i, j), X)), _c(i, ("inter", _d(i, j), ("compl", X)))),
        lambda i, j: ("zero",),
    ),
]

SC_SCHEMAS = DF_SCHEMAS + [
    ("SCadd", "ne", ("i", "j"), 2, lambda i, j: _sr(i, j, ("union", X, Y)), lambda i, j: ("union", _sr(i, j, X), _sr(i, j, Y))),
    ("SCcompl", "ne", ("i", "j"), 1, lambda i, j: _sr(i, j, ("compl", X)), lambda i, j: ("compl", _sr(i, j, X))),
    ("SCfix", "ne", ("i", "j"), 1, lambda i, j: _sr(i, j, _c(i, X)), lambda i, j: _c(i, X)),
    ("SCidem", "ne", ("i", "j"), 1, lambda i, j: _c(i, _sr(i, j, X)), lambda i, j: _sr(i, j, X)),
    (
        "SCcomm",
        "ne_plus_other",
        ("i", "j", "k"),
        1,
        lambda i, j, k: _sr(i, j, _c(k, X)),
        lambda i, j, k: _c(k, _sr(i, j, X)),
    ),
]

Q_SCHEMAS = [
    ("Q1", "one", ("i",), 1, lambda i: _sr(i, i, X), lambda i: X),
    ("Q2", "one", ("i",), 1, lambda i: _st(i, i, X), lambda i: X),
    ("Q3", "lt", ("i", "j"), 1, lambda i, j: _st(i, j, X), lambda i, j: _st(j, i, X)),
    ("Q4", "lt", ("i", "j"), 2, lambda i, j: _st(i, j, ("union", X, Y)), lambda i, j: ("union", _st(i, j, X), _st(i, j, Y))),
    ("Q5", "lt", ("i", "j"), 1, lambda i, j: _st(i, j, ("compl", X)), lambda i, j: ("compl", _st(i, j, X))),
    ("Q6", "ne", ("i", "j"), 2, lambda i, j: _sr(i, j, ("union", X, Y)), lambda i, j: ("union", _sr(i, j, X), _sr(i, j, Y))),
    ("Q7", "ne", ("i", "j"), 1, lambda i, j: _sr(i, j, ("compl", X)), lambda i, j: ("compl", _sr(i, j, X))),
    ("Q8", "lt", ("i", "j"), 1, lambda i, j: _st(i, j, _st(i, j, X)), lambda i, j: X),
    ("Q9", "ne", ("i", "j"), 1, lambda i, j: _st(i, j, _sr(i, j, X)), lambda i, j: _sr(j, i, X)),
    (
        "Q10",
        "distinct3",
        ("i", "j", "k"),
        1,
        lambda i, j, k: _st(i, j, _st(i, k, X)),
        lambda i, j, k: _st(j, k, _st(i, j, X)),
    ),
    ("Q11", "ne", ("i", "j"), 1, lambda i, j: _sr(i, j, X), lambda i, j: _c(i, ("inter", _d(i, j), X))),
]

SYSTEMS = {
    "Df": DF_SCHEMAS,
    "Sc": SC_SCHEMAS,
    "CA": CA_SCHEMAS,
    "Q": Q_SCHEMAS,
    "QEA": CA_SCHEMAS + Q_SCHEMAS,
}


@dataclass(frozen=True)
class AxiomInstance:
    axiom_id: str
    nvars: int
    lhs: tuple
    rhs: tuple


@dataclass
class AxiomReport:
    axiom_id: str
    status: str  # "pass" | "fail"
    counterexample: list = None  # list of atom-id lists, one per variable
    trials: int = 0
    seed: int = None
    mode: str = "randomized"

    def to_json(self):
        return {
            "axiom": self.axiom_id,
            "status": self.status,
            "counterexample": self.counterexample,
            "trials": self.trials,
            "seed": self.seed,
            "mode": self.mode,
        }


def instances(system: str, n: int):
    try:
        schemas = SYSTEMS[system]
    except KeyError:
        raise ValueError(f"unknown axiom system {system!r} (one of {sorted(SYSTEMS)})")
    out = []
    for name, quant, idx_names, nvars, lhs, rhs in schemas:
        for idx in _QUANT[quant](n):
            tag = ",".join(f"{nm}={v}" for nm, v in zip(idx_names, idx))
            out.append(AxiomInstance(f"{name}[{tag}]", nvars, lhs(*idx), rhs(*idx)))
    return out


def eval_words(s: CaAtomStructure, term, env) -> np.ndarray:
    """Evaluate a term over raw packed-word arrays (the hot path)."""
    head = term[0]
    if head == "var":
        return env[term[1]]
    if head == "zero":
        return K.empty_words(s.atom_count)
    if head == "one":
        return K.full_words(s.atom_count)
    if head == "diag":
        return s.dij[(term[1], term[2])]
    if head == "compl":
        return K.mask_tail(~eval_words(s, term[1], env), s.atom_count)
    if head == "union":
        return eval_words(s, term[1], env) | eval_words(s, term[2], env)
    if head == "inter":
        return eval_words(s, term[1], env) & eval_words(s, term[2], env)
    if head == "c":
        return s.ci[term[1]].image_words(eval_words(s, term[2], env))
    if head == "sr":
        i, j = term[1], term[2]
        inner = eval_words(s, term[3], env)
        if i == j:
            return inner
        rel = s.repl_relation(i, j)
        if rel is not None:
            return rel.image_words(inner)
        return s.ci[i].image_words(inner & s.dij[(i, j)])
    if head == "st":
        i, j = term[1], term[2]
        inner = eval_words(s, term[3], env)
        if i == j:
            return inner
        key = (min(i, j), max(i, j))
        return s.s_transp[key].image_words(inner)
    raise ValueError(f"bad term {term!r}")


def eval_term(s: CaAtomStructure, term, env) -> AtomSet:
    return AtomSet(s.atom_count, eval_words(s, term, [x.words for x in env]))


def holds(s: CaAtomStructure, inst: AxiomInstance, env) -> bool:
    words = [x.words for x in env]
    return np.array_equal(eval_words(s, inst.lhs, words), eval_words(s, inst.rhs, words))


def _check_instance_random(s, inst, trials, seed, inst_idx):
    rng = np.random.default_rng([seed, inst_idx])
    w = K.words_for(s.atom_count)
    batch = rng.integers(0, 2**64, size=(trials, max(inst.nvars, 1), w), dtype=np.uint64)
    batch[..., -1] &= K.full_words(s.atom_count)[-1]
    for t in range(trials):
        env = [batch[t, v] for v in range(inst.nvars)]
        if not np.array_equal(eval_words(s, inst.lhs, env), eval_words(s, inst.rhs, env)):
            sets = [AtomSet(s.atom_count, env[v].copy()) for v in range(inst.nvars)]
            return AxiomReport(
                inst.axiom_id, "fail", [x.ids() for x in sets], t + 1, seed, "randomized"
            )
    return AxiomReport(inst.axiom_id, "pass", None, trials, seed, "randomized")


def _check_instance_exhaustive(s, inst, cap):
    n = s.atom_count
    total = n**inst.nvars
    if total > cap:
        raise ValueError(
            f"{inst.axiom_id}: exhaustive singleton pass needs {total} instantiations (cap {cap}); "
            "use randomized mode"
        )
    if inst.nvars == 0:
        ok = np.array_equal(eval_words(s, inst.lhs, []), eval_words(s, inst.rhs, []))
        return AxiomReport(inst.axiom_id, "pass" if ok else "fail", None if ok else [], 1, None, "exhaustive-atoms")
    singles = [K.pack_indices([a], n) for a in range(n)]
    for ids in itertools.product(range(n), repeat=inst.nvars):
        env = [singles[a] for a in ids]
        if not np.array_equal(eval_words(s, inst.lhs, env), eval_words(s, inst.rhs, env)):
            return AxiomReport(
                inst.axiom_id, "fail", [[a] for a in ids], total, None, "exhaustive-atoms"
            )
    return AxiomReport(inst.axiom_id, "pass", None, total, None, "exhaustive-atoms")


def check_axioms(
    s: CaAtomStructure,
    system: str,
    mode: str = "randomized",
    trials: int = DEFAULT_TRIALS,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
    exhaustive_cap: int = 250_000,
):
    """Check an equation system over Cm(s).

    mode "randomized": `trials` seeded random element tuples per axiom
    instance (trial streams are deterministic per instance, so the result is
    independent of `jobs`).  mode "exhaustive-atoms": all singleton
    instantiations.  A fail is reported data, not an exception.
    """
    insts = instances(system, s.n)

    def run(pair):
        idx, inst = pair
        if mode == "randomized":
            return _check_instance_random(s, inst, trials, seed, idx)
        if mode == "exhaustive-atoms":
            return _check_instance_exhaustive(s, inst, exhaustive_cap)
        raise ValueError(f"unknown mode {mode!r}")

    work = list(enumerate(insts))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, work))
    return [run(p) for p in work]


def replay(s: CaAtomStructure, report: AxiomReport) -> bool:
    """True iff the recorded counterexample still violates its axiom."""
    if report.status != "fail" or report.counterexample is None:
        return False
    inst = next(i for i in instances_from_id(report.axiom_id, s.n))
    env = [AtomSet.from_atoms(s.atom_count, ids) for ids in report.counterexample]
    return not holds(s, inst, env)


def instances_from_id(axiom_id: str, n: int):
    name = axiom_id.split("[")[0]
    for system in ("QEA", "Sc", "Df"):
        for inst in instances(system, n):
            if inst.axiom_id == axiom_id:
                yield inst
                return
    raise ValueError(f"unknown axiom id {axiom_id}")


def table_json(n: int = 3) -> dict:
    """Machine-readable dump of every axiom instance at dimension n."""
    doc = {"dimension": n, "systems": {}}
    for system in ("Df", "Sc", "CA", "Q"):
        doc["systems"][system] = [
            {"id": i.axiom_id, "vars": i.nvars, "lhs": _term_json(i.lhs), "rhs": _term_json(i.rhs)}
            for i in instances(system, n)
        ]
    return doc


def _term_json(t):
    return [t[0]] + [_term_json(x) if isinstance(x, tuple) else x for x in t[1:]]
