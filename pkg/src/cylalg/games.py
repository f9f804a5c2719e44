"""Adversarial extension games on atom-labelled boards.

Two board families are supported: edge-labelled networks over a relation
algebra (the basic-matrix view of matrix structures) and rainbow coloured
graphs.  The solver runs exact minimax with memoization on canonicalized
positions; scripted attackers and defenders plug into the same engine, and a
certification mode exhausts every defender reply against a scripted attacker.

Round/board bookkeeping (recorded interpretation): one cylindrifier demand
per round; the defender must return a coherent board or loses immediately;
the `Gk` kind adds fresh nodes while `Fm` lets the attacker recycle pebbles,
the node count never exceeding the budget in either case.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

import numpy as np

from .bao import CaAtomStructure
from .ra import RaAtomStructure
from . import rainbow as rb


@dataclass(frozen=True)
class GameConfig:
    kind: str  # "Gk" | "Fm" | "AmalgJ"
    rounds: int
    node_budget: int
    lambda_neat: bool = True
    alphabet: int = 1

    def __post_init__(self):
        if self.rounds < 0 or self.node_budget < 1:
            raise ValueError("rounds must be >= 0 and node_budget >= 1")
        if self.kind not in ("Gk", "Fm", "AmalgJ"):
            raise ValueError(f"unknown game kind {self.kind!r}")


@dataclass
class SolveResult:
    winner: str  # "ForAll" | "Exists" | "None"
    depth: int
    states: int
    certificate: object = None


@dataclass
class Transcript:
    moves: list = field(default_factory=list)
    winner: str = "None"

    def to_json(self):
        return {"winner": self.winner, "moves": [str(m) for m in self.moves]}


# ---------------------------------------------------------------------------
# Edge-labelled networks over a relation algebra (matrix-backed games).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeBoard:
    """Strict network in the edge view: atom labels on unordered pairs of
    nodes, identity labels only implicitly on loops."""

    nodes: tuple
    edges: dict

    def label(self, u, v):
        return self.edges.get((min(u, v), max(u, v)))

    def with_node_edges(self, node, new_edges):
        nodes = tuple(list(self.nodes) + [node])
        edges = dict(self.edges)
        for (u, v), a in new_edges.items():
            edges[(min(u, v), max(u, v))] = a
        return EdgeBoard(nodes, edges)

    def without_node(self, node):
        return EdgeBoard(
            tuple(x for x in self.nodes if x != node),
            {k: v for k, v in self.edges.items() if node not in k},
        )

    def canonical(self):
        """Lexicographically least relabelling (small boards only)."""
        best = None
        ids = list(self.nodes)
        for perm in itertools.permutations(range(len(ids))):
            ren = {ids[k]: perm[k] for k in range(len(ids))}
            sig = tuple(
                sorted(((min(ren[u], ren[v]), max(ren[u], ren[v])), a) for (u, v), a in self.edges.items())
            )
            if best is None or sig < best:
                best = sig
        return (len(self.nodes), best)


def edge_board_consistent(ras: RaAtomStructure, board: EdgeBoard) -> bool:
    ident = next(iter(ras.identity))
    for (u, v), a in board.edges.items():
        if a == ident:
            return False  # strictness: distinct nodes never identity-labelled
    for x, y, z in itertools.combinations(sorted(board.nodes), 3):
        if not ras.cons[board.label(x, y), board.label(x, z), board.label(z, y)]:
            return False
    return True


@dataclass(frozen=True)
class SplitDemand:
    """Attack: split the label on (x, y) through a witness point carrying
    (x, z) -> a and (z, y) -> b; `target` is "fresh" or a node to recycle."""

    x: int
    y: int
    a: int
    b: int
    target: object = "fresh"

    def __str__(self):
        return f"split({self.x},{self.y})->({self.a};{self.b})@{self.target}"


class MatrixGame:
    """Game driver over a matrix-backed structure (or any self-converse RA)."""

    def __init__(self, structure: CaAtomStructure = None, ras: RaAtomStructure = None):
        if ras is None:
            ras = structure.payload.get("ra")
        if ras is None:
            raise ValueError("matrix games need the backing relation algebra")
        self.ras = ras
        self.ident = next(iter(ras.identity))
        self.atoms = [a for a in range(ras.atom_count)]
        self.nonid = [a for a in self.atoms if a != self.ident]
        self.splits = [
            [(int(a), int(b)) for a, b in np.argwhere(ras.cons[x])]
            for x in range(ras.atom_count)
        ]

    def initial_boards(self):
        """One-edge starting boards, one per non-identity atom."""
        return [EdgeBoard((0, 1), {(0, 1): a}) for a in self.nonid]

    def demands(self, board: EdgeBoard, cfg: GameConfig):
        fresh_ok = len(board.nodes) < cfg.node_budget
        if fresh_ok:
            targets = ["fresh"]
        elif cfg.kind == "Fm":
            targets = list(board.nodes)
        else:
            targets = [None]  # board full in Gk: only existing witnesses count
        for x in board.nodes:
            for y in board.nodes:
                if x == y:
                    continue
                lab = board.label(x, y)
                for a, b in self.splits[lab]:
                    for tgt in targets:
                        if tgt in (x, y):
                            continue
                        yield SplitDemand(x, y, a, b, tgt)

    def responses(self, board: EdgeBoard, demand: SplitDemand):
        """Coherent boards answering the demand, lazily: existing witnesses
        first, then completions around a new node, in atom order."""
        x, y, a, b = demand.x, demand.y, demand.a, demand.b
        lab = board.label(x, y)
        if lab is None or not self.ras.cons[lab, a, b]:
            return  # illegal demand
        for z in sorted(board.nodes):
            if z == x:
                if a == self.ident and board.label(x, y) == b:
                    yield board
                continue
            if z == y:
                if b == self.ident and board.label(x, y) == a:
                    yield board
                continue
            if board.label(x, z) == a and board.label(z, y) == b:
                yield board
        if a == self.ident or b == self.ident or demand.target is None:
            return
        base = board
        if demand.target != "fresh":
            if demand.target in (x, y):
                return
            base = board.without_node(demand.target)
        z = (max(base.nodes) + 1) if base.nodes else 0
        others = [w for w in base.nodes if w not in (x, y)]
        prefix = {(x, z): a, (y, z): b}  # z exceeds every node id

        def extend(k, acc):
            if k == len(others):
                cand = base.with_node_edges(z, dict(acc))
                if edge_board_consistent(self.ras, cand):
                    yield cand
                return
            w = others[k]
            for c in self.nonid:
                acc[(w, z)] = c
                ok = True
                for v in base.nodes:
                    if v == w:
                        continue
                    lv = acc.get((v, z))
                    if lv is None:
                        continue
                    if not self.ras.cons[base.label(w, v), c, lv]:
                        ok = False
                        break
                if ok:
                    yield from extend(k + 1, acc)
                del acc[(w, z)]

        yield from extend(0, dict(prefix))

    def canonical(self, board: EdgeBoard):
        return board.canonical()


def _dedup(boards):
    seen = set()
    out = []
    for b in boards:
        key = (b.nodes, tuple(sorted(b.edges.items())))
        if key not in seen:
            seen.add(key)
            out.append(b)
    return out


# ---------------------------------------------------------------------------
# Rainbow games.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RainbowBoard:
    graph: rb.ColouredGraph
    base: tuple
    apexes: tuple  # (node, tint) in age order

    @property
    def payload(self):
        return {"base": self.base, "apexes": [a for a, _ in self.apexes]}

    def age_key(self):
        order = list(self.base) + [a for a, _ in self.apexes]
        ren = {node: k for k, node in enumerate(order)}
        edges = tuple(
            sorted(
                ((min(ren[u], ren[v]), max(ren[u], ren[v])),
                 lab if (ren[u] < ren[v]) == (u < v) else rb.flip(lab))
                for (u, v), lab in self.graph.edges.items()
            )
        )
        yellows = tuple(
            sorted((tuple(sorted(ren[c] for c in b)), tuple(sorted(s)))
                   for b, s in self.graph.yellows.items())
        )
        tints = tuple(t for _, t in self.apexes)
        return (edges, yellows, tints)


def rainbow_initial(palette: rb.Palette) -> RainbowBoard:
    """The (n-1)-node base: pairwise w_0 with the full yellow set."""
    n = palette.n
    cg = rb.ColouredGraph(n, tuple(range(n - 1)), {})
    for u, v in itertools.combinations(range(n - 1), 2):
        cg = cg.with_edge(u, v, ("w", 0))
    if n >= 3:
        cg = cg.with_yellow(range(n - 1), palette.yellow_universe)
    return RainbowBoard(cg, tuple(range(n - 1)), ())


class RainbowGame:
    def __init__(self, palette: rb.Palette, table: rb.ConsistencyTable = None):
        self.palette = palette
        self.table = table or rb.default_table(palette)

    def apply_demand(self, board: RainbowBoard, demand: rb.ConeDemand):
        """Attach the demanded cone apex; returns the partial board and the
        new node id, or None when the demand is illegal."""
        base = demand.base
        tints = board.graph.yellows.get(frozenset(base))
        if tints is None or demand.tint not in tints:
            return None
        g = board.graph
        apexes = board.apexes
        if demand.apex_hint != "fresh":
            if demand.apex_hint not in g.nodes or demand.apex_hint in base:
                return None
            g = g.without_node(demand.apex_hint)
            apexes = tuple(a for a in apexes if a[0] != demand.apex_hint)
        node = max(g.nodes) + 1
        g = g.with_node(node)
        g = g.with_edge(base[0], node, ("g0", demand.tint))
        for k in range(1, self.palette.n - 1):
            g = g.with_edge(base[k], node, ("gi", k))
        return RainbowBoard(g, board.base, apexes + ((node, demand.tint),)), node

    def responses(self, board: RainbowBoard, node):
        """All consistent completions of the new node's remaining edges; new
        green-free bases get the full yellow set (never a worse choice for
        the defender, since the cone rule is monotone in the set)."""
        g = board.graph
        rest = sorted(w for w in g.nodes if w != node and g.label(w, node) is None)
        colours = self.palette.edge_colours(with_rho=False)
        out = []

        def extend(k, cur):
            if k == len(rest):
                full = cur
                for subset in itertools.combinations(sorted(full.nodes), self.palette.n - 1):
                    if frozenset(subset) in full.yellows:
                        continue
                    if any(
                        rb.is_green(full.label(u, v))
                        for u, v in itertools.combinations(subset, 2)
                    ):
                        continue
                    full = full.with_yellow(subset, self.palette.yellow_universe)
                ok, _ = rb.check_consistency(full, self.table)
                if ok:
                    out.append(replace(board, graph=full))
                return
            w = rest[k]
            for lab in colours:
                cand = cur.with_edge(w, node, lab)
                ok = True
                for v in cand.nodes:
                    if v in (w, node):
                        continue
                    if cand.label(w, v) is not None and cand.label(v, node) is not None:
                        trio = sorted((w, v, node))
                        if not self.table.triangle_ok(
                            cand.label(trio[0], trio[1]),
                            cand.label(trio[1], trio[2]),
                            cand.label(trio[0], trio[2]),
                        ):
                            ok = False
                            break
                if ok:
                    extend(k + 1, cand)

        extend(0, g)
        return out

    def canonical(self, board: RainbowBoard):
        return board.age_key()


def certify_forall(game: RainbowGame, script, cfg: GameConfig):
    """Run the scripted attacker against an exhaustive defender.

    Returns a SolveResult: winner "ForAll" iff every defender reply tree ends
    with the defender stuck within cfg.rounds; an escaping branch (a surviving
    board at the round horizon) is attached as the certificate otherwise.
    """
    memo = {}
    stats = {"states": 0, "depth": 0}

    def walk(board, script_state, round_no):
        key = (game.canonical(board), script_state, round_no)
        if key in memo:
            return memo[key]
        stats["states"] += 1
        stats["depth"] = max(stats["depth"], round_no)
        if round_no >= cfg.rounds:
            memo[key] = ("Exists", board)
            return memo[key]
        demand, nxt = script.move(board, script_state, cfg.node_budget)
        if demand is None:
            memo[key] = ("Exists", board)
            return memo[key]
        applied = game.apply_demand(board, demand)
        if applied is None:
            raise ValueError(f"script produced an illegal demand: {demand}")
        partial, node = applied
        replies = game.responses(partial, node)
        if not replies:
            memo[key] = ("ForAll", None)
            return memo[key]
        for reply in replies:
            verdict, escape = walk(reply, nxt, round_no + 1)
            if verdict == "Exists":
                memo[key] = ("Exists", escape)
                return memo[key]
        memo[key] = ("ForAll", None)
        return memo[key]

    board = rainbow_initial(game.palette)
    verdict, escape = walk(board, 0, 0)
    return SolveResult(verdict, stats["depth"], stats["states"], certificate=escape)


# ---------------------------------------------------------------------------
# Exact solving (both players search) for matrix-backed games.
# ---------------------------------------------------------------------------


def solve(structure_or_game, cfg: GameConfig, max_states: int = 2_000_000) -> SolveResult:
    """Exact minimax for `Gk`/`Fm` games on matrix-backed structures.

    The attacker wins a state iff some demand defeats every defender reply
    within the remaining rounds; the defender wins by surviving.  Memoized on
    (canonical board, rounds left); raises if max_states is exceeded."""
    if cfg.rounds == 0:
        return SolveResult("None", 0, 0)
    game = structure_or_game if isinstance(structure_or_game, MatrixGame) else MatrixGame(structure_or_game)
    memo = {}
    stats = {"states": 0}
    strategy = {}

    def forall_wins(board, rounds_left):
        key = (game.canonical(board), rounds_left)
        if key in memo:
            return memo[key]
        stats["states"] += 1
        if stats["states"] > max_states:
            raise RuntimeError(f"solver exceeded {max_states} states")
        if rounds_left == 0:
            memo[key] = False
            return False
        result = False
        for demand in game.demands(board, cfg):
            demand_wins = True
            any_reply = False
            for r in game.responses(board, demand):
                any_reply = True
                if not forall_wins(r, rounds_left - 1):
                    demand_wins = False
                    break
            if not any_reply or demand_wins:
                result = True
                strategy[key] = demand
                break
        memo[key] = result
        return result

    # the attacker also picks the starting atom
    boards = game.initial_boards()
    forall_some = any(forall_wins(b, cfg.rounds) for b in boards)
    winner = "ForAll" if forall_some else "Exists"
    return SolveResult(winner, cfg.rounds, stats["states"], certificate=strategy)


def replay_certificate(game: MatrixGame, cfg: GameConfig, result: SolveResult) -> bool:
    """Walk the recorded attacker strategy against exhaustive defender replies
    and confirm the claimed winner."""
    if result.winner != "ForAll":
        return result.winner in ("Exists", "None")

    memo = {}

    def walk(board, rounds_left):
        key = (game.canonical(board), rounds_left)
        if key in memo:
            return memo[key]
        demand = result.certificate.get(key)
        if rounds_left == 0 or demand is None:
            memo[key] = False
            return False
        replies = list(game.responses(board, demand))
        memo[key] = bool(replies) and all(walk(r, rounds_left - 1) for r in replies)
        if not replies:
            memo[key] = True
        return memo[key]

    return any(walk(b, cfg.rounds) for b in game.initial_boards())


def play(game, cfg: GameConfig, strategy_a, strategy_e) -> Transcript:
    """Move-by-move playback on a matrix-backed game.

    strategy_a: "search" or an object with .move(board, state, budget);
    strategy_e: "search" (first coherent reply in deterministic order) or
    "least" (identical here: replies are generated least-atom-first).
    """
    t = Transcript()
    if cfg.rounds == 0:
        return t
    board = game.initial_boards()[0]
    a_state = 0
    for _ in range(cfg.rounds):
        if strategy_a == "search":
            demand = None
            first = None
            for d in game.demands(board, cfg):
                first = first or d
                if next(game.responses(board, d), None) is None:
                    demand = d  # a killing demand, take it
                    break
            demand = demand or first
            if demand is None:
                t.winner = "Exists"
                return t
        else:
            demand, a_state = strategy_a.move(board, a_state, cfg.node_budget)
            if demand is None:
                t.winner = "Exists"
                return t
        t.moves.append(("A", demand))
        reply = next(game.responses(board, demand), None)
        if reply is None:
            t.winner = "ForAll"
            return t
        board = reply
        t.moves.append(("E", board))
    t.winner = "Exists"
    return t


def legal_extensions(structure: CaAtomStructure, board: EdgeBoard, demand: SplitDemand):
    """All coherent boards answering a split demand on a matrix-backed
    structure's network (edge view)."""
    return MatrixGame(structure).responses(board, demand)


# ---------------------------------------------------------------------------
# Hypernetworks: a network plus hyperlabels on tuples of length != 2.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Hypernetwork:
    board: EdgeBoard
    n_wide: int
    hyper: dict = field(default_factory=dict)  # tuple(len != 2, <= n_wide) -> label
    lambda0: int = 0

    def nodes(self):
        return self.board.nodes

    def hyperlabel(self, tup):
        return self.hyper.get(tuple(tup), self.lambda0)

    def lambda_neat(self) -> bool:
        return all(v == self.lambda0 for v in self.hyper.values())

    def transform(self, theta: dict) -> "Hypernetwork":
        """Pull back through a partial finite surjection theta (new -> old)."""
        new_nodes = tuple(sorted(theta))
        edges = {}
        for u, v in itertools.combinations(new_nodes, 2):
            lab = self.board.label(theta[u], theta[v])
            if theta[u] == theta[v]:
                raise ValueError("transformation collapsed an edge onto a loop")
            if lab is None:
                raise ValueError("transformation hit an unlabelled pair")
            edges[(u, v)] = lab
        hyper = {}
        for ln in range(1, self.n_wide + 1):
            if ln == 2:
                continue
            for tup in itertools.product(new_nodes, repeat=ln):
                old = tuple(theta[t] for t in tup)
                if old in self.hyper:
                    hyper[tup] = self.hyper[old]
        return Hypernetwork(EdgeBoard(new_nodes, edges), self.n_wide, hyper, self.lambda0)


def hyper_overlap_agrees(m1: Hypernetwork, m2: Hypernetwork) -> bool:
    shared = set(m1.nodes()) & set(m2.nodes())
    for u, v in itertools.combinations(sorted(shared), 2):
        if m1.board.label(u, v) != m2.board.label(u, v):
            return False
    for ln in range(1, m1.n_wide + 1):
        if ln == 2:
            continue
        for tup in itertools.product(sorted(shared), repeat=ln):
            if m1.hyperlabel(tup) != m2.hyperlabel(tup):
                return False
    return True


@dataclass
class AmalgamationDemand:
    m1: Hypernetwork
    m2: Hypernetwork


def amalg_moves(m1: Hypernetwork, m2: Hypernetwork):
    """The attacker's amalgamation move: legal iff the two hypernetworks agree
    on a nonempty node overlap; returns the demand or the string reason."""
    if not set(m1.nodes()) & set(m2.nodes()):
        return "rejected: empty overlap"
    if not hyper_overlap_agrees(m1, m2):
        return "rejected: overlap disagreement"
    return AmalgamationDemand(m1, m2)


def amalg_respond(ras: RaAtomStructure, demand: AmalgamationDemand):
    """Search a lambda0-neat hypernetwork on the node union extending both
    sides; exhaustive over the cross-pair labels."""
    m1, m2 = demand.m1, demand.m2
    union = tuple(sorted(set(m1.nodes()) | set(m2.nodes())))
    only1 = [u for u in m1.nodes() if u not in m2.nodes()]
    only2 = [v for v in m2.nodes() if v not in m1.nodes()]
    edges = dict(m1.board.edges)
    edges.update(m2.board.edges)
    cross = [(u, v) for u in only1 for v in only2]
    ident = next(iter(ras.identity))
    nonid = [a for a in range(ras.atom_count) if a != ident]

    def extend(k, acc):
        if k == len(cross):
            board = EdgeBoard(union, dict(acc))
            if edge_board_consistent(ras, board):
                return Hypernetwork(board, m1.n_wide, {}, m1.lambda0)
            return None
        u, v = cross[k]
        for a in nonid:
            acc[(min(u, v), max(u, v))] = a
            good = True
            for w in union:
                if w in (u, v):
                    continue
                l1 = acc.get((min(u, w), max(u, w)))
                l2 = acc.get((min(w, v), max(w, v)))
                if l1 is not None and l2 is not None and not ras.cons[acc[(min(u, v), max(u, v))], l1, l2]:
                    good = False
                    break
            if good:
                got = extend(k + 1, acc)
                if got is not None:
                    return got
            del acc[(min(u, v), max(u, v))]
        return None

    return extend(0, dict(edges))
