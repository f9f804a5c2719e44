import pytest

from cylalg import games, graphs as G, ra
from cylalg import rainbow as rb


@pytest.fixture(scope="module")
def mats_k2():
    return ra.basic_matrices(ra.graph_ra(G.complete(2), 3), 3)


@pytest.fixture(scope="module")
def game_k2(mats_k2):
    return games.MatrixGame(mats_k2)


@pytest.fixture(scope="module")
def mats_c5():
    return ra.basic_matrices(ra.graph_ra(G.cycle(5), 3), 3)


# --- extension machinery -----------------------------------------------------------


def test_demand_already_satisfied_returns_board(game_k2):
    ras = game_k2.ras
    # a 3-node board where the split is already realized internally
    a, b = game_k2.nonid[0], game_k2.nonid[1]
    target = next(
        c for c in game_k2.nonid if ras.cons[c, a, b]
    )
    board = games.EdgeBoard((0, 1, 2), {(0, 2): a, (2, 1): b, (0, 1): target})
    assert games.edge_board_consistent(ras, board)
    got = list(game_k2.responses(board, games.SplitDemand(0, 1, a, b, "fresh")))
    assert board in got


def test_every_demand_extendable_within_4_nodes(mats_c5):
    # the basis property restated: on a one-edge board every split demand has
    # an extension adding at most one node
    game = games.MatrixGame(mats_c5)
    cfg = games.GameConfig("Gk", rounds=1, node_budget=4)
    for board in game.initial_boards():
        for demand in game.demands(board, cfg):
            assert next(game.responses(board, demand), None) is not None


def test_dead_atom_yields_no_extension():
    # a custom structure whose atom 1 never splits: composition is empty
    import numpy as np

    n = 3
    cons = np.zeros((n, n, n), dtype=bool)
    for x in range(n):
        cons[x, 0, x] = cons[x, x, 0] = True
    cons[0, 0, 0] = True
    # atoms 1 and 2 never compose with anything non-identity
    bad = ra.RaAtomStructure(n, frozenset([0]), np.arange(n), cons)
    game = games.MatrixGame(ras=bad)
    board = games.EdgeBoard((0, 1), {(0, 1): 1})
    demand = games.SplitDemand(0, 1, 2, 2, "fresh")
    assert list(game.responses(board, demand)) == []


def test_legal_extensions_wrapper(mats_k2, game_k2):
    board = game_k2.initial_boards()[0]
    demand = next(iter(game_k2.demands(board, games.GameConfig("Gk", 1, 4))))
    assert list(games.legal_extensions(mats_k2, board, demand)) == list(
        game_k2.responses(board, demand)
    )


def test_extensions_are_consistent(game_k2):
    board = game_k2.initial_boards()[3]
    cfg = games.GameConfig("Gk", rounds=1, node_budget=4)
    for demand in list(game_k2.demands(board, cfg))[:40]:
        for reply in game_k2.responses(board, demand):
            assert games.edge_board_consistent(game_k2.ras, reply)


# --- solving -----------------------------------------------------------------------


def test_zero_rounds_no_winner(game_k2):
    res = games.solve(game_k2, games.GameConfig("Gk", rounds=0, node_budget=4))
    assert res.winner == "None"


def test_one_atom_structure_defender_wins():
    import numpy as np

    cons = np.ones((1, 1, 1), dtype=bool)
    one = ra.RaAtomStructure(1, frozenset([0]), np.zeros(1, dtype=np.int64), cons)
    game = games.MatrixGame(ras=one)
    # no non-identity atoms: the attacker has no opening move
    res = games.solve(game, games.GameConfig("Gk", rounds=3, node_budget=4))
    assert res.winner == "Exists"


def test_defender_survives_g1_g2_on_c5(mats_c5):
    game = games.MatrixGame(mats_c5)
    for k in (1, 2):
        res = games.solve(game, games.GameConfig("Gk", rounds=k, node_budget=5))
        assert res.winner == "Exists"


def test_attacker_wins_when_budget_binds(game_k2):
    cfg = games.GameConfig("Gk", rounds=3, node_budget=4)
    res = games.solve(game_k2, cfg)
    assert res.winner == "ForAll"
    assert games.replay_certificate(game_k2, cfg, res)


def test_solve_monotone_in_rounds(game_k2):
    # once the attacker wins in r rounds he wins in r' >= r
    winners = {}
    for k in (2, 3, 4):
        winners[k] = games.solve(game_k2, games.GameConfig("Gk", rounds=k, node_budget=4)).winner
    if winners[3] == "ForAll":
        assert winners[4] == "ForAll"
    assert winners[2] in ("ForAll", "Exists")


def test_canonical_merges_isomorphic_positions(game_k2):
    b1 = games.EdgeBoard((0, 1), {(0, 1): game_k2.nonid[0]})
    b2 = games.EdgeBoard((4, 7), {(4, 7): game_k2.nonid[0]})
    assert game_k2.canonical(b1) == game_k2.canonical(b2)
    cfg = games.GameConfig("Gk", rounds=2, node_budget=4)
    r1 = games.solve(game_k2, cfg)
    r2 = games.solve(game_k2, cfg)
    assert r1.winner == r2.winner and r1.states == r2.states


def test_play_transcript_shapes(mats_c5):
    game = games.MatrixGame(mats_c5)
    t0 = games.play(game, games.GameConfig("Gk", rounds=0, node_budget=5), "search", "least")
    assert t0.winner == "None" and t0.moves == []
    t3 = games.play(game, games.GameConfig("Gk", rounds=3, node_budget=5), "search", "least")
    assert t3.winner == "Exists" and len(t3.moves) == 6


# --- rainbow certification -----------------------------------------------------------


def test_pigeonhole_clash_at_budget_seven():
    pal = rb.smooth_preset(3)
    res = games.certify_forall(
        games.RainbowGame(pal),
        rb.ConePigeonholeScript(pal),
        games.GameConfig("Fm", rounds=8, node_budget=7),
    )
    assert res.winner == "ForAll"
    assert res.depth == 4  # the defender survives exactly R_count rounds


def test_pigeonhole_survives_at_budget_six():
    pal = rb.smooth_preset(3)
    res = games.certify_forall(
        games.RainbowGame(pal),
        rb.ConePigeonholeScript(pal),
        games.GameConfig("Fm", rounds=8, node_budget=6),
    )
    assert res.winner == "Exists"


def test_pigeonhole_negative_control_generous_carrier():
    cones = 6
    pal = rb.Palette(3, tuple(range(5)), tuple(range(cones * (cones - 1) // 2)))
    res = games.certify_forall(
        games.RainbowGame(pal),
        rb.ConePigeonholeScript(pal, cones=cones),
        games.GameConfig("Fm", rounds=8, node_budget=7),
    )
    assert res.winner == "Exists"


@pytest.mark.parametrize("q", [2, 3])
def test_red_descent_wins_within_bound(q):
    pal = rb.descent_preset(q)
    res = games.certify_forall(
        games.RainbowGame(pal),
        rb.RedDescentScript(pal),
        games.GameConfig("Fm", rounds=q + 3, node_budget=6),
    )
    assert res.winner == "ForAll"
    assert res.depth <= q + 3


def test_descent_round_two_forces_ordered_reds():
    pal = rb.descent_preset(3)
    game = games.RainbowGame(pal)
    script = rb.RedDescentScript(pal)
    cfg = games.GameConfig("Fm", rounds=2, node_budget=6)
    res = games.certify_forall(game, script, cfg)
    assert res.winner == "Exists"  # two rounds are survivable
    board = res.certificate
    (a1, t1), (a2, t2) = board.apexes
    red = board.graph.label(a1, a2)
    assert red[0] == "r"
    # the strictly smaller tint carries the strictly smaller carrier point
    k_first = red[2] if a1 < a2 else red[3]
    k_second = red[3] if a1 < a2 else red[2]
    assert (t1 < t2) == (k_first < k_second)


def test_illegal_script_demand_detected():
    pal = rb.smooth_preset(3)
    game = games.RainbowGame(pal)

    class BadScript:
        def move(self, board, state, budget):
            if state == 0:
                return rb.ConeDemand(base=(0, 1), tint="missing-tint"), 1
            return None, state

    with pytest.raises(ValueError):
        games.certify_forall(game, BadScript(), games.GameConfig("Fm", rounds=2, node_budget=6))


# --- hypernetworks: amalgamation and transformation -----------------------------------


def lift(mats, member):
    from cylalg import hyperbasis as hb

    net = hb.from_matrix(mats, member)
    board = games.EdgeBoard(
        tuple(range(3)),
        {(i, j): net.atom(i, j) for i in range(3) for j in range(i + 1, 3)},
    )
    return games.Hypernetwork(board, 3)


def test_amalg_same_network_legal(mats_k2):
    h = lift(mats_k2, 5)
    demand = games.amalg_moves(h, h)
    assert isinstance(demand, games.AmalgamationDemand)
    got = games.amalg_respond(mats_k2.payload["ra"], demand)
    assert got is not None and got.board.edges == h.board.edges


def test_amalg_disjoint_rejected(mats_k2):
    h1 = lift(mats_k2, 5)
    shifted = games.Hypernetwork(
        games.EdgeBoard((3, 4, 5), {(u + 3, v + 3): a for (u, v), a in h1.board.edges.items()}),
        3,
    )
    assert games.amalg_moves(h1, shifted) == "rejected: empty overlap"


def test_amalg_overlap_disagreement_rejected(mats_k2):
    h1 = lift(mats_k2, 5)
    other = next(
        m for m in range(mats_k2.atom_count) if lift(mats_k2, m).board.edges != h1.board.edges
    )
    h2 = lift(mats_k2, other)
    assert games.amalg_moves(h1, h2) == "rejected: overlap disagreement"


def test_amalg_overlap_two_nodes_has_response(mats_k2):
    ras = mats_k2.payload["ra"]
    h1 = lift(mats_k2, 8)
    e = h1.board.edges
    # second network shares the edge (1, 2) and adds node 3
    a12 = h1.board.label(1, 2)
    import numpy as np

    cand = next(
        (x, y)
        for x in range(ras.atom_count)
        if x not in ras.identity
        for y in range(ras.atom_count)
        if y not in ras.identity and ras.cons[a12, x, y]
    )
    h2 = games.Hypernetwork(
        games.EdgeBoard((1, 2, 3), {(1, 2): a12, (1, 3): cand[0], (2, 3): int(ras.converse[cand[1]])}),
        3,
    )
    if not games.edge_board_consistent(ras, h2.board):
        pytest.skip("random second network inconsistent for this structure")
    demand = games.amalg_moves(h1, h2)
    assert isinstance(demand, games.AmalgamationDemand)
    got = games.amalg_respond(ras, demand)
    assert got is not None
    assert set(got.nodes()) == {0, 1, 2, 3}
    assert got.lambda_neat()


def test_transformation_move(mats_k2):
    h = lift(mats_k2, 5)
    theta = {10: 0, 11: 1, 12: 2}
    out = h.transform(theta)
    assert out.board.label(10, 11) == h.board.label(0, 1)
    assert out.board.label(11, 12) == h.board.label(1, 2)
