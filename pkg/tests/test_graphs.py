import itertools
import math

import pytest

from cylalg import graphs as G


# --- brute-force oracles -----------------------------------------------------


def oracle_chromatic(g: G.Graph) -> int:
    """Smallest k admitting a proper colouring, by exhaustive assignment."""
    if g.node_count == 0:
        return 0
    for k in range(1, g.node_count + 1):
        for col in itertools.product(range(k), repeat=g.node_count):
            if all(col[u] != col[v] for u, v in g.edges):
                return k
    raise AssertionError


def oracle_girth(g: G.Graph):
    """Shortest simple cycle by DFS enumeration."""
    adj = g.adjacency()
    best = math.inf

    def walk(start, u, visited):
        nonlocal best
        for v in adj[u]:
            if v == start and len(visited) >= 3:
                best = min(best, len(visited))
            elif v not in visited and v > start:
                walk(start, v, visited | {v})

    for s in range(g.node_count):
        walk(s, s, {s})
    return best


# --- chromatic number ---------------------------------------------------------


def test_edgeless_one_class():
    res = G.chromatic_number(G.from_edge_list(4, []))
    assert res.chi == 1
    assert set(res.witness_colouring) == {0}


def test_complete_graph_needs_all_colours():
    assert G.chromatic_number(G.complete(4)).chi == 4


def test_c5_needs_three_colours():
    # oracle: no proper 2-colouring of C_5 exists, and a 3-colouring does
    c5 = G.cycle(5)
    assert oracle_chromatic(c5) == 3
    assert G.chromatic_number(c5).chi == 3


def test_witness_classes_independent():
    for g in [G.cycle(5), G.petersen(), G.gen_band(8, 4), G.gen_clique_union(4, 3)]:
        res = G.chromatic_number(g)
        for cls in res.classes().values():
            assert not g.spans_edge(cls)


@pytest.mark.parametrize("k", range(1, 6))
@pytest.mark.parametrize("c", range(1, 4))
def test_clique_union_chi(k, c):
    g = G.gen_clique_union(k, c)
    assert g.node_count == k * c
    assert len(g.edges) == c * k * (k - 1) // 2
    assert G.chromatic_number(g).chi == k


def test_clique_union_examples():
    g = G.gen_clique_union(3, 2)
    assert g.node_count == 6 and len(g.edges) == 6
    assert G.chromatic_number(g).chi == 3
    assert G.gen_clique_union(1, 5).edges == frozenset()
    assert G.chromatic_number(G.gen_clique_union(4, 3)).chi == oracle_chromatic(G.gen_clique_union(4, 3))


def test_band_examples():
    assert G.gen_band(5, 1).edges == frozenset()
    assert G.gen_band(5, 2).edges == frozenset({(0, 1), (1, 2), (2, 3), (3, 4)})
    g = G.gen_band(8, 4)
    assert G.chromatic_number(g).chi == 4 == oracle_chromatic(g)


def test_exact_chi_matches_oracle_small():
    graphs = [
        G.cycle(4),
        G.cycle(5),
        G.cycle(7),
        G.path(6),
        G.complete(5),
        G.petersen(),
        G.gen_band(7, 3),
        G.from_edge_list(6, [(0, 1), (1, 2), (2, 0), (3, 4)]),
    ]
    for g in graphs:
        assert G.chromatic_number(g).chi == oracle_chromatic(g)


# --- girth --------------------------------------------------------------------


def test_girth_tree_infinite():
    assert G.girth(G.path(6)) == math.inf
    assert G.girth(G.from_edge_list(1, [])) == math.inf


def test_girth_examples():
    assert G.girth(G.cycle(5)) == 5
    assert G.girth(G.complete(4)) == 3
    assert G.girth(G.petersen()) == 5


def test_girth_matches_oracle_small():
    graphs = [
        G.cycle(4),
        G.cycle(6),
        G.petersen(),
        G.gen_band(7, 3),
        G.from_edge_list(7, [(0, 1), (1, 2), (2, 3), (3, 0), (3, 4), (4, 5), (5, 6), (6, 3)]),
    ]
    for g in graphs:
        assert G.girth(g) == oracle_girth(g)


def test_girth_infinite_iff_acyclic():
    graphs = [
        G.path(5),
        G.cycle(5),
        G.from_edge_list(6, [(0, 1), (2, 3), (4, 5)]),
        G.from_edge_list(6, [(0, 1), (1, 2), (2, 0)]),
        G.gen_clique_union(3, 2),
    ]
    for g in graphs:
        assert (G.girth(g) == math.inf) == G.is_acyclic(g)


# --- sampler -------------------------------------------------------------------


def test_sampler_success_and_reverify():
    g = G.sample_high_girth_chromatic(4, 3, 10_000, seed=20240817)
    assert G.girth(g) >= 4
    assert G.chromatic_number(g).chi >= 3


def test_sampler_trivial_target():
    g = G.sample_high_girth_chromatic(3, 1, 1, seed=1)
    assert g.node_count >= 1


def test_sampler_exhausted():
    with pytest.raises(G.BudgetExhausted):
        G.sample_high_girth_chromatic(6, 4, 1, seed=3)


def test_sampler_deterministic():
    a = G.sample_high_girth_chromatic(4, 3, 10_000, seed=99)
    b = G.sample_high_girth_chromatic(4, 3, 10_000, seed=99)
    assert a.node_count == b.node_count and a.edges == b.edges


# --- dimacs io ------------------------------------------------------------------


def test_dimacs_roundtrip(tmp_path):
    g = G.petersen()
    p = tmp_path / "g.col"
    G.write_dimacs(g, p)
    text = p.read_text().splitlines()
    assert text[0] == "p 10 15"
    assert all(line.startswith("e ") for line in text[1:])
    back = G.read_dimacs(p)
    assert back.node_count == g.node_count and back.edges == g.edges


def test_dimacs_accepts_edge_header(tmp_path):
    p = tmp_path / "h.col"
    p.write_text("c comment\np edge 3 2\ne 1 2\ne 2 3\n")
    g = G.read_dimacs(p)
    assert g.node_count == 3 and g.edges == frozenset({(0, 1), (1, 2)})


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        G.from_edge_list(3, [(1, 1)])
