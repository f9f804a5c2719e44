import itertools

import numpy as np
import pytest

from cylalg import graphs as G, ra
from cylalg.bitset import AtomSet


# --- oracles -------------------------------------------------------------------


def oracle_matrices(ras, n):
    """Enumerate coherent matrices by filtering every candidate entry tuple."""
    entries = [(i, j) for i in range(n) for j in range(i + 1, n)]
    diag = next(iter(ras.identity))
    out = []
    for vals in itertools.product(range(ras.atom_count), repeat=len(entries)):
        m = {}
        for (i, j), v in zip(entries, vals):
            m[(i, j)] = v
            m[(j, i)] = int(ras.converse[v])
        for i in range(n):
            m[(i, i)] = diag
        if all(
            ras.cons[m[(i, j)], m[(i, k)], m[(k, j)]]
            for i in range(n)
            for j in range(n)
            for k in range(n)
        ):
            out.append(vals)
    return sorted(out)


# --- structure construction ------------------------------------------------------


def test_alpha_atom_count():
    for g, n in [(G.cycle(5), 3), (G.complete(3), 4), (G.petersen(), 3)]:
        a = ra.graph_ra(g, n)
        assert a.atom_count == 1 + g.node_count * n
        assert all(int(a.converse[x]) == x for x in range(a.atom_count))


def test_alpha_consistency_bullets():
    # single node, n=3: monochromatic triples need an edge, so they all fail
    a = ra.graph_ra(G.from_edge_list(1, []), 3)
    x = 1  # atom (node 0, colour 0)
    assert not a.cons[x, x, x]
    # (identity, x, x) is consistent for every atom
    assert all(a.cons[x, 0, x] and a.cons[0, x, x] and a.cons[x, x, 0] for x in range(a.atom_count))
    # K2: same colour but the node set holds the edge
    b = ra.graph_ra(G.complete(2), 3)
    u0 = 1 + 0 * 3 + 0  # (node 0, colour 0)
    v0 = 1 + 1 * 3 + 0  # (node 1, colour 0)
    assert b.cons[u0, v0, u0]


def test_check_ra_passes_on_alpha():
    for g, n in [(G.cycle(5), 3), (G.complete(3), 4)]:
        rep = ra.check_ra(ra.graph_ra(g, n))
        assert rep.ok, rep.to_json()


def test_triple_consistency_permutation_invariant():
    a = ra.graph_ra(G.cycle(5), 3)
    n = a.atom_count
    for x in range(n):
        for y in range(n):
            for z in range(n):
                v = a.cons[x, y, z]
                for p in itertools.permutations((x, y, z)):
                    assert a.cons[p] == v


def test_check_ra_negative_controls():
    a = ra.graph_ra(G.complete(2), 3)
    bad = ra.RaAtomStructure(
        atom_count=a.atom_count,
        identity=a.identity,
        converse=np.array([0, 2, 3, 1] + list(range(4, a.atom_count)), dtype=np.int64),
        cons=a.cons,
    )
    rep = ra.check_ra(bad)
    assert not rep.converse_ok and rep.converse_witness is not None

    cons = a.cons.copy()
    cons[1, 2, 3] = not cons[1, 2, 3]  # break one Peircean orbit member
    bad2 = ra.RaAtomStructure(a.atom_count, a.identity, a.converse, cons)
    rep2 = ra.check_ra(bad2)
    assert not rep2.ok


# --- basic matrices ---------------------------------------------------------------


def test_matrices_match_oracle_k2():
    a = ra.graph_ra(G.complete(2), 3)
    mats = ra.basic_matrices(a, 3)
    assert [tuple(r) for r in mats.payload["matrices"].tolist()] == oracle_matrices(a, 3)


def test_matrices_match_oracle_single_node_n4():
    a = ra.graph_ra(G.from_edge_list(1, []), 4)
    mats = ra.basic_matrices(a, 4)
    assert [tuple(r) for r in mats.payload["matrices"].tolist()] == oracle_matrices(a, 4)


def test_matrix_counts_frozen():
    # frozen after the oracle comparison above established the enumerator
    counts = {}
    for name, g in [("K2", G.complete(2)), ("K3", G.complete(3)), ("C4", G.cycle(4)), ("C5", G.cycle(5))]:
        counts[name] = ra.basic_matrices(ra.graph_ra(g, 3), 3).atom_count
    assert counts == {"K2": 229, "K3": 748, "C4": 1717, "C5": 3316}


def test_diagonal_membership():
    a = ra.graph_ra(G.complete(3), 3)
    mats = ra.basic_matrices(a, 3)
    rows = mats.payload["matrices"]
    from cylalg import _kernels as K

    for m in range(mats.atom_count):
        assert K.testbit(mats.dij[(0, 1)], m) == (int(rows[m, 0]) == 0)


def test_transposition_closure():
    a = ra.graph_ra(G.cycle(4), 3)
    mats = ra.basic_matrices(a, 3)
    for key, rel in mats.s_transp.items():
        perm = rel.perm
        assert sorted(int(p) for p in perm) == list(range(mats.atom_count))
        assert all(int(perm[int(perm[m])]) == m for m in range(mats.atom_count))


def test_cylindric_basis_passes():
    for g in [G.complete(2), G.complete(3), G.cycle(4), G.cycle(5)]:
        a = ra.graph_ra(g, 3)
        mats = ra.basic_matrices(a, 3)
        rep = ra.check_cylindric_basis(mats, a, 3)
        assert rep.ok, (g, rep.to_json())


def test_basis_fails_without_an_atom():
    # restrict the member set so one atom never appears as m_01
    a = ra.graph_ra(G.complete(2), 3)
    mats = ra.basic_matrices(a, 3)
    rows = mats.payload["matrices"]
    members = [m for m in range(len(rows)) if int(rows[m, 0]) != 3]
    rep = ra.check_cylindric_basis(mats, a, 3, members=members)
    assert not rep.ok
    assert not rep.coverage_ok or not rep.witness_ok or not rep.substitution_ok


def test_basic_matrices_rejects_broken_ra():
    a = ra.graph_ra(G.complete(2), 3)
    cons = a.cons.copy()
    cons[1, 2, 3] = not cons[1, 2, 3]
    bad = ra.RaAtomStructure(a.atom_count, a.identity, a.converse, cons)
    with pytest.raises(ValueError):
        ra.basic_matrices(bad, 3)


# --- monochromatic obstruction ------------------------------------------------------


def test_obstruction_c5():
    a = ra.graph_ra(G.cycle(5), 3)
    ok, cases, ident = ra.monochromatic_obstruction(a)
    assert ok and ident
    # spot: an independent pair composes to zero, an edge pair does not
    by_key = {(c.nodes, c.colour): c for c in cases}
    assert by_key[((0, 2), 1)].product_size == 0
    edge_case = by_key[((0, 1), 1)]
    assert edge_case.product_size > 0 and edge_case.edge_witnesses == ((0, 1),)


def test_obstruction_identity_composes_to_itself():
    a = ra.graph_ra(G.cycle(5), 3)
    ident = a.identity_set()
    assert a.compose(ident, ident) & ident == ident


def test_obstruction_petersen():
    a = ra.graph_ra(G.petersen(), 3)
    ok, cases, ident = ra.monochromatic_obstruction(a)
    assert ok and ident
    assert len(cases) == (2**10 - 1) * 3


# --- tuple structure and isomorphism ---------------------------------------------------


def test_tuple_structure_counts_match_matrices():
    for g in [G.complete(2), G.complete(3), G.cycle(5)]:
        a = ra.graph_ra(g, 3)
        assert ra.tuple_structure(g, 3).atom_count == ra.basic_matrices(a, 3).atom_count


@pytest.mark.parametrize(
    "g", [G.complete(2), G.complete(3), G.cycle(4), G.cycle(5)], ids=["K2", "K3", "C4", "C5"]
)
def test_tuple_structure_isomorphic_to_matrices(g):
    a = ra.graph_ra(g, 3)
    mats = ra.basic_matrices(a, 3)
    ts = ra.tuple_structure(g, 3)
    iso = ra.find_isomorphism(ts, mats)
    assert iso is not None
    assert ra._verify_mapping(ts, mats, iso)


def test_non_isomorphic_sizes():
    m2 = ra.basic_matrices(ra.graph_ra(G.complete(2), 3), 3)
    m3 = ra.basic_matrices(ra.graph_ra(G.complete(3), 3), 3)
    assert ra.find_isomorphism(m2, m3) is None


def test_composition_matches_cons():
    a = ra.graph_ra(G.complete(3), 3)
    x = AtomSet.from_atoms(a.atom_count, [1, 4])
    y = AtomSet.from_atoms(a.atom_count, [2])
    got = a.compose(x, y)
    want = {
        c
        for c in range(a.atom_count)
        if any(a.cons[c, b, 2] for b in (1, 4))
    }
    assert set(got.ids()) == want
