import itertools

import pytest

from cylalg import rainbow as rb


@pytest.fixture(scope="module")
def small():
    # 2 green tints, 2 carrier points, yellow sets capped at singletons:
    # small enough for the brute-force enumerator
    return rb.weak_preset(3, 2, 2, yellow_max_size=1)


@pytest.fixture(scope="module")
def table(small):
    return rb.default_table(small)


# --- oracle: enumerate raw labelled quotients and filter with the public
# consistency checker ---------------------------------------------------------


def oracle_atoms(palette, table):
    n = palette.n
    colours = palette.edge_colours()
    ysets = palette.yellow_sets()
    out = set()
    for part in rb._rgs_partitions(n):
        classes = sorted(set(part))
        pairs = list(itertools.combinations(classes, 2))
        for labelling in itertools.product(colours, repeat=len(pairs)):
            edge_lab = dict(zip(pairs, labelling))
            bases = [
                b
                for b in itertools.combinations(classes, n - 1)
                if not any(
                    rb.is_green(_label(edge_lab, u, v)) for u, v in itertools.combinations(b, 2)
                )
            ]
            for ys in itertools.product(ysets, repeat=len(bases)):
                yellows = dict(zip((frozenset(b) for b in bases), ys))
                cg = rb.ColouredGraph(n, tuple(classes), dict(edge_lab), dict(yellows))
                ok, _ = rb.check_consistency(cg, table)
                if ok:
                    out.add(
                        (part, tuple(sorted(edge_lab.items())),
                         tuple(sorted(yellows.items(), key=lambda t: sorted(t[0]))))
                    )
    return out


def _label(edge_lab, u, v):
    if (u, v) in edge_lab:
        return edge_lab[(u, v)]
    return rb.flip(edge_lab[(v, u)])


# --- consistency table ----------------------------------------------------------


def test_green_triangle_forbidden(table):
    assert not table.triangle_ok(("g0", 0), ("g0", 1), ("gi", 1))
    assert not table.triangle_ok(("gi", 1), ("gi", 1), ("g0", 0))


def test_tinted_pair_with_white_zero(table):
    assert not table.triangle_ok(("g0", 0), ("g0", 1), ("w", 0))
    assert table.triangle_ok(("g0", 0), ("g0", 0), ("w", 0))


def test_plain_green_pair_with_matching_white(table):
    assert not table.triangle_ok(("gi", 1), ("gi", 1), ("w", 1))
    assert table.triangle_ok(("gi", 1), ("gi", 1), ("w", 0))


def test_all_white_triangle_consistent(table):
    assert table.triangle_ok(("w", 0), ("w", 0), ("w", 0))


def test_red_triangles_compose(table):
    # oriented labels on (x,y), (y,z), (x,z): corner values must chain
    assert table.triangle_ok(("r", 0, 0, 1), ("r", 0, 1, 0), ("r", 0, 0, 0) if False else ("r", 0, 0, 0))
    assert table.triangle_ok(("r", 0, 0, 1), ("r", 0, 1, 0), ("r", 0, 0, 0))
    assert not table.triangle_ok(("r", 0, 0, 1), ("r", 0, 0, 1), ("r", 0, 0, 1))
    # mismatched copy indices never close
    big = rb.Palette(3, (0, 1), (0, 1), t_count=2)
    tb = rb.default_table(big)
    assert not tb.triangle_ok(("r", 0, 0, 1), ("r", 1, 1, 0), ("r", 0, 0, 0))


def test_ordered_rule_descent():
    pal = rb.descent_preset(2)
    tb = rb.default_table(pal)
    # apexes tinted 0 and -1 from a shared cone point; red x->z pairs the
    # first endpoint with the first carrier entry
    assert tb.triangle_ok(("g0", 0), ("g0", -1), ("r", 0, 1, 0))
    assert not tb.triangle_ok(("g0", 0), ("g0", -1), ("r", 0, 0, 1))


def test_rho_unconstrained(table):
    assert table.triangle_ok(("g0", 0), ("g0", 1), ("rho",))


# --- coloured graphs -------------------------------------------------------------


def build_triangle(labels, n=3, yellows=()):
    cg = rb.ColouredGraph(n, (0, 1, 2), {})
    cg = cg.with_edge(0, 1, labels[0]).with_edge(1, 2, labels[1]).with_edge(0, 2, labels[2])
    for b, s in yellows:
        cg = cg.with_yellow(b, s)
    return cg


def test_check_consistency_reports_triangle(table):
    bad = build_triangle([("g0", 0), ("g0", 1), ("gi", 1)])
    ok, witness = rb.check_consistency(bad, table)
    assert not ok and witness == (0, 1, 2)


def test_incomplete_labelling_rejected(table):
    cg = rb.ColouredGraph(3, (0, 1, 2), {})
    with pytest.raises(ValueError):
        rb.check_consistency(cg, table)


def test_cone_tint_must_sit_in_yellow(small, table):
    # apex 2 over base {0,1} with tint 1; the base's yellow set excludes it
    cg = build_triangle(
        [("w", 0), ("gi", 1), ("g0", 1)],
        yellows=[((0, 1), frozenset({0}))],
    )
    ok, witness = rb.check_consistency(cg, table)
    assert not ok
    cg2 = build_triangle(
        [("w", 0), ("gi", 1), ("g0", 1)],
        yellows=[((0, 1), frozenset({0, 1}))],
    )
    ok2, _ = rb.check_consistency(cg2, table)
    assert ok2


def test_yellow_on_green_edge_rejected(table):
    cg = build_triangle(
        [("g0", 0), ("w", 0), ("w", 0)],
        yellows=[((0, 1), frozenset({0}))],
    )
    ok, _ = rb.check_consistency(cg, table)
    assert not ok


# --- atom enumeration vs oracle ----------------------------------------------------


def test_enumeration_matches_oracle(small, table):
    atoms = rb.enumerate_atoms(small, table)
    assert set(atoms) == oracle_atoms(small, table)
    assert len(atoms) == len(set(atoms))


def test_no_reds_no_greens_only_whites():
    pal = rb.Palette(3, (), (), yellow_max_size=0)
    table = rb.default_table(pal)
    atoms = rb.enumerate_atoms(pal, table)
    for part, edges, _ in atoms:
        assert all(lab[0] == "w" for _, lab in edges)


def test_merging_atoms_sit_in_diagonal(small, table):
    s = rb.atoms_to_ca(small, rb.enumerate_atoms(small, table))
    from cylalg import _kernels as K

    for k, (part, _, _) in enumerate(s.labels):
        assert K.testbit(s.dij[(0, 1)], k) == (part[0] == part[1])


def test_atom_bound_fires_on_smooth():
    pal = rb.smooth_preset(3)
    with pytest.raises(ValueError):
        rb.enumerate_atoms(pal, rb.default_table(pal), atom_bound=50_000)


def test_qea_axioms_on_small_rainbow(small, table):
    from cylalg import axioms

    s = rb.atoms_to_ca(small, rb.enumerate_atoms(small, table))
    reports = axioms.check_axioms(s, "QEA", mode="randomized", trials=200, seed=0xC0FFEE)
    assert all(r.status == "pass" for r in reports)


# --- completion strategy -------------------------------------------------------------


def completion_case(face_labels, old_apex_labels, table):
    """Board: base {0,1}, old node 2, new node 3 joined to the base."""
    cg = rb.ColouredGraph(3, (0, 1, 2), {})
    cg = cg.with_edge(0, 1, ("w", 0))
    cg = cg.with_edge(0, 2, old_apex_labels[0]).with_edge(1, 2, old_apex_labels[1])
    cg = cg.with_node(3)
    cg = cg.with_edge(0, 3, face_labels[0]).with_edge(1, 3, face_labels[1])
    return rb.complete_colouring(cg, 3, [0, 1], table)


def test_completion_uses_first_white_when_no_tinted_pair(table):
    out = completion_case([("w", 1), ("w", 1)], [("w", 1), ("w", 1)], table)
    assert out.label(2, 3) == ("w", 0)


def test_completion_escalates_to_second_white(table):
    # both nodes see tinted greens at the base head but not matching plain greens
    out = completion_case([("g0", 0), ("w", 1)], [("g0", 1), ("w", 1)], table)
    assert out.label(2, 3) == ("w", 1)


def test_completion_falls_back_to_extra_shade(table):
    # 2 and 3 are co-apexes: tinted at 0 and matching plain green at 1
    out = completion_case([("g0", 0), ("gi", 1)], [("g0", 1), ("gi", 1)], table)
    assert out.label(2, 3) == ("rho",)


def test_completion_output_consistent_when_rho_free(small, table):
    out = completion_case([("w", 1), ("w", 1)], [("w", 1), ("w", 1)], table)
    ok, _ = rb.check_consistency(out, table)
    assert ok


def test_completion_assigns_yellows_on_new_tuples(table):
    # only tuples through the new node are labelled in this move
    out = completion_case([("w", 1), ("w", 1)], [("w", 1), ("w", 1)], table)
    new_green_free = [
        sub
        for sub in itertools.combinations(sorted(out.nodes), 2)
        if 3 in sub and not rb.is_green(out.label(*sub))
    ]
    assert new_green_free
    for sub in new_green_free:
        assert frozenset(sub) in out.yellows


# --- seed-graph model completion ------------------------------------------------------


def test_monk_completion_picks_unused_colour():
    from cylalg import graphs as G

    g = G.complete(2)
    cg = rb.ColouredGraph(3, (0, 1, 2), {})
    cg = cg.with_edge(0, 1, ("node", 0, 0)).with_edge(0, 2, ("node", 1, 1)).with_edge(1, 2, ("node", 0, 2))
    cg = cg.with_node(3)
    cg = cg.with_edge(0, 3, ("node", 0, 0)).with_edge(1, 3, ("node", 1, 1))
    out = rb.monk_complete(cg, 3, [0, 1], g)
    lab = out.label(2, 3)
    assert lab[0] == "rho" and lab[1] == 2  # colours 0 and 1 face the new node


def test_monk_triangle_rule():
    from cylalg import graphs as G

    g = G.complete(2)
    assert rb.monk_triangle_ok(g, ("node", 0, 0), ("node", 1, 1), ("node", 0, 0))
    assert not rb.monk_triangle_ok(g, ("node", 0, 0), ("node", 0, 0), ("node", 0, 0))
    assert rb.monk_triangle_ok(g, ("node", 0, 0), ("node", 1, 0), ("node", 0, 0))
    assert rb.monk_triangle_ok(g, ("rho", 0), ("node", 0, 0), ("node", 1, 0))
    assert not rb.monk_triangle_ok(g, ("rho", 0), ("node", 0, 0), ("node", 0, 0))
    assert rb.monk_triangle_ok(g, ("rho", 0), ("rho", 0), ("node", 0, 0))
