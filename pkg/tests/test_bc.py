from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from glb.bags import SplitStrategy
from glb.bc import (
    Graph,
    RmatParams,
    bc_bruteforce,
    bc_glb,
    bc_sequential,
    bc_static,
    brandes_source,
    degenerate_graph,
    graph_from_edges,
    load_text,
    reduce_maps,
    rmat_generate,
    save_text,
    teps,
    top_vertices,
)
from glb.core import GlbConfig
from glb.errors import InvalidConfigError
from glb.runtime import SchedulerMode

from conftest import path_graph, sym_graph


# --- generators --------------------------------------------------------------

def test_rmat_params_validation():
    with pytest.raises(InvalidConfigError):
        RmatParams(scale=0)
    with pytest.raises(InvalidConfigError):
        RmatParams(scale=4, a=0.5, b=0.5, c=0.5, dq=0.5)
    with pytest.raises(InvalidConfigError):
        RmatParams(scale=4, a=-0.1, b=0.5, c=0.3, dq=0.3)
    with pytest.raises(InvalidConfigError):
        RmatParams(scale=4, edge_factor=0)


def test_rmat_deterministic_per_seed():
    p = RmatParams(scale=5, seed=7)
    g1, g2 = rmat_generate(p), rmat_generate(p)
    assert np.array_equal(g1.edges, g2.edges)
    assert np.array_equal(g1.offsets, g2.offsets)
    g3 = rmat_generate(RmatParams(scale=5, seed=8))
    assert not (g1.n_edges == g3.n_edges
                and np.array_equal(g1.edges, g3.edges))


def test_rmat_all_mass_in_one_quadrant():
    # a = 1 routes every edge to (0, 0): all self-loops, all dropped.
    p = RmatParams(scale=4, a=1.0, b=0.0, c=0.0, dq=0.0)
    g = rmat_generate(p)
    assert g.n_edges == 0


def test_rmat_edge_budget():
    g = rmat_generate(RmatParams(scale=4, seed=3))
    assert g.n_vertices == 16
    assert 0 < g.n_edges <= 16 * 8  # dedup and loop-drop only shrink it


def test_graph_from_edges_dedups_and_sorts():
    u = np.array([2, 0, 2, 1, 0])
    v = np.array([1, 3, 1, 1, 2])
    g = graph_from_edges(4, u, v)
    assert g.n_edges == 3
    assert list(g.edges[g.offsets[0]:g.offsets[1]]) == [2, 3]
    assert list(g.edges[g.offsets[2]:g.offsets[3]]) == [1]
    assert g.out_degree(1) == 0


def test_graph_validate_rejects_corrupt():
    g = graph_from_edges(3, np.array([0]), np.array([1]))
    bad = Graph(3, g.offsets.copy(), g.edges.copy())
    bad.edges[0] = 9
    with pytest.raises(InvalidConfigError):
        bad.validate()
    short = Graph(3, g.offsets[:-1].copy(), g.edges.copy())
    with pytest.raises(InvalidConfigError):
        short.validate()


def test_degenerate_graph_shape():
    g = degenerate_graph(4)
    assert g.n_edges == 6
    assert [g.out_degree(i) for i in range(4)] == [3, 2, 1, 0]
    assert list(g.edges[:3]) == [1, 2, 3]


def test_text_roundtrip(tmp_path):
    g = rmat_generate(RmatParams(scale=4, seed=2))
    path = tmp_path / "g.txt"
    save_text(g, path)
    back = load_text(path)
    assert back.n_vertices == g.n_vertices
    assert np.array_equal(back.edges, g.edges)
    assert np.array_equal(back.offsets, g.offsets)
    first = path.read_text().splitlines()[0].split()
    assert first == [str(g.n_vertices), str(g.n_edges)]


def test_text_rejects_malformed(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("3 2\n0 1\n0 1\n")
    with pytest.raises(InvalidConfigError):
        load_text(path)  # duplicate edge
    path.write_text("3 1\n1 1\n")
    with pytest.raises(InvalidConfigError):
        load_text(path)  # self-loop
    path.write_text("3 2\n0 1\n")
    with pytest.raises(InvalidConfigError):
        load_text(path)  # header count mismatch


# --- scoring --------------------------------------------------------------------

def test_brandes_single_source_path():
    # 0 -> 1 -> 2: source 0 puts one unit on the interior vertex.
    g = path_graph(3)
    acc = np.zeros(3)
    brandes_source(g, 0, acc)
    assert acc.tolist() == [0.0, 1.0, 0.0]


def test_brandes_source_range():
    g = path_graph(3)
    acc = np.zeros(3)
    with pytest.raises(InvalidConfigError):
        brandes_source(g, 3, acc)
    with pytest.raises(InvalidConfigError):
        brandes_source(g, -1, acc)


def test_bc_path_graph_closed_form():
    # Undirected path of L vertices: score(i) = 2 i (L - 1 - i).
    for L in range(2, 17):
        got = bc_sequential(path_graph(L))
        expect = [2.0 * i * (L - 1 - i) for i in range(L)]
        np.testing.assert_allclose(got, expect, atol=1e-9)


def test_bc_star_graph():
    # Star with center 0 and 4 leaves: center carries all 12 pair paths.
    g = sym_graph(5, [(0, i) for i in range(1, 5)])
    got = bc_sequential(g)
    np.testing.assert_allclose(got, [12.0, 0, 0, 0, 0], atol=1e-9)


def test_bc_cycle_graph():
    # Square cycle: every vertex sits on exactly one two-hop shortcut pair,
    # split across two equal routes on each side.
    g = sym_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    got = bc_sequential(g)
    np.testing.assert_allclose(got, [1.0, 1.0, 1.0, 1.0], atol=1e-9)


def test_bc_disconnected_pairs_contribute_nothing():
    g = sym_graph(4, [(0, 1), (2, 3)])
    np.testing.assert_allclose(bc_sequential(g), np.zeros(4), atol=1e-9)


def test_bruteforce_matches_sequential_on_rmat():
    for seed in range(6):
        g = rmat_generate(RmatParams(scale=4, seed=seed))
        np.testing.assert_allclose(bc_sequential(g), bc_bruteforce(g), atol=1e-9)


def test_bruteforce_refuses_large():
    with pytest.raises(InvalidConfigError):
        bc_bruteforce(degenerate_graph(65))


def test_static_partition_matches_sequential():
    g = rmat_generate(RmatParams(scale=5, seed=4))
    seq = bc_sequential(g)
    one, busy = bc_static(g, 1)
    np.testing.assert_array_equal(one, seq)  # same source order, bitwise
    assert len(busy) == 1
    for P in (2, 4):
        scores, busy = bc_static(g, P)
        np.testing.assert_allclose(scores, seq, atol=1e-9)
        assert len(busy) == P
    shuffled, _ = bc_static(g, 4, randomize=True, seed=5)
    np.testing.assert_allclose(shuffled, seq, atol=1e-9)


def test_glb_matches_sequential():
    g = rmat_generate(RmatParams(scale=5, seed=4))
    seq = bc_sequential(g)
    for mode in SchedulerMode:
        for strategy in SplitStrategy:
            cfg = GlbConfig(places=4, granularity=1, seed=2, scheduler_mode=mode)
            scores, res = bc_glb(g, cfg, strategy=strategy)
            np.testing.assert_allclose(scores, seq, atol=1e-9)
            assert res.report.items_conserved


def test_scores_nonnegative():
    g = rmat_generate(RmatParams(scale=6, seed=11))
    assert (bc_sequential(g) >= 0).all()


# --- reduction and reporting ------------------------------------------------------

def test_reduce_maps_elementwise():
    a = np.array([1.0, 2.0])
    b = np.array([0.5, 0.25])
    np.testing.assert_array_equal(reduce_maps(a, b), [1.5, 2.25])
    with pytest.raises(InvalidConfigError):
        reduce_maps(a, np.zeros(3))


def test_reduce_maps_commutes():
    rng = np.random.default_rng(3)
    a, b = rng.random(64), rng.random(64)
    np.testing.assert_array_equal(reduce_maps(a, b), reduce_maps(b, a))


def test_teps_exact_rational():
    assert teps(2**16, Fraction(13)) == Fraction(34359738368, 13)
    assert teps(1, 8) == Fraction(1, 1)
    # 8 (3 * 2^16)^2 / 9: the squared 3 cancels the denominator exactly.
    assert teps(2**16 * 3, 9) == Fraction(2**35)
    with pytest.raises(InvalidConfigError):
        teps(16, 0)
    with pytest.raises(InvalidConfigError):
        teps(16, -1.0)


def test_top_vertices():
    scores = np.array([0.0, 5.0, 5.0, 1.0])
    assert top_vertices(scores) == {1, 2}
    assert top_vertices(np.array([3.0])) == {0}
    with pytest.raises(InvalidConfigError):
        top_vertices(np.array([]))
