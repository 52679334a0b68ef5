from __future__ import annotations

import hashlib
import math
import struct
from decimal import Decimal, getcontext

import pytest
from hypothesis import given
from hypothesis import strategies as st

from glb.core import GlbConfig, glb_run
from glb.errors import InvalidConfigError
from glb.runtime import SchedulerMode
from glb.uts import (
    UtsBag,
    UtsParams,
    UtsQueue,
    child_count,
    root_descriptor,
    spawn_child,
    uts_root_init,
    uts_sequential,
)

PINNED = UtsParams(b0=4.0, d=6, r=19)


# --- descriptors -----------------------------------------------------------

def test_sha1_engine_sanity():
    # FIPS 180 example vectors; guards against a misconfigured hash.
    assert hashlib.sha1(b"abc").hexdigest() == "a9993e364706816aba3e25717850c26c9cd0d89d"
    assert hashlib.sha1(b"").hexdigest() == "da39a3ee5e6b4b0d3255bfef95601890afd80709"


def test_root_descriptor_pinned():
    assert root_descriptor(19).hex() == "57eaa9251a33407fcc82545443a8f191b9bd84be"
    assert root_descriptor(0).hex() == "9069ca78e7450a285173431b3e52c5c25299e473"
    assert root_descriptor(19) == hashlib.sha1(struct.pack(">I", 19)).digest()


def test_spawn_child_is_parent_concat_index():
    parent = root_descriptor(19)
    assert spawn_child(parent, 3) == hashlib.sha1(parent + struct.pack(">I", 3)).digest()
    assert spawn_child(parent, 0) != spawn_child(parent, 1)


# --- offspring law -----------------------------------------------------------

def test_child_count_zero_at_depth_cutoff():
    desc = root_descriptor(19)
    assert child_count(desc, PINNED.d, PINNED) == 0
    assert child_count(desc, PINNED.d + 5, PINNED) == 0


def test_child_count_zero_draw():
    # A descriptor whose leading word is zero produces no children.
    desc = bytes(20)
    assert child_count(desc, 0, PINNED) == 0


def test_child_count_midpoint_draw():
    # v = 2^31 makes the fraction exactly 0.5: floor(ln 0.5 / ln 0.8) = 3.
    desc = struct.pack(">I", 2**31) + bytes(16)
    assert child_count(desc, 0, PINNED) == 3


def test_child_count_matches_high_precision_grid():
    # The float expression must agree with a 50-digit evaluation across a
    # grid of draws; any libm drift would show up as an off-by-one here.
    getcontext().prec = 50
    lq = Decimal(-1) / 5
    log_q = (1 + lq).ln()
    for k in range(1, 4096):
        v = (k * 2**32) // 4096
        if v >= 2**32:
            continue
        desc = struct.pack(">I", v) + bytes(16)
        frac = Decimal(v) / Decimal(2**32)
        expect = int(((1 - frac).ln()) / log_q)
        assert child_count(desc, 0, PINNED) == expect, v


def test_child_count_mean_near_branching_factor():
    # E[children] = b0 for the geometric law; a 20k sample mean lands close.
    params = UtsParams(b0=4.0, d=10**9, r=19)
    total = 0
    desc = root_descriptor(19)
    for i in range(20000):
        desc = spawn_child(desc, i & 7)
        total += child_count(desc, 0, params)
    assert 3.8 < total / 20000 < 4.2


def test_params_validation():
    with pytest.raises(InvalidConfigError):
        UtsParams(b0=1.0, d=3, r=0)
    with pytest.raises(InvalidConfigError):
        UtsParams(b0=4.0, d=0, r=0)
    with pytest.raises(InvalidConfigError):
        UtsParams(b0=4.0, d=3, r=-1)
    with pytest.raises(InvalidConfigError):
        UtsParams(b0=4.0, d=3, r=2**32)


# --- node bag -----------------------------------------------------------------

def _node(r, depth, low, high):
    return (root_descriptor(r), depth, low, high)


def test_bag_push_validates_range():
    bag = UtsBag()
    with pytest.raises(InvalidConfigError):
        bag.push(root_descriptor(1), 0, 3, 3)
    with pytest.raises(InvalidConfigError):
        bag.push(root_descriptor(1), 0, 5, 2)


def test_bag_split_halves_widest_spans():
    bag = UtsBag()
    bag.push(*_node(1, 0, 0, 10))
    other = bag.split()
    assert other is not None
    (kept,) = [tuple(n) for n in bag.nodes]
    (given,) = [tuple(n) for n in other.nodes]
    assert kept[2:] == (0, 5)
    assert given[2:] == (5, 10)
    assert kept[0] == given[0]
    assert bag.size() + other.size() == 10


def test_bag_split_skips_single_child_nodes():
    bag = UtsBag()
    bag.push(*_node(1, 2, 0, 1))
    bag.push(*_node(2, 1, 4, 5))
    assert bag.split() is None
    assert bag.size() == 2


def test_bag_split_mixed():
    bag = UtsBag()
    bag.push(*_node(1, 0, 0, 1))
    bag.push(*_node(2, 0, 0, 7))
    other = bag.split()
    assert other.size() == 4  # gave [3, 7) of the wide node
    assert bag.size() == 4  # kept [0, 1) and [0, 3)


def test_bag_merge_concatenates():
    a, b = UtsBag(), UtsBag()
    a.push(*_node(1, 0, 0, 2))
    b.push(*_node(2, 3, 1, 4))
    a.merge(b)
    assert a.size() == 5
    assert len(a.nodes) == 2


def test_bag_wire_roundtrip():
    bag = UtsBag()
    bag.push(*_node(1, 0, 0, 2))
    bag.push(*_node(2, 5, 3, 9))
    back = UtsBag.from_bytes(bag.to_bytes())
    assert [tuple(n) for n in back.nodes] == [tuple(n) for n in bag.nodes]
    assert back.size() == bag.size()


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 30),
                          st.integers(0, 100)), max_size=25))
def test_bag_split_conserves_pending_children(entries):
    bag = UtsBag()
    expect = set()
    for r, depth, low in entries:
        width = 1 + (r % 5)
        bag.push(root_descriptor(r), depth, low, low + width)
        for i in range(low, low + width):
            expect.add((root_descriptor(r), i))
    other = bag.split()
    got = set()
    for b in ([bag, other] if other is not None else [bag]):
        for desc, depth, low, high in b.nodes:
            for i in range(low, high):
                got.add((bytes(desc), i))
    assert got == expect


# --- tree counts ----------------------------------------------------------------

def test_sequential_tiny_tree_pinned():
    assert uts_sequential(UtsParams(b0=4.0, d=3, r=19)) == 59


def test_sequential_pinned_counts():
    assert uts_sequential(PINNED) == 4844
    assert uts_sequential(UtsParams(b0=4.0, d=8, r=19)) == 77614


def test_sequential_monotone_in_depth():
    counts = [uts_sequential(UtsParams(b0=4.0, d=d, r=19)) for d in (1, 2, 3, 4)]
    assert counts == sorted(counts)
    assert counts[0] >= 1


def test_queue_processes_match_sequential():
    q = UtsQueue(PINNED)
    q.bag.push(root_descriptor(19), 0, 0, child_count(root_descriptor(19), 0, PINNED))
    while q.process(64):
        pass
    assert q.result() == 4844


def test_queue_counts_children_not_root():
    # A single root with no expandable range yields zero processed nodes.
    params = UtsParams(b0=4.0, d=1, r=19)
    n = uts_sequential(params)
    assert n == child_count(root_descriptor(19), 0, params)


def test_glb_run_matches_sequential_small():
    expect = uts_sequential(PINNED)
    for P in (1, 3):
        for mode in SchedulerMode:
            cfg = GlbConfig(places=P, seed=1, granularity=32, scheduler_mode=mode)
            res = glb_run(cfg, lambda p: UtsQueue(PINNED), uts_root_init(PINNED),
                          timeout_s=60)
            assert res.value == expect, (P, mode)


def test_glb_depth_property_counts_only_reachable():
    # Deeper cutoff can only grow the tree, distributed or not.
    shallow = glb_run(GlbConfig(places=2, seed=9),
                      lambda p: UtsQueue(UtsParams(b0=4.0, d=2, r=19)),
                      uts_root_init(UtsParams(b0=4.0, d=2, r=19))).value
    deep = glb_run(GlbConfig(places=2, seed=9),
                   lambda p: UtsQueue(UtsParams(b0=4.0, d=4, r=19)),
                   uts_root_init(UtsParams(b0=4.0, d=4, r=19))).value
    assert shallow < deep


def test_tree_size_sanity_band():
    # Geometric offspring with mean b0 = 4 and depth 6: the realized tree
    # should live within a factor-few band of b0**d without matching it.
    n = uts_sequential(PINNED)
    assert 4.0**6 / 8 < n < 4.0**6 * 8
    assert not math.isclose(n, 4.0**6)
