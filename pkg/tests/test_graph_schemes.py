import numpy as np
import pytest
from hypothesis import given, strategies as st

from codedcache.gf2 import decodable_all
from codedcache.graph_schemes import (
    Coloring,
    ahglc_color,
    ahglc_delivery,
    build_conflict_graph,
    color_knowledge,
    coloring_is_valid,
    coloring_to_log,
    hglc_color,
    hglc_delivery,
)
from codedcache.model import CacheState, DemandVector, SystemConfig, random_packet_placement, random_placement

from conftest import seven_subfile_instance


def test_full_memory_graph_is_empty():
    cfg = SystemConfig(3, 3, 20, 3.0)
    g = build_conflict_graph(random_placement(cfg, 0), DemandVector((1, 2, 3)), cfg)
    assert len(g) == 0
    assert hglc_color(g).num_colors == 0 and ahglc_color(g).num_colors == 0
    assert coloring_to_log(ahglc_color(g), g).total_bits == 0


def test_single_user_no_cache_is_a_clique():
    cfg = SystemConfig(2, 1, 6, 0.0)
    g = build_conflict_graph(random_placement(cfg, 0), DemandVector((2,)), cfg)
    assert len(g) == 6
    assert (g.level == 1).all()
    assert len(list(g.edges())) == 6 * 5
    for color in (hglc_color(g, 1), ahglc_color(g, 1)):
        assert color.num_colors == 6


def test_shared_packet_has_no_edge():
    cfg = SystemConfig(1, 2, 1, 0.0)
    g = build_conflict_graph(random_placement(cfg, 0), DemandVector((1, 1)), cfg)
    assert len(g) == 2 and g.gpkt[0] == g.gpkt[1]
    assert list(g.edges()) == []
    assert g.knowers(0) == {1, 2}
    assert ahglc_color(g, 0).num_colors == 1 and hglc_color(g, 0).num_colors == 1


def test_node_count():
    cfg = SystemConfig(4, 6, 80, 1.5)
    cache = random_placement(cfg, 2)
    g = build_conflict_graph(cache, DemandVector((1, 2, 2, 3, 4, 1)), cfg)
    assert len(g) == 6 * (80 - cfg.cached_bits_per_file)


def test_packets_need_every_bit_cached():
    cfg = SystemConfig(1, 2, 4, 0.0, packet_count=2)
    cache = CacheState.from_positions(cfg, {1: [(1, 0), (1, 1), (1, 2)]})
    g = build_conflict_graph(cache, DemandVector((1, 1)), cfg)
    assert sorted(zip(g.user.tolist(), g.packet.tolist())) == [(1, 1), (2, 0), (2, 1)]


def test_seven_subfile_instance():
    cfg, cache, d = seven_subfile_instance()
    g = build_conflict_graph(cache, d, cfg)
    assert len(g) == 7
    assert sorted(g.level.tolist()) == [1, 2, 2, 2, 3, 3, 3]
    for seed in range(25):
        a = ahglc_color(g, seed)
        h = hglc_color(g, seed)
        assert a.num_colors == 4 and coloring_is_valid(g, a)
        assert h.num_colors == 5 and coloring_is_valid(g, h)
        for delivery in (ahglc_delivery, hglc_delivery):
            log = delivery(cache, d, cfg, seed)
            assert all(decodable_all(cache, log, d))


def test_graph_dump():
    cfg, cache, d = seven_subfile_instance()
    dump = build_conflict_graph(cache, d, cfg).to_json()
    assert len(dump["nodes"]) == 7
    assert dump["nodes"][:2] == [
        {"user": 1, "packet": [1, 0], "knowers": [1, 2, 3]},
        {"user": 1, "packet": [1, 1], "knowers": [1, 3]},
    ]
    assert all(a != b for a, b in dump["edges"])


def test_invalid_coloring_detected():
    cfg = SystemConfig(2, 1, 3, 0.0)
    g = build_conflict_graph(random_placement(cfg, 0), DemandVector((1,)), cfg)
    assert not coloring_is_valid(g, Coloring(np.zeros(3, dtype=np.int64), 1))
    assert coloring_is_valid(g, Coloring(np.arange(3), 3))


@given(st.integers(0, 2**31), st.integers(1, 3), st.integers(1, 5), st.floats(0, 1), st.integers(2, 24))
def test_colorings_valid_and_decodable(seed, n, k, frac, f):
    cfg = SystemConfig(n, k, f, frac * n)
    cache = random_placement(cfg, seed)
    d = DemandVector(tuple(int(x) for x in np.random.default_rng(seed).integers(1, n + 1, size=k)))
    g = build_conflict_graph(cache, d, cfg)
    for color in (hglc_color(g, seed), ahglc_color(g, seed)):
        assert coloring_is_valid(g, color)
        assert sorted(set(color.color.tolist())) == list(range(color.num_colors))
        log = coloring_to_log(color, g, seed=seed)
        assert all(decodable_all(cache, log, d))


@given(st.integers(0, 2**31), st.sampled_from([1, 2, 4]))
def test_packet_level_decodable(seed, size):
    cfg = SystemConfig(3, 4, 24, 1.0, packet_count=24 // size)
    cache = random_packet_placement(cfg, seed)
    d = DemandVector((1, 2, 3, 1))
    for delivery in (hglc_delivery, ahglc_delivery):
        log = delivery(cache, d, cfg, seed)
        assert all(decodable_all(cache, log, d))
        assert log.total_bits % size == 0


def test_no_knowledge_means_no_compression():
    cfg = SystemConfig(2, 1, 8, 0.0, packet_count=4)
    g = build_conflict_graph(random_placement(cfg, 0), DemandVector((1,)), cfg)
    col = ahglc_color(g, 0)
    log = coloring_to_log(col, g, seed=0)
    assert log.info["rlc"] == "none"
    assert len(log) == col.num_colors
    assert log.load == pytest.approx(col.num_colors * 2 / 8)


def test_single_color_single_codeword():
    cfg = SystemConfig(1, 3, 1, 0.0)
    g = build_conflict_graph(random_placement(cfg, 0), DemandVector((1, 1, 1)), cfg)
    log = coloring_to_log(ahglc_color(g, 0), g)
    assert len(log) == 1 and log.total_bits == 1


def test_compression_uses_known_colors():
    found = 0
    for seed in range(30):
        cfg = SystemConfig(4, 6, 60, 2.0)
        cache = random_placement(cfg, seed)
        d = DemandVector(tuple(int(x) for x in np.random.default_rng(seed).integers(1, 5, size=6)))
        g = build_conflict_graph(cache, d, cfg)
        col = ahglc_color(g, seed)
        ck, _ = color_knowledge(g, col)
        log = coloring_to_log(col, g, seed=seed)
        if log.info["rlc"] == "compressed":
            found += 1
            assert len(log) <= ck.compressed_rows
        assert all(decodable_all(cache, log, d))
    assert found
