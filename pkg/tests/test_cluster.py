import math

import pytest
from hypothesis import given, strategies as st

from sccdso.cluster import (
    LOCAL_BANDWIDTH_MBPS,
    build_cluster,
    load_cluster_config,
    path_bandwidth,
    scale_bandwidth,
    synthetic_cluster_config,
)

from conftest import make_cluster


def test_two_by_two_construction(two_rack_cluster):
    g = two_rack_cluster
    assert len(g.nodes) == 4
    assert len(g.racks) == 2
    ids = g.node_ids()
    for a in ids:
        for b in ids:
            assert path_bandwidth(g, a, b) > 0


def test_reference_profile_counts():
    g = build_cluster(load_cluster_config("configs/cluster_50.json"))
    assert len(g.nodes) == 50
    edge = [n for n in g.nodes.values() if n.cpu_ghz < 2.0]
    assert len(edge) == 10
    assert g.uplinks["n000"].bandwidth_mbps == 125.0  # 1 Gbps
    assert g.intra_rack_latency_s == pytest.approx(0.005)


def test_unknown_rack_rejected():
    with pytest.raises(ValueError, match="unknown rack"):
        make_cluster([("a", "r1", 2.0, 100.0)], racks=["r0"])


def test_duplicate_node_rejected():
    with pytest.raises(ValueError, match="duplicate node"):
        make_cluster([("a", "r1", 2.0, 100.0), ("a", "r1", 2.0, 100.0)])


def test_nonpositive_capacity_rejected():
    with pytest.raises(ValueError):
        make_cluster([("a", "r1", -2.0, 100.0)])
    with pytest.raises(ValueError):
        make_cluster([("a", "r1", 2.0, 0.0)])


def test_same_node_is_local_sentinel(two_rack_cluster):
    assert path_bandwidth(two_rack_cluster, "r1n1", "r1n1") == LOCAL_BANDWIDTH_MBPS
    assert math.isinf(path_bandwidth(two_rack_cluster, "r1n1", "r1n1"))


def test_bottleneck_is_min_over_links():
    # inter-rack path a -> rackA(40) -> core -> rackB(80) -> b with 100 uplinks
    g = make_cluster(
        [
            {"id": "a", "rack": "ra", "cpu_ghz": 2.0, "io_mbps": 100, "uplink_mbps": 100},
            {"id": "b", "rack": "rb", "cpu_ghz": 2.0, "io_mbps": 100, "uplink_mbps": 100},
        ],
        rack_core_mbps={"ra": 40, "rb": 80},
    )
    assert path_bandwidth(g, "a", "b") == 40


def test_gigabit_converts_to_125_mbps():
    # independent unit oracle: 1 Gbps = 1e9 / 8 / 1e6 MB/s
    expected = 1e9 / 8 / 1e6
    g = make_cluster(
        [("a", "r1", 2.0, 100.0), ("b", "r1", 2.0, 100.0)],
        bw=None,
        link_bandwidth_gbps=1.0,
    )
    assert path_bandwidth(g, "a", "b") == pytest.approx(expected)
    assert expected == 125.0


@given(st.integers(min_value=2, max_value=30), st.data())
def test_path_bandwidth_symmetry(n, data):
    g = build_cluster(synthetic_cluster_config(n, rack_size=4))
    ids = g.node_ids()
    a = data.draw(st.sampled_from(ids))
    b = data.draw(st.sampled_from(ids))
    assert path_bandwidth(g, a, b) == path_bandwidth(g, b, a)


@given(st.data())
def test_min_composition_over_tiered_paths(data):
    g = build_cluster(synthetic_cluster_config(12, rack_size=4))
    ids = g.node_ids()
    a, b, c = (data.draw(st.sampled_from(ids)) for _ in range(3))
    # the tiered route a->c never goes below the weakest hop of a->b->c
    assert path_bandwidth(g, a, c) >= min(
        path_bandwidth(g, a, b), path_bandwidth(g, b, c)
    ) - 1e-9


def test_tier_latency_is_one_of_three(two_rack_cluster):
    g = two_rack_cluster
    seen = {
        g.tier_latency_s(a, b) for a in g.node_ids() for b in g.node_ids()
    }
    assert seen <= {0.0, g.intra_rack_latency_s, g.inter_rack_latency_s}
    assert g.tier_latency_s("r1n1", "r1n1") == 0.0


def test_scale_bandwidth_view(two_rack_cluster):
    g = scale_bandwidth(two_rack_cluster, 0.5)
    assert path_bandwidth(g, "r1n1", "r1n2") == pytest.approx(62.5)
    # original untouched
    assert path_bandwidth(two_rack_cluster, "r1n1", "r1n2") == pytest.approx(125.0)
    with pytest.raises(ValueError):
        scale_bandwidth(two_rack_cluster, 0.0)
