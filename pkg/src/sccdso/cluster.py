"""Heterogeneous cluster model: racks, nodes, and bandwidth-limited links.

The cluster is a two-tier tree: every node hangs off its rack switch, and
every rack switch hangs off a single core switch. This keeps path queries
O(1): the route between two nodes is fully determined by whether they share
a node, a rack, or nothing. Arbitrary graphs are deliberately unsupported.

Bandwidth fields are in MB/s throughout (config files may specify Gbps and
get converted: 1 Gbps == 125 MB/s). Latency tiers are local / intra-rack /
inter-rack, defaulting to 0 ms / 5 ms / 15 ms and overridable per config.

A built ClusterGraph is immutable; derive modified views (e.g. slowed-down
nodes) by rebuilding rather than mutating.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

LOCAL_BANDWIDTH_MBPS = math.inf  # sentinel for same-node "transfers"

DEFAULT_INTRA_RACK_LATENCY_S = 0.005
DEFAULT_INTER_RACK_LATENCY_S = 0.015
GBPS_TO_MBPS = 125.0  # 1 Gbps = 1000/8 MB/s


@dataclass(frozen=True)
class NodeSpec:
    """A compute node. Capacity is two-sided: `slots` bounds concurrent
    tasks, `capacity_mb` bounds the total task data the node may accept
    in one scheduling round (defaults to its memory)."""

    id: str
    cpu_ghz: float
    mem_gb: float
    io_mbps: float
    rack: str
    slots: int = 2
    loss_prob: float = 0.0
    cost_per_cycle: float = 1e-10
    capacity_mb: float = 0.0  # 0 -> defaulted to mem_gb * 1024 at build time

    def validate(self) -> None:
        if self.cpu_ghz <= 0:
            raise ValueError(f"node {self.id}: cpu_ghz must be > 0")
        if self.io_mbps <= 0:
            raise ValueError(f"node {self.id}: io_mbps must be > 0")
        if self.mem_gb <= 0:
            raise ValueError(f"node {self.id}: mem_gb must be > 0")
        if self.slots < 1:
            raise ValueError(f"node {self.id}: slots must be >= 1")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError(f"node {self.id}: loss_prob must be in [0, 1]")
        if self.capacity_mb <= 0:
            raise ValueError(f"node {self.id}: capacity_mb must be > 0")


@dataclass(frozen=True)
class LinkSpec:
    """A directed-capacity-free link. `endpoints` names the two attachment
    points (node id and rack id, or rack id and 'core')."""

    endpoints: tuple[str, str]
    bandwidth_mbps: float
    base_queue_delay_s: float = 0.0
    cost_per_mb: float = 0.0

    def validate(self) -> None:
        if self.bandwidth_mbps <= 0:
            raise ValueError(f"link {self.endpoints}: bandwidth must be > 0")
        if self.base_queue_delay_s < 0:
            raise ValueError(f"link {self.endpoints}: queue delay must be >= 0")


@dataclass(frozen=True)
class ClusterGraph:
    nodes: dict[str, NodeSpec]
    racks: dict[str, tuple[str, ...]]
    uplinks: dict[str, LinkSpec]  # node id -> link to its rack switch
    core_links: dict[str, LinkSpec]  # rack id -> link to the core switch
    intra_rack_latency_s: float = DEFAULT_INTRA_RACK_LATENCY_S
    inter_rack_latency_s: float = DEFAULT_INTER_RACK_LATENCY_S

    def node(self, node_id: str) -> NodeSpec:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise KeyError(f"unknown node id: {node_id}") from None

    def rack_of(self, node_id: str) -> str:
        return self.node(node_id).rack

    def node_ids(self) -> list[str]:
        return sorted(self.nodes)

    def tier(self, a: str, b: str) -> str:
        """'local', 'intra', or 'inter' for the a->b route."""
        if a == b:
            self.node(a)
            return "local"
        return "intra" if self.rack_of(a) == self.rack_of(b) else "inter"

    def tier_latency_s(self, a: str, b: str) -> float:
        tier = self.tier(a, b)
        if tier == "local":
            return 0.0
        if tier == "intra":
            return self.intra_rack_latency_s
        return self.inter_rack_latency_s

    def path_links(self, a: str, b: str) -> list[LinkSpec]:
        """Links on the unique tiered route a -> b (empty when a == b)."""
        tier = self.tier(a, b)
        if tier == "local":
            return []
        if tier == "intra":
            return [self.uplinks[a], self.uplinks[b]]
        return [
            self.uplinks[a],
            self.core_links[self.rack_of(a)],
            self.core_links[self.rack_of(b)],
            self.uplinks[b],
        ]


def path_bandwidth(g: ClusterGraph, a: str, b: str) -> float:
    """Bottleneck bandwidth (MB/s) of the tiered route a -> b.

    Same-node access returns the `LOCAL_BANDWIDTH_MBPS` infinity sentinel:
    no transfer is needed.
    """
    links = g.path_links(a, b)
    if not links:
        return LOCAL_BANDWIDTH_MBPS
    return min(l.bandwidth_mbps for l in links)


def build_cluster(config: dict) -> ClusterGraph:
    """Build and validate a ClusterGraph from a parsed config mapping.

    Expected keys: `racks` (list of rack ids), `nodes` (list of node
    mappings with cpu_ghz, mem_gb, io_mbps, slots, loss_prob, rack and
    optional capacity_mb / uplink overrides), plus cluster-wide
    `link_bandwidth_mbps` (or `link_bandwidth_gbps`) and the two rack
    latency knobs in milliseconds.
    """
    if not isinstance(config, dict):
        raise ValueError("cluster config must be a mapping")
    rack_ids = list(config.get("racks", []))
    node_cfgs = list(config.get("nodes", []))
    if not rack_ids:
        raise ValueError("cluster config needs at least one rack")
    if len(set(rack_ids)) != len(rack_ids):
        raise ValueError("duplicate rack ids in config")
    if not node_cfgs:
        raise ValueError("cluster config needs at least one node")

    default_bw = config.get("link_bandwidth_mbps")
    if default_bw is None:
        gbps = config.get("link_bandwidth_gbps", 1.0)
        default_bw = float(gbps) * GBPS_TO_MBPS
    default_bw = float(default_bw)
    if default_bw <= 0:
        raise ValueError("link bandwidth must be > 0")

    intra_s = float(config.get("intra_rack_latency_ms", DEFAULT_INTRA_RACK_LATENCY_S * 1e3)) / 1e3
    inter_s = float(config.get("inter_rack_latency_ms", DEFAULT_INTER_RACK_LATENCY_S * 1e3)) / 1e3
    if intra_s < 0 or inter_s < 0:
        raise ValueError("rack latencies must be >= 0")
    link_cost = float(config.get("link_cost_per_mb", 0.0))
    link_queue = float(config.get("link_queue_delay_ms", 0.0)) / 1e3

    nodes: dict[str, NodeSpec] = {}
    racks: dict[str, list[str]] = {r: [] for r in rack_ids}
    uplinks: dict[str, LinkSpec] = {}
    for cfg in node_cfgs:
        node = NodeSpec(
            id=str(cfg["id"]),
            cpu_ghz=float(cfg["cpu_ghz"]),
            mem_gb=float(cfg["mem_gb"]),
            io_mbps=float(cfg["io_mbps"]),
            rack=str(cfg["rack"]),
            slots=int(cfg.get("slots", 2)),
            loss_prob=float(cfg.get("loss_prob", 0.0)),
            cost_per_cycle=float(cfg.get("cost_per_cycle", 1e-10)),
            capacity_mb=float(cfg.get("capacity_mb", 0.0)),
        )
        if node.capacity_mb <= 0:
            node = replace(node, capacity_mb=node.mem_gb * 1024.0)
        node.validate()
        if node.id in nodes:
            raise ValueError(f"duplicate node id: {node.id}")
        if node.rack not in racks:
            raise ValueError(f"node {node.id} references unknown rack {node.rack}")
        nodes[node.id] = node
        racks[node.rack].append(node.id)
        uplink = LinkSpec(
            endpoints=(node.id, node.rack),
            bandwidth_mbps=float(cfg.get("uplink_mbps", default_bw)),
            base_queue_delay_s=link_queue,
            cost_per_mb=link_cost,
        )
        uplink.validate()
        uplinks[node.id] = uplink

    empty = [r for r, members in racks.items() if not members]
    if empty:
        raise ValueError(f"racks without nodes: {empty}")

    core_links = {}
    rack_overrides = config.get("rack_core_mbps", {})
    for r in rack_ids:
        link = LinkSpec(
            endpoints=(r, "core"),
            bandwidth_mbps=float(rack_overrides.get(r, default_bw)),
            base_queue_delay_s=link_queue,
            cost_per_mb=link_cost,
        )
        link.validate()
        core_links[r] = link

    return ClusterGraph(
        nodes=nodes,
        racks={r: tuple(members) for r, members in racks.items()},
        uplinks=uplinks,
        core_links=core_links,
        intra_rack_latency_s=intra_s,
        inter_rack_latency_s=inter_s,
    )


def load_cluster_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def scale_bandwidth(g: ClusterGraph, factor: float) -> ClusterGraph:
    """Return a view with every link bandwidth multiplied by `factor`.

    Used to model a configured background network load: a load fraction x
    leaves (1 - x) of each link for the scheduled traffic.
    """
    if factor <= 0:
        raise ValueError("bandwidth factor must be > 0")
    if factor == 1.0:
        return g
    uplinks = {
        nid: replace(l, bandwidth_mbps=l.bandwidth_mbps * factor)
        for nid, l in g.uplinks.items()
    }
    core = {
        r: replace(l, bandwidth_mbps=l.bandwidth_mbps * factor)
        for r, l in g.core_links.items()
    }
    return replace(g, uplinks=uplinks, core_links=core)


# Hardware mix used by the synthetic profiles: (cpu_ghz, mem_gb, io_mbps, slots).
_COMPUTE_TIERS = [
    (3.2, 32.0, 400.0, 4),
    (2.8, 16.0, 300.0, 4),
    (2.4, 8.0, 220.0, 2),
]
_EDGE_TIER = (1.4, 4.0, 110.0, 1)


def synthetic_cluster_config(
    n_nodes: int,
    rack_size: int = 10,
    edge_fraction: float = 0.2,
    link_bandwidth_mbps: float = GBPS_TO_MBPS,
) -> dict:
    """Deterministic heterogeneous profile: mixed compute tiers plus a
    fraction of low-power edge devices, packed into racks of `rack_size`."""
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    n_edge = int(round(n_nodes * edge_fraction))
    n_racks = max(1, math.ceil(n_nodes / rack_size))
    racks = [f"rack{r}" for r in range(n_racks)]
    nodes = []
    for i in range(n_nodes):
        if i < n_nodes - n_edge:
            cpu, mem, io, slots = _COMPUTE_TIERS[i % len(_COMPUTE_TIERS)]
            loss = 0.001
        else:
            cpu, mem, io, slots = _EDGE_TIER
            loss = 0.01
        nodes.append(
            {
                "id": f"n{i:03d}",
                "cpu_ghz": cpu,
                "mem_gb": mem,
                "io_mbps": io,
                "slots": slots,
                "loss_prob": loss,
                "rack": racks[i % n_racks],
            }
        )
    return {
        "racks": racks,
        "nodes": nodes,
        "link_bandwidth_mbps": link_bandwidth_mbps,
        "intra_rack_latency_ms": 5.0,
        "inter_rack_latency_ms": 15.0,
    }
