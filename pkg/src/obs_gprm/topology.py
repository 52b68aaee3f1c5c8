"""Network graph model: nodes, directed links, hop counts, propagation delays.

Fibers are bidirectional but modeled as two directed links so that each
direction has its own data channels and its own reservation schedule.
"""

from collections import deque
from dataclasses import dataclass

SIGNAL_SPEED = 2.0e8  # m/s, light in fiber


class TopologyError(Exception):
    """Malformed topology file or violated graph invariant."""


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    length_km: float
    control_channels: int
    data_channels: int
    channel_rate: float  # bit/s

    def __post_init__(self):
        if self.src == self.dst:
            raise TopologyError(f"self-loop link at node {self.src}")
        if self.length_km <= 0:
            raise TopologyError(f"link {self.src}->{self.dst}: length must be > 0")
        if self.control_channels < 1 or self.data_channels < 1:
            raise TopologyError(f"link {self.src}->{self.dst}: needs >= 1 channel of each kind")
        if self.channel_rate <= 0:
            raise TopologyError(f"link {self.src}->{self.dst}: channel rate must be > 0")


def propagation_delay(link, signal_speed=SIGNAL_SPEED):
    """One-way propagation delay of a link in seconds."""
    return link.length_km * 1000.0 / signal_speed


class Topology:
    """Validated directed graph with per-link channel counts and distances.

    Immutable after construction; hop counts are computed once on demand and
    cached.
    """

    def __init__(self, nodes, links, signal_speed=SIGNAL_SPEED, names=None):
        self.nodes = sorted(nodes)
        self.links = {(l.src, l.dst): l for l in links}
        self.signal_speed = signal_speed
        self.names = dict(names) if names else {}
        self._hop_counts = None
        self._validate()
        nbrs = {n: [] for n in self.nodes}
        for (u, v) in self.links:
            nbrs[u].append(v)
        self.neighbors = {n: tuple(sorted(ks)) for n, ks in nbrs.items()}

    def _validate(self):
        n = len(self.nodes)
        if n == 0:
            raise TopologyError("topology has no nodes")
        if self.nodes != list(range(n)):
            raise TopologyError(f"node ids must be dense 0..{n - 1}, got {self.nodes}")
        for (u, v) in self.links:
            if u not in self.nodes or v not in self.nodes:
                raise TopologyError(f"link {u}->{v} references undeclared node")
            if (v, u) not in self.links:
                raise TopologyError(f"link {u}->{v} has no reverse link")
        # connectivity via BFS from node 0 (reverse links exist, so one sweep suffices)
        seen = {0}
        queue = deque([0])
        adj = {m: [] for m in self.nodes}
        for (u, v) in self.links:
            adj[u].append(v)
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        if len(seen) != n:
            missing = sorted(set(self.nodes) - seen)
            raise TopologyError(f"graph is disconnected; unreachable nodes {missing}")

    def link(self, u, v):
        return self.links[(u, v)]

    def hop_counts(self):
        """Cached all-pairs minimum hop counts."""
        if self._hop_counts is None:
            self._hop_counts = all_pairs_hop_counts(self)
        return self._hop_counts

    def total_data_channels(self):
        return sum(l.data_channels for l in self.links.values())

    def egress_capacity(self, node):
        """Total data-plane egress rate of a node in bit/s."""
        return sum(
            l.data_channels * l.channel_rate for (u, _), l in self.links.items() if u == node
        )

    def __eq__(self, other):
        return (
            isinstance(other, Topology)
            and self.nodes == other.nodes
            and self.links == other.links
            and self.signal_speed == other.signal_speed
        )


def all_pairs_hop_counts(topology):
    """Minimum hop count for every ordered node pair, via BFS per source."""
    hops = {}
    for s in topology.nodes:
        hops[(s, s)] = 0
        dist = {s: 0}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in topology.neighbors[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    hops[(s, v)] = dist[v]
                    queue.append(v)
    return hops


def load_topology(path, signal_speed=SIGNAL_SPEED):
    """Parse a topology file.

    Format, one record per line, `#` starts a comment:
        node <id> <name>
        link <src> <dst> <km> <ctrl_channels> <data_channels> <bit_rate>
    Each `link` line declares one bidirectional fiber (two directed links).
    """
    nodes = []
    names = {}
    links = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                if parts[0] == "node":
                    nid = int(parts[1])
                    nodes.append(nid)
                    names[nid] = parts[2] if len(parts) > 2 else str(nid)
                elif parts[0] == "link":
                    src, dst = int(parts[1]), int(parts[2])
                    km = float(parts[3])
                    ctrl, data = int(parts[4]), int(parts[5])
                    rate = float(parts[6])
                    links.append(Link(src, dst, km, ctrl, data, rate))
                    links.append(Link(dst, src, km, ctrl, data, rate))
                else:
                    raise TopologyError(f"{path}:{lineno}: unknown record '{parts[0]}'")
            except (IndexError, ValueError) as exc:
                raise TopologyError(f"{path}:{lineno}: malformed line: {line!r}") from exc
    return Topology(nodes, links, signal_speed=signal_speed, names=names)


def save_topology(topology, path):
    """Write a topology back to its file format (one line per fiber)."""
    with open(path, "w") as fh:
        for n in topology.nodes:
            fh.write(f"node {n} {topology.names.get(n, n)}\n")
        for (u, v), l in sorted(topology.links.items()):
            if u < v:
                fh.write(
                    f"link {u} {v} {l.length_km:g} {l.control_channels} "
                    f"{l.data_channels} {l.channel_rate:g}\n"
                )
