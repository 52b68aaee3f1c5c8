"""Burst workload generation: Poisson arrivals, exponential sizes, and the
offered-load accounting used to scale a traffic matrix to a target load.
"""

import random
from dataclasses import dataclass


@dataclass
class ConnectionSpec:
    src: int
    dst: int
    lambda_: float          # bursts per second
    mean_burst_size: float  # bits
    seed: int

    def __post_init__(self):
        if self.lambda_ <= 0:
            raise ValueError("arrival rate must be > 0")
        if self.mean_burst_size <= 0:
            raise ValueError("mean burst size must be > 0")

    def make_rng(self):
        return random.Random(self.seed)


@dataclass
class LoadSpec:
    target_load: float
    node_capacity: dict  # node id -> bits per second of egress capacity

    def __post_init__(self):
        if self.target_load <= 0:
            raise ValueError("target load must be > 0")
        if any(mu <= 0 for mu in self.node_capacity.values()):
            raise ValueError("node capacities must be > 0")


class TrafficMatrix:
    """Relative demand weights between node pairs.

    `connections_per_pair` gives the connection count for every pair with
    positive weight (0 connections for zero-weight pairs).
    """

    def __init__(self, weights, connections_per_pair=1):
        self.weights = {}
        for (i, j), w in weights.items():
            if w < 0:
                raise ValueError(f"negative weight for pair {(i, j)}")
            if i == j and w != 0:
                raise ValueError(f"self-traffic weight at node {i}")
            if w > 0:
                self.weights[(i, j)] = float(w)
        if not self.weights:
            raise ValueError("traffic matrix has no positive weights")
        self.xi = {pair: connections_per_pair for pair in self.weights}

    def pairs(self):
        return sorted(self.weights)


def load_matrix(path, connections_per_pair=1):
    """Parse a matrix file: lines `src dst weight`, `#` comments; missing
    pairs default to weight 0."""
    weights = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                s, d, w = line.split()
                weights[(int(s), int(d))] = float(w)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed matrix line {line!r}") from exc
    return TrafficMatrix(weights, connections_per_pair)


def next_arrival(conn, rng):
    """Draw (inter-arrival gap, burst size in bits) from a connection's stream."""
    dt = rng.expovariate(conn.lambda_)
    size = max(1.0, rng.expovariate(1.0 / conn.mean_burst_size))
    return dt, size


def offered_load(connections, capacities):
    """Sum over connections of rate * mean size / source egress capacity."""
    total = 0.0
    for c in connections:
        total += c.lambda_ * c.mean_burst_size / capacities[c.src]
    return total


def connection_seed(master_seed, src, dst, k):
    """Stable per-connection seed so adding connections never perturbs
    existing streams."""
    return (master_seed * 1_000_003 + src * 100_003 + dst * 1_009 + k) & 0x7FFFFFFFFFFFFFFF


def scale_to_load(matrix, target, mean_burst_size, master_seed=0):
    """Connection set whose offered load hits the target exactly.

    Per-connection rates stay proportional to the matrix weights; a single
    global factor is solved from the load formula.
    """
    denom = 0.0
    for (i, j), w in matrix.weights.items():
        denom += matrix.xi[(i, j)] * w * mean_burst_size / target.node_capacity[i]
    scale = target.target_load / denom
    connections = []
    for (i, j) in matrix.pairs():
        for k in range(matrix.xi[(i, j)]):
            connections.append(
                ConnectionSpec(
                    src=i,
                    dst=j,
                    lambda_=scale * matrix.weights[(i, j)],
                    mean_burst_size=mean_burst_size,
                    seed=connection_seed(master_seed, i, j, k),
                )
            )
    return connections
