import math

import pytest

import obs_gprm
from obs_gprm.traffic import (
    ConnectionSpec,
    LoadSpec,
    TrafficMatrix,
    load_matrix,
    next_arrival,
    offered_load,
    scale_to_load,
)

L = 3.2e6  # 400 KB in bits


def test_connection_spec_validation():
    with pytest.raises(ValueError):
        ConnectionSpec(0, 1, 0.0, L, 1)
    with pytest.raises(ValueError):
        ConnectionSpec(0, 1, 1.0, -5, 1)


def test_inter_arrival_sample_mean():
    conn = ConnectionSpec(0, 1, 10.0, L, seed=11)
    rng = conn.make_rng()
    n = 100_000
    mean = sum(next_arrival(conn, rng)[0] for _ in range(n)) / n
    assert 0.095 <= mean <= 0.105


def test_burst_size_sample_mean():
    conn = ConnectionSpec(0, 1, 10.0, L, seed=12)
    rng = conn.make_rng()
    n = 100_000
    mean = sum(next_arrival(conn, rng)[1] for _ in range(n)) / n
    assert abs(mean - L) / L < 0.02


def test_sizes_floored_at_one_bit():
    conn = ConnectionSpec(0, 1, 10.0, 1e-9, seed=1)
    rng = conn.make_rng()
    assert all(next_arrival(conn, rng)[1] >= 1.0 for _ in range(100))


def test_same_seed_same_stream():
    conn = ConnectionSpec(0, 1, 5.0, L, seed=99)
    a = [next_arrival(conn, conn.make_rng()) for _ in range(1)]
    r1, r2 = conn.make_rng(), conn.make_rng()
    s1 = [next_arrival(conn, r1) for _ in range(500)]
    s2 = [next_arrival(conn, r2) for _ in range(500)]
    assert s1 == s2


def test_offered_load_single_connection():
    conns = [ConnectionSpec(0, 1, 10.0, L, 1)]
    assert offered_load(conns, {0: 4e9}) == pytest.approx(0.008)


def test_offered_load_empty():
    assert offered_load([], {0: 4e9}) == 0.0


def test_offered_load_linearity():
    conns = [ConnectionSpec(0, 1, 10.0, L, 1), ConnectionSpec(0, 1, 10.0, L, 2)]
    single = offered_load(conns[:1], {0: 4e9})
    assert offered_load(conns, {0: 4e9}) == pytest.approx(2 * single)


def test_matrix_rejects_self_traffic_and_all_zero():
    with pytest.raises(ValueError):
        TrafficMatrix({(0, 0): 1.0})
    with pytest.raises(ValueError):
        TrafficMatrix({(0, 1): 0.0})
    with pytest.raises(ValueError):
        TrafficMatrix({(0, 1): -1.0})


def test_scale_to_load_round_trip_uniform():
    m = TrafficMatrix({(i, j): 1.0 for i in range(3) for j in range(3) if i != j})
    caps = {i: 8e9 for i in range(3)}
    conns = scale_to_load(m, LoadSpec(0.4, caps), L)
    assert offered_load(conns, caps) == pytest.approx(0.4, rel=1e-9)


def test_scale_to_load_proportionality():
    m = TrafficMatrix({(0, 1): 2.0, (1, 0): 1.0})
    caps = {0: 4e9, 1: 4e9}
    conns = {(c.src, c.dst): c for c in scale_to_load(m, LoadSpec(0.2, caps), L)}
    assert conns[(0, 1)].lambda_ == pytest.approx(2 * conns[(1, 0)].lambda_)


def test_scale_to_load_shipped_matrix_round_trip():
    from obs_gprm.topology import load_topology

    topo = load_topology(obs_gprm.data_path("nsfnet.topo"))
    m = load_matrix(obs_gprm.data_path("us_ref.matrix"))
    caps = {n: topo.egress_capacity(n) for n in topo.nodes}
    conns = scale_to_load(m, LoadSpec(0.3, caps), L)
    assert offered_load(conns, caps) == pytest.approx(0.3, rel=1e-9)
    assert all(c.src != c.dst for c in conns)


def test_connections_per_pair():
    m = TrafficMatrix({(0, 1): 1.0}, connections_per_pair=3)
    caps = {0: 4e9}
    conns = scale_to_load(m, LoadSpec(0.3, caps), L)
    assert len(conns) == 3
    assert len({c.seed for c in conns}) == 3
    assert offered_load(conns, caps) == pytest.approx(0.3, rel=1e-9)


def test_seed_stability_when_adding_connections():
    m1 = TrafficMatrix({(0, 1): 1.0})
    m2 = TrafficMatrix({(0, 1): 1.0, (1, 0): 1.0})
    caps = {0: 4e9, 1: 4e9}
    c1 = scale_to_load(m1, LoadSpec(0.1, caps), L, master_seed=5)
    c2 = scale_to_load(m2, LoadSpec(0.1, caps), L, master_seed=5)
    by_pair = {(c.src, c.dst): c.seed for c in c2}
    assert by_pair[(0, 1)] == c1[0].seed


def test_load_matrix_parses_and_defaults(tmp_path):
    path = tmp_path / "m.matrix"
    path.write_text("# demo\n0 1 2.5\n1 0 1.0\n")
    m = load_matrix(str(path))
    assert m.weights == {(0, 1): 2.5, (1, 0): 1.0}
    assert (2, 3) not in m.weights


def test_load_matrix_rejects_garbage(tmp_path):
    path = tmp_path / "m.matrix"
    path.write_text("0 1 huh\n")
    with pytest.raises(ValueError):
        load_matrix(str(path))
