from obs_gprm.topology import Link, Topology


def bidir(u, v, km=0.2, ctrl=2, data=4, rate=1e9):
    return [Link(u, v, km, ctrl, data, rate), Link(v, u, km, ctrl, data, rate)]


def path_topology(n, km=0.2, data=4, rate=1e9):
    links = []
    for i in range(n - 1):
        links += bidir(i, i + 1, km=km, data=data, rate=rate)
    return Topology(list(range(n)), links)


def ring_topology(n, km=0.2, data=4, rate=1e9):
    links = []
    for i in range(n):
        links += bidir(i, (i + 1) % n, km=km, data=data, rate=rate)
    return Topology(list(range(n)), links)


def star_into_chain(data=1, km=0.2):
    """Y shape: 0-1, 3-1, 1-2; contention meets on link (1, 2)."""
    links = bidir(0, 1, km=km, data=data) + bidir(3, 1, km=km, data=data) \
        + bidir(1, 2, km=km, data=data)
    return Topology([0, 1, 2, 3], links)
