#!/usr/bin/env python3
"""Adaptive (GPRM) vs shortest-path routing on NSFnet, three loads.

A compact version of the shipped comparison scenario: identical workloads
per seed, steady-state loss / delay / utilization per policy. Writes a PNG
of the loss curves when matplotlib is available. Expect a couple of minutes.
"""

import obs_gprm
from obs_gprm.signaling import SimConfig, Simulator
from obs_gprm.topology import load_topology
from obs_gprm.traffic import LoadSpec, load_matrix, scale_to_load

LOADS = (0.1, 0.3, 0.5)
DURATION, WARMUP = 65.0, 5.0


def run(topo, conns, policy):
    cfg = SimConfig(warmup=WARMUP, offset_guard=3e-4, alpha=0.97,
                    refresh_period=0.02, blr_window=0.3)
    res = Simulator(topo, conns, policy=policy, config=cfg).run(DURATION)
    return res.blr(), res.mean_delay(), res.utilization(topo)


def main():
    topo = load_topology(obs_gprm.data_path("nsfnet.topo"))
    matrix = load_matrix(obs_gprm.data_path("us_ref.matrix"))
    caps = {n: topo.egress_capacity(n) for n in topo.nodes}
    rows = []
    print(f"{'load':>5} {'BLR sp':>9} {'BLR gprm':>9} {'reduction':>9} "
          f"{'delay diff':>11} {'util sp':>8} {'util gprm':>9}")
    for load in LOADS:
        conns = scale_to_load(matrix, LoadSpec(load, caps), 3.2e6, master_seed=1)
        sp = run(topo, conns, "sp")
        gp = run(topo, conns, "gprm")
        rows.append((load, sp, gp))
        print(f"{load:>5.1f} {sp[0]:>9.5f} {gp[0]:>9.5f} "
              f"{(sp[0] - gp[0]) / sp[0]:>9.1%} {(gp[1] - sp[1]) * 1e3:>+9.2f}ms "
              f"{sp[2]:>8.4f} {gp[2]:>9.4f}")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    loads = [r[0] for r in rows]
    plt.figure(figsize=(5, 3.5))
    plt.plot(loads, [r[1][0] for r in rows], "o-", label="shortest path")
    plt.plot(loads, [r[2][0] for r in rows], "s-", label="GPRM")
    plt.xlabel("offered load")
    plt.ylabel("burst loss ratio")
    plt.legend()
    plt.tight_layout()
    plt.savefig("policy_comparison.png", dpi=120)
    print("wrote policy_comparison.png")


if __name__ == "__main__":
    main()
