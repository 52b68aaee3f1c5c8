"""Experiment orchestration: scenario files, load/seed sweeps, result CSVs.

A sweep runs every (policy, load, seed) combination on an identical traffic
realization (the arrival streams depend only on the seed, never on the
policy) and emits one results CSV, one learning CSV per run, and a per-load
gain summary when both policies were run.
"""

import csv
import os
from dataclasses import dataclass, field, replace
from multiprocessing import Pool

from .metrics import blr_gain, blr_gain_terms, u_gain, u_gain_terms
from .signaling import SimConfig, Simulator
from .topology import load_topology
from .traffic import LoadSpec, load_matrix, scale_to_load

RESULT_COLUMNS = ("policy", "seed", "load", "blr", "mean_delay_s", "utilization",
                  "drops_contention", "drops_offset", "drops_noroute", "drops_ingress")
LEARNING_COLUMNS = ("t_bucket", "sent", "dropped", "rolling_blr")
ROLLING_WINDOW_BUCKETS = 20


class ScenarioError(Exception):
    """Scenario failed validation; `errors` lists every problem found."""

    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)


@dataclass
class Scenario:
    topology: str = ""
    matrix: str = ""
    policies: list = field(default_factory=lambda: ["sp", "gprm"])
    loads: list = field(default_factory=list)
    seeds: list = field(default_factory=lambda: [1])
    duration: float = 20.0
    warmup: float = 2.0
    alpha: float = 0.9
    refresh_period: float = 0.1
    initial_mode: str = "warm"
    detour_penalty: float = 0.8
    blr_low: float = 0.01
    blr_high: float = 0.05
    blr_window: float = 0.1
    per_hop_processing: float = 1e-4
    offset_guard: float = 0.0
    mean_burst_size: float = 3.2e6
    signal_speed: float = 2.0e8
    bucket_width: float = 0.01
    connections_per_pair: int = 1
    util_mode: str = "delivered"


_FLOAT_KEYS = {"duration", "warmup", "alpha", "refresh_period", "detour_penalty",
               "blr_low", "blr_high", "blr_window", "per_hop_processing",
               "offset_guard", "mean_burst_size", "signal_speed", "bucket_width"}
_INT_KEYS = {"connections_per_pair"}
_STR_KEYS = {"topology", "matrix", "initial_mode", "util_mode"}


def parse_scenario(path):
    """Read a flat `key = value` scenario file; lists are comma separated and
    file paths resolve relative to the scenario file."""
    base = os.path.dirname(os.path.abspath(path))
    scenario = Scenario()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ScenarioError([f"{path}:{lineno}: expected key = value, got {line!r}"])
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            try:
                if key in _FLOAT_KEYS:
                    setattr(scenario, key, float(value))
                elif key in _INT_KEYS:
                    setattr(scenario, key, int(value))
                elif key in _STR_KEYS:
                    if key in ("topology", "matrix") and not os.path.isabs(value):
                        value = os.path.join(base, value)
                    setattr(scenario, key, value)
                elif key == "policies":
                    scenario.policies = [p.strip() for p in value.split(",") if p.strip()]
                elif key == "loads":
                    scenario.loads = [float(v) for v in value.split(",")]
                elif key == "seeds":
                    scenario.seeds = [int(v) for v in value.split(",")]
                else:
                    raise ScenarioError([f"{path}:{lineno}: unknown key {key!r}"])
            except ValueError as exc:
                raise ScenarioError([f"{path}:{lineno}: bad value for {key}: {exc}"]) from exc
    return scenario


def validate(scenario):
    """All scenario invariants; returns a list of `field: reason` strings."""
    errors = []
    if not scenario.topology:
        errors.append("topology: missing")
    elif not os.path.exists(scenario.topology):
        errors.append(f"topology: file not found: {scenario.topology}")
    if not scenario.matrix:
        errors.append("matrix: missing")
    elif not os.path.exists(scenario.matrix):
        errors.append(f"matrix: file not found: {scenario.matrix}")
    for p in scenario.policies:
        if p not in ("sp", "gprm"):
            errors.append(f"policies: unknown policy {p!r}")
    if not scenario.policies:
        errors.append("policies: must not be empty")
    if not scenario.loads:
        errors.append("loads: must not be empty")
    if any(l <= 0 for l in scenario.loads):
        errors.append("loads: every load must be > 0")
    if not scenario.seeds:
        errors.append("seeds: must not be empty")
    if scenario.warmup < 0:
        errors.append("warmup: must be >= 0")
    if scenario.duration <= scenario.warmup:
        errors.append("warmup: must be < duration")
    if not 0.0 <= scenario.alpha <= 1.0:
        errors.append("alpha: out of [0,1]")
    if scenario.refresh_period <= 0:
        errors.append("refresh_period: must be > 0")
    if scenario.initial_mode not in ("warm", "cold"):
        errors.append(f"initial_mode: expected warm or cold, got {scenario.initial_mode!r}")
    if not 0.0 < scenario.detour_penalty <= 1.0:
        errors.append("detour_penalty: must be in (0,1]")
    if not 0.0 < scenario.blr_low < scenario.blr_high < 1.0:
        errors.append("blr thresholds: need 0 < low < high < 1")
    if scenario.blr_window <= 0:
        errors.append("blr_window: must be > 0")
    if scenario.per_hop_processing <= 0:
        errors.append("per_hop_processing: must be > 0")
    if scenario.offset_guard < 0:
        errors.append("offset_guard: must be >= 0")
    if scenario.mean_burst_size <= 0:
        errors.append("mean_burst_size: must be > 0")
    if scenario.signal_speed <= 0:
        errors.append("signal_speed: must be > 0")
    if scenario.bucket_width <= 0:
        errors.append("bucket_width: must be > 0")
    if scenario.connections_per_pair < 1:
        errors.append("connections_per_pair: must be >= 1")
    if scenario.util_mode not in ("delivered", "all"):
        errors.append(f"util_mode: expected delivered or all, got {scenario.util_mode!r}")
    return errors


def sim_config(scenario):
    return SimConfig(
        per_hop_processing=scenario.per_hop_processing,
        offset_guard=scenario.offset_guard,
        alpha=scenario.alpha,
        refresh_period=scenario.refresh_period,
        initial_mode=scenario.initial_mode,
        detour_penalty=scenario.detour_penalty,
        blr_low=scenario.blr_low,
        blr_high=scenario.blr_high,
        blr_window=scenario.blr_window,
        util_mode=scenario.util_mode,
        bucket_width=scenario.bucket_width,
        warmup=scenario.warmup,
    )


def run_single(scenario, policy, load, seed, trace_path=None):
    """One simulation run; returns (result row dict, learning arrays)."""
    topology = load_topology(scenario.topology, scenario.signal_speed)
    matrix = load_matrix(scenario.matrix, scenario.connections_per_pair)
    capacities = {n: topology.egress_capacity(n) for n in topology.nodes}
    connections = scale_to_load(matrix, LoadSpec(load, capacities),
                                scenario.mean_burst_size, master_seed=seed)
    trace_fh = None
    trace = None
    if trace_path:
        trace_fh = open(trace_path, "w")
        trace = lambda t, kind, node, bid, detail: trace_fh.write(
            f"{t:.9f} {kind} {node} {bid} {detail}\n")
    try:
        sim = Simulator(topology, connections, policy=policy,
                        config=sim_config(scenario), trace=trace)
        result = sim.run(scenario.duration)
    finally:
        if trace_fh:
            trace_fh.close()
    counters = result.counters
    row = {
        "policy": policy,
        "seed": seed,
        "load": load,
        "blr": result.blr() if counters.bursts_sent else float("nan"),
        "mean_delay_s": result.mean_delay() if counters.bursts_delivered else float("nan"),
        "utilization": result.utilization(topology),
        "drops_contention": counters.drops_contention,
        "drops_offset": counters.drops_offset,
        "drops_noroute": counters.drops_noroute,
        "drops_ingress": counters.drops_ingress,
    }
    times, sent, dropped = result.series.arrays()
    _, rolling = result.series.rolling_blr(ROLLING_WINDOW_BUCKETS)
    return row, (times, sent, dropped, rolling)


def _pool_worker(args):
    return run_single(*args)


def _learning_name(policy, load, seed):
    return f"learning_{policy}_load{load:g}_seed{seed}.csv"


def _write_results_csv(path, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])
    os.replace(tmp, path)


def _write_learning_csv(path, arrays):
    times, sent, dropped, rolling = arrays
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LEARNING_COLUMNS)
        for t, s, d, r in zip(times, sent, dropped, rolling):
            writer.writerow([_fmt(float(t)), int(s), int(d), _fmt(float(r))])
    os.replace(tmp, path)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.9g}"
    return v


def _write_gains_csv(path, rows, loads, seeds):
    """Per-load gains from seed-averaged BLR and utilization (both policies)."""
    by_key = {(r["policy"], r["load"], r["seed"]): r for r in rows}

    def seed_mean(policy, load, column):
        vals = [by_key[(policy, load, s)][column] for s in seeds]
        return sum(vals) / len(vals)

    blr_sp = [seed_mean("sp", l, "blr") for l in loads]
    blr_gp = [seed_mean("gprm", l, "blr") for l in loads]
    u_sp = [seed_mean("sp", l, "utilization") for l in loads]
    u_gp = [seed_mean("gprm", l, "utilization") for l in loads]
    d_sp = [seed_mean("sp", l, "mean_delay_s") for l in loads]
    d_gp = [seed_mean("gprm", l, "mean_delay_s") for l in loads]
    blr_terms = blr_gain_terms(blr_sp, blr_gp)
    u_terms = u_gain_terms(u_sp, u_gp)
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["load", "blr_sp", "blr_gprm", "blr_gain_point",
                         "delay_sp_s", "delay_gprm_s",
                         "util_sp", "util_gprm", "util_gain_point"])
        for i, l in enumerate(loads):
            writer.writerow([_fmt(float(v)) for v in
                             (l, blr_sp[i], blr_gp[i], blr_terms[i],
                              d_sp[i], d_gp[i], u_sp[i], u_gp[i], u_terms[i])])
        writer.writerow(["sum", "", "", _fmt(blr_gain(blr_sp, blr_gp)),
                         "", "", "", "", _fmt(u_gain(u_sp, u_gp))])
        writer.writerow(["mean", "", "", _fmt(blr_gain(blr_sp, blr_gp) / len(loads)),
                         "", "", "", "", _fmt(u_gain(u_sp, u_gp) / len(loads))])
    os.replace(tmp, path)


def worker_count(n_runs, threads=None):
    if threads is None:
        env = os.environ.get("OBS_SIM_THREADS", "")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(threads, n_runs))


def run_experiment(scenario, out_dir=".", trace=False, policy=None,
                   seed_override=None, util_mode=None, threads=None, log=None):
    """Run the full sweep and write results.csv, learning CSVs, and gains.csv.

    Result files appear only after every run has completed; a failed run
    aborts the whole experiment with nothing written.
    """
    if policy and policy != "both":
        scenario = replace(scenario, policies=[policy])
    if seed_override is not None:
        scenario = replace(scenario, seeds=[seed_override])
    if util_mode:
        scenario = replace(scenario, util_mode=util_mode)
    errors = validate(scenario)
    if errors:
        raise ScenarioError(errors)
    os.makedirs(out_dir, exist_ok=True)
    specs = []
    for pol in scenario.policies:
        for load in scenario.loads:
            for seed in scenario.seeds:
                trace_path = (os.path.join(out_dir, f"trace_{pol}_load{load:g}_seed{seed}.log")
                              if trace else None)
                specs.append((scenario, pol, load, seed, trace_path))
    workers = worker_count(len(specs), threads)
    if log:
        log(f"running {len(specs)} simulations on {workers} worker(s)")
    if workers > 1:
        with Pool(workers) as pool:
            outcomes = pool.map(_pool_worker, specs)
    else:
        outcomes = [run_single(*spec) for spec in specs]
    rows = [row for row, _ in outcomes]
    results_path = os.path.join(out_dir, "results.csv")
    _write_results_csv(results_path, rows)
    for row, arrays in outcomes:
        _write_learning_csv(os.path.join(
            out_dir, _learning_name(row["policy"], row["load"], row["seed"])), arrays)
    written = {"results": results_path}
    if {"sp", "gprm"} <= set(scenario.policies):
        gains_path = os.path.join(out_dir, "gains.csv")
        _write_gains_csv(gains_path, rows, scenario.loads, scenario.seeds)
        written["gains"] = gains_path
    if log:
        log(f"wrote {results_path}")
    return written
