"""Run counters and the derived comparison quantities: loss ratio, mean
end-to-end delay, utilization, and the per-point gain sums used to compare
the adaptive policy against the min-hop baseline."""

from dataclasses import dataclass, field

import numpy as np

DROP_CAUSES = ("contention", "offset", "noroute", "ingress")


class UndefinedMetricError(ValueError):
    """Metric requested from counters that cannot define it (e.g. BLR of an
    empty run)."""


@dataclass
class RunCounters:
    bursts_sent: int = 0
    bursts_delivered: int = 0
    drops_contention: int = 0
    drops_offset: int = 0
    drops_noroute: int = 0
    drops_ingress: int = 0
    delay_sum: float = 0.0
    # (src, dst, wavelength) -> seconds of channel occupancy
    busy_time: dict = field(default_factory=dict)

    @property
    def bursts_dropped(self):
        return (self.drops_contention + self.drops_offset
                + self.drops_noroute + self.drops_ingress)

    @property
    def in_flight(self):
        return self.bursts_sent - self.bursts_delivered - self.bursts_dropped

    def add_drop(self, cause):
        setattr(self, "drops_" + cause, getattr(self, "drops_" + cause) + 1)

    def add_busy(self, key, seconds):
        self.busy_time[key] = self.busy_time.get(key, 0.0) + seconds


def blr(counters):
    """Burst loss ratio: dropped / sent."""
    if counters.bursts_sent == 0:
        raise UndefinedMetricError("BLR undefined: no bursts sent")
    return counters.bursts_dropped / counters.bursts_sent


def mean_e2e_delay(counters):
    """Mean end-to-end delay of delivered bursts (offset + propagation +
    transmission)."""
    if counters.bursts_delivered == 0:
        raise UndefinedMetricError("delay undefined: no bursts delivered")
    return counters.delay_sum / counters.bursts_delivered


def utilization(counters, topology, elapsed):
    """Fraction of total data-channel capacity occupied during `elapsed`."""
    if elapsed <= 0:
        raise UndefinedMetricError("utilization undefined: elapsed must be > 0")
    total_busy = sum(counters.busy_time.values())
    return total_busy / (elapsed * topology.total_data_channels())


def _gain_terms(baseline, candidate, sign):
    if len(baseline) != len(candidate):
        raise ValueError(f"length mismatch: {len(baseline)} vs {len(candidate)}")
    terms = []
    for b, c in zip(baseline, candidate):
        if b <= 0:
            raise ValueError("baseline values must be > 0")
        terms.append(sign * (b - c) / b)
    return terms


def blr_gain_terms(sp_blrs, gprm_blrs):
    """Per-point relative BLR reduction of the adaptive policy."""
    return _gain_terms(sp_blrs, gprm_blrs, 1.0)


def blr_gain(sp_blrs, gprm_blrs):
    """Summed relative BLR reduction over simulation points."""
    return sum(blr_gain_terms(sp_blrs, gprm_blrs))


def u_gain_terms(sp_us, gprm_us):
    """Per-point relative utilization improvement of the adaptive policy."""
    return _gain_terms(sp_us, gprm_us, -1.0)


def u_gain(sp_us, gprm_us):
    """Summed relative utilization improvement over simulation points."""
    return sum(u_gain_terms(sp_us, gprm_us))


class TimeSeries:
    """Per-bucket sent/dropped counts for the learning-curve output."""

    def __init__(self, bucket_width):
        if bucket_width <= 0:
            raise ValueError("bucket width must be > 0")
        self.bucket_width = bucket_width
        self._sent = {}
        self._dropped = {}

    def _idx(self, t):
        return int(t / self.bucket_width)

    def add_sent(self, t):
        i = self._idx(t)
        self._sent[i] = self._sent.get(i, 0) + 1

    def add_drop(self, t):
        i = self._idx(t)
        self._dropped[i] = self._dropped.get(i, 0) + 1

    @property
    def total_sent(self):
        return sum(self._sent.values())

    @property
    def total_dropped(self):
        return sum(self._dropped.values())

    def arrays(self):
        """(bucket start times, sent, dropped) as dense numpy arrays."""
        if not self._sent and not self._dropped:
            return np.array([]), np.array([], dtype=int), np.array([], dtype=int)
        last = max(list(self._sent) + list(self._dropped))
        sent = np.zeros(last + 1, dtype=int)
        dropped = np.zeros(last + 1, dtype=int)
        for i, n in self._sent.items():
            sent[i] = n
        for i, n in self._dropped.items():
            dropped[i] = n
        times = np.arange(last + 1) * self.bucket_width
        return times, sent, dropped

    def rolling_blr(self, window_buckets=20):
        """Loss ratio over a trailing window ending at each bucket.

        Buckets whose window saw no traffic report 0.
        """
        times, sent, dropped = self.arrays()
        if len(times) == 0:
            return times, np.array([])
        wsent = np.cumsum(sent)
        wdrop = np.cumsum(dropped)
        w = window_buckets
        if len(wsent) > w:
            wsent[w:] -= wsent[:-w].copy()
            wdrop[w:] -= wdrop[:-w].copy()
        out = np.zeros(len(times))
        nz = wsent > 0
        out[nz] = wdrop[nz] / wsent[nz]
        return times, out


@dataclass
class RunResult:
    """Everything one simulation run produces.

    `counters` covers the steady-state cohort (bursts created after warm-up);
    `counters_total` covers every burst including the transient.
    """

    counters: RunCounters
    counters_total: RunCounters
    series: TimeSeries
    duration: float
    warmup: float

    @property
    def elapsed(self):
        return self.duration - self.warmup

    def blr(self):
        return blr(self.counters)

    def mean_delay(self):
        return mean_e2e_delay(self.counters)

    def utilization(self, topology):
        return utilization(self.counters, topology, self.elapsed)
