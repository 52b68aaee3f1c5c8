"""Per-node probabilistic learning state for adaptive next-hop selection.

Every node keeps one SuccessTable: for each neighbor k and each observed
evidence vector (offset class, loss-rate class, hop-count class, destination)
it stores the learned probability that forwarding via k succeeds. ACK/NACK
notifications drive an exponential-smoothing update; a naive-Bayes estimator
over the same observation counts generalizes to evidence combinations that
were never hit directly.
"""

from collections import Counter, deque
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import NamedTuple

OFFSET_CLASSES = 16  # offset classes 0..15, measured in per-hop processing units
HOP_CLASSES = 16     # hop-count classes 0..15


class BlrClass(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2


class Outcome(Enum):
    SUCCESS = 1
    FAILURE = 0


class EvidenceVector(NamedTuple):
    offset_class: int   # 0..15
    blr_class: int      # BlrClass value
    hop_class: int      # 0..15
    dest: int           # destination node id


class UnknownNeighborError(KeyError):
    """Query or update for a node that is not a neighbor of the table owner."""


class NoObservationsError(ValueError):
    """Naive-Bayes estimate requested for a neighbor with no recorded outcomes."""


@dataclass
class UpdateParams:
    alpha: float = 0.9       # smoothing factor; 1.0 freezes the table
    initial_sp: float = 0.5  # default success probability for unseen pairs

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0,1], got {self.alpha}")
        if not 0.0 <= self.initial_sp <= 1.0:
            raise ValueError(f"initial_sp must be in [0,1], got {self.initial_sp}")


@dataclass
class BlrClassifier:
    """Maps an observed loss ratio onto the three-state traffic class."""

    low_threshold: float = 0.01
    high_threshold: float = 0.05
    window: float = 0.1  # seconds of sliding observation

    def __post_init__(self):
        if not 0.0 < self.low_threshold < self.high_threshold < 1.0:
            raise ValueError(
                f"need 0 < low < high < 1, got {self.low_threshold}, {self.high_threshold}"
            )

    def classify(self, observed_blr):
        if observed_blr < self.low_threshold:
            return BlrClass.LOW
        if observed_blr < self.high_threshold:
            return BlrClass.MEDIUM
        return BlrClass.HIGH


class LossRateWindow:
    """Sliding-window loss ratio seen by one node as a forwarder.

    Failures are local drop decisions plus NACKs received for bursts this
    node forwarded earlier; the denominator is bursts forwarded.
    """

    def __init__(self, window):
        self.window = window
        self._forwards = deque()
        self._failures = deque()

    def record_forward(self, now):
        self._forwards.append(now)

    def record_failure(self, now):
        self._failures.append(now)

    def ratio(self, now):
        cutoff = now - self.window
        fw, fl = self._forwards, self._failures
        while fw and fw[0] < cutoff:
            fw.popleft()
        while fl and fl[0] < cutoff:
            fl.popleft()
        if not fw:
            return 0.0
        return min(1.0, len(fl) / len(fw))


def extract_evidence(node, dest, remaining_offset, local_blr, hop_counts, classifier,
                     per_hop_processing):
    """Build the evidence vector a node sees for one burst.

    The offset class counts how many per-hop processing budgets remain; the
    small epsilon keeps exact multiples from flooring down a class.
    """
    o = min(OFFSET_CLASSES - 1, int(remaining_offset / per_hop_processing + 1e-9))
    b = classifier.classify(local_blr)
    nb = min(HOP_CLASSES - 1, hop_counts[(node, dest)])
    return EvidenceVector(o, int(b), nb, dest)


def cold_start_prior(initial_sp=0.5, dest_neighbor_sp=0.95):
    """Initial success probability for learning with no routing information.

    Uniform over neighbors, except that a neighbor which *is* the burst's
    destination starts high: a node knows the far end of its own links, and
    handing a burst straight to its destination needs no routing knowledge.
    """

    def prior(k, e):
        return dest_neighbor_sp if k == e.dest else initial_sp

    return prior


def warm_start_prior(hop_counts, owner, detour_base=0.8, infeasible_sp=0.02):
    """Initial success probability favoring minimum-hop neighbors.

    A neighbor on a shortest path gets 1.0 and every extra hop a detour would
    cost multiplies the prior by `detour_base`. The penalty is deliberately
    mild: it keeps detours one small step behind the direct choice, so they
    are tried as soon as the direct path shows losses, and the smoothing
    update then settles every candidate at its observed success rate.
    A neighbor whose own distance to the destination cannot fit into the
    remaining offset budget would lose the burst to offset exhaustion, so it
    starts near zero instead.
    """

    def prior(k, e):
        k_hops = hop_counts[(k, e.dest)]
        if k_hops + 1 > e.offset_class:
            return infeasible_sp
        extra = k_hops + 1 - hop_counts[(owner, e.dest)]
        return detour_base ** extra

    return prior


class SuccessTable:
    """Learned P(success | evidence) for each neighbor of one node.

    `initial_sp` may be a float (uniform default) or a callable
    ``(neighbor, evidence) -> float`` for informed warm starts. With
    ``nb_fallback`` enabled, evidence vectors never observed for a neighbor
    are scored by the naive-Bayes estimator instead of the blind default as
    soon as that neighbor has any recorded outcome.

    ``begin_epoch`` freezes the externally visible state for routing-table
    refresh periods: ``epoch_success_prob`` answers from the values as of the
    last epoch start while live updates keep accumulating underneath.
    """

    def __init__(self, owner, neighbors, params=None, state_counts=None,
                 initial_sp=None, nb_fallback=False):
        self.owner = owner
        self.neighbors = tuple(sorted(neighbors))
        self._neighbor_set = frozenset(neighbors)
        self.params = params or UpdateParams()
        # (offset states, blr states, hop states, destination states)
        self.state_counts = state_counts or (OFFSET_CLASSES, 3, HOP_CLASSES, 16)
        self._initial = self.params.initial_sp if initial_sp is None else initial_sp
        self.nb_fallback = nb_fallback
        self.values = {}
        # per neighbor, per outcome: total count and one Counter per evidence field
        self._totals = {k: [0, 0] for k in self.neighbors}
        self._factor_counts = {
            k: ([Counter(), Counter(), Counter(), Counter()],
                [Counter(), Counter(), Counter(), Counter()])
            for k in self.neighbors
        }
        self._journal = {}
        self._epoch_totals = self._totals
        self._epoch_factors = self._factor_counts
        self._nb_dirty = True  # first begin_epoch snapshots independent copies

    def _check_neighbor(self, k):
        if k not in self._neighbor_set:
            raise UnknownNeighborError(f"{k} is not a neighbor of node {self.owner}")

    def _default(self, k, e):
        return self._initial(k, e) if callable(self._initial) else self._initial

    def sp_query(self, k, e):
        """Stored success probability for (k, e), or the initial default."""
        self._check_neighbor(k)
        v = self.values.get((k, *e))
        return self._default(k, e) if v is None else v

    def sp_update(self, k, e, outcome):
        """Exponential-smoothing update on a notification; returns the new SP.

        SP' = alpha * SP + (1 - alpha) * A with A = 1 on success, 0 on failure.
        Also feeds the naive-Bayes observation counts. The first update of a
        row starts from the same estimate routing was already using for it:
        the naive-Bayes generalization when enabled and available, else the
        initial default.
        """
        self._check_neighbor(k)
        key = (k, *e)
        values = self.values
        old = values.get(key)
        if key not in self._journal:
            self._journal[key] = old
        if old is not None:
            base = old
        elif self.nb_fallback and sum(self._totals[k]) > 0:
            s_succ, s_fail = self._nb_scores(k, e, self._totals, self._factor_counts)
            base = s_succ / (s_succ + s_fail)
        else:
            base = self._default(k, e)
        alpha = self.params.alpha
        a = 1.0 if outcome is Outcome.SUCCESS else 0.0
        new = alpha * base + (1.0 - alpha) * a
        values[key] = new
        idx = 0 if outcome is Outcome.SUCCESS else 1
        self._totals[k][idx] += 1
        counters = self._factor_counts[k][idx]
        counters[0][e[0]] += 1
        counters[1][e[1]] += 1
        counters[2][e[2]] += 1
        counters[3][e[3]] += 1
        self._nb_dirty = True
        return new

    def _nb_scores(self, k, e, totals, factors):
        n_succ, n_fail = totals[k]
        n = n_succ + n_fail
        if n == 0:
            raise NoObservationsError(f"no outcomes recorded for neighbor {k}")
        scores = []
        for idx, n_phi in ((0, n_succ), (1, n_fail)):
            score = (n_phi + 1.0) / (n + 2.0)
            counters = factors[k][idx]
            for f in range(4):
                score *= (counters[f][e[f]] + 1.0) / (n_phi + self.state_counts[f])
            scores.append(score)
        return scores  # [success, failure]

    def naive_bayes_map(self, k, e):
        """Most probable outcome for (k, e) under the independent-evidence
        approximation, with its unnormalized score. Ties resolve to success."""
        self._check_neighbor(k)
        s_succ, s_fail = self._nb_scores(k, e, self._totals, self._factor_counts)
        if s_succ >= s_fail:
            return Outcome.SUCCESS, s_succ
        return Outcome.FAILURE, s_fail

    def nb_success_prob(self, k, e):
        """Normalized naive-Bayes success probability for (k, e)."""
        self._check_neighbor(k)
        s_succ, s_fail = self._nb_scores(k, e, self._totals, self._factor_counts)
        return s_succ / (s_succ + s_fail)

    def routing_success_prob(self, k, e):
        """Success estimate used for route costs: the stored value when (k, e)
        has been observed, else the naive-Bayes generalization when enabled
        and k has history, else the initial default."""
        v = self.values.get((k, *e))
        if v is not None:
            return v
        if self.nb_fallback and sum(self._totals[k]) > 0:
            s_succ, s_fail = self._nb_scores(k, e, self._totals, self._factor_counts)
            return s_succ / (s_succ + s_fail)
        return self._default(k, e)

    def begin_epoch(self):
        """Freeze the current state as the routing view for the next period."""
        self._journal = {}
        if self._nb_dirty and self.nb_fallback:  # snapshot only what rows can read
            self._epoch_totals = {k: list(v) for k, v in self._totals.items()}
            self._epoch_factors = {
                k: tuple([c.copy() for c in side] for side in sides)
                for k, sides in self._factor_counts.items()
            }
            self._nb_dirty = False

    def epoch_success_prob(self, k, e):
        """Success estimate as of the last epoch start (used for route costs)."""
        key = (k, *e)
        journal = self._journal
        v = journal[key] if key in journal else self.values.get(key)
        if v is not None:
            return v
        if self.nb_fallback and sum(self._epoch_totals[k]) > 0:
            s_succ, s_fail = self._nb_scores(k, e, self._epoch_totals, self._epoch_factors)
            return s_succ / (s_succ + s_fail)
        return self._default(k, e)

    def dump(self, path_or_file):
        """Write observed entries as flat text: `k o b nb d sp` per line."""
        close = False
        fh = path_or_file
        if isinstance(path_or_file, str):
            fh = open(path_or_file, "w")
            close = True
        try:
            fh.write(f"# success table of node {self.owner}\n")
            for key in sorted(self.values):
                k, o, b, nb, d = key
                fh.write(f"{k} {o} {b} {nb} {d} {self.values[key]:.12g}\n")
        finally:
            if close:
                fh.close()

    def restore(self, path_or_file):
        """Load entries written by dump (warm-start injection)."""
        close = False
        fh = path_or_file
        if isinstance(path_or_file, str):
            fh = open(path_or_file)
            close = True
        try:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                k, o, b, nb, d, sp = line.split()
                k = int(k)
                self._check_neighbor(k)
                sp = float(sp)
                if not 0.0 <= sp <= 1.0:
                    raise ValueError(f"success probability out of [0,1]: {sp}")
                self.values[(k, int(o), int(b), int(nb), int(d))] = sp
        finally:
            if close:
                fh.close()
