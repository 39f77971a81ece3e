"""Per-run metrics, contact tracking and confidence-interval aggregation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

from .nodes import NodeId
from .traffic import DropCause

Contact = tuple[tuple[NodeId, NodeId], float, float]


class ConservationError(RuntimeError):
    """Emitted packets do not equal received plus dropped packets."""


def _zero_drops() -> dict[str, int]:
    return {cause.value: 0 for cause in DropCause}


@dataclass
class RunMetrics:
    seed: int = 0
    scheme: str = ""
    cs: int = 0
    n_swarm: int = 0
    cbr_sent: int = 0
    cbr_received: int = 0
    delays: list[float] = field(default_factory=list)
    # transmissions taken by each received packet, parallel to `delays`
    hop_counts: list[int] = field(default_factory=list)
    drop_causes: dict[str, int] = field(default_factory=_zero_drops)
    contact_log: list[Contact] = field(default_factory=list)
    chain_completion_time: Optional[float] = None
    beacons_sent: int = 0
    beacons_rejected: int = 0
    frames_sent: dict[str, int] = field(default_factory=dict)
    directives: dict[str, int] = field(default_factory=dict)
    auditor_violations: int = 0
    events_processed: int = 0
    final_positions: dict[NodeId, tuple[float, float]] = field(default_factory=dict)

    def drop(self, cause: DropCause, count: int = 1) -> None:
        self.drop_causes[cause.value] += count

    @property
    def dropped(self) -> int:
        return sum(self.drop_causes.values())

    def check_conservation(self) -> None:
        if self.cbr_received != len(self.delays):
            raise ConservationError(
                f"{self.cbr_received} receptions but {len(self.delays)} delay samples"
            )
        if len(self.hop_counts) != len(self.delays):
            raise ConservationError(
                f"{len(self.delays)} delay samples but {len(self.hop_counts)} hop counts"
            )
        if self.cbr_sent != self.cbr_received + self.dropped:
            raise ConservationError(
                f"sent {self.cbr_sent} != received {self.cbr_received} + dropped {self.dropped}"
            )

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["pdr"] = pdr(self)
        data["mean_delay"] = mean_delay(self)
        data["mean_contact"] = contact_statistics(self)
        data["final_positions"] = {str(k): list(v) for k, v in self.final_positions.items()}
        data["contact_log"] = [[list(pair), start, end] for pair, start, end in self.contact_log]
        return data


def pdr(m: RunMetrics) -> Optional[float]:
    if m.cbr_sent == 0:
        return None
    return m.cbr_received / m.cbr_sent


def mean_delay(m: RunMetrics) -> Optional[float]:
    if not m.delays:
        return None
    return float(np.mean(m.delays))


def contact_statistics(m: RunMetrics) -> Optional[float]:
    if not m.contact_log:
        return None
    return float(np.mean([end - start for _, start, end in m.contact_log]))


@dataclass(frozen=True)
class AggregateStats:
    mean: float
    ci_low: Optional[float]
    ci_high: Optional[float]
    n_runs: int

    @property
    def half_width(self) -> Optional[float]:
        if self.ci_high is None:
            return None
        return self.ci_high - self.mean


def aggregate(samples: Sequence[float], level: float = 0.95) -> Optional[AggregateStats]:
    """Sample mean with a Student-t interval; the interval is absent below two samples."""
    values = np.asarray([s for s in samples if s is not None], dtype=float)
    if values.size == 0:
        return None
    mean = float(values.mean())
    if values.size < 2:
        return AggregateStats(mean, None, None, 1)
    sem = float(values.std(ddof=1)) / math.sqrt(values.size)
    half = float(stats.t.ppf((1.0 + level) / 2.0, values.size - 1)) * sem
    return AggregateStats(mean, mean - half, mean + half, int(values.size))


class ContactTracker:
    """Continuous in-range periods between pairs of surveillance nodes.

    Contacts open at the first sample (the swarm starts stacked) or still open at the end
    of the run are censored and never logged.
    """

    def __init__(self, node_ids: Sequence[NodeId]):
        self.ids = list(node_ids)
        n = len(self.ids)
        self._start = np.full((n, n), np.nan)
        self._censored = np.zeros((n, n), dtype=bool)
        self._upper = np.triu(np.ones((n, n), dtype=bool), k=1)
        self._first = True
        self.log: list[Contact] = []

    def update(self, now: float, in_contact: np.ndarray) -> None:
        """`in_contact[i, j]`: ids[i] and ids[j] are both surveillance and in range."""
        current = in_contact & self._upper
        open_ = ~np.isnan(self._start)
        for i, j in np.argwhere(open_ & ~current):
            if not self._censored[i, j]:
                pair = (self.ids[i], self.ids[j])
                self.log.append((pair, float(self._start[i, j]), now))
            self._start[i, j] = np.nan
            self._censored[i, j] = False
        opened = current & ~open_
        self._start[opened] = now
        if self._first:
            self._censored[opened] = True
            self._first = False
