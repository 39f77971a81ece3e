"""Idealized shared wireless channel: unit-disk links, airtime and lowest-id arbitration."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import Vec2, distance
from .models import RadioParams
from .nodes import NodeId

logger = logging.getLogger(__name__)


class FrameKind(str, Enum):
    BEACON = "beacon"
    ROUTING = "routing"
    DATA = "data"

    @property
    def broadcast(self) -> bool:
        return self is not FrameKind.DATA


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    src: NodeId
    payload_bytes: int
    enqueue_time: float
    dst: Optional[NodeId] = None
    payload: Any = None

    def __post_init__(self) -> None:
        if self.payload_bytes <= 0:
            raise ValueError("frames carry at least one payload byte")
        if self.kind.broadcast == (self.dst is not None):
            raise ValueError(f"{self.kind.value} frame with dst={self.dst}")


@dataclass(frozen=True)
class Transmission:
    frame: Frame
    start: float
    end: float


def in_range(a: Vec2, b: Vec2, radio_range: float) -> bool:
    return distance(a, b) <= radio_range


def payload_airtime(frame: Frame, radio: RadioParams = RadioParams()) -> float:
    rate = radio.broadcast_rate if frame.kind.broadcast else radio.data_rate
    return frame.payload_bytes * 8.0 / rate


def airtime(frame: Frame, radio: RadioParams = RadioParams()) -> float:
    """Time the medium is held: payload at the kind's bitrate plus the fixed PLCP overhead."""
    return payload_airtime(frame, radio) + radio.frame_overhead


def adjacency(dist: np.ndarray, radio_range: float) -> np.ndarray:
    """Boolean unit-disk adjacency from an (n, n) distance matrix; no self-loops."""
    adj = np.asarray(dist) <= radio_range
    np.fill_diagonal(adj, False)
    return adj


class Channel:
    """Per-node FIFO queues over one shared medium.

    A queued node starts transmitting only when neither it nor any node in its range is on
    the air; contenders are served in ascending id order. Delivery is lossless to whoever is
    in range when the airtime ends.
    """

    def __init__(self, node_ids: Sequence[NodeId], radio: RadioParams):
        self.radio = radio
        self.ids = sorted(node_ids)
        self._index = {node_id: i for i, node_id in enumerate(self.ids)}
        self.queues: dict[NodeId, deque[Frame]] = {node_id: deque() for node_id in self.ids}
        self.transmitting: dict[NodeId, Transmission] = {}
        n = len(self.ids)
        self.positions = np.zeros((n, 2))
        self.dist = np.zeros((n, n))
        self.adj = np.zeros((n, n), dtype=bool)
        self.overflows = 0
        # ids with a non-empty queue, and who is on the air, by row
        self._backlog: set[NodeId] = set()
        self._on_air = np.zeros(n, dtype=bool)

    def update_topology(self, positions: Mapping[NodeId, Vec2]) -> None:
        if not self.ids:
            return
        self.positions = np.stack([np.asarray(positions[i], dtype=float) for i in self.ids])
        self.dist = cdist(self.positions, self.positions)
        self.adj = adjacency(self.dist, self.radio.radio_range)

    def linked(self, a: NodeId, b: NodeId) -> bool:
        return bool(self.adj[self._index[a], self._index[b]])

    def neighbours(self, node_id: NodeId) -> list[NodeId]:
        row = self.adj[self._index[node_id]]
        return [self.ids[i] for i in np.flatnonzero(row)]

    @property
    def backlogged(self) -> bool:
        return bool(self._backlog)

    def enqueue(self, frame: Frame) -> bool:
        queue = self.queues[frame.src]
        if len(queue) >= self.radio.queue_limit:
            self.overflows += 1
            return False
        queue.append(frame)
        self._backlog.add(frame.src)
        return True

    def _busy_rows(self) -> np.ndarray:
        """Rows that are on the air or hear someone who is."""
        return self._on_air | self.adj[:, self._on_air].any(axis=1)

    def medium_busy(self, node_id: NodeId) -> bool:
        return bool(self._busy_rows()[self._index[node_id]])

    def start_ready(self, now: float) -> list[Transmission]:
        if not self._backlog:
            return []
        started = []
        blocked = self._busy_rows()
        for node_id in sorted(self._backlog):
            i = self._index[node_id]
            if blocked[i]:
                continue
            queue = self.queues[node_id]
            frame = queue.popleft()
            if not queue:
                self._backlog.discard(node_id)
            tx = Transmission(frame, now, now + airtime(frame, self.radio))
            self.transmitting[node_id] = tx
            self._on_air[i] = True
            blocked |= self.adj[i]
            blocked[i] = True
            started.append(tx)
        return started

    def finish(self, node_id: NodeId) -> tuple[Frame, list[tuple[NodeId, float]]]:
        """End `node_id`'s transmission; returns the frame and its (receiver, distance) list."""
        tx = self.transmitting.pop(node_id)
        frame = tx.frame
        i = self._index[node_id]
        self._on_air[i] = False
        if frame.kind.broadcast:
            receivers = [(self.ids[j], float(self.dist[i, j])) for j in np.flatnonzero(self.adj[i])]
        elif frame.dst in self._index and self.adj[i, self._index[frame.dst]]:
            receivers = [(frame.dst, float(self.dist[i, self._index[frame.dst]]))]
        else:
            receivers = []
        return frame, receivers

    def audit(self, started: Sequence[Transmission] = ()) -> list[str]:
        """Newly started transmissions that overlap another in-range one.

        Nodes may drift into range mid-airtime when the topology is refreshed; only the
        start of a transmission is checked against the carrier-sense rule.
        """
        problems = []
        for tx in started:
            for other in sorted(self.transmitting):
                if other != tx.frame.src and self.linked(tx.frame.src, other):
                    problems.append(f"{tx.frame.src} started while {other} transmits in range")
        return problems
