"""Link-state routing with OLSR-style timers and full topology flooding.

Neighbour sensing uses periodic HELLOs listing every neighbour heard within the hold time;
a link is symmetric once the peer's HELLO lists us. Each node periodically floods a TC
with its symmetric neighbours, every other node rebroadcasting a given (origin, seq) once.
Routes are shortest hop count over the node's own, possibly stale, view.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .models import RadioParams
from .nodes import NodeId

RouteTable = dict[NodeId, NodeId]

HELLO_HEADER = 16
TC_HEADER = 20
ADDRESS_BYTES = 4


class Hello(NamedTuple):
    origin: NodeId
    heard: frozenset[NodeId]

    @property
    def size_bytes(self) -> int:
        return HELLO_HEADER + ADDRESS_BYTES * len(self.heard)


class TopologyControl(NamedTuple):
    origin: NodeId
    seq: int
    neighbours: frozenset[NodeId]

    @property
    def size_bytes(self) -> int:
        return TC_HEADER + ADDRESS_BYTES * len(self.neighbours)


class _TopologyEntry(NamedTuple):
    seq: int
    neighbours: frozenset[NodeId]
    received: float


class LinkStateRouter:
    def __init__(self, node_id: NodeId, radio: RadioParams = RadioParams()):
        self.node_id = node_id
        self.radio = radio
        self.heard: dict[NodeId, float] = {}
        self.symmetric: dict[NodeId, float] = {}
        self.topology: dict[NodeId, _TopologyEntry] = {}
        self._seq = 0
        self._version = 0
        self._cache: Optional[tuple[int, float, RouteTable]] = None

    # Neighbour sensing

    def _live(self, table: dict[NodeId, float], now: float, hold: float) -> set[NodeId]:
        return {n for n, t in table.items() if now - t <= hold}

    def symmetric_neighbours(self, now: float) -> set[NodeId]:
        hold = self.radio.neighbor_hold
        return self._live(self.symmetric, now, hold) & self._live(self.heard, now, hold)

    def make_hello(self, now: float) -> Hello:
        return Hello(self.node_id, frozenset(self._live(self.heard, now, self.radio.neighbor_hold)))

    def on_hello(self, hello: Hello, now: float) -> None:
        if hello.origin == self.node_id:
            return
        self.heard[hello.origin] = now
        if self.node_id in hello.heard:
            self.symmetric[hello.origin] = now
        else:
            self.symmetric.pop(hello.origin, None)
        self._version += 1

    # Topology flooding

    def make_tc(self, now: float) -> TopologyControl:
        self._seq += 1
        return TopologyControl(self.node_id, self._seq, frozenset(self.symmetric_neighbours(now)))

    def on_tc(self, tc: TopologyControl, now: float) -> bool:
        """Record a TC; True when it is new and must be rebroadcast."""
        if tc.origin == self.node_id:
            return False
        known = self.topology.get(tc.origin)
        if known is not None and known.seq >= tc.seq:
            return False
        self.topology[tc.origin] = _TopologyEntry(tc.seq, tc.neighbours, now)
        self._version += 1
        return True

    # Route computation

    def _graph(self, now: float) -> dict[NodeId, set[NodeId]]:
        graph: dict[NodeId, set[NodeId]] = {self.node_id: self.symmetric_neighbours(now)}
        for n in graph[self.node_id]:
            graph.setdefault(n, set()).add(self.node_id)
        for origin, entry in self.topology.items():
            if now - entry.received > self.radio.topology_hold:
                continue
            for n in entry.neighbours:
                # Our own links come from neighbour sensing only.
                if self.node_id in (origin, n):
                    continue
                graph.setdefault(origin, set()).add(n)
                graph.setdefault(n, set()).add(origin)
        return graph

    def _next_expiry(self, now: float) -> float:
        hold = self.radio.neighbor_hold
        times = [t + hold for t in self.heard.values() if t + hold >= now]
        times += [t + hold for t in self.symmetric.values() if t + hold >= now]
        times += [
            e.received + self.radio.topology_hold
            for e in self.topology.values()
            if e.received + self.radio.topology_hold >= now
        ]
        return min(times, default=float("inf"))

    def route_table(self, now: float) -> RouteTable:
        """Next hop per reachable destination; equal-length paths resolve to the lowest next hop."""
        if self._cache is not None:
            version, valid_until, table = self._cache
            if version == self._version and now <= valid_until:
                return table
        graph = self._graph(now)
        hops: dict[NodeId, int] = {self.node_id: 0}
        table: RouteTable = {}
        frontier = [self.node_id]
        depth = 0
        while frontier:
            depth += 1
            reached: dict[NodeId, NodeId] = {}
            for u in frontier:
                for v in graph.get(u, ()):
                    if v in hops:
                        continue
                    via = v if u == self.node_id else table[u]
                    if v not in reached or via < reached[v]:
                        reached[v] = via
            for v, via in reached.items():
                hops[v] = depth
                table[v] = via
            frontier = sorted(reached)
        self._cache = (self._version, self._next_expiry(now), table)
        return table


@dataclass
class LinkStateView:
    """All routers of a run, keyed by node id."""

    routers: dict[NodeId, LinkStateRouter] = field(default_factory=dict)

    @classmethod
    def for_nodes(cls, node_ids, radio: RadioParams = RadioParams()) -> "LinkStateView":
        return cls({node_id: LinkStateRouter(node_id, radio) for node_id in node_ids})

    def __getitem__(self, node_id: NodeId) -> LinkStateRouter:
        return self.routers[node_id]


def routing_update(view: LinkStateView, now: float) -> dict[NodeId, RouteTable]:
    return {node_id: router.route_table(now) for node_id, router in view.routers.items()}
