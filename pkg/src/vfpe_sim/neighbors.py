"""Per-node knowledge: the neighbour database fed by beacons (or by the ideal oracle)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple, Optional

from .beacon import Beacon, BeaconEntry, ChainFields, MalformedBeaconError, entry_for
from .geometry import Vec2
from .nodes import ChainLinks, NodeId, NodeRole, NodeState

logger = logging.getLogger(__name__)


class EndpointHint(NamedTuple):
    source_pos: Vec2
    dest_pos: Vec2
    timestamp: float


@dataclass
class NeighborDatabase:
    """Latest-timestamp-wins records of other nodes, plus link sensing state.

    `last_heard` only ever reflects direct reception of a node's own beacon; records may
    come second-hand through other nodes' entries.
    """

    owner: NodeId
    records: dict[NodeId, BeaconEntry] = field(default_factory=dict)
    last_heard: dict[NodeId, float] = field(default_factory=dict)
    endpoint_hints: dict[NodeId, EndpointHint] = field(default_factory=dict)
    rejected: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def update(self, entry: BeaconEntry) -> bool:
        """Store `entry` if it is strictly newer than what is known; True when stored."""
        if entry.node == self.owner:
            return False
        current = self.records.get(entry.node)
        if current is not None and entry.timestamp <= current.timestamp:
            return False
        self.records[entry.node] = entry
        return True

    def note_endpoints(self, entry: BeaconEntry) -> None:
        fields = entry.chain_fields
        if entry.endpoint_fields is None or fields is None or fields.destination is None:
            return
        hint = self.endpoint_hints.get(fields.destination)
        if hint is None or entry.timestamp > hint.timestamp:
            self.endpoint_hints[fields.destination] = EndpointHint(
                entry.endpoint_fields.source_pos,
                entry.endpoint_fields.dest_pos,
                entry.timestamp,
            )

    def position_of(self, node_id: NodeId) -> Optional[Vec2]:
        record = self.records.get(node_id)
        return record.pos if record is not None else None

    def heard_within(self, node_id: NodeId, now: float, window: float) -> bool:
        heard = self.last_heard.get(node_id)
        return heard is not None and now - heard <= window

    def endpoint_positions(
        self, source: NodeId, destination: NodeId
    ) -> tuple[Optional[Vec2], Optional[Vec2]]:
        """Best known (source, destination) positions: own records or chain hints, freshest wins."""
        hint = self.endpoint_hints.get(destination)
        positions = []
        for node_id, hinted in ((source, "source_pos"), (destination, "dest_pos")):
            record = self.records.get(node_id)
            if record is not None and (hint is None or record.timestamp >= hint.timestamp):
                positions.append(record.pos)
            elif hint is not None:
                positions.append(getattr(hint, hinted))
            else:
                positions.append(None)
        return positions[0], positions[1]

    def surveillance_records(self) -> list[BeaconEntry]:
        return [
            self.records[k]
            for k in sorted(self.records)
            if self.records[k].role is NodeRole.SURVEILLANCE
        ]


def process_beacon(
    db: NeighborDatabase,
    beacon: Beacon,
    now: float,
    *,
    cs: Optional[int] = None,
    store_entries: bool = True,
) -> NeighborDatabase:
    """Merge a received beacon into `db`.

    Malformed beacons are rejected whole and counted in `db.rejected`. With
    `store_entries` off (ideal knowledge) only link sensing is updated.
    """
    try:
        beacon.check(cs)
    except MalformedBeaconError as exc:
        db.rejected += 1
        logger.debug("node %s rejected beacon: %s", db.owner, exc)
        return db

    emitter = beacon.emitter.node
    if emitter != db.owner:
        db.last_heard[emitter] = now
    if not store_entries:
        return db
    # The emitter's own entry is as fresh as its reception.
    own = replace(beacon.emitter, timestamp=now)
    for entry in (own, *beacon.entries[1:]):
        if entry.timestamp > now:
            continue
        db.update(entry)
        db.note_endpoints(entry)
    return db


def chain_fields_of(node: NodeState) -> Optional[ChainFields]:
    links: Optional[ChainLinks] = node.chain
    if links is None:
        return None
    return ChainFields(
        successor=links.successor,
        predecessor=links.predecessor,
        destination=links.destination,
    )


def ideal_snapshot(
    world: Iterable[NodeState],
    now: float,
    owner: Optional[NodeId] = None,
    last_heard: Optional[dict[NodeId, float]] = None,
) -> NeighborDatabase:
    """Exact records of every node at `now`; link sensing stays the owner's own."""
    records = {
        node.id: entry_for(node, now, chain_fields_of(node))
        for node in world
        if node.id != owner
    }
    return NeighborDatabase(
        owner=-1 if owner is None else owner,
        records=records,
        last_heard=last_heard if last_heard is not None else {},
    )
