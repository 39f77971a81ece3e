"""Multi-entry VFPe beacons: entries, wire codec and entry selection.

Wire layout of one entry (36 bytes, little-endian), see docs/beacon_wire_format.md:

    id u32 | role u8 | pos x,y f32 | vel x,y f32 | timestamp u32 (centiseconds)
    | successor, predecessor, destination u16 (0xFFFF = none) | flags u8
    | source cell x,y u8 | destination cell x,y u8
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .geometry import Vec2, Zone, vec2
from .models import Scheme
from .nodes import NodeId, NodeRole, NodeState

if TYPE_CHECKING:
    from .neighbors import NeighborDatabase

ENTRY_STRUCT = struct.Struct("<IBffffIHHHBBBBB")
ENTRY_SIZE = ENTRY_STRUCT.size  # 36
NO_ID = 0xFFFF
GRID_CELLS = 256

FLAG_INSERTION = 0x01
FLAG_CHAIN = 0x02
FLAG_ENDPOINTS = 0x04


class MalformedBeaconError(ValueError):
    """Beacon with no entries, duplicate node ids, or an undecodable payload."""


@dataclass(frozen=True, slots=True)
class ChainFields:
    successor: Optional[NodeId] = None
    predecessor: Optional[NodeId] = None
    destination: Optional[NodeId] = None
    insertion_requested: bool = False


@dataclass(frozen=True, slots=True, eq=False)
class EndpointFields:
    source_pos: Vec2
    dest_pos: Vec2


@dataclass(frozen=True, slots=True, eq=False)
class BeaconEntry:
    node: NodeId
    role: NodeRole
    pos: Vec2
    vel: Vec2
    timestamp: float
    chain_fields: Optional[ChainFields] = None
    endpoint_fields: Optional[EndpointFields] = None


@dataclass(frozen=True, slots=True, eq=False)
class Beacon:
    entries: tuple[BeaconEntry, ...]

    @property
    def emitter(self) -> BeaconEntry:
        return self.entries[0]

    @property
    def size_bytes(self) -> int:
        return ENTRY_SIZE * len(self.entries)

    def check(self, cs: Optional[int] = None) -> None:
        if not self.entries:
            raise MalformedBeaconError("beacon has no entries")
        ids = [entry.node for entry in self.entries]
        if len(set(ids)) != len(ids):
            raise MalformedBeaconError(f"duplicate node ids in beacon: {ids}")
        if cs is not None and len(ids) > cs:
            raise MalformedBeaconError(f"{len(ids)} entries exceed cs={cs}")


def entry_for(
    node: NodeState,
    now: float,
    chain_fields: Optional[ChainFields] = None,
    endpoint_fields: Optional[EndpointFields] = None,
) -> BeaconEntry:
    return BeaconEntry(
        node=node.id,
        role=node.role,
        pos=node.pos,
        vel=node.vel,
        timestamp=now,
        chain_fields=chain_fields,
        endpoint_fields=endpoint_fields,
    )


# --- Wire codec -----------------------------------------------------------

def _short_id(node_id: Optional[NodeId]) -> int:
    if node_id is None:
        return NO_ID
    if not 0 <= node_id < NO_ID:
        raise ValueError(f"node id {node_id} does not fit a compressed chain field")
    return node_id


def _cell(value: float, extent: float) -> int:
    return min(GRID_CELLS - 1, max(0, int(math.floor(value / extent * GRID_CELLS))))


def _cell_center(cell: int, extent: float) -> float:
    return (cell + 0.5) * extent / GRID_CELLS


def encode_entry(entry: BeaconEntry, zone: Zone = Zone()) -> bytes:
    flags = 0
    succ = pred = dest = NO_ID
    if entry.chain_fields is not None:
        flags |= FLAG_CHAIN
        succ = _short_id(entry.chain_fields.successor)
        pred = _short_id(entry.chain_fields.predecessor)
        dest = _short_id(entry.chain_fields.destination)
        if entry.chain_fields.insertion_requested:
            flags |= FLAG_INSERTION
    cells = (0, 0, 0, 0)
    if entry.endpoint_fields is not None:
        flags |= FLAG_ENDPOINTS
        src, dst = entry.endpoint_fields.source_pos, entry.endpoint_fields.dest_pos
        cells = (
            _cell(float(src[0]), zone.width),
            _cell(float(src[1]), zone.height),
            _cell(float(dst[0]), zone.width),
            _cell(float(dst[1]), zone.height),
        )
    return ENTRY_STRUCT.pack(
        entry.node,
        int(entry.role),
        float(entry.pos[0]),
        float(entry.pos[1]),
        float(entry.vel[0]),
        float(entry.vel[1]),
        int(round(entry.timestamp * 100.0)),
        succ,
        pred,
        dest,
        flags,
        *cells,
    )


def decode_entry(data: bytes, zone: Zone = Zone()) -> BeaconEntry:
    if len(data) != ENTRY_SIZE:
        raise MalformedBeaconError(f"entry is {len(data)} bytes, expected {ENTRY_SIZE}")
    (
        node,
        role,
        px,
        py,
        vx,
        vy,
        centis,
        succ,
        pred,
        dest,
        flags,
        sx,
        sy,
        dx,
        dy,
    ) = ENTRY_STRUCT.unpack(data)
    try:
        role = NodeRole(role)
    except ValueError as exc:
        raise MalformedBeaconError(f"unknown role code {role}") from exc

    def _id(raw: int) -> Optional[NodeId]:
        return None if raw == NO_ID else raw

    chain_fields = None
    if flags & FLAG_CHAIN:
        chain_fields = ChainFields(
            successor=_id(succ),
            predecessor=_id(pred),
            destination=_id(dest),
            insertion_requested=bool(flags & FLAG_INSERTION),
        )
    endpoint_fields = None
    if flags & FLAG_ENDPOINTS:
        endpoint_fields = EndpointFields(
            source_pos=vec2(_cell_center(sx, zone.width), _cell_center(sy, zone.height)),
            dest_pos=vec2(_cell_center(dx, zone.width), _cell_center(dy, zone.height)),
        )
    return BeaconEntry(
        node=node,
        role=role,
        pos=vec2(px, py),
        vel=vec2(vx, vy),
        timestamp=centis / 100.0,
        chain_fields=chain_fields,
        endpoint_fields=endpoint_fields,
    )


def encode_beacon(beacon: Beacon, zone: Zone = Zone()) -> bytes:
    beacon.check()
    return b"".join(encode_entry(entry, zone) for entry in beacon.entries)


def decode_beacon(data: bytes, zone: Zone = Zone()) -> Beacon:
    if not data or len(data) % ENTRY_SIZE:
        raise MalformedBeaconError(f"{len(data)} bytes is not a whole number of entries")
    entries = tuple(
        decode_entry(data[i:i + ENTRY_SIZE], zone) for i in range(0, len(data), ENTRY_SIZE)
    )
    beacon = Beacon(entries)
    beacon.check()
    return beacon


# --- Entry selection ------------------------------------------------------

def _select_random(
    candidates: Sequence[BeaconEntry], k: int, rng: np.random.Generator
) -> list[BeaconEntry]:
    picks = rng.choice(len(candidates), size=k, replace=False)
    return [candidates[int(i)] for i in picks]


def _select_fresh(candidates: Sequence[BeaconEntry], k: int) -> list[BeaconEntry]:
    return sorted(candidates, key=lambda e: (-e.timestamp, e.node))[:k]


def build_beacon(
    node: NodeState,
    db: "NeighborDatabase",
    scheme: Scheme,
    cs: int,
    now: float,
    rng: np.random.Generator,
    *,
    chain_fields: Optional[ChainFields] = None,
    endpoint_fields: Optional[EndpointFields] = None,
) -> Beacon:
    """Own entry first, then up to cs-1 database records chosen by the scheme."""
    if cs < 1:
        raise ValueError("cs must be >= 1")
    if scheme not in (Scheme.RANDOM, Scheme.FRESH):
        raise ValueError(f"entry selection is defined for random/fresh, not {scheme.value}")
    own = entry_for(node, now, chain_fields, endpoint_fields)
    candidates = [db.records[k] for k in sorted(db.records) if k != node.id]
    k = min(cs - 1, len(candidates))
    if k == 0:
        return Beacon((own,))
    if scheme is Scheme.RANDOM:
        chosen = _select_random(candidates, k, rng)
    else:
        chosen = _select_fresh(candidates, k)
    return Beacon((own, *chosen))
