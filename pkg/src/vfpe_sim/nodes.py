"""Node identity, roles and per-node state."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Optional

from .geometry import ZERO, Vec2

NodeId = int


class NodeRole(IntEnum):
    TRAFFIC = 0
    SURVEILLANCE = 1
    RELAY = 2
    PROSPECTION = 3

    @property
    def controlled(self) -> bool:
        return self in (NodeRole.RELAY, NodeRole.PROSPECTION)

    @property
    def letter(self) -> str:
        return "TSRP"[self.value]


class RoleTransitionError(ValueError):
    """Raised for a role change outside the node lifecycle."""


# Traffic nodes never change role.
ROLE_TRANSITIONS: dict[NodeRole, frozenset[NodeRole]] = {
    NodeRole.TRAFFIC: frozenset(),
    NodeRole.SURVEILLANCE: frozenset({NodeRole.RELAY, NodeRole.PROSPECTION}),
    NodeRole.PROSPECTION: frozenset({NodeRole.RELAY, NodeRole.SURVEILLANCE}),
    NodeRole.RELAY: frozenset({NodeRole.SURVEILLANCE}),
}


@dataclass(frozen=True, slots=True)
class ChainLinks:
    source: NodeId
    destination: NodeId
    predecessor: Optional[NodeId] = None
    successor: Optional[NodeId] = None


@dataclass(slots=True, eq=False)
class NodeState:
    id: NodeId
    role: NodeRole
    pos: Vec2
    vel: Vec2 = field(default_factory=lambda: ZERO)
    mass: float = 1.0
    chain: Optional[ChainLinks] = None
    waypoint: Optional[Vec2] = None
    waypoint_speed: float = 0.0
    pause_left: float = 0.0


def can_transition(current: NodeRole, target: NodeRole) -> bool:
    return target in ROLE_TRANSITIONS[current]


def transition(node: NodeState, to: NodeRole) -> NodeState:
    """Return a copy of `node` in role `to`; raises RoleTransitionError when illegal."""
    if not can_transition(node.role, to):
        raise RoleTransitionError(
            f"node {node.id}: {node.role.name} -> {to.name} is not a lifecycle transition"
        )
    return replace(node, role=to)
