"""Random Waypoint mobility for traffic and surveillance nodes."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .geometry import ZERO, Vec2, Zone, is_finite, norm, vec2
from .models import SimConfig
from .nodes import NodeRole, NodeState
from .streams import Purpose, RunStreams

SOURCE_ID = 0
DESTINATION_ID = 1
PAUSE_EPSILON = 1e-9


@dataclass(frozen=True)
class RwpParams:
    v_min: float
    v_max: float
    zone: Zone
    pause: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.v_min <= self.v_max:
            raise ValueError("RWP speeds must satisfy 0 < v_min <= v_max")
        if self.pause < 0.0:
            raise ValueError("RWP pause must be >= 0")

    @classmethod
    def for_traffic(cls, config: SimConfig) -> "RwpParams":
        lo, hi = config.traffic_speed
        return cls(lo, hi, config.zone, config.rwp_pause)

    @classmethod
    def for_swarm(cls, config: SimConfig) -> "RwpParams":
        lo, hi = config.swarm_speed
        return cls(lo, hi, config.zone, config.rwp_pause)


def rwp_next_leg(rng: np.random.Generator, params: RwpParams) -> tuple[Vec2, float]:
    x, y = rng.uniform(0.0, 1.0, size=2)
    waypoint = vec2(float(x) * params.zone.width, float(y) * params.zone.height)
    speed = float(rng.uniform(params.v_min, params.v_max))
    return waypoint, speed


def rwp_step_many(
    nodes: Sequence[NodeState],
    dt: float,
    rngs: Sequence[np.random.Generator],
    params: RwpParams,
) -> list[NodeState]:
    """Advance every node toward its waypoint; arrivals stop there and draw the next leg.

    `rngs[k]` is the mobility stream of `nodes[k]`.
    """
    for node in nodes:
        if node.role not in (NodeRole.TRAFFIC, NodeRole.SURVEILLANCE):
            raise ValueError(f"node {node.id} is {node.role.name}; RWP drives T/S nodes only")
    if not nodes:
        return []

    nodes = list(nodes)
    for k, node in enumerate(nodes):
        if node.pause_left <= 0.0 and node.waypoint is None:
            waypoint, speed = rwp_next_leg(rngs[k], params)
            nodes[k] = replace(node, waypoint=waypoint, waypoint_speed=speed)

    pos = np.array([n.pos for n in nodes], dtype=float)
    pause = np.array([n.pause_left for n in nodes])
    speed = np.array([n.waypoint_speed for n in nodes])
    waypoint = np.array([pos[k] if n.waypoint is None else n.waypoint
                         for k, n in enumerate(nodes)], dtype=float)

    paused = pause > 0.0
    offset = waypoint - pos
    remaining = norm(offset)
    arrived = ~paused & (remaining <= speed * dt)
    moving = ~paused & ~arrived

    vel = np.zeros_like(pos)
    safe = np.where(remaining > 0.0, remaining, 1.0)
    vel[moving] = offset[moving] * (speed[moving] / safe[moving])[:, None]
    new_pos = np.where(arrived[:, None], waypoint, pos + vel * dt)
    if not (is_finite(new_pos) and is_finite(vel)):
        raise ValueError("non-finite state after RWP step")

    left = pause - dt
    out: list[NodeState] = []
    for k, node in enumerate(nodes):
        if paused[k]:
            rest = float(left[k]) if left[k] > PAUSE_EPSILON else 0.0
            out.append(replace(node, pause_left=rest, vel=ZERO))
        elif arrived[k]:
            nxt, nxt_speed = rwp_next_leg(rngs[k], params)
            out.append(replace(node, pos=new_pos[k], vel=ZERO, waypoint=nxt,
                               waypoint_speed=nxt_speed, pause_left=params.pause))
        else:
            out.append(replace(node, pos=new_pos[k], vel=vel[k]))
    return out


def rwp_step(
    node: NodeState, dt: float, rng: np.random.Generator, params: RwpParams
) -> NodeState:
    """Advance toward the current waypoint; on arrival stop there and draw the next leg."""
    return rwp_step_many([node], dt, [rng], params)[0]


def initial_placement(config: SimConfig, streams: RunStreams) -> list[NodeState]:
    """Traffic pair uniformly over the zone, swarm nodes stacked at its centre."""
    zone = config.zone
    nodes: list[NodeState] = []
    for node_id in (SOURCE_ID, DESTINATION_ID):
        x, y = streams.get(node_id, Purpose.PLACEMENT).uniform(0.0, 1.0, size=2)
        nodes.append(
            NodeState(
                id=node_id,
                role=NodeRole.TRAFFIC,
                pos=vec2(float(x) * zone.width, float(y) * zone.height),
                mass=config.mass,
            )
        )
    for index in range(config.n_swarm):
        nodes.append(
            NodeState(
                id=2 + index,
                role=NodeRole.SURVEILLANCE,
                pos=zone.center,
                mass=config.mass,
            )
        )
    return nodes
