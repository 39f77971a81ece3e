"""Virtual forces acting on controlled (relay and prospection) nodes.

Three forces shape a chain:
- interaction: piecewise-constant repulsion below d_r, attraction in [d_f, d_a]
- friction: viscous drag while inside the friction annulus [d_r, d_f] of the nearest chain neighbour
- alignment: steering toward line (SD), ordered so each node sits closer to D than its predecessor

A fourth, the prospection pull, draws the chain apex toward the destination until it is
stretched to th_dmax from its predecessor, which is what lets the apex recruit new relays.

Every force broadcasts over leading axes; `chain_forces` evaluates a whole batch of
controlled nodes at once and `total_force` is its one-node view.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
import numpy.typing as npt

from .geometry import Vec2, Zone, distance, is_finite, line_parameters, norm
from .geometry import project_onto_segment_line
from .models import ForceParams
from .nodes import NodeId, NodeRole, NodeState

# Newtons along x and y.
Force = Vec2

PREDECESSOR, SUCCESSOR = 0, 1


class ChainNeighbor(NamedTuple):
    node_id: NodeId
    pos: Vec2


# (node, chain neighbours as last known, source position, destination position)
ForceRow = tuple[NodeState, Sequence[ChainNeighbor], Optional[Vec2], Optional[Vec2]]


def _scaled_unit(offset: np.ndarray, length: np.ndarray, magnitude) -> np.ndarray:
    """offset / length * magnitude, zero wherever length is zero."""
    safe = np.where(length == 0.0, 1.0, length)
    return np.where(length == 0.0, 0.0, offset / safe * magnitude)


def interaction_force(
    n_pos: Vec2,
    p_pos: Vec2,
    params: ForceParams,
    n_id: npt.ArrayLike = 0,
    p_id: npt.ArrayLike = 0,
) -> Force:
    """Force exerted on N by P, collinear with P->N."""
    offset = np.subtract(n_pos, p_pos, dtype=float)
    d = norm(offset, keepdims=True)
    repel = d < params.d_r
    attract = (d >= params.d_f) & (d <= params.d_a)
    magnitude = np.where(repel, params.intensity, np.where(attract, -params.intensity, 0.0))
    force = _scaled_unit(offset, d, magnitude)
    # Coincident pair: the lower id is pushed along -x, the higher along +x.
    sign = np.where(np.less(n_id, p_id), -params.intensity, params.intensity)
    split = np.stack([sign, np.zeros_like(sign)], axis=-1)
    return np.where(d == 0.0, split, force)


def in_friction_zone(d: npt.ArrayLike, params: ForceParams):
    return (np.asarray(d) >= params.d_r) & (np.asarray(d) <= params.d_f)


def friction_force(n_vel: Vec2, in_friction_zone: npt.ArrayLike, params: ForceParams) -> Force:
    drag = -params.cx * np.asarray(n_vel, dtype=float)
    return np.where(np.asarray(in_friction_zone)[..., None], drag + 0.0, 0.0)


def alignment_target(n_pos: Vec2, pred_pos: Vec2, s_pos: Vec2, d_pos: Vec2) -> Vec2:
    """Realignment point on line (SD) for N given its predecessor.

    N's own projection when it is already closer to D than the predecessor's projection,
    otherwise the reflection of N's projection about the predecessor's. A reflection that
    would not land strictly closer to D falls back to the midpoint between the
    predecessor's projection and D.
    """
    d_pos = np.asarray(d_pos, dtype=float)
    own = project_onto_segment_line(n_pos, s_pos, d_pos)
    pp = project_onto_segment_line(pred_pos, s_pos, d_pos)
    pp_to_d = distance(pp, d_pos)
    mirrored = 2.0 * pp - own
    midpoint = (pp + d_pos) / 2.0
    use_own = np.expand_dims(distance(own, d_pos) < pp_to_d, -1)
    use_mirror = np.expand_dims(distance(mirrored, d_pos) < pp_to_d, -1)
    return np.where(use_own, own, np.where(use_mirror, mirrored, midpoint))


def alignment_force(n_pos: Vec2, n_vel: Vec2, target: Vec2, params: ForceParams) -> Force:
    offset = np.subtract(target, n_pos, dtype=float)
    d = norm(offset, keepdims=True)
    radial = np.einsum("...i,...i->...", np.asarray(n_vel, dtype=float), offset)
    closing = np.expand_dims(radial, -1) > 0.0
    magnitude = np.where(closing, params.f_a_near, params.f_a_far)
    return np.where(d < params.align_deadband, 0.0, _scaled_unit(offset, d, magnitude))


def prospection_force(p_pos: Vec2, pred_pos: Vec2, d_pos: Vec2, params: ForceParams) -> Force:
    """Pull of the chain apex toward D while it is closer than th_dmax to its predecessor."""
    offset = np.subtract(d_pos, p_pos, dtype=float)
    d = norm(offset, keepdims=True)
    stretched = norm(np.subtract(p_pos, pred_pos, dtype=float), keepdims=True) >= params.th_dmax
    return np.where(stretched, 0.0, _scaled_unit(offset, d, params.f_a_near))


@dataclass(frozen=True, eq=False)
class ControlledBatch:
    """Kinematics and chain knowledge of m controlled nodes.

    Neighbour slots are (predecessor, successor); `known` marks slots whose position the
    node has; rows without both endpoint positions carry the node position there.
    """

    ids: np.ndarray  # (m,)
    pos: np.ndarray  # (m, 2)
    vel: np.ndarray  # (m, 2)
    neighbor_ids: np.ndarray  # (m, 2)
    neighbor_pos: np.ndarray  # (m, 2, 2)
    known: np.ndarray  # (m, 2) bool
    s_pos: np.ndarray  # (m, 2)
    d_pos: np.ndarray  # (m, 2)
    endpoints_known: np.ndarray  # (m,) bool
    apex: np.ndarray  # (m,) bool

    @classmethod
    def build(cls, rows: Sequence[ForceRow]) -> "ControlledBatch":
        """Pack (node, chain neighbours, s_pos, d_pos) rows into arrays."""
        m = len(rows)
        ids = np.empty(m, dtype=np.int64)
        pos = np.empty((m, 2))
        vel = np.empty((m, 2))
        neighbor_ids = np.full((m, 2), -1, dtype=np.int64)
        neighbor_pos = np.empty((m, 2, 2))
        known = np.zeros((m, 2), dtype=bool)
        s_pos = np.empty((m, 2))
        d_pos = np.empty((m, 2))
        endpoints_known = np.zeros(m, dtype=bool)
        apex = np.zeros(m, dtype=bool)
        for r, (node, neighbors, s, d) in enumerate(rows):
            if not node.role.controlled:
                raise ValueError(
                    f"node {node.id} is {node.role.name}; forces apply to P/R nodes only"
                )
            links = node.chain
            ids[r] = node.id
            pos[r] = node.pos
            vel[r] = node.vel
            neighbor_pos[r] = node.pos
            for nb in neighbors:
                is_pred = links is not None and nb.node_id == links.predecessor
                slot = PREDECESSOR if is_pred else SUCCESSOR
                if known[r, slot]:
                    raise ValueError(f"node {node.id}: two chain neighbours in one slot")
                neighbor_ids[r, slot] = nb.node_id
                neighbor_pos[r, slot] = nb.pos
                known[r, slot] = True
            if s is not None and d is not None:
                s_pos[r], d_pos[r] = s, d
                endpoints_known[r] = True
            else:
                s_pos[r] = d_pos[r] = node.pos
            apex[r] = (
                node.role is NodeRole.PROSPECTION and links is not None
                and links.successor is None
            )
        return cls(ids, pos, vel, neighbor_ids, neighbor_pos, known, s_pos, d_pos,
                   endpoints_known, apex)


def chain_forces(batch: ControlledBatch, params: ForceParams) -> np.ndarray:
    """Resultant force on every row of `batch`, shape (m, 2).

    A row without its predecessor, without both endpoints, or whose endpoints coincide
    gets interaction and friction only.
    """
    pos = batch.pos[:, None, :]
    pair = interaction_force(pos, batch.neighbor_pos, params,
                             batch.ids[:, None], batch.neighbor_ids)
    total = np.where(batch.known[..., None], pair, 0.0).sum(axis=1)

    gaps = np.where(batch.known, distance(pos, batch.neighbor_pos), np.inf)
    total += friction_force(batch.vel, in_friction_zone(gaps.min(axis=1), params), params)

    _, line_sq = line_parameters(batch.pos, batch.s_pos, batch.d_pos)
    rows = np.flatnonzero(batch.known[:, PREDECESSOR] & batch.endpoints_known & (line_sq > 0.0))
    if rows.size == 0:
        return total
    p, v = batch.pos[rows], batch.vel[rows]
    pred = batch.neighbor_pos[rows, PREDECESSOR]
    s, d = batch.s_pos[rows], batch.d_pos[rows]
    target = alignment_target(p, pred, s, d)
    pull = np.where(batch.apex[rows, None], prospection_force(p, pred, d, params), 0.0)
    total[rows] += alignment_force(p, v, target, params) + pull
    return total


def total_force(
    node: NodeState,
    neighbors: Sequence[ChainNeighbor],
    s_pos: Optional[Vec2],
    d_pos: Optional[Vec2],
    params: ForceParams,
) -> Force:
    """Resultant force on a relay or prospection node.

    `neighbors` holds the chain predecessor and successor as last known; a missing
    endpoint position skips alignment for this step.
    """
    batch = ControlledBatch.build([(node, neighbors, s_pos, d_pos)])
    return chain_forces(batch, params)[0]


def integrate(
    pos: np.ndarray,
    vel: np.ndarray,
    force: np.ndarray,
    mass: npt.ArrayLike,
    dt: float,
    v_max: float,
    zone: Zone,
) -> tuple[np.ndarray, np.ndarray]:
    """Explicit Euler step with speed cap and zone clamp for a batch of nodes."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    inv_mass = np.expand_dims(dt / np.asarray(mass, dtype=float), -1)
    vel = vel + force * inv_mass
    speed = norm(vel, keepdims=True)
    vel = np.where(speed > v_max, vel * (v_max / np.where(speed > 0.0, speed, 1.0)), vel)
    return zone.clamp(pos + vel * dt, vel)


def integrate_step(
    node: NodeState, force: Force, dt: float, v_max: float, zone: Zone
) -> NodeState:
    """Explicit Euler step with speed cap and zone clamp."""
    pos, vel = integrate(node.pos, node.vel, np.asarray(force, dtype=float), node.mass,
                         dt, v_max, zone)
    if not (is_finite(pos) and is_finite(vel)):
        raise ValueError(f"node {node.id}: non-finite state after integration")
    return replace(node, pos=pos, vel=vel)
