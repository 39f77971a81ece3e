"""Relay chain lifecycle: local decisions, directive application and the consistency auditor.

Decisions are taken by the concerned node from its own knowledge: the source bootstraps,
the apex (prospection node) extends or completes, every member checks its own redundancy
and link liveness. A Promote travels in the decider's beacon and is applied when the
target hears it; Demote, Complete and Teardown take effect immediately.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import MutableMapping, Optional, Union

import numpy as np

from .geometry import ZERO, distance
from .models import ForceParams, SimConfig
from .neighbors import NeighborDatabase
from .nodes import ChainLinks, NodeId, NodeRole, NodeState, transition

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Promote:
    target: NodeId
    to: NodeRole
    links: ChainLinks


@dataclass(frozen=True)
class Demote:
    target: NodeId


@dataclass(frozen=True)
class Complete:
    source: NodeId
    destination: NodeId


@dataclass(frozen=True)
class Teardown:
    source: NodeId
    destination: NodeId
    reason: str = ""


ChainDirective = Union[Promote, Demote, Complete, Teardown, None]


@dataclass(frozen=True)
class ChainContext:
    now: float
    radio_range: float
    heard_window: float
    loss_timeout: float
    destination: NodeId

    @classmethod
    def from_config(cls, config: SimConfig, now: float, destination: NodeId) -> "ChainContext":
        return cls(
            now=now,
            radio_range=config.radio_range,
            heard_window=1.5 * config.beacon_interval,
            loss_timeout=config.link_loss_intervals * config.beacon_interval,
            destination=destination,
        )


@dataclass
class Chain:
    """Source, ordered intermediate members (apex last) and destination."""

    source: NodeId
    destination: NodeId
    members: list[NodeId] = field(default_factory=list)
    complete: bool = False

    @property
    def apex(self) -> Optional[NodeId]:
        if self.complete or not self.members:
            return None
        return self.members[-1]

    def links_for(self, node_id: NodeId) -> Optional[ChainLinks]:
        hops = [self.source, *self.members]
        if self.complete:
            hops.append(self.destination)
        if node_id == self.destination and not self.complete:
            return ChainLinks(self.source, self.destination)
        if node_id not in hops:
            return None
        i = hops.index(node_id)
        return ChainLinks(
            source=self.source,
            destination=self.destination,
            predecessor=hops[i - 1] if i > 0 else None,
            successor=hops[i + 1] if i + 1 < len(hops) else None,
        )


# --- Decisions ------------------------------------------------------------

def _candidates_in_range(
    node: NodeState, db: NeighborDatabase, ctx: ChainContext
) -> list[tuple[NodeId, float]]:
    """Surveillance nodes heard directly and last known within radio range."""
    heard = [
        record for record in db.surveillance_records()
        if db.heard_within(record.node, ctx.now, ctx.heard_window)
    ]
    if not heard:
        return []
    gaps = distance(node.pos, np.stack([record.pos for record in heard]))
    return [
        (record.node, float(d)) for record, d in zip(heard, gaps) if d <= ctx.radio_range
    ]


def chain_bootstrap(source: NodeState, db: NeighborDatabase, ctx: ChainContext) -> ChainDirective:
    if source.role is not NodeRole.TRAFFIC or source.chain is not None:
        return None
    if db.heard_within(ctx.destination, ctx.now, ctx.heard_window):
        return Complete(source.id, ctx.destination)
    _, d_pos = db.endpoint_positions(source.id, ctx.destination)
    if d_pos is None:
        return None
    candidates = _candidates_in_range(source, db, ctx)
    if not candidates:
        return None
    target, _ = min(candidates, key=lambda c: (c[1], c[0]))
    return Promote(
        target=target,
        to=NodeRole.PROSPECTION,
        links=ChainLinks(source.id, ctx.destination, predecessor=source.id),
    )


def chain_extend(
    p_node: NodeState, db: NeighborDatabase, params: ForceParams, ctx: ChainContext
) -> ChainDirective:
    links = p_node.chain
    if p_node.role is not NodeRole.PROSPECTION or links is None:
        return None
    if db.heard_within(links.destination, ctx.now, ctx.heard_window):
        return Complete(links.source, links.destination)
    pred_pos = db.position_of(links.predecessor) if links.predecessor is not None else None
    if pred_pos is None or distance(p_node.pos, pred_pos) < params.th_dmax:
        return None
    _, d_pos = db.endpoint_positions(links.source, links.destination)
    if d_pos is None:
        return None
    candidates = _candidates_in_range(p_node, db, ctx)
    if not candidates:
        return None
    target = min(candidates, key=lambda c: (distance(db.records[c[0]].pos, d_pos), c[0]))[0]
    return Promote(
        target=target,
        to=NodeRole.PROSPECTION,
        links=ChainLinks(links.source, links.destination, predecessor=p_node.id),
    )


def chain_maintain(
    relay: NodeState, db: NeighborDatabase, params: ForceParams, ctx: ChainContext
) -> ChainDirective:
    links = relay.chain
    if not relay.role.controlled or links is None:
        return None
    for neighbour in (links.predecessor, links.successor):
        if neighbour is None:
            continue
        if not db.heard_within(neighbour, ctx.now, ctx.loss_timeout):
            return Teardown(links.source, links.destination, f"{relay.id} lost {neighbour}")
    if links.predecessor is None or links.successor is None:
        if relay.role is NodeRole.RELAY:
            return Teardown(links.source, links.destination, f"{relay.id} has a dangling link")
        return None
    pred_pos = db.position_of(links.predecessor)
    succ_pos = db.position_of(links.successor)
    if pred_pos is not None and succ_pos is not None:
        if distance(pred_pos, succ_pos) <= params.th_dmin:
            return Demote(relay.id)
    return None


def source_watch(source: NodeState, db: NeighborDatabase, ctx: ChainContext) -> ChainDirective:
    """The source drops its chain once its first hop has been silent for the loss timeout."""
    links = source.chain
    if links is None or links.successor is None:
        return None
    if db.heard_within(links.successor, ctx.now, ctx.loss_timeout):
        return None
    return Teardown(links.source, links.destination, f"source lost {links.successor}")


# --- Application ------------------------------------------------------------

def _set_role(nodes: MutableMapping[NodeId, NodeState], node_id: NodeId, role: NodeRole) -> None:
    node = transition(nodes[node_id], role)
    if role is NodeRole.PROSPECTION and nodes[node_id].role is NodeRole.SURVEILLANCE:
        # Controlled hover: the RWP leg is abandoned.
        node = replace(node, vel=ZERO, waypoint=None, waypoint_speed=0.0, pause_left=0.0)
    elif role is NodeRole.SURVEILLANCE:
        node = replace(node, chain=None, waypoint=None, waypoint_speed=0.0, pause_left=0.0)
    nodes[node_id] = node


def _relink(chain: Optional[Chain], nodes: MutableMapping[NodeId, NodeState],
            endpoints: tuple[NodeId, NodeId]) -> None:
    for node_id in endpoints:
        if node_id in nodes:
            links = chain.links_for(node_id) if chain is not None else None
            nodes[node_id] = replace(nodes[node_id], chain=links)
    if chain is None:
        return
    for node_id in chain.members:
        nodes[node_id] = replace(nodes[node_id], chain=chain.links_for(node_id))


def promotion_valid(
    directive: Promote, chain: Optional[Chain], nodes: MutableMapping[NodeId, NodeState]
) -> bool:
    """Whether a Promote still matches the chain state it was decided on."""
    target = nodes.get(directive.target)
    if target is None or target.role is not NodeRole.SURVEILLANCE:
        return False
    promoter = directive.links.predecessor
    if chain is None:
        source = nodes.get(directive.links.source)
        return (
            promoter == directive.links.source
            and source is not None
            and source.role is NodeRole.TRAFFIC
            and source.chain is None
            and directive.links.destination in nodes
        )
    return chain.apex is not None and chain.apex == promoter


def apply_directive(
    directive: ChainDirective,
    chain: Optional[Chain],
    nodes: MutableMapping[NodeId, NodeState],
) -> Optional[Chain]:
    """Apply `directive` to `nodes` in place and return the resulting chain."""
    if directive is None:
        return chain

    if isinstance(directive, Promote):
        if directive.to is not NodeRole.PROSPECTION or not promotion_valid(
            directive, chain, nodes
        ):
            raise ValueError(f"promotion of {directive.target} no longer applies")
        if chain is None:
            chain = Chain(directive.links.source, directive.links.destination)
        else:
            _set_role(nodes, chain.members[-1], NodeRole.RELAY)
        _set_role(nodes, directive.target, NodeRole.PROSPECTION)
        chain.members.append(directive.target)

    elif isinstance(directive, Demote):
        if chain is None or directive.target not in chain.members:
            raise ValueError(f"node {directive.target} is not a chain member")
        if nodes[directive.target].role is not NodeRole.RELAY:
            raise ValueError("only relays are demoted; tear the chain down to drop its apex")
        chain.members.remove(directive.target)
        _set_role(nodes, directive.target, NodeRole.SURVEILLANCE)

    elif isinstance(directive, Complete):
        if chain is None:
            chain = Chain(directive.source, directive.destination, complete=True)
        elif not chain.complete:
            _set_role(nodes, chain.members[-1], NodeRole.RELAY)
            chain.complete = True

    elif isinstance(directive, Teardown):
        if chain is not None:
            for node_id in chain.members:
                _set_role(nodes, node_id, NodeRole.SURVEILLANCE)
            logger.debug("chain torn down (%s), %d members released",
                         directive.reason, len(chain.members))
        _relink(None, nodes, (directive.source, directive.destination))
        return None

    _relink(chain, nodes, (chain.source, chain.destination))
    return chain


# --- Auditor ----------------------------------------------------------------

def audit_chain(chain: Optional[Chain], nodes: MutableMapping[NodeId, NodeState]) -> list[str]:
    """Return every violated chain invariant (empty when consistent)."""
    problems: list[str] = []
    controlled = sorted(n.id for n in nodes.values() if n.role.controlled)
    if chain is None:
        if controlled:
            problems.append(f"no active chain but controlled nodes {controlled}")
        linked = sorted(n.id for n in nodes.values() if n.chain is not None)
        if linked:
            problems.append(f"no active chain but nodes {linked} carry links")
        return problems

    members = chain.members
    if len(set(members)) != len(members):
        problems.append(f"chain repeats a member: {members}")
    if chain.source in members or chain.destination in members:
        problems.append("an endpoint is listed as a chain member")
    if sorted(set(members)) != controlled:
        problems.append(f"members {sorted(members)} differ from controlled nodes {controlled}")

    prospection = [m for m in members if nodes[m].role is NodeRole.PROSPECTION]
    if chain.complete and prospection:
        problems.append(f"complete chain still has prospection nodes {prospection}")
    if not chain.complete and prospection != members[-1:]:
        problems.append(f"incomplete chain must have exactly its apex in P, got {prospection}")

    for node_id in (chain.source, chain.destination, *members):
        if node_id in nodes and nodes[node_id].chain != chain.links_for(node_id):
            problems.append(f"node {node_id} links {nodes[node_id].chain} are stale")

    # Walk successors from the source: must end at the destination or the apex.
    seen = {chain.source}
    cursor = nodes[chain.source].chain if chain.source in nodes else None
    while cursor is not None and cursor.successor is not None:
        nxt = cursor.successor
        if nxt in seen:
            problems.append(f"successor links cycle at {nxt}")
            break
        seen.add(nxt)
        cursor = nodes[nxt].chain if nxt in nodes else None
    end = chain.destination if chain.complete else chain.apex
    if end is not None and end not in seen:
        problems.append(f"successor walk from {chain.source} never reaches {end}")
    return problems
