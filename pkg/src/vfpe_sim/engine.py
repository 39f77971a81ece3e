"""Deterministic discrete-event simulation of one seeded run."""

from __future__ import annotations

import heapq
import logging
from dataclasses import replace
from enum import Enum
from typing import Any, Callable, NamedTuple, Optional

import numpy as np

from .beacon import Beacon, ChainFields, EndpointFields, build_beacon
from .chain import (
    Chain,
    ChainContext,
    ChainDirective,
    Complete,
    Promote,
    apply_directive,
    audit_chain,
    chain_bootstrap,
    chain_extend,
    chain_maintain,
    promotion_valid,
    source_watch,
)
from .forces import ChainNeighbor, ControlledBatch, ForceRow, chain_forces, integrate
from .geometry import is_finite
from .metrics import ConservationError, ContactTracker, RunMetrics
from .mobility import DESTINATION_ID, SOURCE_ID, RwpParams, initial_placement, rwp_step_many
from .models import Scheme, SimConfig
from .neighbors import NeighborDatabase, chain_fields_of, ideal_snapshot, process_beacon
from .nodes import ChainLinks, NodeId, NodeRole, NodeState
from .radio import Channel, Frame, FrameKind
from .routing import Hello, LinkStateView, TopologyControl
from .streams import Purpose, RunStreams
from .traffic import CbrApp, DataPacket, DropCause

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    MOBILITY_TICK = "mobility_tick"
    BEACON_EMIT = "beacon_emit"
    ROUTING_TICK = "routing_tick"
    CBR_EMIT = "cbr_emit"
    FRAME_DELIVERY = "frame_delivery"
    FRAME_RECEPTION = "frame_reception"
    CHANNEL_RECHECK = "channel_recheck"


class Event(NamedTuple):
    # (time, seq) is unique, so heap order never reaches the payload fields.
    time: float
    seq: int
    kind: EventKind
    node: Optional[NodeId] = None
    data: Any = None


TraceRow = tuple[float, NodeId, str, float, float]


class Simulation:
    """One run: owns every node, database, router and the channel.

    Events at equal times are dispatched in scheduling order, which is itself a pure
    function of the configuration, so equal configs give identical runs.
    """

    def __init__(self, config: SimConfig, trace_interval: Optional[float] = None):
        self.config = config
        self.now = 0.0
        self.streams = RunStreams(config.seed)
        self.nodes: dict[NodeId, NodeState] = {
            node.id: node for node in initial_placement(config, self.streams)
        }
        self.ids = sorted(self.nodes)
        self.source, self.destination = SOURCE_ID, DESTINATION_ID
        self.swarm_ids = [i for i in self.ids if i not in (SOURCE_ID, DESTINATION_ID)]

        self.dbs = {i: NeighborDatabase(owner=i) for i in self.ids}
        self.channel = Channel(self.ids, config.radio)
        self.routing = LinkStateView.for_nodes(self.ids, config.radio)
        self.cbr = CbrApp(
            SOURCE_ID, DESTINATION_ID, config.cbr_rate, config.cbr_packet, config.cbr_start
        )
        self.contacts = ContactTracker(self.swarm_ids)
        rows = [self.channel.ids.index(i) for i in self.swarm_ids]
        self._swarm_block = np.ix_(rows, rows)
        self.chain: Optional[Chain] = None
        self.outstanding: dict[int, DataPacket] = {}

        self.traffic_rwp = RwpParams.for_traffic(config)
        self.swarm_rwp = RwpParams.for_swarm(config)

        self.metrics = RunMetrics(
            seed=config.seed,
            scheme=config.scheme.value,
            cs=config.cs,
            n_swarm=config.n_swarm,
            frames_sent={kind.value: 0 for kind in FrameKind},
        )
        self.trace: list[TraceRow] = []
        self._trace_every = (
            max(1, int(round(trace_interval / config.dt))) if trace_interval else None
        )

        self._queue: list[Event] = []
        self._seq = 0
        self._snapshot: Optional[NeighborDatabase] = None
        self._recheck_pending = False
        self._handlers: dict[EventKind, Callable[[Event], None]] = {
            EventKind.MOBILITY_TICK: self._on_mobility_tick,
            EventKind.BEACON_EMIT: self._on_beacon_emit,
            EventKind.ROUTING_TICK: self._on_routing_tick,
            EventKind.CBR_EMIT: self._on_cbr_emit,
            EventKind.FRAME_DELIVERY: self._on_frame_delivery,
            EventKind.FRAME_RECEPTION: self._on_frame_reception,
            EventKind.CHANNEL_RECHECK: self._on_channel_recheck,
        }

    # --- Scheduling ---------------------------------------------------------

    def schedule(self, time: float, kind: EventKind, node: Optional[NodeId] = None,
                 data: Any = None) -> None:
        heapq.heappush(self._queue, Event(time, self._seq, kind, node, data))
        self._seq += 1

    def _recheck_channel(self) -> None:
        """One channel recheck at `now`; requests made before it runs share it."""
        if not self._recheck_pending:
            self._recheck_pending = True
            self.schedule(self.now, EventKind.CHANNEL_RECHECK)

    def _seed_events(self) -> None:
        config = self.config
        self.schedule(0.0, EventKind.MOBILITY_TICK, data=0)
        if config.scheme.uses_beacons:
            for node_id in self.ids:
                phase = self.streams.get(node_id, Purpose.BEACON_PHASE)
                self.schedule(
                    float(phase.uniform(0.0, config.beacon_interval)),
                    EventKind.BEACON_EMIT,
                    node_id,
                )
        radio = config.radio
        for node_id in self.ids:
            phase = self.streams.get(node_id, Purpose.ROUTING_PHASE)
            self.schedule(float(phase.uniform(0.0, radio.hello_interval)),
                          EventKind.ROUTING_TICK, node_id, "hello")
            self.schedule(float(phase.uniform(0.0, radio.tc_interval)),
                          EventKind.ROUTING_TICK, node_id, "tc")
        if config.cbr_start < config.duration:
            self.schedule(config.cbr_start, EventKind.CBR_EMIT, data=0)

    def run(self) -> RunMetrics:
        config = self.config
        logger.debug(
            "run seed=%s scheme=%s cs=%s n=%s", config.seed, config.scheme.value,
            config.cs, config.n_swarm,
        )
        self._seed_events()
        while self._queue and self._queue[0].time < config.duration:
            event = heapq.heappop(self._queue)
            self.now = event.time
            self._handlers[event.kind](event)
            self.metrics.events_processed += 1
        self._finish()
        return self.metrics

    def _finish(self) -> None:
        m = self.metrics
        m.drop(DropCause.IN_FLIGHT_AT_END, len(self.outstanding))
        m.contact_log = list(self.contacts.log)
        m.beacons_rejected = sum(db.rejected for db in self.dbs.values())
        m.final_positions = {i: tuple(map(float, self.nodes[i].pos)) for i in self.ids}
        try:
            m.check_conservation()
        except ConservationError:
            logger.error("run seed=%s: packet accounting does not balance", self.config.seed)
            raise
        logger.debug(
            "run seed=%s done: sent=%d received=%d events=%d",
            self.config.seed, m.cbr_sent, m.cbr_received, m.events_processed,
        )

    # --- Knowledge ------------------------------------------------------------

    def knowledge(self, node_id: NodeId) -> NeighborDatabase:
        """What `node_id` knows: its own database, or the exact snapshot under ideal."""
        db = self.dbs[node_id]
        if self.config.scheme is not Scheme.IDEAL:
            return db
        if self._snapshot is None:
            self._snapshot = ideal_snapshot(self.nodes.values(), self.now)
        return NeighborDatabase(
            owner=node_id, records=self._snapshot.records, last_heard=db.last_heard
        )

    def _context(self) -> ChainContext:
        return ChainContext.from_config(self.config, self.now, self.destination)

    # --- Chain --------------------------------------------------------------

    def _apply(self, directive: ChainDirective) -> None:
        if directive is None:
            return
        self.chain = apply_directive(directive, self.chain, self.nodes)
        self._snapshot = None
        name = type(directive).__name__.lower()
        self.metrics.directives[name] = self.metrics.directives.get(name, 0) + 1
        if isinstance(directive, Complete) and self.metrics.chain_completion_time is None:
            self.metrics.chain_completion_time = self.now
        logger.debug("t=%.3f applied %s", self.now, directive)
        self._audit()

    def _audit(self) -> None:
        if not self.config.audit:
            return
        problems = audit_chain(self.chain, self.nodes)
        if problems:
            self.metrics.auditor_violations += len(problems)
            logger.warning("t=%.3f chain audit: %s", self.now, "; ".join(problems))

    def _decide(self, node: NodeState) -> ChainDirective:
        db = self.knowledge(node.id)
        ctx = self._context()
        force = self.config.force
        if node.id == self.source:
            if node.chain is None:
                if self.now < self.config.cbr_start:
                    return None
                return chain_bootstrap(node, db, ctx)
            return source_watch(node, db, ctx)
        if node.role is NodeRole.PROSPECTION:
            directive = chain_extend(node, db, force, ctx)
            if directive is not None:
                return directive
        if node.role.controlled:
            return chain_maintain(node, db, force, ctx)
        return None

    def _endpoint_fields(self, node: NodeState, db: NeighborDatabase) -> Optional[EndpointFields]:
        if node.id == self.source:
            s_pos, d_pos = node.pos, db.endpoint_positions(self.source, self.destination)[1]
        elif node.chain is not None:
            s_pos, d_pos = db.endpoint_positions(node.chain.source, node.chain.destination)
        else:
            return None
        if s_pos is None or d_pos is None:
            return None
        return EndpointFields(s_pos, d_pos)

    # --- Handlers -------------------------------------------------------------

    def _on_mobility_tick(self, event: Event) -> None:
        k: int = event.data
        config = self.config
        if k > 0:
            self._move_controlled()
            self._move_waypoint(NodeRole.TRAFFIC, self.traffic_rwp)
            self._move_waypoint(NodeRole.SURVEILLANCE, self.swarm_rwp)
        self._snapshot = None
        self.channel.update_topology({i: n.pos for i, n in self.nodes.items()})
        self._track_contacts()
        if k > 0:
            self._audit()
        if self._trace_every and k % self._trace_every == 0:
            for i in self.ids:
                node = self.nodes[i]
                x, y = map(float, node.pos)
                self.trace.append((self.now, i, node.role.letter, x, y))
        self.schedule((k + 1) * config.dt, EventKind.MOBILITY_TICK, data=k + 1)

    def _move_controlled(self) -> None:
        """One force step for every relay and prospection node, from pre-step knowledge."""
        config = self.config
        ids = [i for i in self.ids if self.nodes[i].role.controlled]
        if not ids:
            return
        batch = ControlledBatch.build([self._force_row(self.nodes[i]) for i in ids])
        force = chain_forces(batch, config.force)
        mass = [self.nodes[i].mass for i in ids]
        pos, vel = integrate(batch.pos, batch.vel, force, mass, config.dt,
                             config.controlled_speed, config.zone)
        if not (is_finite(pos) and is_finite(vel)):
            raise ValueError(f"t={self.now:.3f}: non-finite state after integration")
        for row, i in enumerate(ids):
            self.nodes[i] = replace(self.nodes[i], pos=pos[row], vel=vel[row])

    def _move_waypoint(self, role: NodeRole, params: RwpParams) -> None:
        ids = [i for i in self.ids if self.nodes[i].role is role]
        rngs = [self.streams.get(i, Purpose.MOBILITY) for i in ids]
        moved = rwp_step_many([self.nodes[i] for i in ids], self.config.dt, rngs, params)
        self.nodes.update(zip(ids, moved))

    def _force_row(self, node: NodeState) -> ForceRow:
        db = self.knowledge(node.id)
        links = node.chain
        neighbours = []
        for other in (links.predecessor, links.successor):
            if other is None:
                continue
            pos = db.position_of(other)
            if pos is not None:
                neighbours.append(ChainNeighbor(other, pos))
        s_pos, d_pos = db.endpoint_positions(links.source, links.destination)
        return node, neighbours, s_pos, d_pos

    def _track_contacts(self) -> None:
        if not self.swarm_ids:
            return
        adj = self.channel.adj[self._swarm_block]
        surveying = np.array(
            [self.nodes[i].role is NodeRole.SURVEILLANCE for i in self.swarm_ids]
        )
        self.contacts.update(self.now, adj & surveying[:, None] & surveying[None, :])

    def _on_beacon_emit(self, event: Event) -> None:
        node_id = event.node
        config = self.config
        node = self.nodes[node_id]
        directive = self._decide(node)
        promotion: Optional[Promote] = None
        if isinstance(directive, Promote):
            promotion = directive
        else:
            self._apply(directive)
            node = self.nodes[node_id]

        db = self.knowledge(node_id)
        chain_fields = chain_fields_of(node)
        if promotion is not None:
            links = node.chain or ChainLinks(self.source, self.destination)
            chain_fields = ChainFields(
                successor=promotion.target,
                predecessor=links.predecessor,
                destination=promotion.links.destination,
                insertion_requested=True,
            )
        scheme = Scheme.FRESH if config.scheme is Scheme.IDEAL else config.scheme
        beacon = build_beacon(
            node,
            db,
            scheme,
            config.cs,
            self.now,
            self.streams.get(node_id, Purpose.SELECTION),
            chain_fields=chain_fields,
            endpoint_fields=self._endpoint_fields(node, db),
        )
        frame = Frame(FrameKind.BEACON, node_id, beacon.size_bytes, self.now, payload=beacon)
        if self.channel.enqueue(frame):
            self.metrics.beacons_sent += 1
            self._recheck_channel()
        self.schedule(self.now + config.beacon_interval, EventKind.BEACON_EMIT, node_id)

    def _on_routing_tick(self, event: Event) -> None:
        router = self.routing[event.node]
        radio = self.config.radio
        if event.data == "hello":
            message = router.make_hello(self.now)
            interval = radio.hello_interval
        else:
            message = router.make_tc(self.now)
            interval = radio.tc_interval
        self._broadcast_routing(event.node, message)
        self.schedule(self.now + interval, EventKind.ROUTING_TICK, event.node, event.data)

    def _broadcast_routing(self, node_id: NodeId, message) -> None:
        frame = Frame(FrameKind.ROUTING, node_id, message.size_bytes, self.now, payload=message)
        if self.channel.enqueue(frame):
            self._recheck_channel()

    def _on_cbr_emit(self, event: Event) -> None:
        k: int = event.data
        packet = self.cbr.emit(self.now)
        self.metrics.cbr_sent += 1
        self.outstanding[packet.packet_id] = packet
        self._forward(self.source, packet)
        next_time = self.cbr.emission_time(k + 1)
        if next_time < self.config.duration:
            self.schedule(next_time, EventKind.CBR_EMIT, data=k + 1)

    def _drop(self, packet: DataPacket, cause: DropCause) -> None:
        self.outstanding.pop(packet.packet_id, None)
        self.metrics.drop(cause)

    def _forward(self, at: NodeId, packet: DataPacket) -> None:
        if packet.hops >= self.config.radio.ttl:
            self._drop(packet, DropCause.TTL_EXPIRED)
            return
        next_hop = self.routing[at].route_table(self.now).get(packet.destination)
        if next_hop is None:
            self._drop(packet, DropCause.NO_ROUTE)
            return
        frame = Frame(
            FrameKind.DATA, at, self.config.cbr_packet, self.now, dst=next_hop, payload=packet
        )
        if not self.channel.enqueue(frame):
            self._drop(packet, DropCause.QUEUE_OVERFLOW)
            return
        self._recheck_channel()

    def _on_channel_recheck(self, event: Event) -> None:
        self._recheck_pending = False
        started = self.channel.start_ready(self.now)
        for tx in started:
            self.metrics.frames_sent[tx.frame.kind.value] += 1
            self.schedule(tx.end, EventKind.FRAME_DELIVERY, tx.frame.src)
        if self.config.audit and started:
            problems = self.channel.audit(started)
            if problems:
                self.metrics.auditor_violations += len(problems)
                logger.warning("t=%.6f channel audit: %s", self.now, "; ".join(problems))

    def _on_frame_delivery(self, event: Event) -> None:
        frame, receivers = self.channel.finish(event.node)
        if frame.kind is FrameKind.DATA and not receivers:
            self._drop(frame.payload, DropCause.LINK_BREAK)
        c = self.config.radio.propagation_speed
        for receiver, d in receivers:
            self.schedule(self.now + d / c, EventKind.FRAME_RECEPTION, receiver, frame)
        self._recheck_channel()

    def _on_frame_reception(self, event: Event) -> None:
        frame: Frame = event.data
        receiver = event.node
        if frame.kind is FrameKind.BEACON:
            self._receive_beacon(receiver, frame.payload)
        elif frame.kind is FrameKind.ROUTING:
            router = self.routing[receiver]
            if isinstance(frame.payload, Hello):
                router.on_hello(frame.payload, self.now)
            elif isinstance(frame.payload, TopologyControl):
                if router.on_tc(frame.payload, self.now):
                    self._broadcast_routing(receiver, frame.payload)
        else:
            packet: DataPacket = frame.payload.hopped()
            if receiver == packet.destination:
                self.cbr.receive(packet, self.now)
                self.outstanding.pop(packet.packet_id, None)
                self.metrics.cbr_received += 1
                self.metrics.delays.append(self.now - packet.emitted_at)
                self.metrics.hop_counts.append(packet.hops)
            else:
                self._forward(receiver, packet)

    def _receive_beacon(self, receiver: NodeId, beacon: Beacon) -> None:
        config = self.config
        process_beacon(
            self.dbs[receiver],
            beacon,
            self.now,
            cs=config.cs,
            store_entries=config.scheme is not Scheme.IDEAL,
        )
        emitter = beacon.emitter
        fields = emitter.chain_fields
        if fields is None or not fields.insertion_requested or fields.successor != receiver:
            return
        source = self.chain.source if self.chain is not None else emitter.node
        promotion = Promote(
            target=receiver,
            to=NodeRole.PROSPECTION,
            links=ChainLinks(source, fields.destination, predecessor=emitter.node),
        )
        if promotion_valid(promotion, self.chain, self.nodes):
            self._apply(promotion)


def run(config: SimConfig, trace_interval: Optional[float] = None) -> RunMetrics:
    """Execute one seeded run and return its metrics."""
    return Simulation(config, trace_interval).run()
