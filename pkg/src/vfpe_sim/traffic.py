"""Constant-bit-rate application between the two traffic nodes."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .nodes import NodeId


class DropCause(str, Enum):
    NO_ROUTE = "no_route"
    LINK_BREAK = "link_break"
    TTL_EXPIRED = "ttl_expired"
    QUEUE_OVERFLOW = "queue_overflow"
    IN_FLIGHT_AT_END = "in_flight_at_end"


@dataclass(frozen=True)
class DataPacket:
    packet_id: int
    source: NodeId
    destination: NodeId
    emitted_at: float
    hops: int = 0

    def hopped(self) -> "DataPacket":
        return replace(self, hops=self.hops + 1)


def cbr_interval(rate: float, packet_bytes: int) -> float:
    return packet_bytes * 8.0 / rate


def cbr_emission_count(start: float, duration: float, interval: float) -> int:
    """Packets emitted at start + k*interval strictly before `duration`."""
    if start >= duration:
        return 0
    return int(math.ceil((duration - start) / interval - 1e-9))


class CbrApp:
    """Stamps packets with their emission time and records (emission, reception) pairs."""

    def __init__(self, source: NodeId, destination: NodeId, rate: float, packet_bytes: int,
                 start: float = 0.0):
        self.source = source
        self.destination = destination
        self.packet_bytes = packet_bytes
        self.interval = cbr_interval(rate, packet_bytes)
        self.start = start
        self.sent = 0
        self.receptions: list[tuple[float, float]] = []

    def emission_time(self, k: int) -> float:
        return self.start + k * self.interval

    def emit(self, now: float) -> DataPacket:
        packet = DataPacket(self.sent, self.source, self.destination, now)
        self.sent += 1
        return packet

    def receive(self, packet: DataPacket, now: float) -> float:
        self.receptions.append((packet.emitted_at, now))
        return now - packet.emitted_at
