from collections import Counter

import numpy as np
import pytest

from vfpe_sim.beacon import (
    ENTRY_SIZE,
    Beacon,
    BeaconEntry,
    ChainFields,
    EndpointFields,
    MalformedBeaconError,
    build_beacon,
    decode_beacon,
    decode_entry,
    encode_beacon,
    encode_entry,
)
from vfpe_sim.geometry import Zone, vec2
from vfpe_sim.models import Scheme
from vfpe_sim.neighbors import NeighborDatabase
from vfpe_sim.nodes import NodeRole, NodeState

SELF = NodeState(id=7, role=NodeRole.SURVEILLANCE, pos=vec2(10, 20), vel=vec2(1, 0))


def _entry(node: int, timestamp: float, role: NodeRole = NodeRole.SURVEILLANCE) -> BeaconEntry:
    return BeaconEntry(node=node, role=role, pos=vec2(node, node), vel=vec2(0, 0),
                       timestamp=timestamp)


def _assert_same_entry(a: BeaconEntry, b: BeaconEntry) -> None:
    assert (a.node, a.role, a.timestamp) == (b.node, b.role, b.timestamp)
    assert a.chain_fields == b.chain_fields
    np.testing.assert_array_equal(a.pos, b.pos)
    np.testing.assert_array_equal(a.vel, b.vel)


def _db(*entries: BeaconEntry) -> NeighborDatabase:
    db = NeighborDatabase(owner=SELF.id)
    for entry in entries:
        db.update(entry)
    return db


def test_entry_is_36_bytes_with_or_without_optional_fields():
    bare = _entry(3, 1.0)
    full = BeaconEntry(
        node=3,
        role=NodeRole.RELAY,
        pos=vec2(1, 2),
        vel=vec2(3, 4),
        timestamp=5.0,
        chain_fields=ChainFields(successor=4, predecessor=2, destination=1),
        endpoint_fields=EndpointFields(vec2(0, 0), vec2(999, 999)),
    )
    assert ENTRY_SIZE == 36
    assert len(encode_entry(bare)) == 36
    assert len(encode_entry(full)) == 36


def test_beacon_round_trips_bit_exactly():
    entries = (
        BeaconEntry(
            node=7,
            role=NodeRole.PROSPECTION,
            pos=vec2(12.5, 250.25),
            vel=vec2(-3.5, 0.75),
            timestamp=12.34,
            chain_fields=ChainFields(successor=None, predecessor=0, destination=1,
                                     insertion_requested=True),
            endpoint_fields=EndpointFields(vec2(100, 200), vec2(900, 50)),
        ),
        _entry(2, 11.0),
        _entry(0, 3.5, NodeRole.TRAFFIC),
    )
    data = encode_beacon(Beacon(entries))
    assert len(data) == 36 * 3
    decoded = decode_beacon(data)
    assert encode_beacon(decoded) == data

    first = decoded.entries[0]
    assert first.node == 7 and first.role is NodeRole.PROSPECTION
    np.testing.assert_array_equal(first.pos, (12.5, 250.25))
    np.testing.assert_array_equal(first.vel, (-3.5, 0.75))
    assert first.timestamp == 12.34
    assert first.chain_fields == entries[0].chain_fields
    np.testing.assert_array_equal(first.endpoint_fields.source_pos, (99.609375, 201.171875))
    for got, sent in zip(decoded.entries[1:], entries[1:]):
        _assert_same_entry(got, sent)


def test_endpoint_grid_is_scaled_to_the_zone():
    entry = BeaconEntry(
        node=1, role=NodeRole.RELAY, pos=vec2(0, 0), vel=vec2(0, 0), timestamp=0.0,
        chain_fields=ChainFields(destination=1),
        endpoint_fields=EndpointFields(vec2(0, 0), vec2(2000, 1000)),
    )
    zone = Zone(2000, 1000)
    decoded = decode_entry(encode_entry(entry, zone), zone)
    dest = decoded.endpoint_fields.dest_pos
    np.testing.assert_allclose(dest, (2000 - 2000 / 512, 1000 - 1000 / 512))


def test_decode_rejects_bad_payloads():
    with pytest.raises(MalformedBeaconError):
        decode_beacon(b"")
    with pytest.raises(MalformedBeaconError):
        decode_beacon(b"\x00" * 35)
    duplicated = encode_entry(_entry(3, 1.0)) * 2
    with pytest.raises(MalformedBeaconError):
        decode_beacon(duplicated)
    bad_role = bytearray(encode_entry(_entry(3, 1.0)))
    bad_role[4] = 9
    with pytest.raises(MalformedBeaconError):
        decode_entry(bytes(bad_role))


def test_chain_ids_must_fit_compressed_field():
    entry = BeaconEntry(
        node=3, role=NodeRole.RELAY, pos=vec2(0, 0), vel=vec2(0, 0), timestamp=0.0,
        chain_fields=ChainFields(successor=0xFFFF),
    )
    with pytest.raises(ValueError):
        encode_entry(entry)


def test_cs_one_sends_only_own_entry():
    db = _db(_entry(1, 1.0), _entry(2, 2.0))
    beacon = build_beacon(SELF, db, Scheme.RANDOM, 1, 5.0, np.random.default_rng(0))
    assert len(beacon.entries) == 1
    assert beacon.emitter.node == SELF.id
    assert beacon.emitter.timestamp == 5.0
    assert beacon.size_bytes == 36


@pytest.mark.parametrize("scheme", [Scheme.RANDOM, Scheme.FRESH])
def test_small_database_is_sent_whole(scheme):
    db = _db(_entry(1, 1.0), _entry(2, 2.0), _entry(3, 3.0))
    beacon = build_beacon(SELF, db, scheme, 5, 5.0, np.random.default_rng(0))
    assert len(beacon.entries) == 4
    assert beacon.entries[0].node == SELF.id
    assert {e.node for e in beacon.entries[1:]} == {1, 2, 3}


def test_fresh_prefers_largest_timestamp_then_lowest_id():
    db = _db(_entry(1, 10.0), _entry(2, 42.0))
    beacon = build_beacon(SELF, db, Scheme.FRESH, 2, 50.0, np.random.default_rng(0))
    assert [e.node for e in beacon.entries] == [SELF.id, 2]

    tied = _db(_entry(4, 9.0), _entry(3, 9.0), _entry(5, 1.0))
    beacon = build_beacon(SELF, tied, Scheme.FRESH, 3, 50.0, np.random.default_rng(0))
    assert [e.node for e in beacon.entries] == [SELF.id, 3, 4]


def test_random_selection_is_uniform():
    db = _db(*(_entry(i, 1.0) for i in range(1, 5)))
    rng = np.random.default_rng(123)
    counts = Counter()
    builds = 10_000
    for _ in range(builds):
        beacon = build_beacon(SELF, db, Scheme.RANDOM, 2, 5.0, rng)
        counts[beacon.entries[1].node] += 1
    for node in range(1, 5):
        assert counts[node] / builds == pytest.approx(0.25, abs=0.02)


def test_own_record_is_never_repeated():
    db = _db(_entry(1, 1.0))
    db.records[SELF.id] = _entry(SELF.id, 0.5)
    beacon = build_beacon(SELF, db, Scheme.FRESH, 5, 5.0, np.random.default_rng(0))
    assert [e.node for e in beacon.entries] == [SELF.id, 1]


def test_build_rejects_ideal_and_bad_cs():
    with pytest.raises(ValueError):
        build_beacon(SELF, _db(), Scheme.IDEAL, 2, 0.0, np.random.default_rng(0))
    with pytest.raises(ValueError):
        build_beacon(SELF, _db(), Scheme.RANDOM, 0, 0.0, np.random.default_rng(0))


def test_check_flags_oversized_beacons():
    beacon = Beacon((_entry(1, 1.0), _entry(2, 1.0), _entry(3, 1.0)))
    beacon.check()
    with pytest.raises(MalformedBeaconError):
        beacon.check(cs=2)
