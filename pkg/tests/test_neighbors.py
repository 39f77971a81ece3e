import numpy as np

from vfpe_sim.beacon import Beacon, BeaconEntry, ChainFields, EndpointFields
from vfpe_sim.geometry import vec2
from vfpe_sim.neighbors import NeighborDatabase, chain_fields_of, ideal_snapshot, process_beacon
from vfpe_sim.nodes import ChainLinks, NodeRole, NodeState


def _entry(node, timestamp, pos=(0, 0), **kwargs):
    return BeaconEntry(node=node, role=NodeRole.SURVEILLANCE, pos=vec2(*pos), vel=vec2(0, 0),
                       timestamp=timestamp, **kwargs)


def _same_points(actual, expected):
    assert len(actual) == len(expected)
    for a, e in zip(actual, expected):
        if e is None:
            assert a is None
        else:
            np.testing.assert_array_equal(a, e)


def test_update_keeps_strictly_newer_records():
    db = NeighborDatabase(owner=9)
    assert db.update(_entry(1, 5.0, (1, 1)))
    assert not db.update(_entry(1, 4.0, (2, 2)))
    assert not db.update(_entry(1, 5.0, (3, 3)))
    np.testing.assert_array_equal(db.position_of(1), (1, 1))
    assert db.update(_entry(1, 6.0, (4, 4)))
    np.testing.assert_array_equal(db.position_of(1), (4, 4))
    assert db.position_of(2) is None


def test_owner_never_stores_itself():
    db = NeighborDatabase(owner=3)
    assert not db.update(_entry(3, 1.0))
    process_beacon(db, Beacon((_entry(4, 1.0), _entry(3, 1.0))), now=1.0)
    assert set(db.records) == {4}


def test_direct_reception_updates_last_heard_only_for_emitter():
    db = NeighborDatabase(owner=0)
    process_beacon(db, Beacon((_entry(1, 2.0), _entry(2, 1.5))), now=2.0)
    assert db.last_heard == {1: 2.0}
    assert set(db.records) == {1, 2}
    assert db.heard_within(1, 2.9, 1.0)
    assert not db.heard_within(1, 3.1, 1.0)
    assert not db.heard_within(2, 2.0, 10.0)


def test_emitter_entry_carries_the_reception_time():
    db = NeighborDatabase(owner=0)
    process_beacon(db, Beacon((_entry(1, 2.0, (5, 5)), _entry(2, 1.5))), now=2.25)
    assert db.records[1].timestamp == 2.25
    np.testing.assert_array_equal(db.records[1].pos, (5, 5))
    assert db.records[2].timestamp == 1.5

    # A relayed copy stamped before the last direct reception no longer wins.
    process_beacon(db, Beacon((_entry(3, 2.5), _entry(1, 2.1, (9, 9)))), now=2.5)
    np.testing.assert_array_equal(db.records[1].pos, (5, 5))


def test_malformed_beacon_is_counted_and_ignored():
    db = NeighborDatabase(owner=0)
    process_beacon(db, Beacon((_entry(1, 1.0), _entry(1, 1.0))), now=1.0)
    process_beacon(db, Beacon(()), now=1.0)
    process_beacon(db, Beacon((_entry(1, 1.0), _entry(2, 1.0), _entry(3, 1.0))), now=1.0, cs=2)
    assert db.rejected == 3
    assert not db.records
    assert not db.last_heard


def test_future_timestamps_are_skipped():
    db = NeighborDatabase(owner=0)
    process_beacon(db, Beacon((_entry(1, 1.0), _entry(2, 7.0))), now=1.0)
    assert set(db.records) == {1}


def test_link_sensing_only_mode_leaves_records_alone():
    db = NeighborDatabase(owner=0)
    process_beacon(db, Beacon((_entry(1, 1.0), _entry(2, 1.0))), now=1.0, store_entries=False)
    assert db.last_heard == {1: 1.0}
    assert not db.records


def test_record_timestamps_never_decrease():
    db = NeighborDatabase(owner=0)
    seen = {}
    for now, stamps in enumerate([(1, 3.0), (1, 2.0), (1, 4.0), (1, 1.0)], start=5):
        node, ts = stamps
        process_beacon(db, Beacon((_entry(7, float(now)), _entry(node, ts))), now=float(now))
        for node_id, record in db.records.items():
            assert record.timestamp >= seen.get(node_id, 0.0)
            seen[node_id] = record.timestamp
    assert db.records[1].timestamp == 4.0


def test_endpoint_positions_prefer_the_freshest_source():
    db = NeighborDatabase(owner=5)
    assert db.endpoint_positions(0, 1) == (None, None)

    relay = _entry(
        4,
        10.0,
        chain_fields=ChainFields(successor=6, predecessor=3, destination=1),
        endpoint_fields=EndpointFields(vec2(10, 10), vec2(900, 900)),
    )
    process_beacon(db, Beacon((relay,)), now=10.0)
    _same_points(db.endpoint_positions(0, 1), [(10, 10), (900, 900)])

    db.update(BeaconEntry(node=1, role=NodeRole.TRAFFIC, pos=vec2(850, 870), vel=vec2(0, 0),
                          timestamp=12.0))
    _same_points(db.endpoint_positions(0, 1), [(10, 10), (850, 870)])

    db.update(BeaconEntry(node=0, role=NodeRole.TRAFFIC, pos=vec2(50, 50), vel=vec2(0, 0),
                          timestamp=8.0))
    np.testing.assert_array_equal(db.endpoint_positions(0, 1)[0], (10, 10))


def test_surveillance_records_sorted_and_filtered():
    db = NeighborDatabase(owner=0)
    db.update(_entry(5, 1.0))
    db.update(BeaconEntry(node=2, role=NodeRole.RELAY, pos=vec2(0, 0), vel=vec2(0, 0),
                          timestamp=1.0))
    db.update(_entry(3, 1.0))
    assert [r.node for r in db.surveillance_records()] == [3, 5]


def test_ideal_snapshot_is_exact_and_excludes_owner():
    nodes = [
        NodeState(id=0, role=NodeRole.TRAFFIC, pos=vec2(1, 2),
                  chain=ChainLinks(0, 1, successor=2)),
        NodeState(id=1, role=NodeRole.TRAFFIC, pos=vec2(3, 4)),
        NodeState(id=2, role=NodeRole.PROSPECTION, pos=vec2(5, 6),
                  chain=ChainLinks(0, 1, predecessor=0)),
    ]
    heard = {0: 3.0}
    db = ideal_snapshot(nodes, 4.0, owner=2, last_heard=heard)
    assert set(db.records) == {0, 1}
    np.testing.assert_array_equal(db.records[0].pos, (1, 2))
    assert db.records[0].timestamp == 4.0
    assert db.records[0].chain_fields == chain_fields_of(nodes[0])
    assert db.records[1].chain_fields is None
    assert db.last_heard is heard


def test_chain_fields_mirror_links():
    node = NodeState(id=4, role=NodeRole.RELAY, pos=vec2(0, 0),
                     chain=ChainLinks(0, 1, predecessor=3, successor=5))
    assert chain_fields_of(node) == ChainFields(successor=5, predecessor=3, destination=1)
    assert chain_fields_of(NodeState(id=4, role=NodeRole.SURVEILLANCE, pos=vec2(0, 0))) is None
