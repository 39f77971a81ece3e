import math

import numpy as np
import pytest

from vfpe_sim.forces import (
    ChainNeighbor,
    ControlledBatch,
    alignment_force,
    alignment_target,
    chain_forces,
    friction_force,
    in_friction_zone,
    integrate,
    integrate_step,
    interaction_force,
    prospection_force,
    total_force,
)
from vfpe_sim.geometry import ZERO, Zone, distance, norm, project_onto_segment_line, vec2
from vfpe_sim.models import ForceParams
from vfpe_sim.nodes import ChainLinks, NodeRole, NodeState

PARAMS = ForceParams()
ZONE = Zone(1000, 1000)
S = vec2(0, 0)
D = vec2(1000, 0)


def _close(a, b, tol: float = 1e-9) -> None:
    np.testing.assert_allclose(a, b, rtol=0, atol=tol)


def test_interaction_force_zones():
    origin = vec2(0, 0)
    _close(interaction_force(vec2(30, 0), origin, PARAMS), (1, 0))
    _close(interaction_force(vec2(90, 0), origin, PARAMS), (-1, 0))
    _close(interaction_force(vec2(60, 0), origin, PARAMS), ZERO)
    _close(interaction_force(vec2(150, 0), origin, PARAMS), ZERO)
    _close(interaction_force(vec2(75, 0), origin, PARAMS), (-1, 0))
    _close(interaction_force(vec2(50, 0), origin, PARAMS), ZERO)


def test_interaction_force_broadcasts_over_rows():
    points = np.array([[30.0, 0.0], [90.0, 0.0], [60.0, 0.0], [0.0, 20.0]])
    forces = interaction_force(points, vec2(0, 0), PARAMS)
    assert forces.shape == (4, 2)
    _close(forces, [[1, 0], [-1, 0], [0, 0], [0, 1]])


def test_interaction_force_is_antisymmetric():
    rng = np.random.default_rng(3)
    a = rng.uniform(0, 150, size=(2000, 2))
    b = rng.uniform(0, 150, size=(2000, 2))
    ab = interaction_force(a, b, PARAMS, 1, 2)
    ba = interaction_force(b, a, PARAMS, 2, 1)
    _close(ab, -ba)


def test_coincident_nodes_split_by_id():
    p = vec2(10, 10)
    low = interaction_force(p, p, PARAMS, n_id=3, p_id=8)
    high = interaction_force(p, p, PARAMS, n_id=8, p_id=3)
    _close(low, (-1, 0))
    _close(high, -low)


def test_friction_force_examples():
    _close(friction_force(vec2(3, 0), True, PARAMS), (-6, 0))
    _close(friction_force(vec2(3, 0), False, PARAMS), ZERO)
    _close(friction_force(ZERO, True, PARAMS), ZERO)
    assert in_friction_zone(50, PARAMS) and in_friction_zone(75, PARAMS)
    assert not in_friction_zone(49.9, PARAMS)


def test_friction_strictly_dissipates():
    node = NodeState(id=2, role=NodeRole.RELAY, pos=vec2(500, 500), vel=vec2(5, 0))
    speed = norm(node.vel)
    while speed > 1e-6:
        node = integrate_step(node, friction_force(node.vel, True, PARAMS), 0.1, 10, ZONE)
        assert norm(node.vel) < speed
        speed = norm(node.vel)


def test_alignment_target_examples():
    d = vec2(100, 0)
    _close(alignment_target(vec2(50, 10), vec2(30, 0), S, d), (50, 0))
    _close(alignment_target(vec2(20, 10), vec2(30, 0), S, d), (40, 0))
    on_line = vec2(60, 0)
    _close(alignment_target(on_line, vec2(30, 0), S, d), on_line)


def test_alignment_target_falls_back_to_midpoint_when_reflection_overshoots():
    # N's projection is beyond D: the reflection about Pp would not be closer to D.
    target = alignment_target(vec2(500, 5), vec2(60, 0), S, vec2(100, 0))
    _close(target, (80, 0))


def test_alignment_target_geometry_oracle():
    rng = np.random.default_rng(2024)
    rows = rng.uniform(0, 1000, size=(100_000, 8))
    n, pred, s, d = rows[:, 0:2], rows[:, 2:4], rows[:, 4:6], rows[:, 6:8]
    keep = ~np.all(s == d, axis=1)
    n, pred, s, d = n[keep], pred[keep], s[keep], d[keep]

    target = alignment_target(n, pred, s, d)
    sd = d - s
    rel = target - s
    cross = rel[:, 0] * sd[:, 1] - rel[:, 1] * sd[:, 0]
    assert np.all(np.abs(cross) / norm(sd) < 1e-6)

    pp = project_onto_segment_line(pred, s, d)
    assert np.all(distance(target, d) < distance(pp, d))

    own = np.all(target == project_onto_segment_line(n, s, d), axis=1)
    assert own.any() and not own.all()


def test_alignment_force_examples():
    n, target = vec2(50, 10), vec2(50, 0)
    _close(alignment_force(n, vec2(0, -1), target, PARAMS), (0, -2))
    _close(alignment_force(n, vec2(0, 1), target, PARAMS), (0, -4))
    _close(alignment_force(target, ZERO, target, PARAMS), ZERO)
    _close(alignment_force(vec2(50, 0.5), ZERO, target, PARAMS), ZERO)


def _relay(pos, vel=ZERO, role: NodeRole = NodeRole.RELAY, successor=None, node_id=5):
    return NodeState(
        id=node_id,
        role=role,
        pos=pos,
        vel=vel,
        chain=ChainLinks(source=0, destination=1, predecessor=0, successor=successor),
    )


def test_total_force_is_zero_without_neighbours():
    _close(total_force(_relay(vec2(200, 0)), [], S, D, PARAMS), ZERO)


def test_total_force_in_friction_zone_at_rest_is_alignment_only():
    node = _relay(vec2(48, 36))
    pred = ChainNeighbor(0, vec2(0, 0))
    force = total_force(node, [pred], S, D, PARAMS)
    target = alignment_target(node.pos, pred.pos, S, D)
    _close(force, alignment_force(node.pos, node.vel, target, PARAMS))
    _close(force, (0, -4))


def test_total_force_sums_repulsion_and_alignment():
    node = _relay(vec2(24, 18))
    pred = ChainNeighbor(0, vec2(0, 0))
    _close(total_force(node, [pred], S, D, PARAMS), (0.8, 0.6 - 4))


def test_total_force_adds_prospection_pull_for_apex():
    node = _relay(vec2(40, 0), role=NodeRole.PROSPECTION)
    force = total_force(node, [ChainNeighbor(0, vec2(0, 0))], S, D, PARAMS)
    _close(force, (3, 0))
    _close(prospection_force(vec2(80, 0), vec2(0, 0), D, PARAMS), ZERO)


def test_total_force_skips_alignment_on_degenerate_line():
    node = _relay(vec2(24, 18))
    force = total_force(node, [ChainNeighbor(0, vec2(0, 0))], S, S, PARAMS)
    _close(force, (0.8, 0.6))


def test_total_force_skips_alignment_without_endpoints():
    node = _relay(vec2(24, 18))
    force = total_force(node, [ChainNeighbor(0, vec2(0, 0))], None, D, PARAMS)
    _close(force, (0.8, 0.6))


def test_total_force_rejects_uncontrolled_nodes():
    node = NodeState(id=3, role=NodeRole.SURVEILLANCE, pos=vec2(1, 1))
    with pytest.raises(ValueError):
        total_force(node, [], S, D, PARAMS)


def test_chain_forces_match_one_node_views():
    rng = np.random.default_rng(11)
    rows = []
    for k in range(40):
        role = NodeRole.PROSPECTION if k % 4 == 0 else NodeRole.RELAY
        node = _relay(rng.uniform(100, 900, size=2), rng.uniform(-3, 3, size=2), role,
                      successor=None if role is NodeRole.PROSPECTION else 7, node_id=10 + k)
        neighbours = [ChainNeighbor(0, node.pos + rng.uniform(-90, 90, size=2))]
        if role is NodeRole.RELAY and k % 3:
            neighbours.append(ChainNeighbor(7, node.pos + rng.uniform(-90, 90, size=2)))
        endpoints = (S, D) if k % 5 else (None, None)
        rows.append((node, neighbours, *endpoints))

    batched = chain_forces(ControlledBatch.build(rows), PARAMS)
    assert batched.shape == (40, 2)
    for row, expected in zip(rows, batched):
        _close(total_force(*row, PARAMS), expected)


def test_controlled_batch_rejects_two_predecessors():
    node = _relay(vec2(100, 100))
    twice = [ChainNeighbor(0, vec2(50, 100)), ChainNeighbor(0, vec2(150, 100))]
    with pytest.raises(ValueError):
        ControlledBatch.build([(node, twice, S, D)])


def test_integrate_step_examples():
    node = NodeState(id=2, role=NodeRole.RELAY, pos=vec2(500, 500))
    moved = integrate_step(node, vec2(1, 0), 0.1, 10, ZONE)
    assert moved.vel[0] == pytest.approx(0.1)
    assert moved.pos[0] == pytest.approx(500.01)

    fast = NodeState(id=2, role=NodeRole.RELAY, pos=vec2(500, 500), vel=vec2(9.9, 0))
    capped = integrate_step(fast, vec2(10, 0), 0.5, 10, ZONE)
    assert norm(capped.vel) == pytest.approx(10.0)

    coasting = NodeState(id=2, role=NodeRole.RELAY, pos=vec2(100, 100), vel=vec2(1, 2))
    for _ in range(10):
        coasting = integrate_step(coasting, ZERO, 0.5, 10, ZONE)
    assert coasting.pos[0] == pytest.approx(105)
    assert coasting.pos[1] == pytest.approx(110)


def test_integrate_rejects_non_positive_dt():
    with pytest.raises(ValueError):
        integrate(vec2(1, 1), ZERO, ZERO, 1.0, 0.0, 10, ZONE)


def test_integrate_step_never_leaves_zone_or_exceeds_cap():
    rng = np.random.default_rng(5)
    node = NodeState(id=2, role=NodeRole.RELAY, pos=vec2(990, 10))
    for _ in range(500):
        force = rng.uniform(-20, 20, size=2)
        node = integrate_step(node, force, 0.1, 10, ZONE)
        assert ZONE.contains(node.pos)
        assert norm(node.vel) <= 10 + 1e-9


def test_integrate_batch_caps_each_row():
    pos = np.array([[500.0, 500.0], [2.0, 10.0]])
    vel = np.array([[9.0, 0.0], [-1.0, -1.0]])
    force = np.array([[20.0, 0.0], [-50.0, 0.0]])
    new_pos, new_vel = integrate(pos, vel, force, [1.0, 1.0], 0.5, 10, ZONE)
    assert np.all(norm(new_vel) <= 10 + 1e-9)
    assert ZONE.contains(new_pos).all()
    # The second row hit x = 0 and lost its outward component.
    assert new_pos[1, 0] == 0.0 and new_vel[1, 0] == 0.0


def _settle_pair(separation: float, angle: float) -> tuple[float, float]:
    centre = vec2(500, 500)
    offset = vec2(math.cos(angle), math.sin(angle)) * (separation / 2)
    a = NodeState(id=2, role=NodeRole.RELAY, pos=centre - offset)
    b = NodeState(id=3, role=NodeRole.RELAY, pos=centre + offset)
    for _ in range(1200):
        d = distance(a.pos, b.pos)
        zone = in_friction_zone(d, PARAMS)
        fa = interaction_force(a.pos, b.pos, PARAMS, a.id, b.id)
        fb = interaction_force(b.pos, a.pos, PARAMS, b.id, a.id)
        fa = fa + friction_force(a.vel, zone, PARAMS)
        fb = fb + friction_force(b.vel, zone, PARAMS)
        a = integrate_step(a, fa, 0.1, 10, ZONE)
        b = integrate_step(b, fb, 0.1, 10, ZONE)
    return float(distance(a.pos, b.pos)), float(max(norm(a.vel), norm(b.vel)))


def test_two_controlled_nodes_settle_in_friction_zone():
    rng = np.random.default_rng(99)
    for _ in range(100):
        separation = float(rng.uniform(0.0, 100.0)) or 1.0
        final, speed = _settle_pair(separation, float(rng.uniform(0, 2 * math.pi)))
        assert PARAMS.d_r <= final <= PARAMS.d_f, separation
        assert speed < 0.01, separation


def test_force_params_reject_bad_nesting():
    with pytest.raises(ValueError):
        ForceParams(d_r=80, d_f=75)
    with pytest.raises(ValueError):
        ForceParams(f_a_near=5, f_a_far=4)
