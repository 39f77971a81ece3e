import numpy as np
import pytest

from vfpe_sim.geometry import (
    ZERO,
    DegenerateLineError,
    Zone,
    distance,
    is_finite,
    norm,
    project_onto_segment_line,
    vec2,
)


def test_distance_examples():
    assert distance(vec2(0, 0), vec2(3, 4)) == 5.0
    assert distance(vec2(7, 2), vec2(7, 2)) == 0.0
    assert distance(vec2(0, 0), vec2(100, 0)) == 100.0


def test_distance_is_symmetric_and_satisfies_triangle_inequality():
    rng = np.random.default_rng(7)
    a, b, c = rng.uniform(-1000, 1000, size=(3, 2000, 2))
    np.testing.assert_array_equal(distance(a, b), distance(b, a))
    assert np.all(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9)


def test_norm_and_finiteness():
    assert norm(vec2(3, 4)) == 5.0
    np.testing.assert_allclose(norm(np.array([[3.0, 4.0], [0.0, 0.0]])), [5.0, 0.0])
    assert norm(np.array([[6.0, 8.0]]), keepdims=True).shape == (1, 1)
    assert is_finite(vec2(1, 2))
    assert not is_finite(vec2(float("nan"), 0))
    assert not is_finite(np.array([[0.0, 0.0], [float("inf"), 1.0]]))


def test_zero_is_read_only():
    with pytest.raises(ValueError):
        ZERO[0] = 1.0


def test_projection_examples():
    np.testing.assert_allclose(
        project_onto_segment_line(vec2(50, 10), vec2(0, 0), vec2(100, 0)), (50, 0)
    )
    np.testing.assert_allclose(
        project_onto_segment_line(vec2(20, -30), vec2(0, 0), vec2(0, 100)), (0, -30)
    )
    np.testing.assert_allclose(
        project_onto_segment_line(vec2(1, 1), vec2(0, 0), vec2(2, 2)), (1, 1)
    )


def test_projection_on_degenerate_line_raises():
    with pytest.raises(DegenerateLineError):
        project_onto_segment_line(vec2(1, 1), vec2(5, 5), vec2(5, 5))
    points = np.array([[1.0, 1.0], [2.0, 2.0]])
    starts = np.array([[0.0, 0.0], [5.0, 5.0]])
    ends = np.array([[9.0, 0.0], [5.0, 5.0]])
    with pytest.raises(DegenerateLineError):
        project_onto_segment_line(points, starts, ends)


def test_projection_minimizes_distance_over_dense_samples():
    rng = np.random.default_rng(11)
    ts = np.linspace(-3.0, 4.0, 7001)[:, None]
    for _ in range(50):
        p, s, d = rng.uniform(0, 1000, size=(3, 2))
        foot = project_onto_segment_line(p, s, d)
        best = distance(p, s + (d - s) * ts).min()
        assert distance(p, foot) <= best + 1e-9


def test_zone_clamp_zeroes_outward_velocity_only():
    zone = Zone(1000, 1000)
    pos, vel = zone.clamp(vec2(-5, 500), vec2(-2, 3))
    np.testing.assert_array_equal(pos, (0, 500))
    np.testing.assert_array_equal(vel, (0, 3))

    pos, vel = zone.clamp(vec2(1003, 1001), vec2(4, 1))
    np.testing.assert_array_equal(pos, (1000, 1000))
    np.testing.assert_array_equal(vel, ZERO)

    inside = vec2(10, 10)
    pos, vel = zone.clamp(inside, vec2(-1, -1))
    np.testing.assert_array_equal(pos, inside)
    np.testing.assert_array_equal(vel, (-1, -1))
    assert zone.contains(inside)
    np.testing.assert_array_equal(zone.center, (500, 500))


def test_zone_contains_rows():
    zone = Zone(100, 50)
    points = np.array([[0.0, 0.0], [100.0, 50.0], [101.0, 10.0], [50.0, -0.1]])
    assert zone.contains(points).tolist() == [True, True, False, False]
