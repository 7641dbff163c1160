from dataclasses import replace

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from models import planar_arm
from pstraj import ad
from pstraj.collide import (
    CollisionWorld,
    ObstacleSphere,
    RobotSphere,
    collision_constraint_values,
    default_self_pairs,
    pair_margin,
    robot_sphere_centers,
)
from pstraj.robodyn import forward_kinematics


def three_link():
    return planar_arm(lengths=(0.5, 0.4, 0.3), masses=(1.0, 1.0, 1.0))


# -- pair margin ------------------------------------------------------------------------
def test_pair_margin_collinear():
    assert pair_margin(np.zeros(3), 1.0, np.array([3.0, 0, 0]), 1.0) == 1.0


def test_pair_margin_full_overlap():
    assert pair_margin(np.zeros(3), 1.0, np.zeros(3), 1.0) == -2.0


def test_pair_margin_pythagorean():
    assert abs(pair_margin(np.array([1.0, 2, 2]), 1.5, np.zeros(3), 0.5) - 1.0) < 1e-15


def test_pair_margin_squared_form_sign_agrees(rng):
    a, b = rng.normal(size=(2, 20, 3))
    r1, r2 = rng.uniform(0.1, 1.0, (2, 20))
    plain = pair_margin(a, r1, b, r2)
    sq = pair_margin(a, r1, b, r2, squared=True)
    assert np.array_equal(plain >= 0, sq >= 0)


# -- sphere centers ---------------------------------------------------------------------
def test_zero_offset_is_link_origin(rng):
    model = three_link()
    world = CollisionWorld([RobotSphere(k, (0, 0, 0), 0.1) for k in range(3)])
    q = rng.uniform(-1, 1, 3)
    frames = forward_kinematics(model, q)
    C = robot_sphere_centers(model, world, q)
    for k in range(3):
        assert np.allclose(C[k], frames[k][1], atol=1e-15)


def test_centers_at_zero_angles():
    model = three_link()
    world = CollisionWorld([RobotSphere(2, (0.1, 0, 0), 0.05)])
    assert np.allclose(robot_sphere_centers(model, world, np.zeros(3)), [[1.0, 0, 0]], atol=1e-15)


def test_elbow_sphere_position():
    l1 = 0.7
    model = planar_arm(lengths=(l1, 0.5))
    world = CollisionWorld([RobotSphere(1, (0, 0, 0), 0.05)])
    for q2 in (-1.0, 0.3, 2.0):
        C = robot_sphere_centers(model, world, np.array([np.pi / 2, q2]))
        assert np.allclose(C[0], [0.0, l1, 0.0], atol=1e-15)


def test_dangling_link_rejected():
    world = CollisionWorld([RobotSphere(5, (0, 0, 0), 0.1)])
    with pytest.raises(ValueError):
        robot_sphere_centers(planar_arm(), world, np.zeros(2))
    with pytest.raises(ValueError):
        world.resolved(planar_arm())


# -- constraint vector ---------------------------------------------------------------------
def test_empty_world_gives_empty_vector():
    assert collision_constraint_values(planar_arm(), CollisionWorld(), np.zeros(2)).shape == (0,)


def test_box_margins():
    # a single joint whose sphere sits at the world point (0.5, 0.5, 0.5)
    model = replace(planar_arm(lengths=(1.0,), masses=(1.0,)), joint_xyz=[[0.5, 0.5, 0.5]])
    world = CollisionWorld([RobotSphere(0, (0, 0, 0), 0.1)], workspace_box=((0, 0, 0), (1, 1, 1)))
    vals = collision_constraint_values(model, world, np.zeros(1))
    assert vals.shape == (6,)
    assert np.allclose(vals, 0.4, atol=1e-15)


def test_tangent_obstacle_gives_zero_margin():
    # sphere at distance d on link 1 circles the origin; solve cos(q) from tangency
    d, r1, X, r2 = 0.4, 0.05, 0.5, 0.1
    model = planar_arm(lengths=(0.5, 0.5))
    world = CollisionWorld([RobotSphere(0, (d, 0, 0), r1)], [ObstacleSphere((X, 0, 0), r2)])
    q1 = np.arccos((d * d + X * X - (r1 + r2) ** 2) / (2 * d * X))
    vals = collision_constraint_values(model, world, np.array([q1, 0.7]))
    assert abs(vals[0]) < 1e-12


def test_layout_and_order(rng):
    model = three_link()
    spheres = [RobotSphere(0, (0.2, 0, 0), 0.05), RobotSphere(1, (0.2, 0, 0), 0.05), RobotSphere(2, (0.2, 0, 0), 0.05)]
    obstacles = [ObstacleSphere((1.0, 1.0, 0), 0.2), ObstacleSphere((-1.0, 0.5, 0), 0.1)]
    box = ((-2, -2, -1), (2, 2, 1))
    world = CollisionWorld(spheres, obstacles, box).resolved(model)
    assert world.self_pairs == ((0, 2),)
    q = rng.uniform(-1, 1, 3)
    vals = collision_constraint_values(model, world, q)
    M, S = 3, 2
    assert vals.shape == (1 + M * S + 6 * M,) == (world.constraint_count(model),)
    C = robot_sphere_centers(model, world, q)
    r = 0.05
    expected = [pair_margin(C[0], r, C[2], r)]
    for j in range(M):
        for o in obstacles:
            expected.append(pair_margin(C[j], r, np.array(o.center), o.radius))
    for j in range(M):
        expected += list(C[j] - r - np.array(box[0])) + list(np.array(box[1]) - C[j] - r)
    assert np.allclose(vals, expected, rtol=0, atol=1e-15)


def test_batched_evaluation(rng):
    model = three_link()
    world = CollisionWorld([RobotSphere(0, (0.2, 0, 0), 0.05), RobotSphere(2, (0.1, 0, 0), 0.05)], [ObstacleSphere((0.5, 0.5, 0), 0.1)])
    q = rng.uniform(-1, 1, (4, 3))
    batch = collision_constraint_values(model, world, q)
    for k in range(4):
        assert np.allclose(batch[k], collision_constraint_values(model, world, q[k]), atol=1e-15)


def test_default_pairs_skip_same_and_adjacent_links():
    model = three_link()
    spheres = [RobotSphere(k // 2, (0.1 * (k % 2), 0, 0), 0.02) for k in range(6)]
    pairs = default_self_pairs(model, spheres)
    for a, b in pairs:
        la, lb = spheres[a].link, spheres[b].link
        assert la != lb and not model.adjacent(la, lb)
    assert set(pairs) == {(0, 4), (0, 5), (1, 4), (1, 5)}


def test_self_pair_override_validation():
    model = three_link()
    spheres = [RobotSphere(0, (0, 0, 0), 0.1), RobotSphere(1, (0, 0, 0), 0.1), RobotSphere(2, (0, 0, 0), 0.1)]
    assert CollisionWorld(spheres, self_pairs=[(2, 0)]).resolved(model).self_pairs == ((0, 2),)
    with pytest.raises(ValueError):
        CollisionWorld(spheres, self_pairs=[(0, 1)]).resolved(model)
    with pytest.raises(ValueError):
        CollisionWorld(spheres, self_pairs=[(0, 7)])


@pytest.mark.parametrize(
    "make",
    [
        lambda: RobotSphere(0, (0, 0, 0), 0.0),
        lambda: RobotSphere(0, (0, 0), 0.1),
        lambda: ObstacleSphere((0, 0, 0), -1.0),
        lambda: CollisionWorld(workspace_box=((0, 0, 0), (1, 0, 1))),
    ],
)
def test_invalid_world_data(make):
    with pytest.raises(ValueError):
        make()


# -- properties --------------------------------------------------------------------------
def test_rigid_motion_invariance(rng):
    model = three_link()
    spheres = [RobotSphere(k, (0.15, 0.02, 0), 0.05) for k in range(3)]
    obstacles = [ObstacleSphere((0.6, 0.4, 0.1), 0.15), ObstacleSphere((-0.3, 0.7, -0.2), 0.2)]
    world = CollisionWorld(spheres, obstacles)
    R = Rotation.from_rotvec([0.3, -1.1, 0.7]).as_matrix()
    p = np.array([1.5, -0.4, 2.0])
    moved_model = replace(model, joint_xyz=np.vstack([p, model.joint_xyz[1:]]), joint_rot=np.stack([R, *model.joint_rot[1:]]))
    moved_world = replace(world, obstacle_spheres=[ObstacleSphere(R @ o.center + p, o.radius) for o in obstacles])
    for _ in range(10):
        q = rng.uniform(-2, 2, 3)
        a = collision_constraint_values(model, world, q)
        b = collision_constraint_values(moved_model, moved_world, q)
        assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_margins_differentiable(rng):
    model = three_link()
    world = CollisionWorld(
        [RobotSphere(k, (0.15, 0, 0), 0.05) for k in range(3)],
        [ObstacleSphere((0.6, 0.4, 0), 0.15)],
        ((-1, -1, -1), (1, 1, 1)),
    )
    q = rng.uniform(-1, 1, 3)
    J = ad.jacobian(lambda x: collision_constraint_values(model, world, x), q)
    h = 1e-6
    fd = np.column_stack(
        [(collision_constraint_values(model, world, q + h * e) - collision_constraint_values(model, world, q - h * e)) / (2 * h) for e in np.eye(3)]
    )
    assert np.allclose(J, fd, rtol=1e-6, atol=1e-8)
