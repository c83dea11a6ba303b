import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from src.errors import BoundsError, DegenerateGeometryError, InsufficientDataError
from src.geometry.cameras import focus_point
from src.geometry.posedist import (
    clamped_knots,
    fit_bspline_path,
    fit_ellipse_path,
    nearest_views,
    path_point,
    sample_in_ball,
    sample_novel_pose,
    sample_poses,
)
from src.models.camera import PosedImage
from src.models.paths import PerturbSpec, PosePath

from .helpers import identity_pose, look_at_pose, rigid_transform


def _circle(n, a=2.0, b=2.0):
    angles = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return [look_at_pose((a * np.cos(t), 0.0, b * np.sin(t))) for t in angles]


def _line(n):
    return [identity_pose(focal=16.0, principal=(8.0, 8.0), size=(16, 16), position=(float(i), 0.0, -3.0)) for i in range(n)]


def _blank(pose):
    return PosedImage(image=np.zeros((pose.height, pose.width, 3)), pose=pose)


def test_ellipse_on_a_circle():
    path = fit_ellipse_path(_circle(8), np.zeros(3))
    np.testing.assert_allclose(path.ellipse.center, 0.0, atol=1e-6)
    ratio = np.linalg.norm(path.ellipse.axis_u) / np.linalg.norm(path.ellipse.axis_v)
    assert ratio == pytest.approx(1.0, rel=0.05)


def test_ellipse_keeps_the_axis_ratio():
    path = fit_ellipse_path(_circle(8, a=2.0, b=1.0), np.zeros(3))
    ratio = np.linalg.norm(path.ellipse.axis_u) / np.linalg.norm(path.ellipse.axis_v)
    assert ratio == pytest.approx(2.0, rel=0.05)
    assert abs(path.ellipse.axis_u[0]) > abs(path.ellipse.axis_u[2])


def test_ellipse_rejects_collinear_and_small_inputs():
    with pytest.raises(DegenerateGeometryError):
        fit_ellipse_path(_line(3), np.zeros(3))
    with pytest.raises(InsufficientDataError):
        fit_ellipse_path(_circle(8)[:2], np.zeros(3))


def test_zero_perturbation_sample_lies_on_the_ellipse():
    path = fit_ellipse_path(_circle(8), np.zeros(3))
    pose = sample_novel_pose(path, PerturbSpec.zero(), np.random.default_rng(7))
    u = np.random.default_rng(7).uniform(0.0, 1.0)
    expected, look_at, _ = path_point(path, u)
    np.testing.assert_allclose(pose.position, expected, atol=1e-9)
    offset = look_at - pose.position
    off_axis = offset - np.dot(offset, pose.forward) * pose.forward
    assert np.linalg.norm(off_axis) < 1e-9


def test_ellipse_fit_is_rigid_equivariant():
    poses = _circle(8, a=2.0, b=1.3)
    rotation = Rotation.from_rotvec([0.2, 0.9, -0.4]).as_matrix()
    translation = np.array([0.5, -2.0, 1.0])
    moved = [rigid_transform(p, rotation, translation) for p in poses]
    path = fit_ellipse_path(poses, focus_point(poses))
    moved_path = fit_ellipse_path(moved, focus_point(moved))
    np.testing.assert_allclose(moved_path.ellipse.center, rotation @ path.ellipse.center + translation, atol=1e-6)
    np.testing.assert_allclose(moved_path.ellipse.look_at, rotation @ path.ellipse.look_at + translation, atol=1e-6)


def test_bspline_hits_both_endpoints():
    poses = _line(4)
    path = fit_bspline_path(poses)
    np.testing.assert_allclose(path_point(path, 0.0)[0], poses[0].position, atol=1e-9)
    np.testing.assert_allclose(path_point(path, 1.0)[0], poses[-1].position, atol=1e-9)


def test_bspline_through_collinear_cameras_stays_on_the_line():
    path = fit_bspline_path(_line(5))
    for u in np.linspace(0.0, 1.0, 17):
        position = path_point(path, u)[0]
        assert abs(position[1]) < 1e-9
        assert abs(position[2] + 3.0) < 1e-9


def _cox_de_boor(i, p, u, knots):
    if p == 0:
        return 1.0 if knots[i] <= u < knots[i + 1] else 0.0
    left = right = 0.0
    if knots[i + p] > knots[i]:
        left = (u - knots[i]) / (knots[i + p] - knots[i]) * _cox_de_boor(i, p - 1, u, knots)
    if knots[i + p + 1] > knots[i + 1]:
        right = (knots[i + p + 1] - u) / (knots[i + p + 1] - knots[i + 1]) * _cox_de_boor(i + 1, p - 1, u, knots)
    return left + right


def test_bspline_matches_the_basis_function_sum():
    rng = np.random.default_rng(2)
    poses = [look_at_pose(rng.uniform(-1.0, 1.0, 3) + [0.0, 0.0, -3.0]) for _ in range(6)]
    path = fit_bspline_path(poses)
    control = path.bspline.control_points
    knots = clamped_knots(len(control), path.bspline.degree)
    for u in (0.1, 0.37, 0.5, 0.83):
        expected = sum(_cox_de_boor(i, path.bspline.degree, u, knots) * control[i] for i in range(len(control)))
        np.testing.assert_allclose(path_point(path, u)[0], expected, atol=1e-12)


def test_bspline_needs_degree_plus_one_poses():
    with pytest.raises(InsufficientDataError):
        fit_bspline_path(_line(3))


def test_sampling_is_deterministic_per_seed():
    path = fit_ellipse_path(_circle(8), np.zeros(3))
    a = sample_novel_pose(path, PerturbSpec(), np.random.default_rng(13))
    b = sample_novel_pose(path, PerturbSpec(), np.random.default_rng(13))
    np.testing.assert_array_equal(a.rotation, b.rotation)
    np.testing.assert_array_equal(a.position, b.position)


def test_ball_samples_are_uniform_in_radius():
    rng = np.random.default_rng(0)
    radii = np.array([np.linalg.norm(sample_in_ball(0.1, rng)) for _ in range(100_000)])
    assert radii.max() <= 0.1
    # E|x| = 3R/4 for the uniform ball.
    assert radii.mean() == pytest.approx(0.075, rel=0.02)


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    position_radius=st.floats(0.0, 0.5),
    lookat_radius=st.floats(0.0, 0.5),
    up_angle=st.floats(0.0, np.pi),
)
def test_sampled_rotations_stay_orthonormal(seed, position_radius, lookat_radius, up_angle):
    path = fit_ellipse_path(_circle(8, a=3.0, b=3.0), np.zeros(3))
    perturb = PerturbSpec(position_radius=position_radius, lookat_radius=lookat_radius, up_angle_max=up_angle)
    pose = sample_novel_pose(path, perturb, np.random.default_rng(seed))
    assert np.max(np.abs(pose.rotation.T @ pose.rotation - np.eye(3))) <= 1e-9


def test_sample_poses_is_reproducible():
    path = fit_ellipse_path(_circle(8), np.zeros(3))
    first = sample_poses(path, PerturbSpec(), 5, seed=4)
    second = sample_poses(path, PerturbSpec(), 5, seed=4)
    assert len(first) == 5
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.position, b.position)


def test_path_record_restores_the_path():
    path = fit_ellipse_path(_circle(8, a=2.0, b=1.0), np.zeros(3))
    restored = PosePath.from_dict(path.to_dict())
    for u in (0.0, 0.25, 0.6):
        np.testing.assert_allclose(path_point(restored, u)[0], path_point(path, u)[0])

    spline = fit_bspline_path(_line(5))
    restored = PosePath.from_dict(spline.to_dict())
    np.testing.assert_allclose(path_point(restored, 0.4)[0], path_point(spline, 0.4)[0])


def test_nearest_views_orders_by_distance():
    observations = [_blank(p) for p in _circle(6)]
    target = observations[2].pose
    order = nearest_views(target, observations, len(observations))
    assert order[0] == 2
    assert sorted(order) == list(range(6))
    distances = [np.linalg.norm(observations[i].pose.position - target.position) for i in order]
    assert distances == sorted(distances)


def test_nearest_views_matches_brute_force():
    rng = np.random.default_rng(9)
    observations = [_blank(look_at_pose(rng.uniform(-3.0, 3.0, 3) + [0.0, 0.0, -6.0])) for _ in range(20)]
    target = look_at_pose((0.5, 0.5, -5.0))
    distances = [np.linalg.norm(o.pose.position - target.position) for o in observations]
    assert nearest_views(target, observations, 4) == list(np.argsort(distances)[:4])


def test_nearest_views_bounds():
    observations = [_blank(p) for p in _circle(3)]
    with pytest.raises(BoundsError):
        nearest_views(observations[0].pose, observations, 0)
    with pytest.raises(BoundsError):
        nearest_views(observations[0].pose, observations, 4)


def test_nearest_views_is_permutation_consistent():
    observations = [_blank(p) for p in _circle(7)]
    target = look_at_pose((2.5, 0.3, 0.4))
    chosen = {id(observations[i]) for i in nearest_views(target, observations, 3)}
    shuffled = [observations[i] for i in (4, 0, 6, 2, 1, 5, 3)]
    assert {id(shuffled[i]) for i in nearest_views(target, shuffled, 3)} == chosen
