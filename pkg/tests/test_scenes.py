import os

import numpy as np
import pytest

import config as cfg
from src.errors import ArgumentError, CapacityError
from src.geometry.cameras import focus_point
from src.models.parameters import RenderParams, SceneSpec
from src.models.scene import Box, Sphere, SyntheticScene
from src.render.volume import render_image
from src.scenes.dataset import load_dataset, normalize_dataset, read_poses, write_dataset, write_poses
from src.scenes.procedural import (
    bake_scene,
    dataset_path,
    generate_views,
    make_scene,
    render_gt,
    render_mask,
    signed_distance,
    view_parameters,
)
from src.utils.metrics import psnr

from .helpers import look_at_pose

FULL_RUN = os.environ.get("FEWVIEW_FULL") == "1"


def _mostly_equal(a, b, atol=1e-6, max_fraction=0.01):
    """Images agree except for a few grazing-ray silhouette pixels."""
    return np.mean(np.any(np.abs(a - b) > atol, axis=-1)) <= max_fraction


def test_scene_is_deterministic():
    a, b = make_scene(4, seed=11), make_scene(4, seed=11)
    assert a.to_dict() == b.to_dict()
    assert make_scene(4, seed=12).to_dict() != a.to_dict()


@pytest.mark.parametrize("seed", range(5))
def test_primitives_are_disjoint_and_contained(seed):
    scene = make_scene(5, seed)
    for primitive in scene.primitives:
        assert np.all(primitive.lower >= -cfg.SCENE_EXTENT - 1e-12)
        assert np.all(primitive.upper <= cfg.SCENE_EXTENT + 1e-12)

    points = np.random.default_rng(seed).uniform(-1.0, 1.0, (20_000, 3))
    inside = np.stack([signed_distance(p, points) < 0 for p in scene.primitives])
    assert np.max(inside.sum(axis=0)) <= 1


def test_impossible_scene_exhausts_its_budget():
    with pytest.raises(CapacityError):
        make_scene(200, seed=0)
    with pytest.raises(ArgumentError):
        make_scene(0, seed=0)


def test_signed_distance_of_a_box():
    box = Box((-0.5, -0.5, -0.5), (0.5, 0.5, 0.5), (1.0, 1.0, 1.0))
    points = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.5, 1.5, 0.0]])
    np.testing.assert_allclose(signed_distance(box, points), [-0.5, 0.5, np.sqrt(2.0)], atol=1e-12)


def test_camera_facing_away_sees_the_background():
    scene = make_scene(3, seed=1)
    pose = look_at_pose((0.0, 0.0, -3.0), (0.0, 0.0, -6.0), size=16)
    np.testing.assert_array_equal(render_gt(scene, pose), 0.0)
    assert not render_mask(scene, pose).any()


def test_on_axis_sphere_center_pixel():
    albedo = np.array([0.8, 0.5, 0.2])
    scene = SyntheticScene(primitives=(Sphere(np.zeros(3), 0.4, albedo),))
    image = render_gt(scene, look_at_pose((0.0, 0.0, -3.0), size=33))
    light = np.asarray(cfg.LIGHT_DIRECTION) / np.linalg.norm(cfg.LIGHT_DIRECTION)
    expected = albedo * min(cfg.AMBIENT + max(-light[2], 0.0), 1.0)
    np.testing.assert_allclose(image[16, 16], expected, atol=1e-12)
    assert render_mask(scene, look_at_pose((0.0, 0.0, -3.0), size=33))[16, 16]


def test_rendering_is_translation_invariant():
    scene = make_scene(3, seed=2)
    pose = look_at_pose((0.5, -1.0, -2.5), size=24)
    shift = np.array([0.3, -0.2, 0.7])
    moved = render_gt(scene.transformed(shift), pose.with_position(pose.position + shift))
    assert _mostly_equal(moved, render_gt(scene, pose))


def test_midpoint_protocol():
    train, test = view_parameters(3, 3)
    np.testing.assert_allclose(train, [0.0, 1 / 3, 2 / 3])
    np.testing.assert_allclose(test, [1 / 6, 1 / 2, 5 / 6])
    _, single = view_parameters(3, 1)
    np.testing.assert_allclose(single, [1 / 6])
    with pytest.raises(ArgumentError):
        view_parameters(3, 4)
    with pytest.raises(ArgumentError):
        view_parameters(0, 0)


def test_stride_protocol():
    train, test = view_parameters(4, 0, protocol="stride", n_frames=16, stride=3)
    np.testing.assert_allclose(train * 16, [0, 5, 10, 15])
    np.testing.assert_allclose(test * 16, [1, 4, 8, 12])
    assert not set(train) & set(test)
    _, limited = view_parameters(4, 2, protocol="stride", n_frames=16, stride=3)
    assert len(limited) == 2
    with pytest.raises(ArgumentError):
        view_parameters(4, 0, protocol="orbit")


def test_generated_views():
    spec = SceneSpec(n_primitives=2, seed=4, n_train=3, n_test=2, resolution=12)
    scene = make_scene(spec.n_primitives, spec.seed)
    train, test = generate_views(scene, dataset_path(spec), spec.n_train, spec.n_test)
    assert [v.name for v in train] == ["train_000", "train_001", "train_002"]
    assert [v.name for v in test] == ["test_000", "test_001"]
    assert all(v.image.shape == (12, 12, 3) for v in [*train, *test])
    assert np.linalg.norm(focus_point([v.pose for v in train])) < 1e-6


def test_scene_record_reloads_exactly():
    scene = make_scene(3, 11)
    restored = SyntheticScene.from_dict(scene.to_dict())
    np.testing.assert_array_equal(restored.light_direction, scene.light_direction)
    assert restored.to_dict() == scene.to_dict()
    tilted = SyntheticScene(primitives=scene.primitives, light_direction=(0.0, -2.0, 0.0))
    np.testing.assert_array_equal(tilted.light_direction, [0.0, -1.0, 0.0])
    with pytest.raises(ArgumentError):
        SyntheticScene(primitives=scene.primitives, light_direction=(0.0, 0.0, 0.0))


def test_dataset_round_trip(tmp_path):
    spec = SceneSpec(n_primitives=2, seed=5, n_train=3, n_test=1, resolution=16)
    scene = make_scene(spec.n_primitives, spec.seed)
    path = dataset_path(spec)
    train, test = generate_views(scene, path, spec.n_train, spec.n_test)
    manifest = write_dataset(tmp_path, scene, spec, path, train, test)
    assert manifest.name == "manifest.json"

    loaded = load_dataset(tmp_path)
    assert [v.name for v in loaded.train] == [v.name for v in train]
    assert loaded.scene.to_dict() == scene.to_dict()
    for original, restored in zip([*train, *test], loaded.views):
        np.testing.assert_allclose(restored.image, original.image, atol=0.5 / 255 + 1e-9)
        np.testing.assert_allclose(restored.pose.rotation, original.pose.rotation, atol=1e-12)
        np.testing.assert_allclose(restored.pose.position, original.pose.position, atol=1e-12)

    poses = read_poses(manifest)
    assert len(poses) == 4
    with pytest.raises(FileNotFoundError):
        load_dataset(tmp_path / "missing")


def test_pose_file_round_trip(tmp_path):
    poses = [look_at_pose((1.0, -0.5, -2.0)), look_at_pose((-1.0, -0.5, -2.0), size=16)]
    target = write_poses(tmp_path / "poses.json", poses, path={"kind": "ellipse"})
    restored = read_poses(target)
    assert [p.image_size for p in restored] == [(32, 32), (16, 16)]
    np.testing.assert_allclose(restored[1].position, poses[1].position)
    (tmp_path / "bad.json").write_text('{"cameras": []}')
    with pytest.raises(ArgumentError):
        read_poses(tmp_path / "bad.json")


def test_normalized_dataset_renders_the_same_images(tmp_path):
    spec = SceneSpec(n_primitives=3, seed=6, n_train=3, n_test=2, resolution=16)
    scene = make_scene(spec.n_primitives, spec.seed)
    path = dataset_path(spec)
    train, test = generate_views(scene, path, spec.n_train, spec.n_test)
    write_dataset(tmp_path, scene, spec, path, train, test)

    normalized = normalize_dataset(load_dataset(tmp_path))
    assert normalized.scale > 0
    assert normalized.path is None
    positions = np.stack([v.pose.position for v in normalized.train])
    assert np.max(np.abs(positions)) == pytest.approx(1.0)
    for original, moved in zip([*train, *test], normalized.views):
        assert _mostly_equal(render_gt(normalized.scene, moved.pose), original.image)

    fixed = normalize_dataset(load_dataset(tmp_path), mode="fixed", factor=0.5)
    np.testing.assert_allclose(fixed.train[0].pose.position, 0.5 * train[0].pose.position, atol=1e-12)


@pytest.mark.slow
def test_baked_scene_matches_the_ray_tracer():
    scene = make_scene(3, seed=0)
    field = bake_scene(scene, 128 if FULL_RUN else 96)
    params = RenderParams(n_samples=256 if FULL_RUN else 192, jitter=False)
    spec = SceneSpec(resolution=32)
    _, test = generate_views(scene, dataset_path(spec), 3, 3)
    for view in test:
        rendered = render_image(field, view.pose, params, seed=None).rgb
        assert psnr(rendered, view.image) >= 25.0
