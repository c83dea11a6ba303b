import struct

import numpy as np
import pytest
from scipy.special import expit

from src.errors import ArgumentError, InvalidStateError
from src.models.field import VoxelField, load_checkpoint, save_checkpoint, softplus, softplus_inverse

GRAD_RTOL = 1e-5


@pytest.fixture
def random_field():
    rng = np.random.default_rng(0)
    return VoxelField(
        resolution=(5, 5, 5),
        bbox_min=(0.0, 0.0, 0.0),
        bbox_max=(1.0, 1.0, 1.0),
        density_param=rng.normal(0.0, 1.0, (5, 5, 5)),
        color_param=rng.normal(0.0, 1.0, (5, 5, 5, 3)),
    )


def test_node_query_returns_the_activated_parameter(random_field):
    density, rgb = random_field.query(np.array([0.5, 0.25, 0.75]))
    assert density == pytest.approx(softplus(random_field.density_param[2, 1, 3]), abs=1e-12)
    np.testing.assert_allclose(rgb, expit(random_field.color_param[2, 1, 3]), atol=1e-12)


def test_boundary_node_query(random_field):
    density, _ = random_field.query(np.array([1.0, 1.0, 1.0]))
    assert density == pytest.approx(softplus(random_field.density_param[4, 4, 4]), abs=1e-12)


def test_outside_the_box_is_empty_gray(random_field):
    density, rgb = random_field.query(np.array([1.5, 0.5, 0.5]))
    assert density == 0.0
    np.testing.assert_array_equal(rgb, [0.5, 0.5, 0.5])


def test_interior_query_matches_explicit_trilinear_sum(random_field):
    point = np.array([0.3, 0.6, 0.1])
    grid = point * 4
    base = np.floor(grid).astype(int)
    frac = grid - base
    raw_density = 0.0
    raw_color = np.zeros(3)
    for i in (0, 1):
        for j in (0, 1):
            for k in (0, 1):
                w = (frac[0] if i else 1 - frac[0]) * (frac[1] if j else 1 - frac[1]) * (frac[2] if k else 1 - frac[2])
                raw_density += w * random_field.density_param[base[0] + i, base[1] + j, base[2] + k]
                raw_color += w * random_field.color_param[base[0] + i, base[1] + j, base[2] + k]
    density, rgb = random_field.query(point)
    assert density == pytest.approx(softplus(raw_density), abs=1e-12)
    np.testing.assert_allclose(rgb, expit(raw_color), atol=1e-12)


def test_query_is_continuous_across_cell_faces(random_field):
    below, _ = random_field.query(np.array([0.5 - 1e-7, 0.4, 0.6]))
    above, _ = random_field.query(np.array([0.5 + 1e-7, 0.4, 0.6]))
    assert abs(below - above) < 1e-5


def test_zero_upstream_leaves_gradients_unchanged(random_field):
    random_field.query_backward(np.array([0.3, 0.6, 0.1]), 0.0, np.zeros(3))
    assert not random_field.density_grad.any()
    assert not random_field.color_grad.any()


def test_backward_at_a_node_touches_only_that_node(random_field):
    random_field.query_backward(np.array([0.5, 0.25, 0.75]), 1.0, np.ones(3))
    touched = np.argwhere(random_field.density_grad != 0.0)
    assert touched.tolist() == [[2, 1, 3]]
    assert np.argwhere(np.any(random_field.color_grad != 0.0, axis=-1)).tolist() == [[2, 1, 3]]


def _scalar(field, point, d_density, d_rgb):
    density, rgb = field.query(point)
    return d_density * density + float(np.dot(d_rgb, rgb))


@pytest.mark.parametrize("seed", range(5))
def test_query_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    field = VoxelField(
        resolution=(8, 8, 8),
        bbox_min=(-1.0, -1.0, -1.0),
        bbox_max=(1.0, 1.0, 1.0),
        density_param=rng.normal(0.0, 1.0, (8, 8, 8)),
        color_param=rng.normal(0.0, 1.0, (8, 8, 8, 3)),
    )
    point = rng.uniform(-0.95, 0.95, 3)
    d_density = rng.normal()
    d_rgb = rng.normal(size=3)
    field.query_backward(point, d_density, d_rgb)

    h = 1e-5
    base = np.floor((point + 1.0) / 2.0 * 7).astype(int)
    for offset in np.ndindex(2, 2, 2):
        idx = tuple(base + offset)
        field.density_param[idx] += h
        plus = _scalar(field, point, d_density, d_rgb)
        field.density_param[idx] -= 2 * h
        minus = _scalar(field, point, d_density, d_rgb)
        field.density_param[idx] += h
        np.testing.assert_allclose(field.density_grad[idx], (plus - minus) / (2 * h), rtol=GRAD_RTOL, atol=1e-9)

        for c in range(3):
            field.color_param[idx + (c,)] += h
            plus = _scalar(field, point, d_density, d_rgb)
            field.color_param[idx + (c,)] -= 2 * h
            minus = _scalar(field, point, d_density, d_rgb)
            field.color_param[idx + (c,)] += h
            np.testing.assert_allclose(
                field.color_grad[idx + (c,)], (plus - minus) / (2 * h), rtol=GRAD_RTOL, atol=1e-9
            )


def test_softplus_inverse_round_trip():
    y = np.array([1e-4, 0.1, 1.0, 30.0])
    np.testing.assert_allclose(softplus(softplus_inverse(y)), y, rtol=1e-10)


def test_version_and_copy(random_field):
    clone = random_field.copy()
    random_field.mark_updated()
    assert random_field.version == clone.version + 1
    clone.density_param[0, 0, 0] += 1.0
    assert clone.density_param[0, 0, 0] != random_field.density_param[0, 0, 0]


def test_create_validates_layout():
    with pytest.raises(ArgumentError):
        VoxelField.create(1)
    with pytest.raises(ArgumentError):
        VoxelField.create(4, bbox_min=(0.0, 0.0, 0.0), bbox_max=(1.0, 0.0, 1.0))


def test_checkpoint_round_trip(tmp_path, random_field):
    path = save_checkpoint(random_field, tmp_path / "field.voxf")
    restored = load_checkpoint(path)
    assert restored.resolution == random_field.resolution
    np.testing.assert_array_equal(restored.bbox_max, random_field.bbox_max)
    np.testing.assert_allclose(restored.density_param, random_field.density_param, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(restored.color_param, random_field.color_param, rtol=1e-6, atol=1e-6)


def test_checkpoint_layout_is_x_fastest(tmp_path):
    field = VoxelField.create((3, 2, 2), bbox_min=(0.0, 0.0, 0.0), bbox_max=(1.0, 1.0, 1.0))
    field.density_param[...] = np.arange(12).reshape(3, 2, 2)
    raw = save_checkpoint(field, tmp_path / "f.voxf").read_bytes()
    header = struct.calcsize("<5s3I6d")
    assert raw[:5] == b"VOXF1"
    assert struct.unpack_from("<3I", raw, 5) == (3, 2, 2)
    body = np.frombuffer(raw, dtype="<f4", offset=header)
    np.testing.assert_array_equal(body[:3], [field.density_param[0, 0, 0], field.density_param[1, 0, 0], field.density_param[2, 0, 0]])
    assert len(raw) == header + 4 * 12 * 4


def test_corrupt_checkpoints_are_rejected(tmp_path, random_field):
    raw = save_checkpoint(random_field, tmp_path / "ok.voxf").read_bytes()
    bad_magic = tmp_path / "magic.voxf"
    bad_magic.write_bytes(b"XXXXX" + raw[5:])
    truncated = tmp_path / "short.voxf"
    truncated.write_bytes(raw[:-7])
    with pytest.raises(InvalidStateError):
        load_checkpoint(bad_magic)
    with pytest.raises(InvalidStateError):
        load_checkpoint(truncated)
    tiny = tmp_path / "tiny.voxf"
    tiny.write_bytes(b"VOX")
    with pytest.raises(InvalidStateError):
        load_checkpoint(tiny)
