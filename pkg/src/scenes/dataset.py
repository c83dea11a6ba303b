"""On-disk datasets: a directory of PNG views plus a JSON manifest."""

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ..errors import ArgumentError
from ..geometry.cameras import rescale_scene
from ..models.camera import CameraPose, PosedImage
from ..models.parameters import SceneSpec
from ..models.paths import PosePath
from ..models.scene import SyntheticScene
from ..utils.imaging import read_png, write_png

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
SCENE_FILE = "scene.json"
IMAGE_DIR = "images"


@dataclass(eq=False)
class Dataset:
    train: list[PosedImage]
    test: list[PosedImage]
    scene: Optional[SyntheticScene] = None
    path: Optional[PosePath] = None
    scale: float = 1.0
    translation: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.translation is None:
            self.translation = np.zeros(3)

    @property
    def views(self) -> list[PosedImage]:
        return [*self.train, *self.test]


def _dump(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def write_dataset(
    root: Union[str, Path],
    scene: SyntheticScene,
    spec: SceneSpec,
    path: PosePath,
    train: Sequence[PosedImage],
    test: Sequence[PosedImage],
) -> Path:
    """Write scene.json, images/*.png and manifest.json; returns the manifest path."""
    root = Path(root)
    (root / IMAGE_DIR).mkdir(parents=True, exist_ok=True)
    _dump(root / SCENE_FILE, scene.to_dict())
    entries = []
    for split, views in (("train", train), ("test", test)):
        for view in views:
            relative = f"{IMAGE_DIR}/{view.name}.png"
            write_png(root / relative, view.image)
            entries.append({"name": view.name, "split": split, "image": relative, "pose": view.pose.to_dict()})
    manifest = {"spec": asdict(spec), "path": path.to_dict(), "scene": SCENE_FILE, "views": entries}
    logger.info("Wrote %d views to %s", len(entries), root)
    return _dump(root / MANIFEST, manifest)


def load_dataset(root: Union[str, Path]) -> Dataset:
    root = Path(root)
    manifest_path = root / MANIFEST
    if not manifest_path.is_file():
        raise FileNotFoundError(f"No dataset manifest at {manifest_path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))

    train: list[PosedImage] = []
    test: list[PosedImage] = []
    for entry in manifest.get("views", []):
        view = PosedImage(
            image=read_png(root / entry["image"]),
            pose=CameraPose.from_dict(entry["pose"]),
            name=entry["name"],
        )
        (train if entry["split"] == "train" else test).append(view)
    if not train:
        raise ArgumentError(f"Dataset {root} has no training views")

    scene = None
    scene_file = root / manifest.get("scene", SCENE_FILE)
    if scene_file.is_file():
        scene = SyntheticScene.from_dict(json.loads(scene_file.read_text(encoding="utf-8")))
    path = PosePath.from_dict(manifest["path"]) if "path" in manifest else None
    return Dataset(train=train, test=test, scene=scene, path=path)


def _moved(pose: CameraPose, translation: np.ndarray, scale: float) -> CameraPose:
    return pose.with_position((pose.position + translation) * scale)


def normalize_dataset(dataset: Dataset, mode: str = "focus", factor: float = 0.5) -> Dataset:
    """Rescale from the training cameras and apply the same map to test views and the scene."""
    _, scale, translation = rescale_scene([v.pose for v in dataset.train], mode, factor)

    def move(views: Sequence[PosedImage]) -> list[PosedImage]:
        return [PosedImage(image=v.image, pose=_moved(v.pose, translation, scale), name=v.name) for v in views]

    return Dataset(
        train=move(dataset.train),
        test=move(dataset.test),
        scene=dataset.scene.transformed(translation, scale) if dataset.scene is not None else None,
        path=None,
        scale=scale,
        translation=translation,
    )


def read_poses(path: Union[str, Path]) -> list[CameraPose]:
    """Poses from a JSON list, a {"poses": [...]} object or a dataset manifest."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if isinstance(data, dict):
        if "poses" in data:
            records = data["poses"]
        elif "views" in data:
            records = [view["pose"] for view in data["views"]]
        else:
            raise ArgumentError(f"{path} holds neither poses nor views")
    else:
        records = data
    if not isinstance(records, list):
        raise ArgumentError(f"{path}: poses must be a list")
    return [CameraPose.from_dict(record) for record in records]


def write_poses(target: Union[str, Path], poses: Sequence[CameraPose], /, **extra) -> Path:
    return _dump(Path(target), {**extra, "poses": [pose.to_dict() for pose in poses]})
