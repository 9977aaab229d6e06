import json

import numpy as np
import pytest
from PIL import Image
from scipy import ndimage

from probattn.playground.synth import generate_dataset


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    manifest = generate_dataset(5, 64, seed=99, out_dir=out)
    return out, manifest


def test_manifest_lists_every_pair(dataset):
    out, manifest = dataset
    with open(manifest) as fh:
        data = json.load(fh)
    assert data["count"] == 5 and len(data["items"]) == 5
    for item in data["items"]:
        assert (out / item["image"]).exists()
        assert (out / item["mask"]).exists()


def test_single_item_dataset(tmp_path):
    manifest = generate_dataset(1, 64, seed=1, out_dir=tmp_path)
    with open(manifest) as fh:
        assert len(json.load(fh)["items"]) == 1


def test_same_seed_identical_bytes(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    generate_dataset(2, 64, seed=7, out_dir=a)
    generate_dataset(2, 64, seed=7, out_dir=b)
    for name in ("img_000.png", "mask_000.png", "img_001.png", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_masks_are_single_connected_components(dataset):
    out, manifest = dataset
    with open(manifest) as fh:
        items = json.load(fh)["items"]
    for item in items:
        mask = np.asarray(Image.open(out / item["mask"])) > 127
        _, count = ndimage.label(mask, structure=np.ones((3, 3)))
        assert count == 1
        assert mask.sum() >= 64  # non-trivial target


def test_bbox_is_tight(dataset):
    out, manifest = dataset
    with open(manifest) as fh:
        items = json.load(fh)["items"]
    for item in items:
        mask = np.asarray(Image.open(out / item["mask"])) > 127
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        assert tuple(item["bbox"]) == (
            rows[0], cols[0], rows[-1] + 1, cols[-1] + 1
        )


def test_small_size_rejected(tmp_path):
    with pytest.raises(ValueError):
        generate_dataset(1, 16, seed=0, out_dir=tmp_path)


def test_images_are_8bit_rgb(dataset):
    out, manifest = dataset
    img = Image.open(out / "img_000.png")
    assert img.mode == "RGB"
    mask = Image.open(out / "mask_000.png")
    assert mask.mode == "L"
    vals = np.unique(np.asarray(mask))
    assert set(vals).issubset({0, 255})
