"""Synthetic dataset generator: colored shapes on textured backgrounds.

Each image carries one target shape (drawn last, so its mask is exact)
plus a few distractors. The manifest lists image/mask paths and the tight
target bounding box. Fully seeded: identical seeds give identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw
from scipy.ndimage import gaussian_filter

# Well separated base colors (RGB).
_PALETTE = [
    (188, 96, 35), (52, 124, 189), (76, 165, 70), (160, 70, 160),
    (200, 170, 40), (70, 170, 170), (190, 60, 80), (110, 110, 200),
]

_KINDS = ("ellipse", "rect", "triangle")


def _shape_spec(rng, size, scale_lo, scale_hi, center_lo, center_hi):
    kind = _KINDS[int(rng.integers(0, 3))]
    ax, ay = rng.uniform(scale_lo, scale_hi, size=2) * size
    cx, cy = rng.uniform(center_lo, center_hi, size=2) * size
    if kind == "triangle":
        phase = rng.uniform(0, 2 * np.pi)
        pts = [
            (cx + ax * np.cos(t + phase), cy + ay * np.sin(t + phase))
            for t in (0.0, 2.2, 4.4)
        ]
        return ("triangle", pts)
    return (kind, [cx - ax, cy - ay, cx + ax, cy + ay])


def _draw_spec(draw, spec, color):
    kind, geom = spec
    if kind == "ellipse":
        draw.ellipse(geom, fill=color)
    elif kind == "rect":
        draw.rectangle(geom, fill=color)
    else:
        draw.polygon(geom, fill=color)


def _render(size, rng):
    """One (image, mask, bbox) triple."""
    colors = rng.permutation(len(_PALETTE))
    bg_color = np.array(_PALETTE[colors[0]], dtype=np.float64)
    # Textured background: smooth seeded noise over the base color.
    noise = gaussian_filter(rng.normal(0, 18, size=(size, size, 3)), sigma=(3, 3, 0))
    background = np.clip(bg_color[None, None, :] + noise, 0, 255).astype(np.uint8)
    img = Image.fromarray(background)
    draw = ImageDraw.Draw(img)
    for k in range(int(rng.integers(1, 4))):
        color = tuple(int(v) for v in _PALETTE[colors[2 + k]])
        spec = _shape_spec(rng, size, 0.08, 0.18, 0.15, 0.85)
        _draw_spec(draw, spec, color)
    # Target: drawn last so nothing overdraws it; mask from the same geometry.
    # Biased away from rectangles so the bounding box is a poor initial mask.
    target_color = tuple(int(v) for v in _PALETTE[colors[1]])
    spec = _shape_spec(rng, size, 0.2, 0.38, 0.35, 0.65)
    if spec[0] == "rect" and rng.random() < 0.7:
        spec = ("ellipse", spec[1])
    mask_img = Image.new("L", (size, size), 0)
    _draw_spec(ImageDraw.Draw(mask_img), spec, 255)
    _draw_spec(draw, spec, target_color)
    mask = np.asarray(mask_img) > 127
    if rng.random() < 0.5:
        # Camouflaged lobe: part of the target takes a near-background
        # color, so the true extent is only weakly recoverable from color.
        lobe_color = tuple(
            int(np.clip(v + rng.choice([-1, 1]) * rng.integers(22, 34), 0, 255))
            for v in bg_color
        )
        rows = np.flatnonzero(mask.any(axis=1))
        cols = np.flatnonzero(mask.any(axis=0))
        cy = 0.5 * (rows[0] + rows[-1])
        cx = 0.5 * (cols[0] + cols[-1])
        ry = 0.65 * (rows[-1] - rows[0] + 1) / 2
        rx = 0.65 * (cols[-1] - cols[0] + 1) / 2
        side = rng.uniform(0, 2 * np.pi)
        ox, oy = 0.9 * rx * np.cos(side), 0.9 * ry * np.sin(side)
        lobe = Image.new("L", (size, size), 0)
        ImageDraw.Draw(lobe).ellipse(
            [cx + ox - rx, cy + oy - ry, cx + ox + rx, cy + oy + ry], fill=255
        )
        lobe_mask = (np.asarray(lobe) > 127) & mask
        arr = np.asarray(img).copy()
        arr[lobe_mask] = lobe_color
        img = Image.fromarray(arr)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    bbox = (int(rows[0]), int(cols[0]), int(rows[-1]) + 1, int(cols[-1]) + 1)
    return np.asarray(img), mask, bbox


def generate_dataset(count, size, seed, out_dir):
    """Write ``count`` image/mask pairs plus a manifest; returns its path."""
    if size < 32:
        raise ValueError("size must be at least 32")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    items = []
    for i in range(count):
        rng = np.random.default_rng([seed, i])
        image, mask, bbox = _render(size, rng)
        img_name, mask_name = f"img_{i:03d}.png", f"mask_{i:03d}.png"
        Image.fromarray(image).save(out / img_name)
        Image.fromarray((mask * 255).astype(np.uint8)).save(out / mask_name)
        items.append({"image": img_name, "mask": mask_name, "bbox": list(bbox)})
    manifest = {"count": count, "size": size, "seed": seed, "items": items}
    path = out / "manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    return path
