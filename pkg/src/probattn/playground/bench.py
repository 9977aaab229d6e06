"""IoU-versus-clicks benchmarking with a simulated annotator.

Each trial perturbs the bounding box corners with seeded uniform noise,
runs the click loop, and records IoU after every click. Results aggregate
as the mean over images per trial, then mean and standard error across
trials. Fully deterministic given (seed, config, dataset).
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .annotator import simulate_annotator
from .session import PlaygroundConfig, apply_click, init_session, iou, prepare_base

log = logging.getLogger(__name__)

BBOX_NOISE_FRACTION = 0.05


@dataclass
class CurveResult:
    clicks: np.ndarray  # (K+1,) click counts 0..K
    mean_iou: np.ndarray  # (K+1,)
    stderr: np.ndarray  # (K+1,)
    trials: int
    per_trial: np.ndarray  # (trials, K+1) per-trial means over items
    failed_items: list

    def to_json_dict(self):
        return {
            "clicks": self.clicks.tolist(),
            "mean_iou": self.mean_iou.tolist(),
            "stderr": self.stderr.tolist(),
            "trials": self.trials,
            "per_trial": self.per_trial.tolist(),
            "failed_items": self.failed_items,
        }


def load_manifest(path):
    """Dataset items from a manifest, with paths resolved to absolutes."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    items = []
    for entry in manifest["items"]:
        items.append(
            {
                "image": str(path.parent / entry["image"]),
                "mask": str(path.parent / entry["mask"]),
                "bbox": tuple(entry["bbox"]),
            }
        )
    return items


def _load_item(item):
    if isinstance(item.get("image"), str):
        image = np.asarray(Image.open(item["image"]).convert("RGB"))
        gt = np.asarray(Image.open(item["mask"]).convert("L")) > 127
    else:
        image, gt = item["image"], np.asarray(item["mask"], dtype=bool)
    return image, gt, tuple(item["bbox"])


def perturb_bbox(bbox, shape, rng, fraction=BBOX_NOISE_FRACTION):
    """Corner coordinates jittered by up to +-fraction of the side length."""
    r0, c0, r1, c1 = bbox
    h, w = shape
    bh, bw = r1 - r0, c1 - c0
    jitter = rng.uniform(-fraction, fraction, size=4)
    r0 = int(round(r0 + jitter[0] * bh))
    c0 = int(round(c0 + jitter[1] * bw))
    r1 = int(round(r1 + jitter[2] * bh))
    c1 = int(round(c1 + jitter[3] * bw))
    r0, c0 = max(0, min(r0, h - 2)), max(0, min(c0, w - 2))
    r1, c1 = min(h, max(r1, r0 + 2)), min(w, max(c1, c0 + 2))
    return (r0, c0, r1, c1)


def run_click_curve(image, gt, bbox, cfg, max_clicks, base=None):
    """IoU after 0..max_clicks simulated clicks on one session."""
    session = init_session(image, bbox, cfg, gt=gt, base=base)
    curve = [iou(session.mask, session.gt)]
    for _ in range(max_clicks):
        click = simulate_annotator(session)
        if click is None:
            curve.append(curve[-1])
            continue
        session = apply_click(session, click)
        curve.append(iou(session.mask, session.gt))
    return np.array(curve)


def _item_curves(args):
    """All trials for one item; returns (item_index, (trials, K+1) array)."""
    idx, item, cfg_dict, max_clicks, trials, seed = args
    cfg = PlaygroundConfig.from_json_dict(cfg_dict)
    image, gt, bbox = _load_item(item)
    base = prepare_base(image, cfg, gt=gt)
    curves = np.empty((trials, max_clicks + 1))
    for t in range(trials):
        rng = np.random.default_rng([seed, idx, t])
        noisy = perturb_bbox(bbox, image.shape[:2], rng)
        curves[t] = run_click_curve(image, gt, noisy, cfg, max_clicks, base=base)
    return idx, curves


def evaluate_curve(items, cfg=PlaygroundConfig(), max_clicks=10, trials=5,
                   seed=0, jobs=1):
    """Mean IoU and standard error per click count over a dataset.

    Items failing inside the engine are logged and skipped; the curve
    aggregates the survivors.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    tasks = [
        (idx, item, cfg.to_json_dict(), max_clicks, trials, seed)
        for idx, item in enumerate(items)
    ]
    results = {}
    failed = []

    def consume(idx, outcome, error=None):
        if error is not None:
            log.warning("item %d failed: %s", idx, error)
            failed.append(idx)
        else:
            results[idx] = outcome

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [(t[0], pool.submit(_item_curves, t)) for t in tasks]
            for idx, fut in futures:
                try:
                    consume(*fut.result())
                except Exception as exc:  # noqa: BLE001 - skip-and-log contract
                    consume(idx, None, error=exc)
    else:
        for task in tasks:
            try:
                consume(*_item_curves(task))
            except Exception as exc:  # noqa: BLE001 - skip-and-log contract
                consume(task[0], None, error=exc)

    if not results:
        raise RuntimeError("every dataset item failed")
    stack = np.stack([results[i] for i in sorted(results)])  # (items, trials, K+1)
    per_trial = stack.mean(axis=0)  # (trials, K+1)
    mean = per_trial.mean(axis=0)
    if trials > 1:
        stderr = per_trial.std(axis=0, ddof=1) / np.sqrt(trials)
    else:
        stderr = np.zeros_like(mean)
    return CurveResult(
        clicks=np.arange(max_clicks + 1),
        mean_iou=mean,
        stderr=stderr,
        trials=trials,
        per_trial=per_trial,
        failed_items=failed,
    )


def write_curve_csv(path, result):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["clicks", "mean_iou", "stderr", "trials"])
        for k, mean, err in zip(result.clicks, result.mean_iou, result.stderr):
            writer.writerow([int(k), repr(float(mean)), repr(float(err)),
                             result.trials])


def write_curve_json(path, result):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.to_json_dict(), fh, indent=2)
