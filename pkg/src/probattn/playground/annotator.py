"""Deterministic simulated annotator.

Clicks the interior of the largest connected error region between the
current mask and the ground truth: false negatives produce positive
clicks, false positives negative ones. Ties prefer false negatives, then
the component appearing first in row-major scan order; within a
component the click lands on the pixel farthest from its boundary (image
borders count as boundary), first such pixel in row-major order.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .session import ClickEvent

_EIGHT = np.ones((3, 3), dtype=int)


def _largest_component(region):
    labels, count = ndimage.label(region, structure=_EIGHT)
    if count == 0:
        return None, 0
    areas = np.bincount(labels.ravel())[1:]
    best = int(np.argmax(areas)) + 1  # argmax keeps the first (scan-order) tie
    return labels == best, int(areas[best - 1])


def _interior_point(component):
    padded = np.pad(component, 1)
    dist = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    flat = int(np.argmax(dist))  # row-major first maximum
    return np.unravel_index(flat, component.shape)


def simulate_annotator(session, gt_mask=None):
    """Next corrective click, or None when the mask already matches."""
    gt = session.gt if gt_mask is None else np.asarray(gt_mask, dtype=bool)
    if gt is None:
        raise ValueError("simulate_annotator needs a ground truth mask")
    pred = session.mask
    false_neg = gt & ~pred
    false_pos = pred & ~gt
    if not false_neg.any() and not false_pos.any():
        return None
    # The larger error side wins; equal areas go to false negatives.
    if false_neg.sum() >= false_pos.sum():
        region, positive = false_neg, True
    else:
        region, positive = false_pos, False
    component, _ = _largest_component(region)
    row, col = _interior_point(component)
    return ClickEvent(
        row=int(row), col=int(col), positive=positive,
        radius=session.cfg.click_radius,
    )
