"""Row-wise run-length encoding of binary masks for JSON transport.

Each row encodes as alternating run lengths starting with a background
run (which may be 0); runs in a row always sum to the row width.
"""

from __future__ import annotations

import numpy as np


def encode_mask_rle(mask):
    mask = np.asarray(mask, dtype=bool)
    rows = []
    for row in mask:
        runs = []
        current, length = False, 0
        for cell in row:
            if cell == current:
                length += 1
            else:
                runs.append(length)
                current, length = cell, 1
        runs.append(length)
        rows.append(runs)
    return rows


def decode_mask_rle(rows, width):
    out = np.zeros((len(rows), width), dtype=bool)
    for r, runs in enumerate(rows):
        if sum(runs) != width:
            raise ValueError(f"row {r} runs sum to {sum(runs)}, expected {width}")
        pos, value = 0, False
        for run in runs:
            if run:
                out[r, pos:pos + run] = value
                pos += run
            value = not value
    return out
