"""Central-difference image gradients shared by texture and descriptor code."""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def central_gradients(channel: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel (gx, gy) via central differences with replicated borders."""
    padded = np.pad(channel.astype(np.float64), 1, mode="edge")
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    return gx, gy


def orientation_bins(gx: np.ndarray, gy: np.ndarray, nbins: int) -> np.ndarray:
    """Quantize gradient direction into nbins over [0, 2pi); zero gradients land in bin 0."""
    angle = np.mod(np.arctan2(gy, gx), TWO_PI)
    return np.minimum((angle * (nbins / TWO_PI)).astype(np.intp), nbins - 1)
