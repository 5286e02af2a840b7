"""Deterministic fluorescence-style test scenes."""

from __future__ import annotations

import numpy as np


def nuclei(shape=(128, 128), n=18, seed=0, floor=0.45, levels=256) -> np.ndarray:
    """Background-subtracted nuclei stain, values in {0} U [floor, 1].

    Elliptical nuclei with per-nucleus brightness and a smooth internal
    chromatin texture, on a zero background, quantised to ``levels`` grey
    levels. The brightest pixel is exactly 1.
    """
    rng = np.random.default_rng(seed)
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.zeros(shape)
    scale = min(h, w)
    for _ in range(n):
        cy, cx = rng.uniform(0.1, 0.9, 2) * (h, w)
        ry, rx = rng.uniform(0.04, 0.11, 2) * scale
        th = rng.uniform(0, np.pi)
        dy, dx = yy - cy, xx - cx
        u = (dx * np.cos(th) + dy * np.sin(th)) / rx
        v = (-dx * np.sin(th) + dy * np.cos(th)) / ry
        inside = u * u + v * v <= 1.0
        base = rng.uniform(0.6, 1.0)
        kx, ky, ph = rng.uniform(0.15, 0.5), rng.uniform(0.15, 0.5), rng.uniform(0, 2 * np.pi)
        texture = 1.0 + 0.12 * np.sin(kx * xx + ph) * np.cos(ky * yy - ph)
        img = np.where(inside, np.maximum(img, base * texture), img)
    img = np.where(img > 0, np.clip(img, floor, None), 0.0)
    img /= img.max()
    q = np.round(img * (levels - 1)) / (levels - 1)
    return np.where((q > 0) & (q < floor), floor, q)


def gradient_blobs(shape=(64, 64), seed=0) -> np.ndarray:
    """Smooth sum of Gaussian spots normalised to [0, 1]; no hard background."""
    rng = np.random.default_rng(seed)
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.zeros(shape)
    for _ in range(12):
        cy, cx = rng.uniform(0, h), rng.uniform(0, w)
        s = rng.uniform(2.0, 0.15 * min(h, w))
        img += rng.uniform(0.3, 1.0) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
    return img / img.max()
