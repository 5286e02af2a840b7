"""Image quality and bandwidth figures for reconstructions.

Inputs to :func:`mse` and :func:`ssim` must already share a value range;
nothing here rescales silently.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .codec import RECORD_SIZE
from .events import MEASURED, EventStream


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    gaussian_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 1.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if not self.gaussian_sigma > 0:
            raise ValueError("gaussian_sigma must be > 0")
        if not (0 < self.k1 < 1 and 0 < self.k2 < 1):
            raise ValueError("k1 and k2 must lie in (0, 1)")
        if not self.data_range > 0:
            raise ValueError("data_range must be > 0")


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2
    g = np.exp(-(x**2) / (2 * sigma**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Separable 'valid' correlation with the 1-D kernel ``g`` on both axes."""
    rows = sliding_window_view(img, len(g), axis=1) @ g
    return sliding_window_view(rows, len(g), axis=0) @ g


def ssim_map(a, b, p: SsimParams = SsimParams()) -> np.ndarray:
    a, b = _pair(a, b)
    if a.ndim != 2:
        raise ValueError("ssim expects 2-D grids")
    if min(a.shape) < p.window:
        raise ValueError(f"image {a.shape} smaller than the {p.window}px window")
    g = gaussian_window(p.window, p.gaussian_sigma)
    mu_a, mu_b = _filter_valid(a, g), _filter_valid(b, g)
    var_a = _filter_valid(a * a, g) - mu_a * mu_a
    var_b = _filter_valid(b * b, g) - mu_b * mu_b
    cov = _filter_valid(a * b, g) - mu_a * mu_b
    c1 = (p.k1 * p.data_range) ** 2
    c2 = (p.k2 * p.data_range) ** 2
    lum = (2 * mu_a * mu_b + c1) / (mu_a * mu_a + mu_b * mu_b + c1)
    cs = (2 * cov + c2) / (var_a + var_b + c2)
    return lum * cs


def ssim(a, b, p: SsimParams = SsimParams()) -> float:
    """Mean Gaussian-windowed SSIM (Wang et al. 2004 formulation)."""
    return float(ssim_map(a, b, p).mean())


@dataclass(frozen=True)
class FrameEquivalent:
    width: int
    height: int
    bit_depth: int = 16
    fps: float = 100.0

    @property
    def bytes_per_s(self) -> float:
        return self.width * self.height * self.bit_depth / 8 * self.fps


@dataclass(frozen=True)
class BandwidthReport:
    events: int
    events_per_s: float
    bytes_per_s: float
    frame_equiv_bytes_per_s: float
    ratio: float

    def to_dict(self) -> dict:
        return asdict(self)


def stream_stats(stream: EventStream, duration: float, frame_equiv: FrameEquivalent) -> BandwidthReport:
    """Event-path bandwidth at 16 bytes/event versus a frame camera.

    ``ratio`` is event bytes/s divided by frame bytes/s.
    """
    if not duration > 0:
        raise ValueError("duration must be > 0")
    n = len(stream)
    eps = n / duration
    bps = eps * RECORD_SIZE
    fbps = frame_equiv.bytes_per_s
    return BandwidthReport(n, eps, bps, fbps, bps / fbps if fbps > 0 else math.inf)


class NoMeasuredPixels(ValueError):
    pass


def dynamic_range(frame, confidence=None) -> float:
    """``20 log10(max / min)`` over measured, positive pixels, in dB."""
    f = np.asarray(frame, dtype=np.float64)
    mask = f > 0
    if confidence is not None:
        mask &= np.asarray(confidence) == MEASURED
    vals = f[mask]
    if vals.size == 0:
        raise NoMeasuredPixels("frame has no measured pixels")
    return float(20.0 * math.log10(vals.max() / vals.min()))


def correlation(a, b) -> float:
    """Pearson correlation; 0 when either input is constant."""
    a, b = _pair(a, b)
    a, b = a.ravel() - a.mean(), b.ravel() - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    return float(a @ b) / den if den > 0 else 0.0
