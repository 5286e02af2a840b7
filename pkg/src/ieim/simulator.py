"""Synthetic event streams from fluorophore density fields.

Two generators are provided:

* :func:`simulate_pulse_stream` drives every pixel with a trapezoidal
  excitation pulse train. The log-domain signal ``log(1 + m(t))`` with
  ``m(t) = b(t) * K * D`` is crossed analytically, so event instants are
  exact up to floating point before being quantised to ticks.
* :func:`simulate_motion_stream` is the classic frame-to-event converter
  for unmodulated (e.g. shaken) image sequences.
"""

from __future__ import annotations

import logging
from typing import Callable, Sequence

import numpy as np

from . import _backend
from .events import (
    DEFAULT_TICK_NS,
    EventStream,
    FluoroField,
    ModulationSchedule,
    PhotometricModel,
    SensorConfig,
    canonical_order,
)

logger = logging.getLogger(__name__)

MAX_EVENTS = 10**9

InstantsHook = Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]


class ResourceLimitError(RuntimeError):
    """Raised when a scenario would generate an unreasonable number of events."""


def ragged_arange(counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Expand ``counts`` into (owner index, 1-based position) pairs."""
    counts = np.asarray(counts, dtype=np.int64)
    total = int(counts.sum())
    owner = np.repeat(np.arange(len(counts)), counts)
    starts = np.cumsum(counts) - counts
    k = np.arange(1, total + 1, dtype=np.int64) - np.repeat(starts, counts)
    return owner, k


def rising_instants(g, c_thr, k) -> np.ndarray:
    """Continuous-time instant of the k-th crossing on a ramp ``m = g t``.

    Solves ``log(1 + g t_k) = k c_thr``, equivalently the recurrence
    ``1 + g t_k = (1 + g t_{k-1}) exp(c_thr)`` with ``t_0 = 0``.
    """
    return np.expm1(np.asarray(k) * np.asarray(c_thr)) / np.asarray(g)


def ramp_event_count(m_peak, c_thr) -> np.ndarray:
    """Crossings on a ramp from 0 to ``m_peak``: ``floor(log(1 + m_peak) / c_thr)``."""
    return np.floor(np.log1p(m_peak) / c_thr).astype(np.int64)


def pixel_rngs(seed: int, width: int, height: int):
    """One generator per pixel, seeded from ``(seed, x, y)`` in row-major order."""
    for y in range(height):
        for x in range(width):
            yield np.random.default_rng([seed, x, y])


def _sensor_draws(sensor: SensorConfig, width: int, height: int, c_thr: float,
                  duration_s: float):
    """Per-pixel thresholds and background-noise events.

    Every pixel draws from its own seeded generator, so results do not
    depend on how pixels are partitioned across workers.
    """
    npix = width * height
    c_pix = np.full(npix, c_thr)
    if sensor.threshold_sigma == 0 and sensor.noise_rate == 0:
        return c_pix, np.zeros(0), np.zeros(0, np.int64), np.zeros(0, np.int8)
    lam = sensor.noise_rate * duration_s
    noise_t, noise_pix, noise_p = [], [], []
    for i, rng in enumerate(pixel_rngs(sensor.rng_seed, width, height)):
        if sensor.threshold_sigma > 0:
            c_pix[i] = c_thr * np.exp(rng.normal(0.0, sensor.threshold_sigma))
        if lam > 0:
            n = rng.poisson(lam)
            if n:
                noise_t.append(rng.uniform(0.0, duration_s, n))
                noise_p.append(rng.integers(0, 2, n, dtype=np.int8) * 2 - 1)
                noise_pix.append(np.full(n, i, dtype=np.int64))
    if noise_t:
        return (c_pix, np.concatenate(noise_t), np.concatenate(noise_pix),
                np.concatenate(noise_p).astype(np.int8))
    return c_pix, np.zeros(0), np.zeros(0, np.int64), np.zeros(0, np.int8)


def _finish(width, height, tick_ns, ticks, pix, pol, refractory) -> EventStream:
    """Canonical sort, then per-pixel refractory suppression."""
    ticks = np.asarray(ticks, dtype=np.int64)
    pix = np.asarray(pix, dtype=np.int64)
    x = (pix % max(width, 1)).astype(np.uint16)
    y = (pix // max(width, 1)).astype(np.uint16)
    pol = np.asarray(pol, dtype=np.int8)
    order = canonical_order(ticks, x, y, pol, width, height)
    ticks, pix, x, y, pol = ticks[order], pix[order], x[order], y[order], pol[order]
    keep = _backend.refractory_mask(ticks, pix, width * height, max(int(refractory), 1))
    return EventStream(width, height, tick_ns, ticks[keep], x[keep], y[keep], pol[keep])


def simulate_pulse_stream(
    field: FluoroField,
    sched: ModulationSchedule,
    photo: PhotometricModel,
    sensor: SensorConfig = SensorConfig(),
    tick_ns: int = DEFAULT_TICK_NS,
    instants_hook: InstantsHook | None = None,
) -> EventStream:
    """Event stream of a density field under pulsed excitation.

    Per pixel and cycle, the rising ramp emits ``N = floor(log(1 + B K D) / c)``
    positive events at ``t_k = expm1(k c) / (H K D)`` after onset, and the
    falling ramp emits ``N`` negative events that walk the reference back down
    to zero, the last one landing exactly at the end of the ramp. Plateau
    and dark phases are silent.

    ``instants_hook(cycle, pixel, k, t)`` is called once per cycle with the
    continuous rising-ramp instants (seconds after onset) before
    quantisation; it exists for testing.
    """
    n_f = field.frames.shape[0]
    if n_f not in (1, sched.n_cycles):
        raise ValueError(
            f"field has {n_f} frames; expected 1 or n_cycles={sched.n_cycles}")
    h, w = field.height, field.width
    npix = h * w
    tick_s = tick_ns * 1e-9
    B, K, c = sched.amplitude_B, photo.K, photo.c_thr
    H = sched.ramp_rate

    c_pix, n_t, n_pix, n_p = _sensor_draws(sensor, w, h, c, sched.duration)

    dens = field.frames.reshape(n_f, npix)
    counts = ramp_event_count(B * K * dens, c_pix[None, :])
    per_cycle = counts if n_f > 1 else np.broadcast_to(counts, (sched.n_cycles, npix))
    expected = 2 * int(per_cycle.sum(dtype=np.int64)) + len(n_t)
    if expected > MAX_EVENTS:
        raise ResourceLimitError(
            f"scenario would generate {expected} events (limit {MAX_EVENTS})")

    per = sched.period_T / tick_s
    on, fall = sched.on_time, sched.fall_time
    ticks_parts, pix_parts, pol_parts = [], [], []
    cached = None
    for k in range(sched.n_cycles):
        fi = k if n_f > 1 else 0
        if cached is None or n_f > 1:
            d = dens[fi]
            owner, kk = ragged_arange(counts[fi])
            cc = c_pix[owner]
            g = H * K * d[owner]
            t_up = rising_instants(g, cc, kk)
            # falling ramp: levels (N - j) c for j = 1..N
            m_peak = B * K * d[owner]
            level = (counts[fi][owner] - kk) * cc
            t_down = on - fall * (np.expm1(level) / m_peak)
            cached = (owner, kk, t_up, t_down)
        owner, kk, t_up, t_down = cached
        if instants_hook is not None:
            instants_hook(k, owner, kk, t_up)
        base = k * per
        ticks_parts.append(np.floor(base + t_up / tick_s).astype(np.int64))
        ticks_parts.append(np.floor(base + t_down / tick_s).astype(np.int64))
        pix_parts += [owner, owner]
        pol_parts += [np.ones(len(owner), np.int8), -np.ones(len(owner), np.int8)]

    if len(n_t):
        ticks_parts.append(np.floor(n_t / tick_s).astype(np.int64))
        pix_parts.append(n_pix)
        pol_parts.append(n_p)

    return _finish(
        w, h, tick_ns,
        np.concatenate(ticks_parts) if ticks_parts else np.zeros(0, np.int64),
        np.concatenate(pix_parts) if pix_parts else np.zeros(0, np.int64),
        np.concatenate(pol_parts) if pol_parts else np.zeros(0, np.int8),
        sensor.refractory,
    )


def simulate_motion_stream(
    frames: Sequence[np.ndarray],
    frame_interval: float,
    photo: PhotometricModel,
    sensor: SensorConfig = SensorConfig(),
    tick_ns: int = DEFAULT_TICK_NS,
) -> EventStream:
    """Frame-to-event conversion without illumination modulation.

    ``log(1 + K I)`` is linearly interpolated between consecutive frames and
    every ``c_thr`` step away from the pixel's reference level fires an
    event. The reference starts at the first frame's level.
    """
    stack = np.asarray(frames, dtype=np.float64)
    if stack.ndim != 3 or stack.shape[0] < 2:
        raise ValueError("need at least two frames of identical shape")
    if not frame_interval > 0:
        raise ValueError("frame_interval must be > 0")
    if (stack < 0).any() or not np.all(np.isfinite(stack)):
        raise ValueError("intensities must be finite and >= 0")
    n, h, w = stack.shape
    npix = h * w
    tick_s = tick_ns * 1e-9
    duration = (n - 1) * frame_interval
    c_pix, n_t, n_pix, n_p = _sensor_draws(sensor, w, h, photo.c_thr, duration)

    logs = np.log1p(photo.K * stack.reshape(n, npix))
    ref = logs[0].copy()
    ticks_parts, pix_parts, pol_parts = [], [], []
    total = 0
    for j in range(n - 1):
        a, b = logs[j], logs[j + 1]
        slope = b - a
        up = np.where(b > ref, np.floor((b - ref) / c_pix), 0).astype(np.int64)
        down = np.where(b < ref, np.floor((ref - b) / c_pix), 0).astype(np.int64)
        nz = up + down
        total += int(nz.sum())
        if total > MAX_EVENTS:
            raise ResourceLimitError(f"motion stream exceeds {MAX_EVENTS} events")
        sign = np.where(up > 0, 1, -1).astype(np.int64)
        owner, kk = ragged_arange(nz)
        level = ref[owner] + sign[owner] * kk * c_pix[owner]
        sl = slope[owner]
        frac = np.divide(level - a[owner], sl, out=np.zeros_like(sl), where=sl != 0)
        t = (j + np.clip(frac, 0.0, 1.0)) * frame_interval
        ticks_parts.append(np.floor(t / tick_s).astype(np.int64))
        pix_parts.append(owner)
        pol_parts.append(sign[owner].astype(np.int8))
        ref = ref + sign * nz * c_pix

    if len(n_t):
        ticks_parts.append(np.floor(n_t / tick_s).astype(np.int64))
        pix_parts.append(n_pix)
        pol_parts.append(n_p)
    return _finish(w, h, tick_ns, np.concatenate(ticks_parts),
                   np.concatenate(pix_parts), np.concatenate(pol_parts),
                   sensor.refractory)


def shake_offsets(amplitude_px: int, n_frames: int) -> np.ndarray:
    """Triangle-wave horizontal offsets 0, 1, .., A, .., -A, .., -1, 0, ..."""
    if amplitude_px < 1 or n_frames < 2:
        raise ValueError("amplitude_px must be >= 1 and n_frames >= 2")
    a = amplitude_px
    ph = np.arange(n_frames) % (4 * a)
    return np.where(ph <= a, ph, np.where(ph <= 3 * a, 2 * a - ph, ph - 4 * a))


def translate(image: np.ndarray, dx: int) -> np.ndarray:
    """Shift right by ``dx`` columns with edge clamping."""
    image = np.asarray(image)
    cols = np.clip(np.arange(image.shape[1]) - dx, 0, image.shape[1] - 1)
    return image[:, cols]


def shake_sequence(image: np.ndarray, amplitude_px: int, n_frames: int) -> list[np.ndarray]:
    return [translate(image, int(o)) for o in shake_offsets(amplitude_px, n_frames)]
