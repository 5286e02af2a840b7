"""Density frames from event streams.

The inter-event-interval (IEI) estimator turns the spacing of positive
events on each pulse's rising ramp into a density: on a linear ramp
``b(t) = H t`` in the small-signal regime consecutive events are
``c_thr / (H K D)`` apart, so ``D = c_thr / (H K dt)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import _backend
from .events import (
    MEASURED,
    EventStream,
    FrameSequence,
    ModulationSchedule,
    PhotometricModel,
)

ESTIMATORS = ("median-interval", "first-pair")


@dataclass(frozen=True)
class IeiOptions:
    estimator: str = "median-interval"
    guard: float = 0.0
    min_events: int = 2
    single_event_value: float = 0.0

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        if not 0 <= self.guard < 1:
            raise ValueError("guard must be in [0, 1)")
        if self.min_events < 2:
            raise ValueError("min_events must be >= 2")


@dataclass(frozen=True)
class RegimeReport:
    ratio_mean: float
    ratio_cv: float
    flagged: bool
    pixels: int = 0
    samples: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["ratio_cv"]):
            d["ratio_cv"] = None
        if math.isnan(d["ratio_mean"]):
            d["ratio_mean"] = None
        return d


def _columns(stream: EventStream):
    return (
        np.ascontiguousarray(stream.t, dtype=np.int64),
        np.ascontiguousarray(stream.pixel_index, dtype=np.int64),
        np.ascontiguousarray(stream.p, dtype=np.int8),
    )


def _chunks(n: int, k: int) -> list[tuple[int, int]]:
    k = max(1, min(k, n))
    edges = np.linspace(0, n, k + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def reconstruct_iei(
    stream: EventStream,
    sched: ModulationSchedule,
    photo: PhotometricModel,
    opts: IeiOptions = IeiOptions(),
    workers: int | None = None,
    backend: str | None = None,
) -> FrameSequence:
    """One density frame per modulation cycle from inter-event intervals.

    Per pixel and cycle, the positive events inside
    ``[onset + guard * duty * T, onset + duty * T)`` are collected. With at
    least ``min_events`` of them the pixel is *measured* and the chosen
    interval (first pair or median of consecutive gaps) gives
    ``D = c_thr / (H K dt)``. One event yields ``single_event_value``, none
    yields 0. Negative events never contribute. Events after the last cycle
    are counted in ``trailing_events_ignored``.

    Output is identical for any ``workers`` count; ``IEIM_THREADS`` caps it.
    """
    if not (sched.period_T > 0 and sched.n_cycles >= 1):
        raise ValueError("schedule has zero duration")
    kern = _backend.get(backend)
    tick_s = stream.tick_s
    n = sched.n_cycles
    npix = stream.width * stream.height
    starts = sched.cycle_starts(tick_s)
    per = sched.period_T / tick_s
    gate_hi = sched.duty * per
    gate_lo = opts.guard * gate_hi
    scale = photo.c_thr / (sched.ramp_rate * photo.K * tick_s)
    median = int(opts.estimator == "median-interval")

    frames = np.zeros((n, npix), dtype=np.float64)
    conf = np.zeros((n, npix), dtype=np.uint8)
    t, pix, p = _columns(stream)
    cut = np.searchsorted(t, starts, side="left")
    trailing = len(t) - int(cut[-1])

    def run(span):
        c0, c1 = span
        lo, hi = int(cut[c0]), int(cut[c1])
        kern.iei_cycles(
            t[lo:hi], pix[lo:hi], p[lo:hi], starts, c0, c1,
            float(gate_lo), float(gate_hi), npix, median, int(opts.min_events),
            float(opts.single_event_value), float(scale),
            frames[c0:c1], conf[c0:c1],
        )

    spans = _chunks(n, _backend.worker_count(workers))
    if len(spans) == 1:
        run(spans[0])
    else:
        with ThreadPoolExecutor(len(spans)) as ex:
            list(ex.map(run, spans))

    shape = (n, stream.height, stream.width)
    return FrameSequence(frames.reshape(shape), conf.reshape(shape), trailing)


def reconstruct_integration(
    stream: EventStream,
    frame_interval: float,
    c_thr: float,
    n_frames: int | None = None,
) -> FrameSequence:
    """Direct integration baseline.

    Each pixel's log state starts at 0 and moves by ``polarity * c_thr`` per
    event. Frame ``j`` is ``exp(state) - 1`` (floored at 0) over all events
    before ``(j + 1) * frame_interval``.
    """
    if not frame_interval > 0:
        raise ValueError("frame_interval must be > 0")
    tick_s = stream.tick_s
    if n_frames is None:
        n_frames = max(1, math.ceil(stream.duration_s() / frame_interval))
    npix = stream.width * stream.height
    bounds = (np.arange(1, n_frames + 1) * frame_interval) / tick_s
    cut = np.searchsorted(stream.t, bounds, side="left")
    pix = stream.pixel_index
    pol = stream.p.astype(np.int64)
    state = np.zeros(npix, dtype=np.int64)
    seen = np.zeros(npix, dtype=bool)
    frames = np.empty((n_frames, npix))
    conf = np.zeros((n_frames, npix), dtype=np.uint8)
    lo = 0
    for j, hi in enumerate(cut):
        if hi > lo:
            state += np.bincount(pix[lo:hi], weights=pol[lo:hi], minlength=npix).astype(np.int64)
            seen[pix[lo:hi]] = True
        frames[j] = np.maximum(np.expm1(state * c_thr), 0.0)
        conf[j][seen] = MEASURED
        lo = hi
    shape = (n_frames, stream.height, stream.width)
    return FrameSequence(frames.reshape(shape), conf.reshape(shape),
                         len(stream) - int(cut[-1]) if len(cut) else 0)


def regime_check(
    stream: EventStream,
    sched: ModulationSchedule,
    flag_cv: float = 0.01,
    c_thr: float | None = None,
    pattern_tol: float = 0.01,
    backend: str | None = None,
) -> RegimeReport:
    """Detect the high-intensity regime where event times stop encoding density.

    For every pixel and cycle with at least three positive events on the
    illuminated phase, the ratio of the final two onset-relative timestamps
    is taken; these are the samples at peak signal, where ``m >> 1`` makes
    the ratio approach ``exp(c_thr)`` regardless of density. Ratios are
    averaged per pixel; ``ratio_cv`` is their coefficient of variation
    across pixels. ``flagged`` requires ``ratio_cv < flag_cv`` and, when
    ``c_thr`` is given, ``ratio_mean`` within ``pattern_tol`` of
    ``exp(c_thr)``.
    """
    kern = _backend.get(backend)
    tick_s = stream.tick_s
    starts = sched.cycle_starts(tick_s)
    gate_hi = sched.duty * sched.period_T / tick_s
    npix = stream.width * stream.height
    t, pix, p = _columns(stream)
    _, q, r = kern.last_pair_ratios(t, pix, p, starts, sched.n_cycles, float(gate_hi), npix)
    if len(r) == 0:
        return RegimeReport(float("nan"), float("inf"), False)
    sums = np.bincount(q, weights=r, minlength=npix)
    cnt = np.bincount(q, minlength=npix)
    has = cnt > 0
    per_px = sums[has] / cnt[has]
    if len(per_px) < 2:
        return RegimeReport(float(per_px.mean()), float("inf"), False,
                            int(len(per_px)), int(len(r)))
    mean = float(per_px.mean())
    cv = float(per_px.std() / mean)
    flagged = cv < flag_cv
    if c_thr is not None:
        flagged = flagged and abs(mean / math.exp(c_thr) - 1.0) < pattern_tol
    return RegimeReport(mean, cv, bool(flagged), int(len(per_px)), int(len(r)))
