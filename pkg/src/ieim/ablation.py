"""Modulated versus unmodulated acquisition of the same sample.

Three reconstructions of one density field are compared by correlation
with ground truth:

``pulse_iei``
    IEI on the pulse-modulated stream.
``motion_iei``
    IEI on a stream recorded under constant illumination while the sample
    shakes horizontally.
``motion_integration``
    Direct integration of that same motion stream.

The motion recording starts with the lamp switching on (a dark first
frame), which gives integration the zero reference it assumes.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .events import FluoroField, ModulationSchedule, PhotometricModel, SensorConfig
from .metrics import correlation
from .reconstruct import reconstruct_iei, reconstruct_integration
from .simulator import shake_sequence, simulate_motion_stream, simulate_pulse_stream


@dataclass(frozen=True)
class AblationResult:
    pulse_iei: float
    motion_iei: float
    motion_integration: float
    pulse_events: int
    motion_events: int

    def to_dict(self) -> dict:
        return asdict(self)


def motion_frames(image, amplitude_px: int, n_steps: int, dark_start: bool = True):
    seq = shake_sequence(image, amplitude_px, n_steps)
    if dark_start:
        seq = [np.zeros_like(seq[0])] + seq
    return seq


def run_ablation(
    density,
    sched: ModulationSchedule,
    photo: PhotometricModel,
    sensor: SensorConfig = SensorConfig(),
    amplitude_px: int = 1,
    steps_per_cycle: int = 4,
    tick_ns: int = 1000,
) -> AblationResult:
    density = np.asarray(density, dtype=np.float64)
    pulse = simulate_pulse_stream(FluoroField(density), sched, photo, sensor, tick_ns)
    pulse_rec = reconstruct_iei(pulse, sched, photo)
    pulse_corr = np.mean([correlation(f, density) for f in pulse_rec.frames])

    # constant illumination at the pulse amplitude; one shake step per frame
    n = sched.n_cycles
    frames = motion_frames(sched.amplitude_B * density, amplitude_px, n * steps_per_cycle)
    shown = frames[steps_per_cycle::steps_per_cycle]  # image at each cycle's end
    fi = sched.period_T / steps_per_cycle
    motion = simulate_motion_stream(frames, fi, photo, sensor, tick_ns)
    iei = reconstruct_iei(motion, sched, photo)
    integ = reconstruct_integration(motion, sched.period_T, photo.c_thr, n_frames=n)
    return AblationResult(
        float(pulse_corr),
        float(np.mean([correlation(f, s) for f, s in zip(iei.frames, shown)])),
        float(np.mean([correlation(f, s) for f, s in zip(integ.frames, shown)])),
        len(pulse),
        len(motion),
    )
