"""Compiled versus numpy kernels on a ~10^7-event pulse stream.

    python benchmarks/bench_backends.py --repeat 3
"""

import argparse
import json
import statistics
import time

import numpy as np

from ieim import _backend
from ieim.events import FluoroField, ModulationSchedule, PhotometricModel
from ieim.phantoms import gradient_blobs
from ieim.reconstruct import IeiOptions, reconstruct_iei, regime_check
from ieim.simulator import simulate_pulse_stream


def bench_stream(size=256, cycles=26):
    density = 0.6 + 0.4 * gradient_blobs((size, size), seed=0)
    sched = ModulationSchedule(0.01, amplitude_B=0.05, n_cycles=cycles)
    photo = PhotometricModel(K=1.0, c_thr=0.01)
    return simulate_pulse_stream(FluoroField(density), sched, photo), sched, photo


def timed(fn, repeat):
    out, times = None, []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return out, statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    stream, sched, photo = bench_stream()
    _ = stream.pixel_index
    n = len(stream)
    rows, frames = [], {}
    for name in _backend.available():
        for est in ("median-interval", "first-pair"):
            opts = IeiOptions(estimator=est)
            rec, dt = timed(lambda: reconstruct_iei(stream, sched, photo, opts,
                                                    workers=args.workers, backend=name),
                            args.repeat)
            frames[name, est] = rec
            rows.append({"backend": name, "op": f"iei/{est}", "seconds": dt,
                         "events_per_s": n / dt})
        _, dt = timed(lambda: regime_check(stream, sched, backend=name), args.repeat)
        rows.append({"backend": name, "op": "regime_check", "seconds": dt,
                     "events_per_s": n / dt})

    identical = all(
        np.array_equal(frames["python", e].frames, frames[b, e].frames)
        and np.array_equal(frames["python", e].confidence, frames[b, e].confidence)
        for b, e in frames
    )
    print(json.dumps({"events": n, "workers": args.workers, "identical_output": identical,
                      "results": rows}, indent=2))


if __name__ == "__main__":
    main()
