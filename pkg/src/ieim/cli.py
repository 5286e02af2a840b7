"""``ieim`` command line: simulate, reconstruct, metrics, inspect, bench.

Exit status: 0 success, 1 warning (high-intensity regime flagged),
2 usage or data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import statistics
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _backend, codec
from .ablation import motion_frames
from .events import (
    EMPTY,
    MEASURED,
    FluoroField,
    ModulationSchedule,
    PhotometricModel,
    SensorConfig,
    validate_stream,
)
from .metrics import FrameEquivalent, NoMeasuredPixels, dynamic_range, mse, ssim, stream_stats
from .reconstruct import ESTIMATORS, IeiOptions, reconstruct_iei, reconstruct_integration, regime_check
from .simulator import ResourceLimitError, simulate_motion_stream, simulate_pulse_stream

log = logging.getLogger("ieim")

EXIT_OK, EXIT_WARN, EXIT_ERR = 0, 1, 2


class ScenarioError(Exception):
    pass


@dataclass
class MotionConfig:
    amplitude_px: int = 1
    steps_per_cycle: int = 4
    dark_start: bool = False


@dataclass
class Scenario:
    path: Path
    field_paths: list[Path]
    field: FluoroField
    schedule: ModulationSchedule
    photo: PhotometricModel
    sensor: SensorConfig
    tick_ns: int = 1000
    motion: MotionConfig = field(default_factory=MotionConfig)
    raw: dict = field(default_factory=dict)


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ScenarioError(f"scenario not found: {path}")
    except json.JSONDecodeError as e:
        raise ScenarioError(f"scenario is not valid JSON: {e}")
    base = path.parent
    try:
        refs = doc["field"]
        refs = [refs] if isinstance(refs, str) else list(refs)
        paths = [(base / r) if not Path(r).is_absolute() else Path(r) for r in refs]
        for p in paths:
            if not p.exists():
                raise ScenarioError(f"field not found: {p}")
        grids = [codec.load_density(p) for p in paths]
        s = doc.get("schedule", {})
        sched = ModulationSchedule(
            period_T=float(s["period_s"]),
            duty=float(s.get("duty", 0.5)),
            amplitude_B=float(s.get("amplitude", 1.0)),
            rise_time=s.get("rise_s"),
            fall_time=s.get("fall_s"),
            n_cycles=int(s.get("cycles", 1)),
        )
        ph = doc.get("photometric", {})
        photo = PhotometricModel(K=float(ph.get("K", 1.0)), c_thr=float(ph.get("c_thr", 0.01)))
        se = doc.get("sensor", {})
        sensor = SensorConfig(
            refractory=int(se.get("refractory_ticks", 1)),
            threshold_sigma=float(se.get("threshold_sigma", 0.0)),
            noise_rate=float(se.get("noise_rate_hz", 0.0)),
            rng_seed=int(se.get("seed", 0)),
        )
        mo = doc.get("motion", {})
        motion = MotionConfig(
            amplitude_px=int(mo.get("amplitude_px", 1)),
            steps_per_cycle=int(mo.get("steps_per_cycle", 4)),
            dark_start=bool(mo.get("dark_start", False)),
        )
        return Scenario(path, paths, FluoroField(np.stack(grids)), sched, photo, sensor,
                        int(doc.get("tick_ns", 1000)), motion, doc)
    except ScenarioError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ScenarioError(f"bad scenario {path}: {e}")


def simulate(sc: Scenario, mode: str):
    if mode == "pulse":
        return simulate_pulse_stream(sc.field, sc.schedule, sc.photo, sc.sensor, sc.tick_ns)
    m = sc.motion
    frames = motion_frames(sc.schedule.amplitude_B * sc.field.frames[0], m.amplitude_px,
                           sc.schedule.n_cycles * m.steps_per_cycle, m.dark_start)
    fi = sc.schedule.period_T / m.steps_per_cycle
    return simulate_motion_stream(frames, fi, sc.photo, sc.sensor, sc.tick_ns)


def manifest_path(stream_path) -> Path:
    return Path(stream_path).with_suffix(".manifest.json")


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    t0 = time.perf_counter()
    stream = simulate(sc, args.mode)
    wall = time.perf_counter() - t0
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    codec.write_ievt(out, stream)
    manifest = {
        "scenario": str(sc.path),
        "mode": args.mode,
        "parameters": sc.raw,
        "event_count": len(stream),
        "width": stream.width,
        "height": stream.height,
        "tick_ns": stream.tick_ns,
        "duration_s": sc.schedule.duration,
        "wall_time_s": wall,
        "backend": _backend.NAME,
    }
    manifest_path(out).write_text(json.dumps(manifest, indent=2))
    print(f"wrote {len(stream)} events to {out}")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    sc = load_scenario(args.scenario)
    stream = codec.read_ievt(args.stream)
    if args.method == "iei":
        opts = IeiOptions(estimator=args.estimator, guard=args.guard, min_events=args.min_events)
        rec = reconstruct_iei(stream, sc.schedule, sc.photo, opts)
    else:
        fi = args.frame_interval or sc.schedule.period_T
        n = args.frames or max(1, round(sc.schedule.duration / fi))
        rec = reconstruct_integration(stream, fi, sc.photo.c_thr, n_frames=n)
    regime = regime_check(stream, sc.schedule, c_thr=sc.photo.c_thr)
    if args.normalize:
        rec = rec.normalized()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(len(rec)):
        codec.save_density(out / f"frame_{i:04d}.pgm", rec.frames[i])
        (out / f"conf_{i:04d}.pgm").write_bytes(codec.write_pgm(rec.confidence[i], 255))
    report = {
        "cycles": len(rec),
        **rec.counts(),
        "trailing_events_ignored": rec.trailing_events_ignored,
        "regime": regime.to_dict(),
        "method": args.method,
        "estimator": args.estimator if args.method == "iei" else None,
        "normalized": bool(args.normalize),
        "stream": str(Path(args.stream).resolve()),
        "scenario": str(sc.path.resolve()),
    }
    if regime.flagged:
        report["warning"] = ("high-intensity regime: event times follow a fixed "
                             "geometric pattern and no longer encode density")
    (out / "report.json").write_text(json.dumps(report, indent=2))
    print(f"wrote {len(rec)} frames to {out}")
    if regime.flagged:
        print("warning: " + report["warning"], file=sys.stderr)
        return EXIT_WARN
    return EXIT_OK


def _max_normalize(a: np.ndarray) -> np.ndarray:
    m = a.max() if a.size else 0.0
    return a / m if m > 0 else a.astype(np.float64)


def cmd_metrics(args) -> int:
    rdir = Path(args.recon)
    frame_paths = sorted(rdir.glob("frame_*.pgm"))
    if not frame_paths:
        raise ScenarioError(f"no frames in {rdir}")
    truth_paths = [Path(p) for p in args.truth]
    for p in truth_paths:
        if not p.exists():
            raise ScenarioError(f"truth not found: {p}")
    if len(truth_paths) not in (1, len(frame_paths)):
        raise ScenarioError(
            f"{len(truth_paths)} truth images for {len(frame_paths)} frames")
    truths = [codec.load_density(p) for p in truth_paths]
    records = []
    for i, fp in enumerate(frame_paths):
        rec = codec.load_density(fp)
        truth = truths[i if len(truths) > 1 else 0]
        if rec.shape != truth.shape:
            raise ScenarioError(f"shape mismatch: {fp.name} {rec.shape} vs truth {truth.shape}")
        conf_path = fp.with_name(fp.name.replace("frame_", "conf_"))
        conf = codec.read_pgm(conf_path.read_bytes()) if conf_path.exists() else None
        a, b = _max_normalize(rec), _max_normalize(truth)
        try:
            dr = dynamic_range(rec, conf)
        except NoMeasuredPixels:
            dr = None
        s = ssim(a, b) if min(a.shape) >= 11 else None
        records.append({"frame": i, "mse": mse(a, b), "ssim": s, "dynamic_range_db": dr})
    agg = {
        "frame": "aggregate",
        "mse": float(np.mean([r["mse"] for r in records])),
        "ssim": (float(np.mean([r["ssim"] for r in records]))
                 if all(r["ssim"] is not None for r in records) else None),
        "dynamic_range_db": (float(np.median([r["dynamic_range_db"] for r in records
                                               if r["dynamic_range_db"] is not None]))
                             if any(r["dynamic_range_db"] is not None for r in records) else None),
    }
    report_path = rdir / "report.json"
    if report_path.exists():
        rep = json.loads(report_path.read_text())
        spath = Path(rep.get("stream", ""))
        mpath = manifest_path(spath)
        if spath.exists() and mpath.exists():
            man = json.loads(mpath.read_text())
            stream = codec.read_ievt(spath)
            dur = float(man.get("duration_s") or stream.duration_s())
            fe = FrameEquivalent(stream.width, stream.height, 16, len(frame_paths) / dur)
            agg.update(stream_stats(stream, dur, fe).to_dict())
    records.append(agg)
    doc = {"records": records}
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def cmd_inspect(args) -> int:
    stream = codec.read_ievt(args.stream)
    n = len(stream)
    dur = stream.duration_s()
    pos = int((stream.p > 0).sum())
    print(f"magic:       IEVT v{codec.VERSION}")
    print(f"geometry:    {stream.width} x {stream.height}")
    print(f"tick:        {stream.tick_ns} ns")
    print(f"events:      {n}")
    print(f"duration:    {dur:.6f} s")
    print(f"positive:    {pos}")
    print(f"negative:    {n - pos}")
    print(f"events/s:    {n / dur if dur > 0 else 0.0:.1f}")
    violations = validate_stream(stream)
    if violations:
        print("validation:  FAILED")
        for v in violations:
            print(f"  - {v}")
        return EXIT_ERR
    print("validation:  OK")
    return EXIT_OK


def cmd_bench(args) -> int:
    sc = load_scenario(args.scenario)
    sim_t, rec_t, counts = [], [], []
    for _ in range(args.repeat):
        t0 = time.perf_counter()
        stream = simulate_pulse_stream(sc.field, sc.schedule, sc.photo, sc.sensor, sc.tick_ns)
        t1 = time.perf_counter()
        _ = stream.pixel_index
        t2 = time.perf_counter()
        reconstruct_iei(stream, sc.schedule, sc.photo, workers=args.workers, backend=args.backend)
        t3 = time.perf_counter()
        sim_t.append(t1 - t0)
        rec_t.append(t3 - t2)
        counts.append(len(stream))
    n = counts[0]
    result = {
        "repeat": args.repeat,
        "backend": args.backend or _backend.NAME,
        "workers": _backend.worker_count(args.workers),
        "events": n,
        "event_counts": counts,
        "simulate_s": sim_t,
        "reconstruct_s": rec_t,
        "simulate_events_per_s": n / statistics.median(sim_t),
        "reconstruct_events_per_s": n / statistics.median(rec_t),
    }
    print(json.dumps(result, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ieim", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate an event stream from a scenario")
    p.add_argument("scenario")
    p.add_argument("--mode", choices=("pulse", "motion"), default="pulse")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct density frames")
    p.add_argument("stream")
    p.add_argument("scenario")
    p.add_argument("--method", choices=("iei", "integrate"), default="iei")
    p.add_argument("--estimator", choices=ESTIMATORS, default="median-interval")
    p.add_argument("--guard", type=float, default=0.0)
    p.add_argument("--min-events", type=int, default=2)
    p.add_argument("--frame-interval", type=float, default=None,
                   help="integration frame interval in seconds (default: period)")
    p.add_argument("--frames", type=int, default=None)
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("metrics", help="score a reconstruction against ground truth")
    p.add_argument("recon")
    p.add_argument("truth", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("inspect", help="print header, statistics and validation of a stream")
    p.add_argument("stream")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("bench", help="time simulation and reconstruction")
    p.add_argument("scenario")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--backend", choices=_backend.available(), default=None)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, codec.DecodeError, codec.StreamValidationError,
            ResourceLimitError, ValueError, OSError) as e:
        print(f"ieim: error: {e}", file=sys.stderr)
        return EXIT_ERR


if __name__ == "__main__":
    sys.exit(main())
