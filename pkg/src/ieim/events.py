"""Core event-stream and scene types shared by every other module.

Event streams are stored column-wise (one numpy array per field) so that
multi-million event recordings stay cheap to slice, sort and encode.
Individual :class:`Event` tuples are only materialised on request.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DEFAULT_TICK_NS = 1000

# Confidence codes stored in FrameSequence.confidence
EMPTY = 0
SINGLE_EVENT = 1
MEASURED = 2


class Event(NamedTuple):
    t: int
    x: int
    y: int
    polarity: int


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class EventStream:
    """Time-sorted events plus sensor geometry.

    ``t`` holds integer ticks of ``tick_ns`` nanoseconds each. The
    constructor copies and freezes the columns but does not check the
    ordering invariants; use :func:`validate_stream` for that.
    """

    width: int
    height: int
    tick_ns: int = DEFAULT_TICK_NS
    t: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    x: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint16))
    y: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint16))
    p: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int8))

    def __post_init__(self):
        if self.width < 0 or self.height < 0 or self.tick_ns <= 0:
            raise ValueError("width/height must be >= 0 and tick_ns > 0")
        cols = {
            "t": _frozen(self.t, np.int64),
            "x": _frozen(self.x, np.uint16),
            "y": _frozen(self.y, np.uint16),
            "p": _frozen(self.p, np.int8),
        }
        n = len(cols["t"])
        if any(len(c) != n for c in cols.values()):
            raise ValueError("event columns must have equal length")
        for name, col in cols.items():
            object.__setattr__(self, name, col)

    @classmethod
    def from_events(
        cls,
        events: Iterable[Event | tuple],
        width: int,
        height: int,
        tick_ns: int = DEFAULT_TICK_NS,
    ) -> EventStream:
        rows = [tuple(e) for e in events]
        if not rows:
            return cls(width, height, tick_ns)
        t, x, y, p = zip(*rows)
        return cls(width, height, tick_ns, t, x, y, p)

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.t[i]), int(self.x[i]), int(self.y[i]), int(self.p[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            (self.width, self.height, self.tick_ns)
            == (other.width, other.height, other.tick_ns)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"EventStream({self.width}x{self.height}, tick_ns={self.tick_ns}, "
            f"n={len(self)})"
        )

    @property
    def events(self) -> list[Event]:
        return list(self)

    @property
    def tick_s(self) -> float:
        return self.tick_ns * 1e-9

    @cached_property
    def pixel_index(self) -> np.ndarray:
        idx = self.y.astype(np.int64) * self.width + self.x.astype(np.int64)
        idx.flags.writeable = False
        return idx

    def duration_s(self) -> float:
        """Span from tick 0 to just after the last event."""
        if len(self) == 0:
            return 0.0
        return (int(self.t[-1]) + 1) * self.tick_s

    def take(self, index) -> EventStream:
        return EventStream(
            self.width, self.height, self.tick_ns,
            self.t[index], self.x[index], self.y[index], self.p[index],
        )


def canonical_order(t, x, y, p, width: int, height: int) -> np.ndarray:
    """Permutation putting events in canonical order.

    Order is t ascending, then y, then x, then +1 before -1.
    """
    t = np.asarray(t, dtype=np.int64)
    n = len(t)
    if n == 0:
        return np.zeros(0, dtype=np.intp)
    slots = 2 * max(width, 1) * max(height, 1)
    tmax = int(t.max())
    if int(t.min()) >= 0 and tmax < (2**63 - 1) // slots:
        key = (
            t * slots
            + (np.asarray(y, np.int64) * width + np.asarray(x, np.int64)) * 2
            + (np.asarray(p) < 0)
        )
        return np.argsort(key, kind="stable")
    return np.lexsort((np.asarray(p) < 0, x, y, t))


def sort_stream(stream: EventStream) -> EventStream:
    order = canonical_order(stream.t, stream.x, stream.y, stream.p,
                            stream.width, stream.height)
    return stream.take(order)


@dataclass(frozen=True)
class Violation:
    index: int
    kind: str
    message: str

    def __str__(self) -> str:
        return self.message


def validate_stream(stream: EventStream) -> list[Violation]:
    """Check every EventStream invariant.

    Returns one :class:`Violation` per failing invariant, each naming the
    first offending event index. An empty list means the stream is valid.
    """
    out: list[Violation] = []
    n = len(stream)
    if n == 0:
        return out
    t, x, y, p = stream.t, stream.x, stream.y, stream.p

    def first(mask) -> int | None:
        hit = np.flatnonzero(mask)
        return int(hit[0]) if len(hit) else None

    i = first((p != 1) & (p != -1))
    if i is not None:
        out.append(Violation(i, "polarity", f"bad polarity {int(p[i])} at index {i}"))
    i = first((x >= stream.width) | (y >= stream.height))
    if i is not None:
        out.append(Violation(i, "bounds", f"coordinate out of bounds at index {i}"))
    i = first(t < 0)
    if i is not None:
        out.append(Violation(i, "negative", f"negative timestamp at index {i}"))

    if n > 1:
        dt = np.diff(t)
        same_t = dt == 0
        pix = stream.pixel_index
        dpix = np.diff(pix)
        # +1 sorts before -1 at the same pixel and tick
        dpol = (p[1:] < 0).astype(np.int8) - (p[:-1] < 0).astype(np.int8)
        bad = (dt < 0) | (same_t & ((dpix < 0) | ((dpix == 0) & (dpol < 0))))
        i = first(bad)
        if i is not None:
            out.append(Violation(i + 1, "unsorted", f"unsorted at index {i + 1}"))

        # per-pixel strict ordering: look for repeated (pixel, t) pairs
        order = np.lexsort((t, pix))
        st, sp = t[order], pix[order]
        dup = (np.diff(st) == 0) & (np.diff(sp) == 0)
        if dup.any():
            j = int(order[1:][dup].min())
            out.append(Violation(j, "duplicate",
                                 f"duplicate pixel timestamp at index {j}"))
    return out


def window(stream: EventStream, t_begin: int, t_end: int) -> EventStream:
    """Events with ``t_begin <= t < t_end``; header is copied."""
    if t_begin > t_end:
        raise ValueError(f"reversed window bounds: {t_begin} > {t_end}")
    lo = np.searchsorted(stream.t, t_begin, side="left")
    hi = np.searchsorted(stream.t, t_end, side="left")
    return stream.take(slice(lo, max(lo, hi)))


@dataclass(frozen=True, eq=False)
class FluoroField:
    """Ground-truth fluorophore density, one grid per modulation cycle."""

    frames: np.ndarray

    def __post_init__(self):
        f = np.array(self.frames, dtype=np.float64, copy=True)
        if f.ndim == 2:
            f = f[None]
        if f.ndim != 3 or f.shape[0] < 1:
            raise ValueError("frames must be a 2-D grid or a stack of 2-D grids")
        if not np.all(np.isfinite(f)) or (f < 0).any():
            raise ValueError("densities must be finite and >= 0")
        f.flags.writeable = False
        object.__setattr__(self, "frames", f)

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def static(self) -> bool:
        return self.frames.shape[0] == 1


@dataclass(frozen=True)
class ModulationSchedule:
    """Trapezoidal pulse train: ramp up, hold, ramp down, dark.

    ``rise_time``/``fall_time`` default to a tenth of the illuminated
    phase each.
    """

    period_T: float
    duty: float = 0.5
    amplitude_B: float = 1.0
    rise_time: float | None = None
    fall_time: float | None = None
    n_cycles: int = 1

    def __post_init__(self):
        if not self.period_T > 0:
            raise ValueError("period_T must be > 0")
        if not 0 < self.duty <= 1:
            raise ValueError("duty must be in (0, 1]")
        on = self.duty * self.period_T
        if self.rise_time is None:
            object.__setattr__(self, "rise_time", 0.1 * on)
        if self.fall_time is None:
            object.__setattr__(self, "fall_time", 0.1 * on)
        if not (self.rise_time > 0 and self.fall_time > 0):
            raise ValueError("rise_time and fall_time must be > 0")
        if self.rise_time + self.fall_time > on * (1 + 1e-12):
            raise ValueError("rise_time + fall_time exceeds the illuminated phase")
        if not self.amplitude_B > 0:
            raise ValueError("amplitude_B must be > 0")
        if int(self.n_cycles) != self.n_cycles or self.n_cycles < 1:
            raise ValueError("n_cycles must be an integer >= 1")

    @property
    def on_time(self) -> float:
        return self.duty * self.period_T

    @property
    def ramp_rate(self) -> float:
        """H: slope of the excitation ramp at pulse onset."""
        return self.amplitude_B / self.rise_time

    @property
    def duration(self) -> float:
        return self.n_cycles * self.period_T

    def cycle_starts(self, tick_s: float, n: int | None = None) -> np.ndarray:
        """Tick index of each cycle onset (``n + 1`` entries, last is the end)."""
        n = self.n_cycles if n is None else n
        per = self.period_T / tick_s
        return np.floor(np.arange(n + 1, dtype=np.float64) * per).astype(np.int64)

    def illumination(self, t) -> np.ndarray:
        """Excitation intensity at time(s) ``t`` in seconds."""
        ph = np.mod(np.asarray(t, dtype=np.float64), self.period_T)
        B, on = self.amplitude_B, self.on_time
        fall_start = on - self.fall_time
        return np.select(
            [ph < self.rise_time, ph < fall_start, ph < on],
            [B * ph / self.rise_time, B, B * (on - ph) / self.fall_time],
            0.0,
        )


@dataclass(frozen=True)
class PhotometricModel:
    K: float = 1.0
    c_thr: float = 0.01

    def __post_init__(self):
        if not (self.K > 0 and self.c_thr > 0):
            raise ValueError("K and c_thr must be > 0")


@dataclass(frozen=True)
class SensorConfig:
    refractory: int = 1
    threshold_sigma: float = 0.0
    noise_rate: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.refractory < 0 or self.threshold_sigma < 0 or self.noise_rate < 0:
            raise ValueError("refractory, threshold_sigma and noise_rate must be >= 0")


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Per-cycle density estimates and per-pixel confidence codes."""

    frames: np.ndarray
    confidence: np.ndarray
    trailing_events_ignored: int = 0

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float64)
        c = np.asarray(self.confidence, dtype=np.uint8)
        if f.ndim != 3 or f.shape != c.shape:
            raise ValueError("frames and confidence must share a (n, h, w) shape")
        object.__setattr__(self, "frames", f)
        object.__setattr__(self, "confidence", c)

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    def __len__(self) -> int:
        return self.frames.shape[0]

    def counts(self) -> dict[str, int]:
        c = self.confidence
        return {
            "measured_px": int((c == MEASURED).sum()),
            "single_event_px": int((c == SINGLE_EVENT).sum()),
            "empty_px": int((c == EMPTY).sum()),
        }

    def normalized(self) -> FrameSequence:
        """Each frame divided by its own maximum (zero frames stay zero)."""
        peak = self.frames.reshape(len(self), -1).max(axis=1, initial=0.0)
        scale = np.where(peak > 0, peak, 1.0)[:, None, None]
        return FrameSequence(self.frames / scale, self.confidence,
                             self.trailing_events_ignored)


def stack_frames(frames: Sequence[np.ndarray]) -> np.ndarray:
    arr = np.asarray(frames, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None]
    return arr
