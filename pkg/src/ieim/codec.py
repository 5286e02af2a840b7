"""Binary event files (.ievt), CSV ingest and PGM image I/O.

IEVT layout, all little-endian::

    header (32 bytes)  magic "IEVT" | u16 version=1 | u16 width | u16 height
                       | u32 tick_ns | u64 event_count | 10 zero bytes
    record (16 bytes)  u64 t | u16 x | u16 y | i8 polarity | 3 zero bytes
"""

from __future__ import annotations

import json
import re
import struct
from pathlib import Path

import numpy as np

from .events import EventStream, canonical_order, validate_stream

MAGIC = b"IEVT"
VERSION = 1
HEADER = struct.Struct("<4sHHHIQ10s")
HEADER_SIZE = HEADER.size
RECORD_SIZE = 16
RECORD_DTYPE = np.dtype(
    {
        "names": ["t", "x", "y", "p", "pad0", "pad1", "pad2"],
        "formats": ["<u8", "<u2", "<u2", "i1", "u1", "u1", "u1"],
        "offsets": [0, 8, 10, 12, 13, 14, 15],
        "itemsize": RECORD_SIZE,
    }
)


class DecodeError(ValueError):
    """Malformed input; ``offset`` is the first offending byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class BadMagicError(DecodeError):
    pass


class VersionError(DecodeError):
    pass


class ReservedBytesError(DecodeError):
    pass


class TruncatedError(DecodeError):
    pass


class TrailingBytesError(DecodeError):
    pass


class PadBytesError(DecodeError):
    pass


class PolarityError(DecodeError):
    pass


class TimestampOverflowError(DecodeError):
    pass


class StreamValidationError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid stream: " + "; ".join(map(str, self.violations)))


class CsvFormatError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def encode_events(stream: EventStream) -> bytes:
    violations = validate_stream(stream)
    if violations:
        raise StreamValidationError(violations)
    if stream.width > 0xFFFF or stream.height > 0xFFFF or stream.tick_ns > 0xFFFFFFFF:
        raise ValueError("sensor geometry or tick does not fit the IEVT header")
    n = len(stream)
    header = HEADER.pack(MAGIC, VERSION, stream.width, stream.height,
                         stream.tick_ns, n, bytes(10))
    rec = np.zeros(n, dtype=RECORD_DTYPE)
    rec["t"] = stream.t
    rec["x"] = stream.x
    rec["y"] = stream.y
    rec["p"] = stream.p
    return header + rec.tobytes()


def decode_events(data: bytes) -> EventStream:
    """Parse an IEVT blob.

    Structural problems raise a :class:`DecodeError` subclass naming the
    byte offset. Event ordering is not checked here; run
    :func:`~ieim.events.validate_stream` on the result for that.
    """
    data = memoryview(data).cast("B")
    if len(data) < 4 or bytes(data[:4]) != MAGIC:
        if len(data) < 4 and bytes(data) == MAGIC[: len(data)]:
            raise TruncatedError("truncated", len(data))
        raise BadMagicError("bad magic", 0)
    if len(data) < HEADER_SIZE:
        raise TruncatedError("truncated", len(data))
    _, version, width, height, tick_ns, count, reserved = HEADER.unpack_from(data)
    if version != VERSION:
        raise VersionError(f"unsupported version {version}", 4)
    if tick_ns == 0:
        raise DecodeError("zero tick duration", 10)
    if any(reserved):
        j = next(i for i, b in enumerate(reserved) if b)
        raise ReservedBytesError("nonzero reserved byte", 22 + j)
    body = len(data) - HEADER_SIZE
    have = body // RECORD_SIZE
    if count > have:
        raise TruncatedError("truncated", HEADER_SIZE + have * RECORD_SIZE)
    if body > count * RECORD_SIZE:
        raise TrailingBytesError("trailing bytes", HEADER_SIZE + count * RECORD_SIZE)
    rec = np.frombuffer(data, dtype=RECORD_DTYPE, count=count, offset=HEADER_SIZE)
    if count:
        pads = np.stack([rec["pad0"], rec["pad1"], rec["pad2"]], axis=1)
        bad = np.flatnonzero(pads.any(axis=1))
        if len(bad):
            i = int(bad[0])
            j = int(np.flatnonzero(pads[i])[0])
            raise PadBytesError("nonzero pad", HEADER_SIZE + i * RECORD_SIZE + 13 + j)
        p = rec["p"]
        bad = np.flatnonzero((p != 1) & (p != -1))
        if len(bad):
            i = int(bad[0])
            raise PolarityError(f"bad polarity {int(p[i])}", HEADER_SIZE + i * RECORD_SIZE + 12)
        bad = np.flatnonzero(rec["t"] > np.iinfo(np.int64).max)
        if len(bad):
            raise TimestampOverflowError("timestamp overflow",
                                         HEADER_SIZE + int(bad[0]) * RECORD_SIZE)
    return EventStream(width, height, tick_ns,
                       rec["t"].astype(np.int64), rec["x"], rec["y"], rec["p"])


def write_ievt(path, stream: EventStream) -> None:
    Path(path).write_bytes(encode_events(stream))


def read_ievt(path) -> EventStream:
    return decode_events(Path(path).read_bytes())


def read_csv_events(text: str, width: int, height: int, tick_ns: int = 1000) -> EventStream:
    """Parse ``t,x,y,p`` rows (optional header row) into a canonically sorted stream."""
    ts, xs, ys, ps = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        if lineno == 1 and len(fields) == 4 and not all(_is_int(f) for f in fields):
            if all(re.fullmatch(r"[A-Za-z_]\w*", f) for f in fields):
                continue
        if len(fields) != 4 or not all(_is_int(f) for f in fields):
            raise CsvFormatError(f"malformed row {raw!r}", lineno)
        t, x, y, p = map(int, fields)
        if t < 0:
            raise CsvFormatError("negative timestamp", lineno)
        if not (0 <= x < width and 0 <= y < height):
            raise CsvFormatError(f"coordinate ({x}, {y}) out of bounds", lineno)
        if p not in (1, -1):
            raise CsvFormatError(f"polarity must be +1 or -1, got {p}", lineno)
        ts.append(t); xs.append(x); ys.append(y); ps.append(p)
    stream = EventStream(width, height, tick_ns, ts, xs, ys, ps)
    return stream.take(canonical_order(stream.t, stream.x, stream.y, stream.p,
                                       width, height))


def _is_int(s: str) -> bool:
    return re.fullmatch(r"[+-]?\d+", s) is not None


# --- PGM ---------------------------------------------------------------------

_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def write_pgm(grid, maxval: int = 255) -> bytes:
    """Binary P5 PGM; 16-bit samples are big-endian."""
    if maxval not in (255, 65535):
        raise ValueError("maxval must be 255 or 65535")
    a = np.asarray(grid)
    if a.ndim != 2:
        raise ValueError("grid must be 2-D")
    if a.size and (a.min() < 0 or a.max() > maxval):
        raise ValueError(f"values must lie in [0, {maxval}]")
    if np.issubdtype(a.dtype, np.floating) and not np.array_equal(a, np.round(a)):
        raise ValueError("PGM samples must be integers")
    h, w = a.shape
    body = a.astype(">u2" if maxval > 255 else "u1").tobytes()
    return f"P5\n{w} {h}\n{maxval}\n".encode("ascii") + body


def read_pgm(data: bytes) -> np.ndarray:
    data = bytes(data)
    if data[:2] != b"P5":
        raise DecodeError("not a binary PGM (P5)", 0)
    pos = 2
    vals = []
    for _ in range(3):
        m = _TOKEN.match(data, pos)
        if m is None or not m.group(1).isdigit():
            raise DecodeError("bad PGM header", pos)
        vals.append(int(m.group(1)))
        pos = m.end()
    w, h, maxval = vals
    if maxval not in (255, 65535):
        raise DecodeError(f"unsupported maxval {maxval}", pos)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise DecodeError("bad PGM header", pos)
    pos += 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    need = w * h * dtype.itemsize
    if len(data) - pos < need:
        raise TruncatedError("truncated", len(data))
    arr = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    return arr.astype(np.uint16 if maxval > 255 else np.uint8)


def save_density(path, grid) -> None:
    """Write a non-negative float grid as 16-bit PGM plus a JSON scale sidecar."""
    g = np.asarray(grid, dtype=np.float64)
    peak = float(g.max()) if g.size else 0.0
    scale = peak / 65535 if peak > 0 else 1.0
    raw = np.clip(np.round(g / scale), 0, 65535).astype(np.uint16)
    path = Path(path)
    path.write_bytes(write_pgm(raw, 65535))
    sidecar_path(path).write_text(json.dumps({"scale": scale, "offset": 0.0}))


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_suffix(".json")


def load_density(path) -> np.ndarray:
    """Float grid from a PGM; the sidecar's scale/offset apply if present,
    otherwise samples are divided by maxval."""
    path = Path(path)
    raw = read_pgm(path.read_bytes())
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
        return raw.astype(np.float64) * float(meta["scale"]) + float(meta.get("offset", 0.0))
    return raw.astype(np.float64) / (65535.0 if raw.dtype == np.uint16 else 255.0)
