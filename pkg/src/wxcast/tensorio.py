"""Binary state-file (WXS1) and normalization-statistics CSV I/O.

WXS1 layout, all integers little-endian:

    magic      8 bytes ASCII "WXSTATE1"
    version    u32, currently 1
    C, H, W    u32 each
    valid_time i64, Unix seconds UTC
    channels   C entries of (u16 byte length, UTF-8 name)
    payload    C*H*W float32, order [channel][lat north->south][lon west->east]

The channel-name table is the schema: readers reconstruct channel order from
it, so files written with a different ordering are detected rather than
silently misread. The file carries no geometry block; the grid is implied by
(H, W) through the global-grid convention (row 0 at +90, column 0 at 0E), so
only full-globe states may be serialized.

Stats files are CSV with header ``channel,mean,std``, one row per channel,
UTF-8, LF line endings.
"""

from __future__ import annotations

import csv
import math
import os
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone
from hashlib import sha256

import numpy as np

from .errors import (
    CorruptFile,
    DuplicateStats,
    FormatError,
    InvalidData,
    InvalidStats,
    IoError,
    StatsIncomplete,
)
from .schema import ChannelSchema, GridGeometry

__all__ = [
    "MAGIC",
    "VERSION",
    "MAX_DIM",
    "StateTensor",
    "NormStats",
    "write_state",
    "read_state",
    "read_stats",
    "write_stats",
    "payload_digest",
    "iso_utc",
    "parse_time",
]

MAGIC = b"WXSTATE1"
VERSION = 1
# Allocation guard: a hostile header may not request more than
# 16384^3 cells; the canonical grid is 73 x 720 x 1440.
MAX_DIM = 16384

_HEADER = struct.Struct("<8sIIIIq")

SECONDS_PER_HOUR = 3600


@dataclass(frozen=True, eq=False)
class StateTensor:
    """One atmospheric snapshot: C x H x W float32 grid plus timestamp.

    ``normalized`` is an in-memory flag only; it is never serialized. Files
    always carry physical units unless the caller names them ``*.norm.wxs``.
    """

    data: np.ndarray
    schema: ChannelSchema
    geom: GridGeometry
    valid_time: int
    normalized: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        if arr.dtype != np.float32:
            arr = arr.astype(np.float32)
        object.__setattr__(self, "data", arr)
        if arr.ndim != 3:
            raise InvalidData(f"state data must be C x H x W, got shape {arr.shape}")
        c, h, w = arr.shape
        if c != len(self.schema):
            raise InvalidData(f"data has {c} channels but schema {self.schema.schema_id!r} has {len(self.schema)}")
        if (h, w) != (self.geom.n_lat, self.geom.n_lon):
            raise InvalidData(f"data is {h}x{w} but geometry is {self.geom.n_lat}x{self.geom.n_lon}")
        if not np.isfinite(arr).all():
            raise InvalidData("state payload contains NaN or Inf")
        t = int(self.valid_time)
        object.__setattr__(self, "valid_time", t)
        if t % SECONDS_PER_HOUR != 0:
            raise InvalidData(f"valid_time {t} is not a whole hour (multiple of 3600 s)")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    def channel(self, name: str) -> np.ndarray:
        """2-D view of one channel."""
        return self.data[self.schema.index(name)]

    def replace(self, **kw) -> "StateTensor":
        """Copy with the given fields swapped out (revalidates)."""
        args = {
            "data": self.data,
            "schema": self.schema,
            "geom": self.geom,
            "valid_time": self.valid_time,
            "normalized": self.normalized,
        }
        args.update(kw)
        return StateTensor(**args)


@dataclass(frozen=True)
class NormStats:
    """Per-channel (mean, std) pairs keyed by channel name, std > 0."""

    pairs: dict[str, tuple[float, float]]

    def __post_init__(self) -> None:
        for name, (mean, std) in self.pairs.items():
            if not (math.isfinite(mean) and math.isfinite(std)):
                raise InvalidStats(f"non-finite stats for channel {name!r}")
            if std <= 0:
                raise InvalidStats(f"std must be > 0, got {std!r} for channel {name!r}")

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, name: str) -> bool:
        return name in self.pairs

    def mean(self, name: str) -> float:
        return self.pairs[name][0]

    def std(self, name: str) -> float:
        return self.pairs[name][1]

    def arrays(self, schema: ChannelSchema) -> tuple[np.ndarray, np.ndarray]:
        """(mean, std) float64 vectors in schema channel order."""
        missing = [n for n in schema.names if n not in self.pairs]
        if missing:
            raise StatsIncomplete(f"stats missing channels: {', '.join(missing)}")
        means = np.array([self.pairs[n][0] for n in schema.names], dtype=np.float64)
        stds = np.array([self.pairs[n][1] for n in schema.names], dtype=np.float64)
        return means, stds

    def bound_to(self, schema: ChannelSchema) -> "NormStats":
        """Stats restricted to exactly the schema's channels, in schema order."""
        missing = [n for n in schema.names if n not in self.pairs]
        if missing:
            raise StatsIncomplete(f"stats missing channels: {', '.join(missing)}")
        return NormStats({n: self.pairs[n] for n in schema.names})


def write_state(state: StateTensor, destination: str | os.PathLike) -> None:
    """Serialize a state to the WXS1 format, atomically (tmp file + rename).

    Byte-for-byte deterministic for identical inputs. Only global grids may
    be written: the format has no geometry block, so a cropped state would
    be misread as a small globe.
    """
    if not state.geom.is_global:
        raise InvalidData(
            "only global grids can be serialized; the WXS1 format derives "
            "geometry from (H, W) alone"
        )
    c, h, w = state.data.shape
    parts = [_HEADER.pack(MAGIC, VERSION, c, h, w, state.valid_time)]
    for name in state.schema.names:
        raw = name.encode("utf-8")
        if not 0 < len(raw) <= 0xFFFF:
            raise InvalidData(f"channel name {name!r} not encodable in a u16-length field")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    payload = np.ascontiguousarray(state.data, dtype="<f4")
    tmp = os.fspath(destination) + ".tmp"
    try:
        with open(tmp, "wb") as f:
            f.write(b"".join(parts))
            f.write(payload.tobytes())
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, destination)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise IoError(f"writing {destination}: {exc}") from exc


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise CorruptFile(f"truncated file: expected {n} bytes of {what}, got {len(buf)}")
    return buf


def read_state(source: str | os.PathLike) -> StateTensor:
    """Read and validate a WXS1 file. The channel-name table becomes the schema."""
    try:
        f = open(source, "rb")
    except OSError as exc:
        raise IoError(f"reading {source}: {exc}") from exc
    with f:
        header = _read_exact(f, _HEADER.size, "header")
        magic, version, c, h, w, valid_time = _HEADER.unpack(header)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}, expected {VERSION}")
        if not (1 <= c <= MAX_DIM):
            raise FormatError(f"channel count {c} outside [1, {MAX_DIM}]")
        for axis, dim in (("H", h), ("W", w)):
            if not (2 <= dim <= MAX_DIM):
                raise FormatError(f"{axis}={dim} outside [2, {MAX_DIM}]")
        names = []
        for k in range(c):
            (nlen,) = struct.unpack("<H", _read_exact(f, 2, f"name length {k}"))
            raw = _read_exact(f, nlen, f"channel name {k}")
            try:
                name = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FormatError(f"channel name {k} is not valid UTF-8") from exc
            if not name:
                raise FormatError(f"channel name {k} is empty")
            if name in names:
                raise FormatError(f"duplicate channel name {name!r} in table")
            names.append(name)
        count = c * h * w
        flat = np.fromfile(f, dtype="<f4", count=count)
        if flat.size != count:
            raise CorruptFile(f"truncated payload: expected {count} values, got {flat.size}")
        if f.read(1) != b"":
            raise CorruptFile("trailing bytes after payload")
    data = flat.reshape(c, h, w)
    if not np.isfinite(data).all():
        raise InvalidData(f"payload of {source} contains NaN or Inf")
    schema = ChannelSchema.from_names(names, schema_id=_schema_id_for(names))
    geom = GridGeometry.global_grid(h, w)
    return StateTensor(data=data, schema=schema, geom=geom, valid_time=valid_time)


def _schema_id_for(names: list[str]) -> str:
    from .schema import build_schema

    for sid in ("fcnv2-73", "fcn-20"):
        if tuple(names) == build_schema(sid).names:
            return sid
    return "custom"


def read_stats(source: str | os.PathLike, schema: ChannelSchema) -> NormStats:
    """Read a stats CSV and bind it to a schema (every channel must be present).

    Rows for channels outside the schema are dropped at binding; the result
    is keyed by exactly the schema's names, in schema order.
    """
    try:
        f = open(source, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"reading {source}: {exc}") from exc
    with f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["channel", "mean", "std"]:
            raise FormatError(f"stats header must be 'channel,mean,std', got {header!r}")
        pairs: dict[str, tuple[float, float]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise FormatError(f"stats line {lineno}: expected 3 fields, got {len(row)}")
            name, mean_s, std_s = row
            if name in pairs:
                raise DuplicateStats(f"duplicate stats row for channel {name!r}")
            try:
                mean, std = float(mean_s), float(std_s)
            except ValueError as exc:
                raise InvalidStats(f"stats line {lineno}: non-numeric value") from exc
            pairs[name] = (mean, std)
    return NormStats(pairs).bound_to(schema)


def write_stats(stats: NormStats, destination: str | os.PathLike) -> None:
    """Write a stats CSV (header ``channel,mean,std``, LF line endings)."""
    try:
        with open(destination, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["channel", "mean", "std"])
            for name, (mean, std) in stats.pairs.items():
                writer.writerow([name, repr(mean), repr(std)])
    except OSError as exc:
        raise IoError(f"writing {destination}: {exc}") from exc


def payload_digest(state: StateTensor) -> str:
    """SHA-256 hex digest of the serialized payload bytes (little-endian f32)."""
    payload = np.ascontiguousarray(state.data, dtype="<f4")
    return sha256(payload.tobytes()).hexdigest()


def iso_utc(seconds: int) -> str:
    """Unix seconds to ISO-8601 Zulu text, e.g. 1536796800 -> '2018-09-13T00:00:00Z'."""
    return datetime.fromtimestamp(seconds, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_time(text: str) -> int:
    """ISO-8601 text (or bare Unix seconds) to Unix seconds."""
    try:
        return int(text)
    except ValueError:
        pass
    norm = text.strip()
    if norm.endswith("Z"):
        norm = norm[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(norm)
    except ValueError as exc:
        raise InvalidData(f"cannot parse time {text!r} (want ISO-8601 or Unix seconds)") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())
