"""Reader/writer for the harness's state-file format.

Layout, all little endian:

    8 bytes   magic "WXSTATE1"
    u32       version (1)
    u32 x 3   n_channels, n_lat, n_lon
    i64       valid time, Unix seconds UTC, whole hours
    per channel: u16 name length + UTF-8 name
    payload   n_channels * n_lat * n_lon float32,
              [channel][lat north->south][lon west->east]

Implemented here independently so the bridge stays importable without the
harness; the byte layout is the shared contract between the two.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import BadStateFile

MAGIC = b"WXSTATE1"
VERSION = 1
MAX_DIM = 16384
_HEADER = struct.Struct("<8sIIIIq")


@dataclass(frozen=True)
class State:
    names: tuple[str, ...]
    data: np.ndarray  # (C, H, W) float32
    valid_time: int


def _read_exact(f, n: int, what: str) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise BadStateFile(f"file truncated in {what} ({len(buf)} of {n} bytes)")
    return buf


def read_state(path: str | os.PathLike) -> State:
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise BadStateFile(f"cannot open {path}: {exc}") from exc
    with f:
        magic, version, c, h, w, valid_time = _HEADER.unpack(
            _read_exact(f, _HEADER.size, "header")
        )
        if magic != MAGIC:
            raise BadStateFile(f"bad magic {magic!r}")
        if version != VERSION:
            raise BadStateFile(f"unsupported version {version}")
        if not 1 <= c <= MAX_DIM or not 2 <= h <= MAX_DIM or not 2 <= w <= MAX_DIM:
            raise BadStateFile(f"implausible dimensions {c}x{h}x{w}")
        names = []
        for _ in range(c):
            (ln,) = struct.unpack("<H", _read_exact(f, 2, "channel table"))
            raw = _read_exact(f, ln, "channel name")
            try:
                name = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise BadStateFile(f"undecodable channel name {raw!r}") from exc
            if not name:
                raise BadStateFile("empty channel name")
            names.append(name)
        if len(set(names)) != len(names):
            raise BadStateFile("duplicate channel names")
        count = c * h * w
        raw = f.read(count * 4)
        if len(raw) != count * 4:
            raise BadStateFile(
                f"payload truncated ({len(raw)} of {count * 4} bytes)"
            )
        data = np.frombuffer(raw, dtype="<f4")
        if f.read(1):
            raise BadStateFile("trailing bytes after payload")
        data = data.reshape(c, h, w)
    if valid_time % 3600 != 0:
        raise BadStateFile(f"valid time {valid_time} is not a whole hour")
    if not np.isfinite(data).all():
        raise BadStateFile("payload contains NaN or Inf")
    return State(names=tuple(names), data=data, valid_time=int(valid_time))


def write_state(state: State, path: str | os.PathLike) -> None:
    data = np.ascontiguousarray(state.data, dtype="<f4")
    if data.ndim != 3 or data.shape[0] != len(state.names):
        raise ValueError(f"data shape {data.shape} does not fit {len(state.names)} channels")
    c, h, w = data.shape
    header = _HEADER.pack(MAGIC, VERSION, c, h, w, state.valid_time)
    table = b"".join(
        struct.pack("<H", len(n.encode())) + n.encode() for n in state.names
    )
    dest = os.fspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(dest) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(header)
            f.write(table)
            f.write(data.tobytes())
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, dest)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def validate_file(path: str | os.PathLike) -> State:
    """Full decode; raises BadStateFile on any defect."""
    return read_state(path)


def copy_validated(src: str | os.PathLike, dst: str | os.PathLike) -> State:
    """Byte-exact copy of a state file, refused unless the source parses.

    Validation happens before anything lands at dst, so a malformed source
    never produces an output file. The copy itself is raw bytes: the output
    is guaranteed identical, not merely equivalent.
    """
    state = validate_file(src)
    dest = os.fspath(dst)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(dest) or ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as out, open(src, "rb") as inp:
            while True:
                chunk = inp.read(1 << 20)
                if not chunk:
                    break
                out.write(chunk)
            out.flush()
            os.fsync(out.fileno())
        os.replace(tmp, dest)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return state
