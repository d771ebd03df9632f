"""Autoregressive rollout: one initial state to a trajectory on disk.

A trajectory directory holds step_0000.wxs ... step_NNNN.wxs (step 0 is the
initial condition) plus manifest.json. The manifest records per-step file
names, SHA-256 payload digests, and wall-clock seconds; digests are what make
resume and tamper detection checkable. States stay on disk because a single
full-resolution 73-channel snapshot is ~302 MB; Trajectory therefore loads
states on demand rather than holding the whole run in memory.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from .errors import (
    FormatError,
    IoError,
    ManifestMismatch,
    TrajectoryGap,
)
from .normalize import denormalize, normalize
from .stepper import StepperSpec, step, validate_step_contract
from .tensorio import (
    SECONDS_PER_HOUR,
    NormStats,
    StateTensor,
    payload_digest,
    read_state,
    write_state,
)

__all__ = [
    "RolloutConfig",
    "TrajectoryEntry",
    "Trajectory",
    "run_rollout",
    "read_trajectory",
    "write_trajectory",
    "MANIFEST_NAME",
]

MANIFEST_NAME = "manifest.json"
MANIFEST_FORMAT = "wxcast-trajectory"
MANIFEST_VERSION = 1


@dataclass(frozen=True)
class RolloutConfig:
    stepper: StepperSpec
    n_steps: int
    out_dir: str
    dt_hours: int = 6
    keep_normalized: bool = False
    resume: bool = False
    scratch_dir: str | None = None

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")
        if self.dt_hours < 1:
            raise ValueError(f"dt_hours must be >= 1, got {self.dt_hours}")


@dataclass(frozen=True)
class TrajectoryEntry:
    """One state of a trajectory: either a file reference or an in-memory state."""

    index: int
    valid_time: int
    path: str | None = None
    state: StateTensor | None = None
    wall_seconds: float = 0.0
    payload_sha256: str | None = None

    def __post_init__(self) -> None:
        if (self.path is None) == (self.state is None):
            raise ValueError("entry needs exactly one of path or state")


@dataclass(frozen=True)
class Trajectory:
    """Ordered forecast states at fixed dt; index 0 is the initial condition."""

    entries: tuple[TrajectoryEntry, ...]
    dt_hours: int
    normalized: bool = False
    stepper_desc: str = ""
    directory: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("trajectory must contain at least one state")
        t0 = self.entries[0].valid_time
        for k, e in enumerate(self.entries):
            want = t0 + k * self.dt_hours * SECONDS_PER_HOUR
            if e.valid_time != want or e.index != k:
                raise ValueError(
                    f"entry {k} out of order: time {e.valid_time}, expected {want}"
                )

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def n_steps(self) -> int:
        return len(self.entries) - 1

    @property
    def initial_time(self) -> int:
        return self.entries[0].valid_time

    def valid_times(self) -> list[int]:
        return [e.valid_time for e in self.entries]

    def state(self, k: int) -> StateTensor:
        """Load state k (from memory or disk)."""
        e = self.entries[k]
        if e.state is not None:
            return e.state
        return read_state(e.path).replace(normalized=self.normalized)

    def states(self) -> list[StateTensor]:
        """All states, loaded eagerly. Fine for test grids, not for 73x720x1440 runs."""
        return [self.state(k) for k in range(len(self.entries))]


def _step_filename(k: int, normalized: bool) -> str:
    return f"step_{k:04d}.norm.wxs" if normalized else f"step_{k:04d}.wxs"


def _write_manifest(out_dir: str, doc: dict) -> None:
    path = os.path.join(out_dir, MANIFEST_NAME)
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"writing manifest in {out_dir}: {exc}") from exc


def _manifest_skeleton(initial: StateTensor, cfg: RolloutConfig, stepper_desc: str) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "schema_id": initial.schema.schema_id,
        "channel_names": list(initial.schema.names),
        "n_channels": len(initial.schema),
        "grid": {"n_lat": initial.geom.n_lat, "n_lon": initial.geom.n_lon},
        "dt_hours": cfg.dt_hours,
        "n_steps": cfg.n_steps,
        "normalized": cfg.keep_normalized,
        "initial_time": initial.valid_time,
        "stepper": stepper_desc,
        "steps": [],
    }


def _entry_doc(k: int, fname: str, valid_time: int, digest: str, wall: float) -> dict:
    return {
        "index": k,
        "file": fname,
        "valid_time": valid_time,
        "payload_sha256": digest,
        "wall_seconds": round(wall, 6),
    }


def _clear_trajectory_dir(out_dir: str) -> None:
    # Scoped cleanup: only files this module writes. Anything else in the
    # directory is left alone.
    for name in os.listdir(out_dir):
        if name == MANIFEST_NAME or (
            name.startswith("step_") and (name.endswith(".wxs") or name.endswith(".tmp"))
        ):
            os.unlink(os.path.join(out_dir, name))


def _validated_prefix(out_dir: str, manifest: dict) -> list[dict]:
    """Longest contiguous run of manifest steps whose files check out."""
    good: list[dict] = []
    t0 = manifest["initial_time"]
    dt_s = manifest["dt_hours"] * SECONDS_PER_HOUR
    for k, entry in enumerate(manifest["steps"]):
        if entry["index"] != k or entry["valid_time"] != t0 + k * dt_s:
            break
        path = os.path.join(out_dir, entry["file"])
        if not os.path.exists(path):
            break
        try:
            st = read_state(path)
        except Exception:
            break
        if st.valid_time != entry["valid_time"]:
            break
        if payload_digest(st) != entry["payload_sha256"]:
            break
        good.append(entry)
    return good


def run_rollout(
    initial: StateTensor,
    cfg: RolloutConfig,
    stats: NormStats | None = None,
) -> Trajectory:
    """Run the autoregressive loop, persisting each step before the next starts.

    With ``resume=True`` an existing directory is continued: the longest
    digest-validated prefix of step files is kept and stepping restarts from
    its last state. Without it the directory's step files are cleared first.
    Any stepper error aborts the run after a failure record lands in the
    manifest; completed step files stay on disk.
    """
    spec = cfg.stepper
    needs_stats = (
        spec.expects_normalized != initial.normalized
        or cfg.keep_normalized != spec.expects_normalized
        or cfg.keep_normalized != initial.normalized
    )
    if needs_stats and stats is None:
        raise ValueError(
            "stats are required whenever states must move between physical "
            "and normalized space (stepper input, persisted files, or both)"
        )
    os.makedirs(cfg.out_dir, exist_ok=True)
    desc = spec.describe()
    manifest = _manifest_skeleton(initial, cfg, desc)

    start_k = 0
    if cfg.resume:
        old = _load_manifest(cfg.out_dir, missing_ok=True)
        if old is not None:
            _check_resume_compat(old, manifest)
            if cfg.n_steps < len(old["steps"]) - 1:
                raise ManifestMismatch(
                    f"directory already holds {len(old['steps']) - 1} steps; "
                    f"cannot resume down to {cfg.n_steps} (use a fresh directory)"
                )
            prefix = _validated_prefix(cfg.out_dir, old)
            manifest["steps"] = prefix
            start_k = len(prefix)
    if start_k == 0:
        _clear_trajectory_dir(cfg.out_dir)
        manifest["steps"] = []

    def in_space(st: StateTensor, want_normalized: bool) -> StateTensor:
        if want_normalized and not st.normalized:
            return normalize(st, stats)
        if not want_normalized and st.normalized:
            return denormalize(st, stats)
        return st

    # The loop carries the state in stepper space: converted once up front
    # when the spaces differ, so norm/denorm round trips never accumulate.
    if start_k == 0:
        cur = in_space(initial, spec.expects_normalized)
    else:
        last = read_state(os.path.join(cfg.out_dir, manifest["steps"][-1]["file"]))
        last = last.replace(normalized=cfg.keep_normalized)
        cur = in_space(last, spec.expects_normalized)

    if start_k == 0:
        # Persist step 0 from the caller's state, not from stepper space: an
        # initial condition already in persisted space lands on disk bit-identical.
        p = in_space(initial, cfg.keep_normalized)
        fname = _step_filename(0, cfg.keep_normalized)
        write_state(p, os.path.join(cfg.out_dir, fname))
        manifest["steps"].append(_entry_doc(0, fname, p.valid_time, payload_digest(p), 0.0))
        _write_manifest(cfg.out_dir, manifest)
        start_k = 1

    for k in range(start_k, cfg.n_steps + 1):
        began = time.perf_counter()
        try:
            nxt = step(spec, cur, cfg.dt_hours, step_index=k, scratch_dir=cfg.scratch_dir)
            validate_step_contract(cur, nxt, cfg.dt_hours)
        except Exception as exc:
            manifest["failure"] = {
                "step_index": k,
                "error": type(exc).__name__,
                "detail": str(exc),
            }
            _write_manifest(cfg.out_dir, manifest)
            raise
        wall = time.perf_counter() - began
        p = in_space(nxt, cfg.keep_normalized)
        fname = _step_filename(k, cfg.keep_normalized)
        write_state(p, os.path.join(cfg.out_dir, fname))
        manifest["steps"].append(_entry_doc(k, fname, p.valid_time, payload_digest(p), wall))
        _write_manifest(cfg.out_dir, manifest)
        cur = nxt

    _write_manifest(cfg.out_dir, manifest)
    return _trajectory_from_manifest(cfg.out_dir, manifest)


def _check_resume_compat(old: dict, new: dict) -> None:
    for key in ("schema_id", "channel_names", "grid", "dt_hours", "normalized", "initial_time", "stepper"):
        if old.get(key) != new.get(key):
            raise ManifestMismatch(
                f"cannot resume: manifest {key} is {old.get(key)!r}, run wants {new.get(key)!r}"
            )


def _load_manifest(directory: str, missing_ok: bool = False) -> dict | None:
    path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(path):
        if missing_ok:
            return None
        raise IoError(f"no {MANIFEST_NAME} in {directory}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as exc:
        raise IoError(f"reading manifest: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest is not valid JSON: {exc}") from exc
    if doc.get("format") != MANIFEST_FORMAT or doc.get("version") != MANIFEST_VERSION:
        raise FormatError(
            f"not a {MANIFEST_FORMAT} v{MANIFEST_VERSION} manifest: "
            f"{doc.get('format')!r} v{doc.get('version')!r}"
        )
    return doc


def _trajectory_from_manifest(directory: str, manifest: dict) -> Trajectory:
    entries = tuple(
        TrajectoryEntry(
            index=e["index"],
            valid_time=e["valid_time"],
            path=os.path.join(directory, e["file"]),
            wall_seconds=e["wall_seconds"],
            payload_sha256=e["payload_sha256"],
        )
        for e in manifest["steps"]
    )
    return Trajectory(
        entries=entries,
        dt_hours=manifest["dt_hours"],
        normalized=manifest["normalized"],
        stepper_desc=manifest["stepper"],
        directory=directory,
    )


def read_trajectory(directory: str) -> Trajectory:
    """Load and validate a trajectory directory against its manifest.

    Every step file is re-read and digest-checked; gaps, tampering, and
    timestamp drift are rejected rather than passed through.
    """
    manifest = _load_manifest(directory)
    steps = manifest["steps"]
    expected = manifest["n_steps"] + 1
    if len(steps) != expected:
        failure = manifest.get("failure")
        hint = (
            f" (failure recorded at step {failure['step_index']}: {failure['error']})"
            if failure
            else ""
        )
        raise ManifestMismatch(
            f"manifest claims {manifest['n_steps']} steps but lists {len(steps)} "
            f"of {expected} states{hint}"
        )
    t0 = manifest["initial_time"]
    dt_s = manifest["dt_hours"] * SECONDS_PER_HOUR
    names = tuple(manifest["channel_names"])
    grid = manifest["grid"]
    for k, e in enumerate(steps):
        if e["index"] != k:
            raise ManifestMismatch(f"manifest step {k} carries index {e['index']}")
        if e["valid_time"] != t0 + k * dt_s:
            raise ManifestMismatch(f"manifest step {k} timestamp off the {manifest['dt_hours']} h cadence")
        path = os.path.join(directory, e["file"])
        if not os.path.exists(path):
            raise TrajectoryGap(f"step file {e['file']} missing from {directory}")
        st = read_state(path)
        if st.schema.names != names:
            raise ManifestMismatch(f"{e['file']}: channel names differ from manifest")
        if (st.geom.n_lat, st.geom.n_lon) != (grid["n_lat"], grid["n_lon"]):
            raise ManifestMismatch(f"{e['file']}: grid differs from manifest")
        if st.valid_time != e["valid_time"]:
            raise ManifestMismatch(f"{e['file']}: valid_time differs from manifest")
        if payload_digest(st) != e["payload_sha256"]:
            raise ManifestMismatch(f"{e['file']}: payload digest differs from manifest")
    return _trajectory_from_manifest(directory, manifest)


def write_trajectory(
    states,
    out_dir: str,
    dt_hours: int,
    stepper_desc: str = "synthetic",
    normalized: bool = False,
) -> Trajectory:
    """Persist a state sequence (any iterable, consumed once) as a trajectory
    directory. States are written as they arrive, so a generator of
    full-resolution snapshots never has to fit in memory at once."""
    it = iter(states)
    first = next(it, None)
    if first is None:
        raise ValueError("need at least one state")
    os.makedirs(out_dir, exist_ok=True)
    _clear_trajectory_dir(out_dir)
    manifest = {
        "format": MANIFEST_FORMAT,
        "version": MANIFEST_VERSION,
        "schema_id": first.schema.schema_id,
        "channel_names": list(first.schema.names),
        "n_channels": len(first.schema),
        "grid": {"n_lat": first.geom.n_lat, "n_lon": first.geom.n_lon},
        "dt_hours": dt_hours,
        "n_steps": 0,
        "normalized": normalized,
        "initial_time": first.valid_time,
        "stepper": stepper_desc,
        "steps": [],
    }
    k = 0
    st = first
    while st is not None:
        fname = _step_filename(k, normalized)
        write_state(st, os.path.join(out_dir, fname))
        manifest["steps"].append(_entry_doc(k, fname, st.valid_time, payload_digest(st), 0.0))
        manifest["n_steps"] = k
        k += 1
        st = next(it, None)
    _write_manifest(out_dir, manifest)
    return _trajectory_from_manifest(out_dir, manifest)
