"""Tropical-cyclone eye tracking from minimum sea-level pressure.

The eye at each step is the grid cell of minimum SLP, searched inside a seed
box on the first state and, on later states, inside a great-circle ball of
gate_km around the previous fix. Gating keeps a fast-moving storm while
refusing to teleport to an unrelated low; ``gate_km=None`` reproduces the
plain global-argmin procedure. Eyes are reported at grid-cell resolution,
no sub-cell interpolation.

Ties in the argmin break to the smallest (i_lat, i_lon) in lexicographic
order, which makes the whole tracker a pure function of its inputs.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateVortex,
    EmptySearchRegion,
    FormatError,
    InvalidData,
    IoError,
    TrackLost,
    TrackTimeMismatch,
)
from .rollout import Trajectory, TrajectoryEntry
from .schema import ChannelSchema, GridGeometry, region_indices
from .tensorio import SECONDS_PER_HOUR, NormStats, StateTensor, iso_utc, parse_time

__all__ = [
    "EARTH_RADIUS_KM",
    "EyeFix",
    "CycloneTrack",
    "TrackerConfig",
    "haversine_km",
    "detect_eye",
    "extract_track",
    "track_error",
    "synth_cyclone",
    "synth_states",
    "linear_track",
    "write_track_csv",
    "read_track_csv",
    "TRACK_CSV_HEADER",
]

EARTH_RADIUS_KM = 6371.0

# Physically plausible sea-level pressure: the deepest observed cyclones sit
# near 870 hPa, strong highs near 1085 hPa.
PRESSURE_BAND_PA = (80000.0, 110000.0)

TRACK_CSV_HEADER = ["step", "valid_time_iso8601", "lat_deg", "lon_deg", "min_slp_pa"]


@dataclass(frozen=True)
class EyeFix:
    valid_time: int
    lat: float
    lon: float
    min_pressure: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidData(f"eye latitude {self.lat} outside [-90, 90]")
        if not 0.0 <= self.lon < 360.0:
            raise InvalidData(f"eye longitude {self.lon} outside [0, 360)")
        lo, hi = PRESSURE_BAND_PA
        if not lo < self.min_pressure < hi:
            raise InvalidData(
                f"eye pressure {self.min_pressure} Pa outside the plausibility "
                f"band ({lo:.0f}, {hi:.0f})"
            )


@dataclass(frozen=True)
class CycloneTrack:
    fixes: tuple[EyeFix, ...]

    def __post_init__(self) -> None:
        times = [f.valid_time for f in self.fixes]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvalidData("track timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.fixes)

    def __iter__(self):
        return iter(self.fixes)

    def times(self) -> list[int]:
        return [f.valid_time for f in self.fixes]


@dataclass(frozen=True)
class TrackerConfig:
    seed_region: tuple[float, float, float, float]
    gate_km: float | None = 750.0
    pressure_channel: str = "msl"
    smooth: bool = False

    def __post_init__(self) -> None:
        if self.gate_km is not None and not self.gate_km > 0:
            raise ValueError(f"gate_km must be > 0 (or None to disable), got {self.gate_km}")


def haversine_km(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in km between (lat, lon) points, R = 6371.0 km."""
    lat1, lon1 = math.radians(a[0]), math.radians(a[1])
    lat2, lon2 = math.radians(b[0]), math.radians(b[1])
    s_lat = math.sin((lat2 - lat1) / 2.0)
    s_lon = math.sin((lon2 - lon1) / 2.0)
    h = s_lat * s_lat + math.cos(lat1) * math.cos(lat2) * s_lon * s_lon
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def _haversine_grid_km(geom: GridGeometry, lat0: float, lon0: float) -> np.ndarray:
    """Distance from (lat0, lon0) to every cell, vectorized, in km."""
    lats = np.radians(geom.lats())[:, None]
    lons = np.radians(geom.lons())[None, :]
    p_lat = math.radians(lat0)
    p_lon = math.radians(lon0)
    s_lat = np.sin((lats - p_lat) / 2.0)
    s_lon = np.sin((lons - p_lon) / 2.0)
    h = s_lat * s_lat + math.cos(p_lat) * np.cos(lats) * s_lon * s_lon
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def _box3(field: np.ndarray) -> np.ndarray:
    """3x3 box filter: circular in longitude, edge-replicated in latitude."""
    padded = np.pad(field.astype(np.float64), ((1, 1), (0, 0)), mode="edge")
    padded = np.pad(padded, ((0, 0), (1, 1)), mode="wrap")
    out = np.zeros_like(field, dtype=np.float64)
    for di in (0, 1, 2):
        for dj in (0, 1, 2):
            out += padded[di:di + field.shape[0], dj:dj + field.shape[1]]
    return out / 9.0


def detect_eye(
    state: StateTensor,
    cfg: TrackerConfig,
    prev: EyeFix | None = None,
) -> EyeFix:
    """Minimum-pressure cell within the search set.

    Search set: the seed region when prev is absent; else every cell within
    gate_km of prev (the whole grid when gating is disabled). With smoothing
    on, the argmin runs over a 3x3 box mean but the reported pressure is the
    raw cell value.
    """
    raw = state.channel(cfg.pressure_channel)
    det = _box3(raw) if cfg.smooth else raw
    geom = state.geom
    masked = np.full(det.shape, np.inf, dtype=np.float64)
    if prev is None:
        rows, cols = region_indices(geom, *cfg.seed_region)
        if rows.size == 0 or cols.size == 0:
            raise EmptySearchRegion(
                f"seed region {cfg.seed_region} contains no grid cells"
            )
        masked[np.ix_(rows, cols)] = det[np.ix_(rows, cols)]
    elif cfg.gate_km is not None:
        dist = _haversine_grid_km(geom, prev.lat, prev.lon)
        inside = dist <= cfg.gate_km
        if not inside.any():
            raise EmptySearchRegion(
                f"no grid cell within {cfg.gate_km} km of ({prev.lat}, {prev.lon})"
            )
        masked[inside] = det[inside]
    else:
        masked[:] = det
    # Row-major argmin returns the first occurrence of the minimum, which is
    # exactly the smallest (i_lat, i_lon) lexicographic tie-break.
    flat = int(np.argmin(masked))
    i, j = divmod(flat, geom.n_lon)
    lat, lon = geom.latlon_of(i, j)
    return EyeFix(
        valid_time=state.valid_time,
        lat=lat,
        lon=lon,
        min_pressure=float(raw[i, j]),
    )


def _cell_diagonal_km(geom: GridGeometry, lat: float, lon: float) -> float:
    # Diagonal of one grid cell at this latitude, measured toward the equator
    # so the probe point stays on the sphere near the poles.
    lat2 = lat - math.copysign(abs(geom.lat_step), lat if lat != 0 else 1.0)
    lon2 = (lon + geom.lon_step) % 360.0
    return haversine_km((lat, lon), (lat2, lon2))


def extract_track(traj: Trajectory, cfg: TrackerConfig) -> CycloneTrack:
    """One eye fix per trajectory state, chained with continuity gating.

    Raises TrackLost when the gated search region is empty, and when the
    fix lands at the gate boundary (within one cell diagonal of gate_km from
    the previous fix): an argmin pinned to the rim of the search ball means
    the true minimum escaped the gate, not that the storm sat exactly there.
    """
    if len(traj) == 0:
        raise ValueError("trajectory is empty")
    fixes: list[EyeFix] = []
    prev: EyeFix | None = None
    for k in range(len(traj)):
        state = traj.state(k)
        try:
            fix = detect_eye(state, cfg, prev)
        except EmptySearchRegion as exc:
            raise TrackLost(k, str(exc)) from exc
        if prev is not None and cfg.gate_km is not None:
            moved = haversine_km((prev.lat, prev.lon), (fix.lat, fix.lon))
            rim = cfg.gate_km - _cell_diagonal_km(state.geom, prev.lat, prev.lon)
            if moved > rim:
                raise TrackLost(
                    k,
                    f"eye moved {moved:.1f} km against a {cfg.gate_km:.0f} km gate; "
                    "minimum pinned to the search boundary",
                )
        fixes.append(fix)
        prev = fix
    return CycloneTrack(tuple(fixes))


def track_error(pred: CycloneTrack, truth: CycloneTrack) -> tuple[list[float], float]:
    """Per-fix great-circle errors in km, plus their mean."""
    if len(pred) != len(truth):
        raise TrackTimeMismatch(f"track lengths differ: {len(pred)} vs {len(truth)}")
    if pred.times() != truth.times():
        raise TrackTimeMismatch("track timestamps differ")
    errors = [
        haversine_km((p.lat, p.lon), (t.lat, t.lon))
        for p, t in zip(pred.fixes, truth.fixes)
    ]
    mean = sum(errors) / len(errors) if errors else 0.0
    return errors, mean


def linear_track(
    t0: int,
    dt_hours: int,
    n_fixes: int,
    lat0: float,
    lon0: float,
    dlat: float,
    dlon: float,
    min_pressure: float = 96300.0,
) -> CycloneTrack:
    """Straight-line track spec: fix k at (lat0 + k*dlat, lon0 + k*dlon)."""
    fixes = tuple(
        EyeFix(
            valid_time=t0 + k * dt_hours * SECONDS_PER_HOUR,
            lat=lat0 + k * dlat,
            lon=(lon0 + k * dlon) % 360.0,
            min_pressure=min_pressure,
        )
        for k in range(n_fixes)
    )
    return CycloneTrack(fixes)


def synth_states(
    track: CycloneTrack,
    background_hpa: float,
    depth_hpa: float,
    radius_deg: float,
    geom: GridGeometry,
    schema: ChannelSchema,
    stats: NormStats | None = None,
    pressure_channel: str = "msl",
):
    """Yield the synthetic states one at a time (see synth_cyclone)."""
    cell_deg = max(abs(geom.lat_step), geom.lon_step)
    if radius_deg < cell_deg:
        raise DegenerateVortex(
            f"radius {radius_deg} deg is below one grid cell ({cell_deg} deg)"
        )
    lat_south = geom.lat_start + (geom.n_lat - 1) * geom.lat_step
    for f in track.fixes:
        if not (lat_south - 1e-9 <= f.lat <= geom.lat_start + 1e-9):
            raise ValueError(f"track fix at lat {f.lat} falls outside the grid rows")
    p_idx = schema.index(pressure_channel)
    fill = np.zeros(len(schema), dtype=np.float64)
    if stats is not None:
        for c, name in enumerate(schema.names):
            if name in stats:
                fill[c] = stats.mean(name)
    km_per_deg = EARTH_RADIUS_KM * math.pi / 180.0
    for f in track.fixes:
        data = np.broadcast_to(
            fill[:, None, None].astype(np.float32), (len(schema), geom.n_lat, geom.n_lon)
        ).copy()
        dist_deg = _haversine_grid_km(geom, f.lat, f.lon) / km_per_deg
        msl_pa = background_hpa * 100.0 - depth_hpa * 100.0 * np.exp(
            -(dist_deg ** 2) / (2.0 * radius_deg ** 2)
        )
        data[p_idx] = msl_pa.astype(np.float32)
        yield StateTensor(data=data, schema=schema, geom=geom, valid_time=f.valid_time)


def synth_cyclone(
    track: CycloneTrack,
    background_hpa: float,
    depth_hpa: float,
    radius_deg: float,
    geom: GridGeometry,
    schema: ChannelSchema,
    stats: NormStats | None = None,
    pressure_channel: str = "msl",
) -> Trajectory:
    """Synthetic in-memory trajectory with a moving depression.

    The pressure channel is background minus a Gaussian of the given depth,
    with the Gaussian argument the great-circle angular distance from the
    fix, so the vortex is isotropic on the sphere. Channels other than the
    pressure one are filled with their stats mean (zero without stats).
    """
    states = list(
        synth_states(
            track, background_hpa, depth_hpa, radius_deg, geom, schema, stats, pressure_channel
        )
    )
    if len(track) >= 2:
        dt_hours = (track.fixes[1].valid_time - track.fixes[0].valid_time) // SECONDS_PER_HOUR
    else:
        dt_hours = 6
    entries = tuple(
        TrajectoryEntry(index=k, valid_time=st.valid_time, state=st)
        for k, st in enumerate(states)
    )
    return Trajectory(entries=entries, dt_hours=int(dt_hours), stepper_desc="synth_cyclone")


def write_track_csv(track: CycloneTrack, destination: str | os.PathLike) -> None:
    """Track CSV: ``step,valid_time_iso8601,lat_deg,lon_deg,min_slp_pa``."""
    try:
        with open(destination, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(TRACK_CSV_HEADER)
            for k, fix in enumerate(track.fixes):
                writer.writerow(
                    [k, iso_utc(fix.valid_time), repr(fix.lat), repr(fix.lon), repr(fix.min_pressure)]
                )
    except OSError as exc:
        raise IoError(f"writing {destination}: {exc}") from exc


def read_track_csv(source: str | os.PathLike) -> CycloneTrack:
    try:
        f = open(source, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"reading {source}: {exc}") from exc
    with f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != TRACK_CSV_HEADER:
            raise FormatError(
                f"track header must be {','.join(TRACK_CSV_HEADER)!r}, got {header!r}"
            )
        fixes = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise FormatError(f"track line {lineno}: expected 5 fields")
            try:
                fixes.append(
                    EyeFix(
                        valid_time=parse_time(row[1]),
                        lat=float(row[2]),
                        lon=float(row[3]),
                        min_pressure=float(row[4]),
                    )
                )
            except ValueError as exc:
                raise FormatError(f"track line {lineno}: {exc}") from exc
    return CycloneTrack(tuple(fixes))
