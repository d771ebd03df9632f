"""Grid geometry and channel schemas for global atmospheric state tensors.

The canonical grid is the 0.25-degree ERA5 grid cropped to 720 rows: row 0
sits at +90.0 and the southernmost row at -89.75 (the -90.0 row is dropped,
matching the published layout of the model training data). Column 0 sits at
0 degrees east and longitudes increase eastward.

Channel naming convention for the 73-variable schema: pressure-level
variables are letter prefix plus decimal level ("z500", "r925"); the two
100-metre wind components are named "u100m"/"v100m" because the bare names
would collide with the 100 hPa wind channels, and channel names must be
unique (they key the state-file channel table and the statistics file).
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ChannelNotFound, IndexOutOfRange, UnknownSchema

__all__ = [
    "PRESSURE_LEVELS_HPA",
    "GridGeometry",
    "ChannelDescriptor",
    "ChannelSchema",
    "build_schema",
    "channel_index",
    "latlon_of",
    "parse_level_name",
    "region_indices",
]

PRESSURE_LEVELS_HPA: tuple[int, ...] = (
    50, 100, 150, 200, 250, 300, 400, 500, 600, 700, 850, 925, 1000,
)

_LEVEL_NAME_RE = re.compile(r"^([a-z]+?)(\d+)$")


@dataclass(frozen=True)
class GridGeometry:
    """Regular latitude-longitude grid.

    Row index 0 is the northernmost row and rows advance southward
    (lat_step < 0); column index 0 is at lon_start and columns advance
    eastward (lon_step > 0). Longitudes are reported modulo 360 so a grid
    cropped across the prime meridian still yields values in [0, 360).
    """

    n_lat: int = 720
    n_lon: int = 1440
    lat_start: float = 90.0
    lat_step: float = -0.25
    lon_start: float = 0.0
    lon_step: float = 0.25

    def __post_init__(self) -> None:
        if self.n_lat < 2 or self.n_lon < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.n_lat}x{self.n_lon}")
        if not self.lat_step < 0:
            raise ValueError("lat_step must be negative (rows go north to south)")
        if not self.lon_step > 0:
            raise ValueError("lon_step must be positive (columns go west to east)")
        lat_end = self.lat_start + (self.n_lat - 1) * self.lat_step
        if self.lat_start > 90.0 + 1e-9 or lat_end < -90.0 - 1e-9:
            raise ValueError(f"latitudes [{lat_end}, {self.lat_start}] exceed [-90, 90]")
        if self.n_lon * self.lon_step > 360.0 + 1e-9:
            raise ValueError("longitude span exceeds 360 degrees")

    @classmethod
    def global_grid(cls, n_lat: int, n_lon: int) -> "GridGeometry":
        """Full-globe grid: n_lat rows from +90 southward, n_lon columns from 0E.

        The south pole row is the one cropped, so global_grid(720, 1440) is
        the canonical ERA5 layout (+90.0 ... -89.75, 0.0 ... 359.75).
        """
        return cls(
            n_lat=n_lat,
            n_lon=n_lon,
            lat_start=90.0,
            lat_step=-180.0 / n_lat,
            lon_start=0.0,
            lon_step=360.0 / n_lon,
        )

    @classmethod
    def canonical(cls) -> "GridGeometry":
        return cls.global_grid(720, 1440)

    @property
    def is_global(self) -> bool:
        return self == GridGeometry.global_grid(self.n_lat, self.n_lon)

    def lats(self) -> np.ndarray:
        return self.lat_start + np.arange(self.n_lat) * self.lat_step

    def lons(self) -> np.ndarray:
        return (self.lon_start + np.arange(self.n_lon) * self.lon_step) % 360.0

    def latlon_of(self, i_lat: int, i_lon: int) -> tuple[float, float]:
        """Latitude and longitude of the cell at (i_lat, i_lon)."""
        if not (0 <= i_lat < self.n_lat):
            raise IndexOutOfRange(f"i_lat {i_lat} out of range [0, {self.n_lat})")
        if not (0 <= i_lon < self.n_lon):
            raise IndexOutOfRange(f"i_lon {i_lon} out of range [0, {self.n_lon})")
        lat = self.lat_start + i_lat * self.lat_step
        lon = (self.lon_start + i_lon * self.lon_step) % 360.0
        return (lat, lon)

    def nearest_cell(self, lat: float, lon: float) -> tuple[int, int]:
        """Indices of the grid cell whose anchor is nearest to (lat, lon).

        Inverse of latlon_of at cell anchors. Longitude wraps; latitude is
        clipped to the grid rows.
        """
        i = round((lat - self.lat_start) / self.lat_step)
        i = min(max(i, 0), self.n_lat - 1)
        j = round(((lon - self.lon_start) % 360.0) / self.lon_step) % self.n_lon
        return (int(i), int(j))

    def cell_of(self, lat: float, lon: float) -> tuple[int, int]:
        """Indices of the cell box containing (lat, lon).

        Cells are anchored at their northwest corner: row i covers
        [lat_i + lat_step, lat_i] going south, column j covers
        [lon_j, lon_j + lon_step) going east. Used by the renderer so that
        integer upscales stay pixel-aligned.
        """
        i = math.floor((lat - self.lat_start) / self.lat_step)
        i = min(max(i, 0), self.n_lat - 1)
        j = math.floor(((lon - self.lon_start) % 360.0) / self.lon_step) % self.n_lon
        return (int(i), int(j))


@dataclass(frozen=True)
class ChannelDescriptor:
    name: str
    long_name: str
    units: str
    pressure_level: int | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("channel name must be non-empty")
        if self.pressure_level is not None and self.pressure_level not in PRESSURE_LEVELS_HPA:
            raise ValueError(
                f"pressure level {self.pressure_level} hPa not in {PRESSURE_LEVELS_HPA}"
            )


@dataclass(frozen=True)
class ChannelSchema:
    """Ordered channel list; order defines the layout of every state tensor."""

    channels: tuple[ChannelDescriptor, ...]
    schema_id: str = "custom"

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for ch in self.channels:
            if ch.name in seen:
                raise ValueError(f"duplicate channel name {ch.name!r}")
            seen.add(ch.name)

    def __len__(self) -> int:
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(ch.name for ch in self.channels)

    def index(self, name: str) -> int:
        for i, ch in enumerate(self.channels):
            if ch.name == name:
                return i
        raise ChannelNotFound(f"channel {name!r} not in schema {self.schema_id!r}")

    def descriptor(self, name: str) -> ChannelDescriptor:
        return self.channels[self.index(name)]

    @classmethod
    def from_names(cls, names: list[str] | tuple[str, ...], schema_id: str = "custom") -> "ChannelSchema":
        """Schema from bare channel names, e.g. as recovered from a state file.

        Pressure levels are parsed back out of prefix+level names; units are
        filled in for names matching the canonical schemas, otherwise left blank.
        """
        canon: dict[str, ChannelDescriptor] = {}
        for sid in ("fcnv2-73", "fcn-20"):
            for ch in build_schema(sid).channels:
                canon.setdefault(ch.name, ch)
        chans = []
        for name in names:
            if name in canon:
                chans.append(canon[name])
                continue
            parsed = parse_level_name(name)
            level = parsed[1] if parsed else None
            chans.append(ChannelDescriptor(name, name, "", pressure_level=level))
        return cls(tuple(chans), schema_id=schema_id)


_SINGLE_LEVEL_73 = (
    ChannelDescriptor("u100m", "100 metre U wind component", "m s**-1"),
    ChannelDescriptor("v100m", "100 metre V wind component", "m s**-1"),
    ChannelDescriptor("u10", "10 metre U wind component", "m s**-1"),
    ChannelDescriptor("v10", "10 metre V wind component", "m s**-1"),
    ChannelDescriptor("t2", "2 metre temperature", "K"),
    ChannelDescriptor("sp", "Surface pressure", "Pa"),
    ChannelDescriptor("msl", "Mean sea level pressure", "Pa"),
    ChannelDescriptor("tcwv", "Total column vertically-integrated water vapour", "kg m**-2"),
)

_LEVEL_VARIABLES = (
    ("z", "Geopotential", "m**2 s**-2"),
    ("t", "Temperature", "K"),
    ("u", "U component of wind", "m s**-1"),
    ("v", "V component of wind", "m s**-1"),
    ("r", "Relative humidity", "%"),
)


def _build_fcnv2_73() -> ChannelSchema:
    # Single-level block in table row order (u10, u100m, v10, v100m, t2, sp,
    # msl, tcwv), then level blocks variable-major: z50..z1000, t50..t1000, ...
    order = ("u10", "u100m", "v10", "v100m", "t2", "sp", "msl", "tcwv")
    by_name = {ch.name: ch for ch in _SINGLE_LEVEL_73}
    chans = [by_name[n] for n in order]
    for prefix, long_name, units in _LEVEL_VARIABLES:
        for level in PRESSURE_LEVELS_HPA:
            chans.append(
                ChannelDescriptor(
                    f"{prefix}{level}",
                    f"{long_name} at {level} hPa",
                    units,
                    pressure_level=level,
                )
            )
    return ChannelSchema(tuple(chans), schema_id="fcnv2-73")


def _load_fcn20() -> ChannelSchema:
    # The 20-variable membership is recorded as package data (sourced from the
    # public model release), not hardcoded: see data/fcn20_channels.csv.
    text = resources.files("wxcast.data").joinpath("fcn20_channels.csv").read_text("utf-8")
    chans = []
    for row in csv.DictReader(text.splitlines()):
        level = int(row["pressure_level"]) if row["pressure_level"] else None
        chans.append(
            ChannelDescriptor(row["name"], row["long_name"], row["units"], pressure_level=level)
        )
    return ChannelSchema(tuple(chans), schema_id="fcn-20")


def build_schema(schema_id: str) -> ChannelSchema:
    """Canonical ordered schema for the given identifier.

    "fcnv2-73" is the 73-channel layout (8 single-level + 5 variables at 13
    pressure levels); "fcn-20" is the 20-channel layout of the first-generation
    model, loaded from package data.
    """
    if schema_id == "fcnv2-73":
        return _build_fcnv2_73()
    if schema_id == "fcn-20":
        return _load_fcn20()
    raise UnknownSchema(f"unknown schema id {schema_id!r} (expected 'fcnv2-73' or 'fcn-20')")


def channel_index(schema: ChannelSchema, name: str) -> int:
    """0-based position of the named channel."""
    return schema.index(name)


def latlon_of(geom: GridGeometry, i_lat: int, i_lon: int) -> tuple[float, float]:
    """Latitude and longitude of the grid cell at (i_lat, i_lon)."""
    return geom.latlon_of(i_lat, i_lon)


def region_indices(
    geom: GridGeometry,
    lat_min: float,
    lat_max: float,
    lon_min: float,
    lon_max: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Grid rows and columns inside a lat/lon box.

    Latitude selects the half-open band (lat_min, lat_max]; longitude the
    half-open arc [lon_min, lon_max), measured eastward and wrapping across
    0 degrees (lon_max == lon_min + 360, or the pair (0, 360), selects every
    column). On the canonical grid this makes box edges land between cells,
    e.g. (-20, -13, 166, 171) picks exactly 28 x 20 cells.

    Rows come back north to south; columns eastward from lon_min, so a box
    straddling 0E yields a contiguous, reassembled column order.
    """
    eps = 1e-9
    lats = geom.lats()
    rows = np.nonzero((lats > lat_min + eps) & (lats <= lat_max + eps))[0]
    width = (lon_max - lon_min) % 360.0
    if width == 0.0 and lon_max != lon_min:
        width = 360.0
    offsets = (geom.lons() - lon_min) % 360.0
    cols = np.nonzero(offsets < width - eps)[0]
    cols = cols[np.argsort(offsets[cols], kind="stable")]
    return rows, cols


def parse_level_name(name: str) -> tuple[str, int] | None:
    """Split a pressure-level channel name into (prefix, level).

    Returns None when the name does not follow the prefix+level convention
    or the level is not one of the 13 canonical pressure levels ("u10" is a
    10-metre wind, not a 10 hPa one).
    """
    m = _LEVEL_NAME_RE.match(name)
    if not m:
        return None
    level = int(m.group(2))
    if level not in PRESSURE_LEVELS_HPA:
        return None
    return (m.group(1), level)
