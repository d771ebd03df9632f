"""Raster rendering of state channels and regional subsetting.

Output is binary PPM (P6): codec-free, so determinism is testable byte for
byte. Sampling is nearest-neighbor from grid cells anchored at their
northwest corner, which keeps extremes intact and makes integer upscales
pixel-exact. Two projections: plain equirectangular over the state's extent,
and a Robinson globe (Pacific-centered by default) built by per-pixel inverse
mapping with the canonical 5-degree coefficient table.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import EmptyRegion, InvalidData, IoError
from .schema import GridGeometry, region_indices
from .tensorio import StateTensor

__all__ = [
    "RenderSpec",
    "Region",
    "robinson_project",
    "render_field",
    "render_raster",
    "subset_region",
    "write_ppm",
    "ROBINSON_X",
    "ROBINSON_Y",
]

# Canonical Robinson coefficients at 5-degree latitude nodes, 0..90:
# X scales parallel length, Y the distance from the equator.
ROBINSON_X = np.array([
    1.0000, 0.9986, 0.9954, 0.9900, 0.9822, 0.9730, 0.9600, 0.9427, 0.9216,
    0.8962, 0.8679, 0.8350, 0.7986, 0.7597, 0.7186, 0.6732, 0.6213, 0.5722,
    0.5322,
])
ROBINSON_Y = np.array([
    0.0000, 0.0620, 0.1240, 0.1860, 0.2480, 0.3100, 0.3720, 0.4340, 0.4958,
    0.5571, 0.6176, 0.6769, 0.7346, 0.7903, 0.8435, 0.8936, 0.9394, 0.9761,
    1.0000,
])
_NODES = np.arange(0.0, 91.0, 5.0)
_KX = 0.8487
_KY = 1.3523

# Piecewise-linear colormaps, control points at t = 0, .25, .5, .75, 1.
_COLORMAPS = {
    "diverging": np.array(
        [(59, 76, 192), (124, 159, 249), (255, 255, 255), (245, 136, 97), (180, 4, 38)],
        dtype=np.float64,
    ),
    "sequential": np.array(
        [(68, 1, 84), (59, 82, 139), (33, 145, 140), (94, 201, 98), (253, 231, 37)],
        dtype=np.float64,
    ),
}
_STOPS = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
BACKGROUND_RGB = (245, 245, 245)
GRATICULE_RGB = (80, 80, 80)

PROJECTIONS = ("equirect", "robinson")


@dataclass(frozen=True)
class RenderSpec:
    channel: str
    projection: str = "equirect"
    central_meridian: float = 180.0
    colormap: str = "diverging"
    value_range: tuple[float, float] | None = None
    width_px: int = 1440
    graticule_deg: float | None = 30.0

    def __post_init__(self) -> None:
        if self.projection not in PROJECTIONS:
            raise ValueError(f"projection must be one of {PROJECTIONS}, got {self.projection!r}")
        if self.colormap not in _COLORMAPS:
            raise ValueError(f"colormap must be one of {tuple(_COLORMAPS)}, got {self.colormap!r}")
        if self.width_px < 64:
            raise ValueError(f"width_px must be >= 64, got {self.width_px}")
        if self.value_range is not None and not self.value_range[0] < self.value_range[1]:
            raise ValueError(f"value_range min must be < max, got {self.value_range}")
        if self.graticule_deg is not None and self.graticule_deg <= 0:
            raise ValueError("graticule_deg must be positive (or None to disable)")


@dataclass(frozen=True)
class Region:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    @classmethod
    def parse(cls, text: str) -> "Region":
        parts = text.split(",")
        if len(parts) != 4:
            raise ValueError(f"region must be latmin,latmax,lonmin,lonmax, got {text!r}")
        return cls(*(float(p) for p in parts))


def robinson_project(
    lat: float, lon: float, central_meridian: float = 180.0
) -> tuple[float, float]:
    """Robinson map coordinates in map units.

    x = 0.8487 * X(|lat|) * dlon_radians, y = 1.3523 * sign(lat) * Y(|lat|),
    with X and Y interpolated linearly between the 5-degree table nodes and
    dlon the wrapped offset from the central meridian.
    """
    alat = abs(lat)
    xc = float(np.interp(alat, _NODES, ROBINSON_X))
    yc = float(np.interp(alat, _NODES, ROBINSON_Y))
    dlon = ((lon - central_meridian + 180.0) % 360.0) - 180.0
    x = _KX * xc * math.radians(dlon)
    y = _KY * math.copysign(yc, lat) if lat != 0 else 0.0
    return (x, y)


def _value_range(field: np.ndarray, spec: RenderSpec) -> tuple[float, float]:
    if spec.value_range is not None:
        return spec.value_range
    if spec.colormap == "diverging":
        m = float(np.max(np.abs(field)))
        return (-m, m)
    return (float(field.min()), float(field.max()))


def _colorize(values: np.ndarray, spec: RenderSpec, vmin: float, vmax: float) -> np.ndarray:
    if vmax > vmin:
        t = np.clip((values - vmin) / (vmax - vmin), 0.0, 1.0)
    else:
        # Degenerate range (constant field with no explicit range): mid-color.
        t = np.full(values.shape, 0.5)
    points = _COLORMAPS[spec.colormap]
    rgb = np.empty(values.shape + (3,), dtype=np.uint8)
    for ch in range(3):
        rgb[..., ch] = np.rint(np.interp(t, _STOPS, points[:, ch])).astype(np.uint8)
    return rgb


def _equirect_raster(state: StateTensor, spec: RenderSpec) -> np.ndarray:
    geom = state.geom
    field = state.channel(spec.channel)
    lat_span = geom.n_lat * abs(geom.lat_step)
    lon_span = geom.n_lon * geom.lon_step
    width = spec.width_px
    height = max(1, round(width * lat_span / lon_span))
    # Pixel centers to containing cells, in index space: floor-based lookup
    # against northwest-anchored cells makes an integer upscale exact.
    rows = np.floor((np.arange(height) + 0.5) * geom.n_lat / height).astype(int)
    cols = np.floor((np.arange(width) + 0.5) * geom.n_lon / width).astype(int)
    rows = np.clip(rows, 0, geom.n_lat - 1)
    cols = np.clip(cols, 0, geom.n_lon - 1)
    vmin, vmax = _value_range(field, spec)
    rgb = _colorize(field[rows[:, None], cols[None, :]], spec, vmin, vmax)
    if spec.graticule_deg:
        g = spec.graticule_deg
        for k in range(int(math.floor(-90.0 / g)), int(math.ceil(90.0 / g)) + 1):
            lat = k * g
            r = math.floor((geom.lat_start - lat) / lat_span * height)
            if r == height and lat <= geom.lat_start - lat_span + 1e-9:
                r = height - 1  # the southern boundary line
            if 0 <= r < height:
                rgb[r, :, :] = GRATICULE_RGB
        for k in range(int(math.ceil(360.0 / g))):
            lon = k * g
            off = (lon - geom.lon_start) % 360.0
            if off < lon_span - 1e-9:
                c = math.floor(off / lon_span * width)
                if 0 <= c < width:
                    rgb[:, c, :] = GRATICULE_RGB
    return rgb


def _robinson_raster(state: StateTensor, spec: RenderSpec) -> np.ndarray:
    geom = state.geom
    field = state.channel(spec.channel)
    width = spec.width_px
    x_half = _KX * math.pi
    height = max(2, round(width * _KY / x_half))
    xs = (np.arange(width) + 0.5 - width / 2.0) * (2.0 * x_half / width)
    ys = (height / 2.0 - np.arange(height) - 0.5) * (2.0 * _KY / height)

    ay = np.abs(ys) / _KY
    inside_y = ay <= 1.0
    # Both table lookups are piecewise linear between the same nodes, so
    # interpolating Y backwards is the exact inverse of the forward map.
    alat = np.interp(np.clip(ay, 0.0, 1.0), ROBINSON_Y, _NODES)
    lat = np.where(ys >= 0, alat, -alat)
    xcoef = np.interp(alat, _NODES, ROBINSON_X)

    dlam = xs[None, :] / (_KX * xcoef[:, None])
    inside = inside_y[:, None] & (np.abs(dlam) <= math.pi)
    lon = (spec.central_meridian + np.degrees(dlam)) % 360.0

    i = np.floor((lat[:, None] - geom.lat_start) / geom.lat_step).astype(int)
    i = np.broadcast_to(i, (height, width)).copy()
    j = np.floor(((lon - geom.lon_start) % 360.0) / geom.lon_step).astype(int)
    lat_south_edge = geom.lat_start + geom.n_lat * geom.lat_step
    on_grid = (
        inside
        & (np.broadcast_to(lat[:, None], (height, width)) <= geom.lat_start + 1e-9)
        & (np.broadcast_to(lat[:, None], (height, width)) >= lat_south_edge - 1e-9)
        & (j >= 0)
        & (j < geom.n_lon)
    )
    np.clip(i, 0, geom.n_lat - 1, out=i)
    j = np.clip(j, 0, geom.n_lon - 1)

    vmin, vmax = _value_range(field, spec)
    rgb = np.empty((height, width, 3), dtype=np.uint8)
    rgb[:, :] = BACKGROUND_RGB
    sampled = _colorize(field[i, j], spec, vmin, vmax)
    rgb[on_grid] = sampled[on_grid]

    if spec.graticule_deg:
        _stamp_robinson_graticule(rgb, spec, x_half)
    return rgb


def _stamp_robinson_graticule(rgb: np.ndarray, spec: RenderSpec, x_half: float) -> None:
    height, width = rgb.shape[:2]
    g = spec.graticule_deg
    cm = spec.central_meridian

    def stamp(x: np.ndarray, y: np.ndarray) -> None:
        c = np.floor((x + x_half) / (2.0 * x_half) * width).astype(int)
        r = np.floor((_KY - y) / (2.0 * _KY) * height).astype(int)
        ok = (c >= 0) & (c < width) & (r >= 0) & (r < height)
        rgb[r[ok], c[ok]] = GRATICULE_RGB

    lat_lines = [k * g for k in range(int(math.floor(-90.0 / g)), int(math.ceil(90.0 / g)) + 1)]
    lon_dense = np.linspace(cm - 180.0, cm + 180.0, 4 * width)
    for lat in lat_lines:
        if not -90.0 <= lat <= 90.0:
            continue
        xc = float(np.interp(abs(lat), _NODES, ROBINSON_X))
        yv = _KY * math.copysign(float(np.interp(abs(lat), _NODES, ROBINSON_Y)), lat)
        x = _KX * xc * np.radians(lon_dense - cm)
        stamp(x, np.full_like(x, yv))
    lat_dense = np.linspace(-90.0, 90.0, 4 * height)
    xcoefs = np.interp(np.abs(lat_dense), _NODES, ROBINSON_X)
    yvals = _KY * np.sign(lat_dense) * np.interp(np.abs(lat_dense), _NODES, ROBINSON_Y)
    for k in range(int(math.ceil(360.0 / g))):
        dlon = ((k * g - cm + 180.0) % 360.0) - 180.0
        x = _KX * xcoefs * math.radians(dlon)
        stamp(x, yvals)


def render_raster(state: StateTensor, spec: RenderSpec) -> np.ndarray:
    """RGB raster (height x width x 3 uint8) without touching disk."""
    if spec.projection == "equirect":
        return _equirect_raster(state, spec)
    return _robinson_raster(state, spec)


def write_ppm(rgb: np.ndarray, destination: str | os.PathLike) -> None:
    """Binary portable pixmap (P6, maxval 255)."""
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise InvalidData(f"raster must be H x W x 3 uint8, got {rgb.shape} {rgb.dtype}")
    height, width = rgb.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    try:
        with open(destination, "wb") as f:
            f.write(header)
            f.write(np.ascontiguousarray(rgb).tobytes())
    except OSError as exc:
        raise IoError(f"writing {destination}: {exc}") from exc


def render_field(state: StateTensor, spec: RenderSpec, out: str | os.PathLike) -> None:
    """Render one channel to a P6 file; deterministic for identical inputs."""
    write_ppm(render_raster(state, spec), out)


def subset_region(state: StateTensor, region: Region) -> StateTensor:
    """Crop a state to a lat/lon box, reassembling across the 0E wrap.

    Bounds follow region_indices: latitude (min, max], longitude [min, max)
    eastward. The crop must cover at least 2 rows and 2 columns (grid
    geometry cannot describe less).
    """
    rows, cols = region_indices(
        state.geom, region.lat_min, region.lat_max, region.lon_min, region.lon_max
    )
    if rows.size == 0 or cols.size == 0:
        raise EmptyRegion(f"region {region} does not intersect the grid")
    if rows.size < 2 or cols.size < 2:
        raise EmptyRegion(f"region {region} covers fewer than 2 rows or columns")
    lats = state.geom.lats()
    lons = state.geom.lons()
    # Guard against a box meeting a cropped grid in two disjoint arcs; the
    # output geometry could not describe that truthfully.
    offs = (lons[cols] - lons[cols[0]]) % 360.0
    if not np.allclose(np.diff(offs), state.geom.lon_step, atol=1e-9):
        raise EmptyRegion(f"region {region} intersects the grid in disjoint arcs")
    if not np.allclose(np.diff(lats[rows]), state.geom.lat_step, atol=1e-9):
        raise EmptyRegion(f"region {region} intersects the grid in disjoint bands")
    data = state.data[:, rows, :][:, :, cols]
    geom = GridGeometry(
        n_lat=rows.size,
        n_lon=cols.size,
        lat_start=float(lats[rows[0]]),
        lat_step=state.geom.lat_step,
        lon_start=float(lons[cols[0]]),
        lon_step=state.geom.lon_step,
    )
    return StateTensor(
        data=np.ascontiguousarray(data),
        schema=state.schema,
        geom=geom,
        valid_time=state.valid_time,
        normalized=state.normalized,
    )
