"""ERA5 snapshot to state-file conversion.

Sources are the NetCDF files the Climate Data Store serves (one or several;
surface and pressure-level fields are usually separate downloads). Both
NetCDF flavors are readable: NetCDF-4 (HDF5 container, via h5py) and classic
NetCDF-3 (via scipy). GRIB is not: this environment has no eccodes, so GRIB
downloads get a diagnostic pointing at the NetCDF format option instead.

Values are converted exactly as stored (after unpacking scale/offset);
units are whatever ERA5 ships, no conversion happens here.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import wxs
from .channels import era5_sources
from .errors import Era5ConversionError, MissingVariables

_EPOCH_1900_OFFSET_HOURS = 613608  # hours from 1900-01-01 to 1970-01-01

# time axes seen in CDS downloads: hours since 1900 (classic), seconds since
# 1970 (newer netcdf4 downloads)
_TIME_UNITS = {
    "hours since 1900-01-01 00:00:00.0": ("hours", -_EPOCH_1900_OFFSET_HOURS),
    "hours since 1900-01-01 00:00:00": ("hours", -_EPOCH_1900_OFFSET_HOURS),
    "hours since 1900-01-01": ("hours", -_EPOCH_1900_OFFSET_HOURS),
    "seconds since 1970-01-01": ("seconds", 0),
    "seconds since 1970-01-01 00:00:00": ("seconds", 0),
}


@dataclass
class _Var:
    """One variable from one source file, with enough axis context to slice."""

    data: np.ndarray            # raw, possibly packed
    dims: tuple[str, ...]
    scale: float
    offset: float
    times: np.ndarray | None    # Unix seconds along the time axis
    levels: np.ndarray | None   # hPa along the level axis
    lats: np.ndarray
    lons: np.ndarray


def _is_hdf5(path: str) -> bool:
    with open(path, "rb") as f:
        return f.read(8) == b"\x89HDF\r\n\x1a\n"


def _is_netcdf3(path: str) -> bool:
    with open(path, "rb") as f:
        return f.read(3) == b"CDF"


def _is_grib(path: str) -> bool:
    with open(path, "rb") as f:
        return f.read(4) == b"GRIB"


def _times_to_unix(values: np.ndarray, units: str) -> np.ndarray:
    units = units.strip()
    if units not in _TIME_UNITS:
        raise Era5ConversionError(f"unsupported time axis units {units!r}")
    kind, shift = _TIME_UNITS[units]
    vals = values.astype(np.int64) + shift
    if kind == "hours":
        vals = vals * 3600
    return vals


def _decode_attr(value):
    if isinstance(value, bytes):
        return value.decode("utf-8", "replace")
    if isinstance(value, np.ndarray) and value.dtype.kind == "S":
        return b"".join(value.tolist()).decode("utf-8", "replace")
    return value


_LAT_NAMES = ("latitude", "lat")
_LON_NAMES = ("longitude", "lon")
_LEVEL_NAMES = ("level", "pressure_level", "isobaricInhPa", "plev")
_TIME_NAMES = ("time", "valid_time")


def _load_h5(path: str) -> dict[str, _Var]:
    import h5py

    out: dict[str, _Var] = {}
    with h5py.File(path, "r") as f:
        axes = {}
        for name in f:
            ds = f[name]
            if not isinstance(ds, h5py.Dataset):
                continue
            if name in _LAT_NAMES + _LON_NAMES + _LEVEL_NAMES:
                axes[name] = np.asarray(ds[...], dtype=np.float64)
            elif name in _TIME_NAMES:
                units = _decode_attr(ds.attrs.get("units", ""))
                axes[name] = _times_to_unix(np.asarray(ds[...]), str(units))
        lats = next((axes[n] for n in _LAT_NAMES if n in axes), None)
        lons = next((axes[n] for n in _LON_NAMES if n in axes), None)
        if lats is None or lons is None:
            raise Era5ConversionError(f"{path}: no latitude/longitude axes")
        levels = next((axes[n] for n in _LEVEL_NAMES if n in axes), None)
        times = next((axes[n] for n in _TIME_NAMES if n in axes), None)
        for name in f:
            ds = f[name]
            if not isinstance(ds, h5py.Dataset):
                continue
            if name in _LAT_NAMES + _LON_NAMES + _LEVEL_NAMES + _TIME_NAMES:
                continue
            dims = tuple(
                d.label or (d[0].name.split("/")[-1] if len(d) else "")
                for d in ds.dims
            ) if ds.dims else ()
            if not dims or not any(dims):
                dims = _guess_dims(ds.shape, lats, lons, levels, times)
            out[name] = _Var(
                data=np.asarray(ds[...]),
                dims=dims,
                scale=float(_decode_attr(ds.attrs.get("scale_factor", 1.0))),
                offset=float(_decode_attr(ds.attrs.get("add_offset", 0.0))),
                times=times,
                levels=levels,
                lats=lats,
                lons=lons,
            )
    return out


def _load_nc3(path: str) -> dict[str, _Var]:
    from scipy.io import netcdf_file

    out: dict[str, _Var] = {}
    with netcdf_file(path, "r", mmap=False) as f:
        axes = {}
        for name, var in f.variables.items():
            if name in _LAT_NAMES + _LON_NAMES + _LEVEL_NAMES:
                axes[name] = np.asarray(var[:], dtype=np.float64)
            elif name in _TIME_NAMES:
                units = _decode_attr(getattr(var, "units", b""))
                axes[name] = _times_to_unix(np.asarray(var[:]), str(units))
        lats = next((axes[n] for n in _LAT_NAMES if n in axes), None)
        lons = next((axes[n] for n in _LON_NAMES if n in axes), None)
        if lats is None or lons is None:
            raise Era5ConversionError(f"{path}: no latitude/longitude axes")
        levels = next((axes[n] for n in _LEVEL_NAMES if n in axes), None)
        times = next((axes[n] for n in _TIME_NAMES if n in axes), None)
        for name, var in f.variables.items():
            if name in _LAT_NAMES + _LON_NAMES + _LEVEL_NAMES + _TIME_NAMES:
                continue
            out[name] = _Var(
                data=np.array(var[:]),
                dims=tuple(var.dimensions),
                scale=float(_decode_attr(getattr(var, "scale_factor", 1.0))),
                offset=float(_decode_attr(getattr(var, "add_offset", 0.0))),
                times=times,
                levels=levels,
                lats=lats,
                lons=lons,
            )
    return out


def _guess_dims(shape, lats, lons, levels, times) -> tuple[str, ...]:
    """Label axes by length when the file carries no dimension names."""
    dims = []
    for n in shape:
        if times is not None and n == len(times) and "time" not in dims:
            dims.append("time")
        elif levels is not None and n == len(levels) and "level" not in dims:
            dims.append("level")
        elif n == len(lats) and "latitude" not in dims:
            dims.append("latitude")
        elif n == len(lons) and "longitude" not in dims:
            dims.append("longitude")
        else:
            dims.append("")
    return tuple(dims)


def load_sources(paths: list[str]) -> dict[str, _Var]:
    merged: dict[str, _Var] = {}
    for p in paths:
        p = os.fspath(p)
        if not os.path.exists(p):
            raise Era5ConversionError(f"source file {p} does not exist")
        if _is_grib(p):
            raise Era5ConversionError(
                f"{p} is GRIB; no GRIB decoder is available here. Request "
                f"the download in NetCDF format instead (format=netcdf in "
                f"the CDS request)"
            )
        if _is_hdf5(p):
            vars_here = _load_h5(p)
        elif _is_netcdf3(p):
            vars_here = _load_nc3(p)
        else:
            raise Era5ConversionError(f"{p} is neither NetCDF-4/HDF5 nor NetCDF-3")
        for name, var in vars_here.items():
            # later files win; CDS never splits one variable across files
            merged[name] = var
    return merged


def _slice_var(var: _Var, era5_name: str, level: int | None, when: int) -> np.ndarray:
    arr = var.data
    dims = list(var.dims)
    if "time" in dims or "valid_time" in dims:
        tdim = "time" if "time" in dims else "valid_time"
        if var.times is None:
            raise Era5ConversionError(f"{era5_name}: time axis present but no coordinates")
        where = np.nonzero(var.times == when)[0]
        if where.size == 0:
            raise Era5ConversionError(
                f"{era5_name}: requested time not present in the source "
                f"(axis has {len(var.times)} entries)"
            )
        arr = np.take(arr, int(where[0]), axis=dims.index(tdim))
        dims.remove(tdim)
    if level is not None:
        ldim = next((d for d in dims if d in _LEVEL_NAMES), None)
        if ldim is None:
            raise Era5ConversionError(f"{era5_name}: no level axis for level {level}")
        where = np.nonzero(var.levels == float(level))[0]
        if where.size == 0:
            raise Era5ConversionError(f"{era5_name}: level {level} hPa not in the source")
        arr = np.take(arr, int(where[0]), axis=dims.index(ldim))
        dims.remove(ldim)
    if arr.ndim != 2:
        raise Era5ConversionError(
            f"{era5_name}: expected a 2-D field after slicing, got shape {arr.shape}"
        )
    out = arr.astype(np.float64) * var.scale + var.offset
    return out


def _orient(field: np.ndarray, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    """North-to-south rows, 0E-westmost columns, 721->720 row crop."""
    if lats[0] < lats[-1]:
        field = field[::-1]
        lats = lats[::-1]
    if lons[0] != 0.0:
        shift = int(np.argmin(np.abs(lons - 0.0) % 360.0))
        field = np.roll(field, -shift, axis=1)
    if abs(lats[-1] + 90.0) < 1e-6:
        # the 721-row grid carries both poles; the harness convention keeps
        # +90 and drops -90
        field = field[:-1]
    return field


def era5_to_wxs(
    sources: list[str], when: int, out_path: str
) -> wxs.State:
    """Assemble the 73-channel state for one timestamp and write it.

    `when` is Unix seconds UTC. Missing variables are reported all at once.
    """
    if when % 3600 != 0:
        raise Era5ConversionError(f"requested time {when} is not a whole hour")
    available = load_sources(sources)
    missing = []
    fields = []
    lat_count = None
    for ch_name, era5_name, level in era5_sources():
        var = available.get(era5_name)
        if var is None:
            missing.append(ch_name)
            continue
        if level is not None and (
            var.levels is None or not np.any(var.levels == float(level))
        ):
            missing.append(ch_name)
            continue
        field = _slice_var(var, era5_name, level, when)
        field = _orient(field, var.lats, var.lons)
        if lat_count is None:
            lat_count = field.shape
        elif field.shape != lat_count:
            raise Era5ConversionError(
                f"{ch_name}: grid {field.shape} differs from {lat_count}"
            )
        fields.append(field.astype(np.float32))
    if missing:
        raise MissingVariables(missing)
    data = np.stack(fields)
    state = wxs.State(
        names=tuple(ch for ch, _, _ in era5_sources()), data=data, valid_time=when
    )
    wxs.write_state(state, out_path)
    return state
