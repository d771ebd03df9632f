"""The 73-channel model state: harness channel names in canonical order and
their ERA5 counterparts.

ERA5 NetCDF downloads use the ECMWF short names; the harness uses compact
channel names. The two differ for 2 m temperature (t2m vs t2) and the 100 m
winds (u100/v100 vs u100m/v100m, the harness suffix keeping them distinct
from the 100 hPa wind channels).
"""

from __future__ import annotations

PRESSURE_LEVELS_HPA = (50, 100, 150, 200, 250, 300, 400, 500, 600, 700, 850, 925, 1000)

# (channel name, ERA5 short name) for the single-level block, in order
_SINGLE_LEVEL = (
    ("u10", "u10"),
    ("u100m", "u100"),
    ("v10", "v10"),
    ("v100m", "v100"),
    ("t2", "t2m"),
    ("sp", "sp"),
    ("msl", "msl"),
    ("tcwv", "tcwv"),
)

_LEVEL_VARIABLES = ("z", "t", "u", "v", "r")

GRID_LAT = 720
GRID_LON = 1440


def channel_names() -> tuple[str, ...]:
    """All 73 channel names, single-level block first, then variable-major
    pressure levels."""
    names = [ch for ch, _ in _SINGLE_LEVEL]
    for var in _LEVEL_VARIABLES:
        for lev in PRESSURE_LEVELS_HPA:
            names.append(f"{var}{lev}")
    return tuple(names)


def era5_sources() -> tuple[tuple[str, str, int | None], ...]:
    """(channel name, ERA5 variable name, pressure level or None) per channel."""
    out: list[tuple[str, str, int | None]] = [
        (ch, era5, None) for ch, era5 in _SINGLE_LEVEL
    ]
    for var in _LEVEL_VARIABLES:
        for lev in PRESSURE_LEVELS_HPA:
            out.append((f"{var}{lev}", var, lev))
    return tuple(out)


CHANNEL_NAMES = channel_names()
