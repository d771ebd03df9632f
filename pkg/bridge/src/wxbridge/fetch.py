"""Data and weights acquisition, with the failure modes checked up front.

Everything that can be diagnosed without the network (stale-date math,
credentials presence, existing downloads) is diagnosed before any request
goes out, so the commands degrade usefully on offline machines.
"""

from __future__ import annotations

import datetime as dt
import os

from .channels import PRESSURE_LEVELS_HPA
from .errors import FetchError

# reanalysis publication lag: the archive trails the present by about five
# days, so requests newer than that cannot succeed
ERA5_LATENCY_DAYS = 5

CDS_CREDENTIALS_DEFAULT = "~/.cdsapirc"

SURFACE_VARIABLES = (
    "10m_u_component_of_wind",
    "100m_u_component_of_wind",
    "10m_v_component_of_wind",
    "100m_v_component_of_wind",
    "2m_temperature",
    "surface_pressure",
    "mean_sea_level_pressure",
    "total_column_water_vapour",
)

PRESSURE_VARIABLES = (
    "geopotential",
    "temperature",
    "u_component_of_wind",
    "v_component_of_wind",
    "relative_humidity",
)


def check_request_date(date: dt.date, today: dt.date | None = None) -> None:
    today = today or dt.date.today()
    cutoff = today - dt.timedelta(days=ERA5_LATENCY_DAYS)
    if date > cutoff:
        raise FetchError(
            f"reanalysis for {date.isoformat()} is not published yet: the "
            f"archive trails the present by about {ERA5_LATENCY_DAYS} days "
            f"(latest available date is roughly {cutoff.isoformat()})"
        )


def check_credentials(path: str | None = None) -> str:
    candidate = os.path.expanduser(path or CDS_CREDENTIALS_DEFAULT)
    if not os.path.isfile(candidate):
        raise FetchError(
            f"no CDS credentials at {candidate}; create it with two lines\n"
            f"  url: https://cds.climate.copernicus.eu/api\n"
            f"  key: <your-uid>:<your-api-key>\n"
            f"after registering at the Climate Data Store"
        )
    content = open(candidate, "r", encoding="utf-8").read()
    if "url" not in content or "key" not in content:
        raise FetchError(
            f"{candidate} does not look like a CDS credentials file "
            f"(expected url: and key: entries)"
        )
    return candidate


def build_requests(date: dt.date, hour: int) -> list[tuple[str, dict]]:
    """The two CDS requests (surface, pressure-level) for one snapshot."""
    common = {
        "product_type": "reanalysis",
        "format": "netcdf",
        "year": f"{date.year:04d}",
        "month": f"{date.month:02d}",
        "day": f"{date.day:02d}",
        "time": f"{hour:02d}:00",
    }
    surface = dict(common, variable=list(SURFACE_VARIABLES))
    pressure = dict(
        common,
        variable=list(PRESSURE_VARIABLES),
        pressure_level=[str(p) for p in PRESSURE_LEVELS_HPA],
    )
    return [
        ("reanalysis-era5-single-levels", surface),
        ("reanalysis-era5-pressure-levels", pressure),
    ]


def fetch_initial(
    date: dt.date,
    hour: int,
    out_dir: str,
    credentials: str | None = None,
    today: dt.date | None = None,
) -> list[str]:
    """Download the 73-variable snapshot; returns the staged file paths."""
    if not 0 <= hour <= 23:
        raise FetchError(f"hour must be 0..23, got {hour}")
    check_request_date(date, today=today)
    check_credentials(credentials)
    try:
        import cdsapi
    except ImportError as exc:
        raise FetchError(
            "the cdsapi package is not installed (pip install cdsapi)"
        ) from exc
    os.makedirs(out_dir, exist_ok=True)
    client = cdsapi.Client()
    staged = []
    for dataset, request in build_requests(date, hour):
        dest = os.path.join(
            out_dir, f"{dataset}_{date.isoformat()}_{hour:02d}.nc"
        )
        client.retrieve(dataset, request, dest)
        staged.append(dest)
    return staged


def fetch_weights(dest: str, model_id: str = "fourcastnetv2-small") -> str:
    """Stage the model weights under dest; a no-op when already present."""
    dest = os.fspath(dest)
    if os.path.isdir(dest) and os.listdir(dest):
        return dest
    try:
        import ai_models  # noqa: F401
    except ImportError as exc:
        raise FetchError(
            f"weights for {model_id} are fetched through the ECMWF ai-models "
            f"runtime, which is not installed (pip install ai-models "
            f"ai-models-fourcastnetv2); the download is over 3 GB, so plan "
            f"disk and time accordingly"
        ) from exc
    raise FetchError(
        f"automatic staging of {model_id} weights is not wired to this "
        f"runtime build; run `ai-models --download-assets --path {dest} "
        f"{model_id}` manually"
    )
