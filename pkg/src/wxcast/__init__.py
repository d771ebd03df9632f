"""wxcast: a model-agnostic harness for autoregressive global weather forecasts.

Gridded binary state I/O, channel normalization, pluggable-stepper rollouts,
tropical-cyclone tracking, field verification, and map rendering.
"""

from .errors import WxError
from .schema import (
    ChannelDescriptor,
    ChannelSchema,
    GridGeometry,
    PRESSURE_LEVELS_HPA,
    build_schema,
    channel_index,
    latlon_of,
    parse_level_name,
)
from .tensorio import (
    NormStats,
    StateTensor,
    read_state,
    read_stats,
    write_state,
    write_stats,
)
from .normalize import denormalize, normalize
from .stepper import StepperSpec, parse_stepper, step, validate_step_contract
from .rollout import (
    RolloutConfig,
    Trajectory,
    read_trajectory,
    run_rollout,
    write_trajectory,
)
from .cyclone import (
    CycloneTrack,
    EyeFix,
    TrackerConfig,
    detect_eye,
    extract_track,
    haversine_km,
    linear_track,
    synth_cyclone,
    track_error,
)
from .verify import (
    ScoreReport,
    latitude_weights,
    mse_normalized,
    rmse_weighted,
    score_trajectory,
)
from .render import (
    Region,
    RenderSpec,
    render_field,
    render_raster,
    robinson_project,
    subset_region,
)

__version__ = "0.1.0"

__all__ = [
    "WxError",
    "ChannelDescriptor",
    "ChannelSchema",
    "GridGeometry",
    "PRESSURE_LEVELS_HPA",
    "build_schema",
    "channel_index",
    "latlon_of",
    "parse_level_name",
    "NormStats",
    "StateTensor",
    "read_state",
    "read_stats",
    "write_state",
    "write_stats",
    "normalize",
    "denormalize",
    "StepperSpec",
    "parse_stepper",
    "step",
    "validate_step_contract",
    "RolloutConfig",
    "Trajectory",
    "run_rollout",
    "read_trajectory",
    "write_trajectory",
    "CycloneTrack",
    "EyeFix",
    "TrackerConfig",
    "detect_eye",
    "extract_track",
    "haversine_km",
    "linear_track",
    "synth_cyclone",
    "track_error",
    "ScoreReport",
    "latitude_weights",
    "mse_normalized",
    "rmse_weighted",
    "score_trajectory",
    "Region",
    "RenderSpec",
    "render_field",
    "render_raster",
    "robinson_project",
    "subset_region",
    "__version__",
]
