"""Adapter package: real models and real data behind the harness's file
contracts. See wxbridge.cli for the command surface."""

from .channels import CHANNEL_NAMES, PRESSURE_LEVELS_HPA, channel_names
from .errors import (
    BadStateFile,
    BridgeError,
    Era5ConversionError,
    FetchError,
    MissingVariables,
    StatsConversionError,
    WeightsMissing,
)
from .era5 import era5_to_wxs
from .fetch import fetch_initial, fetch_weights
from .stats import convert_stats
from .stepping import BridgeConfig, bridge_step
from .wxs import State, read_state, write_state

__version__ = "0.1.0"

__all__ = [
    "BadStateFile",
    "BridgeConfig",
    "BridgeError",
    "CHANNEL_NAMES",
    "Era5ConversionError",
    "FetchError",
    "MissingVariables",
    "PRESSURE_LEVELS_HPA",
    "State",
    "StatsConversionError",
    "WeightsMissing",
    "bridge_step",
    "channel_names",
    "convert_stats",
    "era5_to_wxs",
    "fetch_initial",
    "fetch_weights",
    "read_state",
    "write_state",
]
