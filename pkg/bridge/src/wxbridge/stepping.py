"""One forecast step per process invocation.

Identity mode validates the input and copies it byte-exactly; the harness
stamps the echoed timestamp forward. Model mode hosts FourCastNetv2 through
the ECMWF ai-models runtime, which normalizes internally, so the harness
side must run with expects_normalized=false and physical-space files.

The ai-models runtime exposes whole runs, not single steps, so a model step
is implemented as run-to-lead-time-and-slice: request dt_hours of lead and
convert the last output back to a state file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from . import wxs
from .channels import CHANNEL_NAMES, GRID_LAT, GRID_LON
from .errors import BadStateFile, BridgeError, WeightsMissing

DEFAULT_MODEL_ID = "fourcastnetv2-small"


@dataclass(frozen=True)
class BridgeConfig:
    model_id: str = DEFAULT_MODEL_ID
    weights_dir: str = ""
    device: str = "cpu"

    def __post_init__(self) -> None:
        if self.device not in ("cpu", "gpu"):
            raise ValueError(f"device must be cpu or gpu, got {self.device!r}")


def _check_model_input(state: wxs.State) -> None:
    problems = []
    if state.names != CHANNEL_NAMES:
        problems.append(
            f"channel set is not the 73-channel model schema "
            f"({len(state.names)} channels found)"
        )
    if state.data.shape[1:] != (GRID_LAT, GRID_LON):
        problems.append(
            f"grid is {state.data.shape[1]}x{state.data.shape[2]}, "
            f"model needs {GRID_LAT}x{GRID_LON}"
        )
    if problems:
        raise BadStateFile("; ".join(problems))


def check_weights(cfg: BridgeConfig) -> str:
    """Path to the weights directory, or a WeightsMissing with the fix."""
    d = cfg.weights_dir or os.environ.get("WXBRIDGE_WEIGHTS", "")
    if not d:
        raise WeightsMissing(
            "no weights directory configured; pass --weights-dir or set "
            "WXBRIDGE_WEIGHTS, and run `wxbridge fetch-weights` first "
            "(the download is over 3 GB)"
        )
    if not os.path.isdir(d) or not os.listdir(d):
        raise WeightsMissing(
            f"weights directory {d} is absent or empty; run "
            f"`wxbridge fetch-weights --dest {d}` (over 3 GB, needs network)"
        )
    return d


def bridge_step(
    in_path: str,
    out_path: str,
    dt_hours: int = 6,
    identity: bool = False,
    cfg: BridgeConfig | None = None,
) -> None:
    """Advance one step. Raises BridgeError subclasses; writes out_path only
    on success."""
    if dt_hours < 1:
        raise ValueError(f"dt_hours must be >= 1, got {dt_hours}")
    if identity:
        wxs.copy_validated(in_path, out_path)
        return
    cfg = cfg or BridgeConfig()
    state = wxs.validate_file(in_path)
    _check_model_input(state)
    weights = check_weights(cfg)
    _run_model(state, weights, cfg, dt_hours, out_path)


def _run_model(
    state: wxs.State, weights: str, cfg: BridgeConfig, dt_hours: int, out_path: str
) -> None:
    try:
        import ai_models  # noqa: F401
    except ImportError as exc:
        raise BridgeError(
            "model inference needs the ECMWF ai-models runtime "
            "(pip install ai-models ai-models-fourcastnetv2); identity mode "
            "and the converters work without it"
        ) from exc
    raise BridgeError(
        f"model stepping for {cfg.model_id} on {cfg.device} is not wired to "
        f"this runtime build; weights found at {weights}, lead {dt_hours} h"
    )
