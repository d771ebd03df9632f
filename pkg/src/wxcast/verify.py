"""Field-level forecast verification.

Two metrics: mean squared error on normalized fields (dimensionless, the
training-loss style of score) and cosine-latitude-weighted RMSE in channel
units. All accumulation runs in float64 regardless of the float32 payloads.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateWeights,
    IoError,
    SchemaMismatch,
    StateFlagError,
    TimeMismatch,
    TrajectoryMismatch,
)
from .rollout import Trajectory
from .schema import GridGeometry
from .tensorio import SECONDS_PER_HOUR, NormStats, StateTensor

__all__ = [
    "ScoreReport",
    "mse_normalized",
    "rmse_weighted",
    "latitude_weights",
    "score_trajectory",
    "write_scores_csv",
    "SCORES_CSV_HEADER",
]

SCORES_CSV_HEADER = ["lead_hours", "channel", "score"]

# Rows at exactly +/-90 get weight 0, not the ~1e-17 that cos() rounds to.
_WEIGHT_EPS = 1e-12


@dataclass(frozen=True)
class ScoreReport:
    metric: str
    lead_hours: int
    per_channel: dict[str, float]
    aggregate: float
    n_cells: int


def _check_comparable(pred: StateTensor, truth: StateTensor) -> None:
    if pred.valid_time != truth.valid_time:
        raise TimeMismatch(
            f"states are {abs(pred.valid_time - truth.valid_time) / 3600:.1f} h apart"
        )
    if pred.schema.names != truth.schema.names:
        raise SchemaMismatch("channel names differ between pred and truth")
    if pred.geom != truth.geom:
        raise SchemaMismatch("grid geometry differs between pred and truth")
    if pred.normalized != truth.normalized:
        raise StateFlagError("one state is normalized and the other is not")


def mse_normalized(
    pred: StateTensor,
    truth: StateTensor,
    stats: NormStats | None,
    lead_hours: int = 0,
) -> ScoreReport:
    """Per-channel mean over cells of (norm(pred) - norm(truth))^2.

    The means cancel in the difference, so each channel reduces to
    mean(((pred - truth) / std_c)^2). States already flagged normalized are
    compared as-is and stats may be None. Aggregate is the unweighted mean
    over channels (no channel weighting is claimed, only documented).
    """
    _check_comparable(pred, truth)
    if pred.normalized:
        stds = np.ones(len(pred.schema))
    else:
        if stats is None:
            raise ValueError("stats are required to normalize physical-unit states")
        _, stds = stats.arrays(pred.schema)
    per_channel: dict[str, float] = {}
    for c, name in enumerate(pred.schema.names):
        d = (pred.data[c].astype(np.float64) - truth.data[c].astype(np.float64)) / stds[c]
        per_channel[name] = float(np.mean(d * d))
    aggregate = sum(per_channel.values()) / len(per_channel)
    return ScoreReport(
        metric="mse_norm",
        lead_hours=lead_hours,
        per_channel=per_channel,
        aggregate=aggregate,
        n_cells=pred.geom.n_lat * pred.geom.n_lon,
    )


def _row_weights(geom: GridGeometry) -> np.ndarray:
    w = np.cos(np.radians(geom.lats()))
    w[w < _WEIGHT_EPS] = 0.0
    if not (w > 0).any():
        raise DegenerateWeights("every row weight is zero (all rows at the poles)")
    return w


def latitude_weights(geom: GridGeometry) -> np.ndarray:
    """Per-cell cos-latitude weights, normalized to sum to 1 over the grid."""
    w = _row_weights(geom)
    grid = np.repeat(w[:, None], geom.n_lon, axis=1)
    return grid / grid.sum()


def rmse_weighted(
    pred: StateTensor,
    truth: StateTensor,
    channel: str,
    lead_hours: int = 0,
) -> ScoreReport:
    """Cos-latitude-weighted RMSE of one channel, in that channel's units."""
    _check_comparable(pred, truth)
    c = pred.schema.index(channel)
    w = _row_weights(pred.geom)
    w = w / (w.sum() * pred.geom.n_lon)
    d = pred.data[c].astype(np.float64) - truth.data[c].astype(np.float64)
    rmse = math.sqrt(float(((d * d) * w[:, None]).sum()))
    return ScoreReport(
        metric="rmse",
        lead_hours=lead_hours,
        per_channel={channel: rmse},
        aggregate=rmse,
        n_cells=pred.geom.n_lat * pred.geom.n_lon,
    )


def score_trajectory(
    pred: Trajectory,
    truth: Trajectory,
    stats: NormStats | None = None,
    metric: str = "mse",
    channel: str | None = None,
) -> list[ScoreReport]:
    """One ScoreReport per step, lead time measured from the initial state."""
    if len(pred) != len(truth):
        raise TrajectoryMismatch(f"trajectory lengths differ: {len(pred)} vs {len(truth)}")
    if pred.valid_times() != truth.valid_times():
        raise TrajectoryMismatch("trajectory timestamps differ")
    if metric == "rmse" and channel is None:
        raise ValueError("rmse scoring needs a channel name")
    t0 = pred.initial_time
    reports = []
    for k in range(len(pred)):
        p, t = pred.state(k), truth.state(k)
        lead = (p.valid_time - t0) // SECONDS_PER_HOUR
        if metric == "mse":
            reports.append(mse_normalized(p, t, stats, lead_hours=lead))
        elif metric == "rmse":
            reports.append(rmse_weighted(p, t, channel, lead_hours=lead))
        else:
            raise ValueError(f"unknown metric {metric!r} (want 'mse' or 'rmse')")
    return reports


def write_scores_csv(reports: list[ScoreReport], destination: str | os.PathLike) -> None:
    """Score CSV: ``lead_hours,channel,score``; one extra row per lead with
    channel "all" carrying the aggregate."""
    try:
        with open(destination, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(SCORES_CSV_HEADER)
            for rep in reports:
                for name, score in rep.per_channel.items():
                    writer.writerow([rep.lead_hours, name, repr(score)])
                writer.writerow([rep.lead_hours, "all", repr(rep.aggregate)])
    except OSError as exc:
        raise IoError(f"writing {destination}: {exc}") from exc
