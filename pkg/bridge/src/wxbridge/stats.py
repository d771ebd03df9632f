"""Convert the published normalization statistics to the harness CSV.

The released files are numpy arrays (global_means.npy / global_stds.npy)
shaped (1, 73, 1, 1): one scalar per channel. Spatially varying variants
are reduced to per-channel scalars with an area mean, loudly, since the
harness format has one mean/std pair per channel.
"""

from __future__ import annotations

import csv
import os
import warnings

import numpy as np

from .channels import CHANNEL_NAMES
from .errors import StatsConversionError


def _per_channel(arr: np.ndarray, what: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=np.float64)
    squeezed = np.squeeze(arr)
    if squeezed.ndim == 1:
        return squeezed
    if squeezed.ndim in (2, 3) and squeezed.shape[0] == len(CHANNEL_NAMES):
        warnings.warn(
            f"{what} are spatially varying {arr.shape}; reducing to "
            f"per-channel scalars with a plain mean",
            stacklevel=3,
        )
        return squeezed.reshape(squeezed.shape[0], -1).mean(axis=1)
    raise StatsConversionError(
        f"{what} shaped {arr.shape} do not reduce to one value per channel"
    )


def convert_stats(
    means_path: str | os.PathLike,
    stds_path: str | os.PathLike,
    out_csv: str | os.PathLike,
) -> dict[str, tuple[float, float]]:
    try:
        means = _per_channel(np.load(means_path), "means")
        stds = _per_channel(np.load(stds_path), "stds")
    except OSError as exc:
        raise StatsConversionError(f"cannot read stats arrays: {exc}") from exc
    except ValueError as exc:
        raise StatsConversionError(f"not a numpy array file: {exc}") from exc
    if means.shape != (len(CHANNEL_NAMES),) or stds.shape != (len(CHANNEL_NAMES),):
        raise StatsConversionError(
            f"expected {len(CHANNEL_NAMES)} channels, got means {means.shape} "
            f"and stds {stds.shape}"
        )
    if not (np.isfinite(means).all() and np.isfinite(stds).all()):
        raise StatsConversionError("stats contain NaN or Inf")
    if np.any(stds <= 0):
        bad = [CHANNEL_NAMES[i] for i in np.nonzero(stds <= 0)[0]]
        raise StatsConversionError(f"nonpositive std for: {', '.join(bad)}")
    pairs = {
        name: (float(m), float(s))
        for name, m, s in zip(CHANNEL_NAMES, means, stds)
    }
    with open(out_csv, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["channel", "mean", "std"])
        for name in CHANNEL_NAMES:
            m, s = pairs[name]
            w.writerow([name, repr(m), repr(s)])
    return pairs
