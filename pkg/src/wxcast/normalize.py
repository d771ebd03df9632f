"""Channel-wise standardization and its inverse.

normalized = (raw - mean_c) / std_c, applied per channel with the stats file
values. Arithmetic runs in float64 per channel and is stored back as float32;
the 64-bit intermediate protects large-magnitude channels (geopotential is
O(1e5)) from cancellation in the subtraction.
"""

from __future__ import annotations

import numpy as np

from .errors import StateFlagError
from .tensorio import NormStats, StateTensor

__all__ = ["normalize", "denormalize"]


def normalize(state: StateTensor, stats: NormStats) -> StateTensor:
    """Standardize each channel; result is flagged normalized."""
    if state.normalized:
        raise StateFlagError("state is already normalized")
    means, stds = stats.arrays(state.schema)
    out = np.empty_like(state.data)
    # Per-channel loop keeps the float64 intermediate to one H x W field
    # at a time (a full 73-channel float64 copy would be ~600 MB).
    for c in range(state.n_channels):
        out[c] = ((state.data[c].astype(np.float64) - means[c]) / stds[c]).astype(np.float32)
    return state.replace(data=out, normalized=True)


def denormalize(state: StateTensor, stats: NormStats) -> StateTensor:
    """Invert normalize: out = in * std_c + mean_c."""
    if not state.normalized:
        raise StateFlagError("state is not flagged normalized; refusing to denormalize")
    means, stds = stats.arrays(state.schema)
    out = np.empty_like(state.data)
    for c in range(state.n_channels):
        out[c] = (state.data[c].astype(np.float64) * stds[c] + means[c]).astype(np.float32)
    return state.replace(data=out, normalized=False)
