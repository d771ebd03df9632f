import numpy as np
import pytest

from wxcast.schema import ChannelDescriptor, ChannelSchema, GridGeometry
from wxcast.tensorio import NormStats, StateTensor


def named_schema(*names: str) -> ChannelSchema:
    return ChannelSchema(
        tuple(ChannelDescriptor(n, n, "") for n in names), schema_id="custom"
    )


MSL_SCHEMA = ChannelSchema(
    (ChannelDescriptor("msl", "Mean sea level pressure", "Pa"),), schema_id="custom"
)


def make_state(
    n_channels: int = 2,
    n_lat: int = 8,
    n_lon: int = 16,
    seed: int = 0,
    valid_time: int = 0,
    names: tuple[str, ...] | None = None,
    low: float = -10.0,
    high: float = 10.0,
) -> StateTensor:
    """Random global-grid state for tests."""
    if names is None:
        names = tuple(f"ch{i}" for i in range(n_channels))
    rng = np.random.default_rng(seed)
    data = rng.uniform(low, high, size=(len(names), n_lat, n_lon)).astype(np.float32)
    return StateTensor(
        data=data,
        schema=named_schema(*names),
        geom=GridGeometry.global_grid(n_lat, n_lon),
        valid_time=valid_time,
    )


def stats_for(state: StateTensor, mean: float = 0.0, std: float = 1.0) -> NormStats:
    return NormStats({n: (mean, std) for n in state.schema.names})


@pytest.fixture
def tmp_wxs(tmp_path):
    def _path(name="state.wxs"):
        return str(tmp_path / name)

    return _path
