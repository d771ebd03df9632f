import os
import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from wxcast.errors import (
    CorruptFile,
    DuplicateStats,
    FormatError,
    InvalidData,
    InvalidStats,
    IoError,
    StatsIncomplete,
)
from wxcast.schema import GridGeometry, build_schema
from wxcast.tensorio import (
    MAGIC,
    NormStats,
    StateTensor,
    iso_utc,
    parse_time,
    payload_digest,
    read_state,
    read_stats,
    write_state,
    write_stats,
)

from conftest import make_state, named_schema


class TestStateTensorInvariants:
    def test_nan_rejected(self):
        s = make_state()
        bad = s.data.copy()
        bad[0, 0, 0] = np.nan
        with pytest.raises(InvalidData):
            StateTensor(data=bad, schema=s.schema, geom=s.geom, valid_time=0)

    def test_inf_rejected(self):
        s = make_state()
        bad = s.data.copy()
        bad[1, 2, 3] = np.inf
        with pytest.raises(InvalidData):
            StateTensor(data=bad, schema=s.schema, geom=s.geom, valid_time=0)

    def test_partial_hour_rejected(self):
        s = make_state()
        with pytest.raises(InvalidData):
            StateTensor(data=s.data, schema=s.schema, geom=s.geom, valid_time=100)

    def test_channel_count_must_match_schema(self):
        s = make_state(n_channels=2)
        with pytest.raises(InvalidData):
            StateTensor(
                data=s.data[:1], schema=s.schema, geom=s.geom, valid_time=0
            )

    def test_channel_view(self):
        s = make_state(names=("alpha", "beta"))
        assert np.array_equal(s.channel("beta"), s.data[1])


class TestWxs1Format:
    def test_exact_file_size(self, tmp_path):
        # header 32 bytes + per-name (2 + len) + 4 bytes per cell
        s = make_state(names=("a", "b"), n_lat=3, n_lon=4)
        p = tmp_path / "s.wxs"
        write_state(s, p)
        assert os.path.getsize(p) == 32 + (2 + 1) + (2 + 1) + 2 * 3 * 4 * 4

    def test_roundtrip_identity(self, tmp_path):
        s = make_state(names=("u10", "msl"), n_lat=5, n_lon=7, valid_time=7200)
        p = tmp_path / "s.wxs"
        write_state(s, p)
        r = read_state(p)
        assert r.schema.names == s.schema.names
        assert r.geom == s.geom
        assert r.valid_time == s.valid_time
        assert np.array_equal(r.data, s.data)

    def test_write_deterministic(self, tmp_path):
        s = make_state(seed=3)
        p1, p2 = tmp_path / "a.wxs", tmp_path / "b.wxs"
        write_state(s, p1)
        write_state(s, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic(self, tmp_path):
        s = make_state()
        p = tmp_path / "s.wxs"
        write_state(s, p)
        raw = bytearray(p.read_bytes())
        raw[:8] = b"XXXXXXXX"
        p.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            read_state(p)

    def test_bad_version(self, tmp_path):
        s = make_state()
        p = tmp_path / "s.wxs"
        write_state(s, p)
        raw = bytearray(p.read_bytes())
        raw[8:12] = struct.pack("<I", 9)
        p.write_bytes(bytes(raw))
        with pytest.raises(FormatError):
            read_state(p)

    def test_truncated_payload(self, tmp_path):
        s = make_state()
        p = tmp_path / "s.wxs"
        write_state(s, p)
        raw = p.read_bytes()
        p.write_bytes(raw[:-10])
        with pytest.raises(CorruptFile):
            read_state(p)

    def test_trailing_bytes(self, tmp_path):
        s = make_state()
        p = tmp_path / "s.wxs"
        write_state(s, p)
        p.write_bytes(p.read_bytes() + b"xx")
        with pytest.raises(CorruptFile):
            read_state(p)

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "s.wxs"
        p.write_bytes(MAGIC + b"\x01")
        with pytest.raises(CorruptFile):
            read_state(p)

    def test_hostile_dims_rejected_before_allocation(self, tmp_path):
        p = tmp_path / "s.wxs"
        # header claims 2**31 channels; must fail the cap check, not allocate
        header = struct.pack("<8sIIIIq", MAGIC, 1, 2**31, 4, 4, 0)
        p.write_bytes(header)
        with pytest.raises(FormatError):
            read_state(p)

    def test_nan_payload_rejected_on_read(self, tmp_path):
        s = make_state(names=("a",), n_lat=2, n_lon=2)
        p = tmp_path / "s.wxs"
        write_state(s, p)
        raw = bytearray(p.read_bytes())
        raw[-4:] = struct.pack("<f", float("nan"))
        p.write_bytes(bytes(raw))
        with pytest.raises(InvalidData):
            read_state(p)

    def test_duplicate_channel_names_rejected(self, tmp_path):
        p = tmp_path / "s.wxs"
        header = struct.pack("<8sIIIIq", MAGIC, 1, 2, 2, 2, 0)
        table = struct.pack("<H", 1) + b"a" + struct.pack("<H", 1) + b"a"
        payload = np.zeros(8, dtype="<f4").tobytes()
        p.write_bytes(header + table + payload)
        with pytest.raises(FormatError):
            read_state(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            read_state(tmp_path / "absent.wxs")

    def test_non_global_geometry_rejected_on_write(self, tmp_path):
        s = make_state(n_lat=4, n_lon=8)
        cropped = StateTensor(
            data=s.data,
            schema=s.schema,
            geom=GridGeometry(
                n_lat=4, n_lon=8, lat_start=40.0, lat_step=-1.0, lon_start=10.0, lon_step=1.0
            ),
            valid_time=0,
        )
        with pytest.raises(InvalidData):
            write_state(cropped, tmp_path / "c.wxs")

    def test_canonical_schema_recognized(self, tmp_path):
        sch = build_schema("fcnv2-73")
        data = np.zeros((73, 2, 4), dtype=np.float32)
        s = StateTensor(
            data=data, schema=sch, geom=GridGeometry.global_grid(2, 4), valid_time=0
        )
        p = tmp_path / "s.wxs"
        write_state(s, p)
        assert read_state(p).schema.schema_id == "fcnv2-73"

    @settings(max_examples=60, suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(
        names=st.lists(
            st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789_", min_size=1, max_size=8),
            min_size=1,
            max_size=6,
            unique=True,
        ),
        n_lat=st.integers(min_value=2, max_value=16),
        n_lon=st.integers(min_value=2, max_value=16),
        hours=st.integers(min_value=-10000, max_value=10000),
        seed=st.integers(min_value=0, max_value=2**32 - 1),
    )
    def test_roundtrip_property(self, tmp_path, names, n_lat, n_lon, hours, seed):
        rng = np.random.default_rng(seed)
        data = rng.normal(scale=1e3, size=(len(names), n_lat, n_lon)).astype(np.float32)
        s = StateTensor(
            data=data,
            schema=named_schema(*names),
            geom=GridGeometry.global_grid(n_lat, n_lon),
            valid_time=hours * 3600,
        )
        p = tmp_path / "prop.wxs"
        write_state(s, p)
        r = read_state(p)
        assert r.schema.names == tuple(names)
        assert r.valid_time == s.valid_time
        assert r.data.tobytes() == s.data.tobytes()

    def test_payload_digest_matches_file_tail(self, tmp_path):
        import hashlib

        s = make_state(names=("a",), n_lat=3, n_lon=3)
        p = tmp_path / "s.wxs"
        write_state(s, p)
        tail = p.read_bytes()[-(3 * 3 * 4):]
        assert payload_digest(s) == hashlib.sha256(tail).hexdigest()


class TestStatsCsv:
    def test_roundtrip(self, tmp_path):
        sch = named_schema("u10", "msl")
        stats = NormStats({"u10": (0.5, 2.0), "msl": (101000.0, 1300.0)})
        p = tmp_path / "stats.csv"
        write_stats(stats, p)
        r = read_stats(p, sch)
        assert r.mean("msl") == 101000.0 and r.std("u10") == 2.0

    def test_header_and_line_endings(self, tmp_path):
        stats = NormStats({"a": (1.0, 2.0)})
        p = tmp_path / "stats.csv"
        write_stats(stats, p)
        raw = p.read_bytes()
        assert raw.startswith(b"channel,mean,std\n")
        assert b"\r" not in raw

    def test_missing_channel(self, tmp_path):
        p = tmp_path / "stats.csv"
        p.write_text("channel,mean,std\nu10,0.0,1.0\n")
        with pytest.raises(StatsIncomplete):
            read_stats(p, named_schema("u10", "msl"))

    def test_full_73_row_file(self, tmp_path):
        sch = build_schema("fcnv2-73")
        stats = NormStats({n: (0.0, 1.0) for n in sch.names})
        p = tmp_path / "stats.csv"
        write_stats(stats, p)
        assert len(read_stats(p, sch)) == 73

    def test_nonpositive_std(self, tmp_path):
        p = tmp_path / "stats.csv"
        p.write_text("channel,mean,std\nu10,0.0,-1.0\n")
        with pytest.raises(InvalidStats):
            read_stats(p, named_schema("u10"))

    def test_duplicate_row(self, tmp_path):
        p = tmp_path / "stats.csv"
        p.write_text("channel,mean,std\nu10,0.0,1.0\nu10,0.0,1.0\n")
        with pytest.raises(DuplicateStats):
            read_stats(p, named_schema("u10"))

    def test_bad_header(self, tmp_path):
        p = tmp_path / "stats.csv"
        p.write_text("name,avg,sigma\nu10,0.0,1.0\n")
        with pytest.raises(FormatError):
            read_stats(p, named_schema("u10"))

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "stats.csv"
        p.write_text("channel,mean,std\nu10,zero,1.0\n")
        with pytest.raises(InvalidStats):
            read_stats(p, named_schema("u10"))

    def test_extra_rows_dropped_at_binding(self, tmp_path):
        p = tmp_path / "stats.csv"
        p.write_text("channel,mean,std\nu10,0.0,1.0\nmsl,5.0,2.0\n")
        bound = read_stats(p, named_schema("u10"))
        assert "msl" not in bound
        assert len(bound) == 1


class TestTimeHelpers:
    def test_iso_roundtrip(self):
        t = 1536796800
        assert iso_utc(t) == "2018-09-13T00:00:00Z"
        assert parse_time(iso_utc(t)) == t

    def test_parse_unix_seconds(self):
        assert parse_time("7200") == 7200

    def test_parse_garbage(self):
        with pytest.raises(InvalidData):
            parse_time("not-a-time")
