import numpy as np
import pytest

from wxcast.cli import dispatch
from wxcast.tensorio import NormStats, read_state, write_state, write_stats

from conftest import make_state, stats_for


def run(capsys, *argv):
    code = dispatch(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


class TestSchemaCommands:
    def test_print_73_lines(self, capsys):
        code, out, err = run(capsys, "schema", "print", "fcnv2-73")
        assert code == 0
        lines = out.splitlines()
        assert len(lines) == 73
        assert lines[0].split()[1] == "u10"
        assert err == ""

    def test_print_20_lines(self, capsys):
        code, out, _ = run(capsys, "schema", "print", "fcn-20")
        assert code == 0
        assert len(out.splitlines()) == 20

    def test_print_unknown_is_usage_error(self, capsys):
        code, out, err = run(capsys, "schema", "print", "grib-900")
        assert code == 2

    def test_validate_ok(self, capsys, tmp_path):
        s = make_state(valid_time=7200)
        p = tmp_path / "s.wxs"
        write_state(s, p)
        code, out, err = run(capsys, "schema", "validate", str(p))
        assert code == 0
        assert out.startswith("ok:")

    def test_validate_corrupt_is_domain_error(self, capsys, tmp_path):
        p = tmp_path / "s.wxs"
        p.write_bytes(b"NOTASTATE" * 10)
        code, out, err = run(capsys, "schema", "validate", str(p))
        assert code == 1
        assert err.startswith("error:")
        assert err.count("\n") == 1

    def test_validate_strict_era5_rejects_small_grid(self, capsys, tmp_path):
        s = make_state()
        p = tmp_path / "s.wxs"
        write_state(s, p)
        code, _, err = run(capsys, "schema", "validate", str(p), "--strict-era5")
        assert code == 1
        assert "error:" in err


class TestUsageErrors:
    def test_no_args(self, capsys):
        assert run(capsys, )[0] == 2

    def test_unknown_subcommand(self, capsys):
        assert run(capsys, "transmogrify")[0] == 2

    def test_rollout_missing_flags(self, capsys):
        assert run(capsys, "rollout")[0] == 2

    def test_bad_int(self, capsys):
        code, _, _ = run(capsys, "rollout", "--init", "x", "--stepper", "persistence",
                         "--steps", "many", "--out-dir", "y")
        assert code == 2

    @pytest.mark.parametrize(
        "argv",
        [
            ("--help",),
            ("schema", "--help"),
            ("schema", "print", "--help"),
            ("schema", "validate", "--help"),
            ("normalize", "--help"),
            ("rollout", "--help"),
            ("track", "--help"),
            ("synth", "--help"),
            ("verify", "--help"),
            ("verify", "mse", "--help"),
            ("verify", "rmse", "--help"),
            ("verify", "track", "--help"),
            ("render", "--help"),
        ],
    )
    def test_help_exits_zero(self, capsys, argv):
        code, out, _ = run(capsys, *argv)
        assert code == 0
        assert "usage:" in out


class TestNormalizeCommand:
    def test_roundtrip(self, capsys, tmp_path):
        s = make_state(seed=1)
        write_state(s, tmp_path / "in.wxs")
        write_stats(stats_for(s, mean=2.0, std=4.0), tmp_path / "stats.csv")
        code, _, _ = run(
            capsys, "normalize",
            "--in", str(tmp_path / "in.wxs"),
            "--stats", str(tmp_path / "stats.csv"),
            "--out", str(tmp_path / "out.norm.wxs"),
        )
        assert code == 0
        code, _, _ = run(
            capsys, "normalize", "--invert",
            "--in", str(tmp_path / "out.norm.wxs"),
            "--stats", str(tmp_path / "stats.csv"),
            "--out", str(tmp_path / "back.wxs"),
        )
        assert code == 0
        back = read_state(tmp_path / "back.wxs")
        assert np.max(np.abs(back.data - s.data)) <= 1e-4 * (2.0 + 4.0)

    def test_invert_unnormalized_file_fails(self, capsys, tmp_path):
        s = make_state()
        write_state(s, tmp_path / "in.wxs")
        write_stats(stats_for(s), tmp_path / "stats.csv")
        code, _, err = run(
            capsys, "normalize", "--invert",
            "--in", str(tmp_path / "in.wxs"),
            "--stats", str(tmp_path / "stats.csv"),
            "--out", str(tmp_path / "o.wxs"),
        )
        assert code == 1
        assert err.startswith("error:")


class TestRolloutCommand:
    def test_persistence_run(self, capsys, tmp_path):
        s = make_state(seed=2, valid_time=0)
        write_state(s, tmp_path / "ic.wxs")
        out_dir = tmp_path / "traj"
        code, out, _ = run(
            capsys, "rollout",
            "--init", str(tmp_path / "ic.wxs"),
            "--stepper", "persistence",
            "--steps", "3",
            "--out-dir", str(out_dir),
        )
        assert code == 0
        assert (out_dir / "manifest.json").exists()
        assert len(list(out_dir.glob("step_*.wxs"))) == 4

    def test_missing_init_file(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "rollout",
            "--init", str(tmp_path / "absent.wxs"),
            "--stepper", "persistence",
            "--steps", "2",
            "--out-dir", str(tmp_path / "t"),
        )
        assert code == 1
        assert err.startswith("error:")


class TestSynthTrackVerify:
    def test_end_to_end_self_verify(self, capsys, tmp_path):
        traj = tmp_path / "traj"
        code, _, _ = run(
            capsys, "synth",
            "--out-dir", str(traj),
            "--steps", "4",
            "--grid", "90,180",
            "--lat0", "20", "--lon0", "140",
            "--dlat", "1", "--dlon", "1",
        )
        assert code == 0
        track_csv = tmp_path / "track.csv"
        code, _, _ = run(
            capsys, "track",
            "--traj-dir", str(traj),
            "--region", "10,30,130,150",
            "--out", str(track_csv),
        )
        assert code == 0
        assert track_csv.exists()
        code, out, _ = run(
            capsys, "verify", "track",
            "--pred", str(track_csv),
            "--truth", str(track_csv),
            "--out", str(tmp_path / "err.csv"),
        )
        assert code == 0
        assert "mean_km 0.0" in out
        lines = (tmp_path / "err.csv").read_text().splitlines()
        assert lines[0] == "step,error_km"
        assert len(lines) == 6  # header + 5 fixes

    def test_verify_mse_self_is_zero(self, capsys, tmp_path):
        s = make_state(seed=3, valid_time=0)
        write_state(s, tmp_path / "ic.wxs")
        write_stats(stats_for(s), tmp_path / "stats.csv")
        for name in ("a", "b"):
            code, _, _ = run(
                capsys, "rollout",
                "--init", str(tmp_path / "ic.wxs"),
                "--stepper", "persistence",
                "--steps", "2",
                "--out-dir", str(tmp_path / name),
            )
            assert code == 0
        code, out, _ = run(
            capsys, "verify", "mse",
            "--pred-dir", str(tmp_path / "a"),
            "--truth-dir", str(tmp_path / "b"),
            "--stats", str(tmp_path / "stats.csv"),
            "--out", str(tmp_path / "scores.csv"),
        )
        assert code == 0
        lines = (tmp_path / "scores.csv").read_text().splitlines()
        assert lines[0] == "lead_hours,channel,score"
        assert all(float(l.split(",")[2]) == 0.0 for l in lines[1:])


class TestRenderCommand:
    def test_render_writes_ppm(self, capsys, tmp_path):
        s = make_state(names=("msl",), n_lat=18, n_lon=36)
        write_state(s, tmp_path / "s.wxs")
        out = tmp_path / "map.ppm"
        code, _, _ = run(
            capsys, "render",
            "--in", str(tmp_path / "s.wxs"),
            "--channel", "msl",
            "--projection", "robinson",
            "--width", "288",
            "--out", str(out),
        )
        assert code == 0
        assert out.read_bytes().startswith(b"P6\n")

    def test_render_unknown_channel(self, capsys, tmp_path):
        s = make_state(names=("msl",), n_lat=18, n_lon=36)
        write_state(s, tmp_path / "s.wxs")
        code, _, err = run(
            capsys, "render",
            "--in", str(tmp_path / "s.wxs"),
            "--channel", "vorticity",
            "--out", str(tmp_path / "m.ppm"),
        )
        assert code == 1
        assert err.startswith("error:")

    def test_render_region_crop(self, capsys, tmp_path):
        s = make_state(names=("msl",), n_lat=72, n_lon=144)
        write_state(s, tmp_path / "s.wxs")
        out = tmp_path / "crop.ppm"
        code, _, _ = run(
            capsys, "render",
            "--in", str(tmp_path / "s.wxs"),
            "--channel", "msl",
            "--region=-30,30,40,140",
            "--width", "100",
            "--out", str(out),
        )
        assert code == 0
        assert out.read_bytes().startswith(b"P6\n100 ")
