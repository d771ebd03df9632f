import numpy as np
import pytest

from wxbridge.cli import dispatch
from wxbridge.errors import BadStateFile, WeightsMissing
from wxbridge.stepping import BridgeConfig, bridge_step, check_weights
from wxbridge.wxs import State, write_state

from bridge_helpers import make_state_file


class TestIdentityMode:
    def test_copy_byte_exact(self, tmp_path):
        src, dst = tmp_path / "in.wxs", tmp_path / "out.wxs"
        make_state_file(src, seed=3, valid_time=7200)
        bridge_step(str(src), str(dst), identity=True)
        assert src.read_bytes() == dst.read_bytes()

    def test_malformed_input_no_output(self, tmp_path):
        src, dst = tmp_path / "in.wxs", tmp_path / "out.wxs"
        src.write_bytes(b"\x00" * 100)
        with pytest.raises(BadStateFile):
            bridge_step(str(src), str(dst), identity=True)
        assert not dst.exists()

    def test_missing_input_no_output(self, tmp_path):
        dst = tmp_path / "out.wxs"
        with pytest.raises(BadStateFile):
            bridge_step(str(tmp_path / "absent.wxs"), str(dst), identity=True)
        assert not dst.exists()

    def test_cli_exit_codes(self, tmp_path, capsys):
        src, dst = tmp_path / "in.wxs", tmp_path / "out.wxs"
        make_state_file(src)
        code = dispatch(["step", "--identity", "--in", str(src), "--out", str(dst)])
        assert code == 0
        bad = tmp_path / "bad.wxs"
        bad.write_bytes(b"junk")
        code = dispatch(["step", "--identity", "--in", str(bad), "--out", str(tmp_path / "n.wxs")])
        cap = capsys.readouterr()
        assert code == 1
        assert cap.err.startswith("error:")
        assert not (tmp_path / "n.wxs").exists()


class TestModelMode:
    def test_wrong_schema_rejected_before_weights(self, tmp_path):
        src = tmp_path / "in.wxs"
        make_state_file(src, names=("a", "b"))
        with pytest.raises(BadStateFile) as ei:
            bridge_step(str(src), str(tmp_path / "o.wxs"))
        assert "73" in str(ei.value)

    def test_weights_required(self, tmp_path, monkeypatch):
        monkeypatch.delenv("WXBRIDGE_WEIGHTS", raising=False)
        with pytest.raises(WeightsMissing) as ei:
            check_weights(BridgeConfig())
        assert "fetch-weights" in str(ei.value)

    def test_empty_weights_dir(self, tmp_path):
        d = tmp_path / "weights"
        d.mkdir()
        with pytest.raises(WeightsMissing) as ei:
            check_weights(BridgeConfig(weights_dir=str(d)))
        assert str(d) in str(ei.value)

    def test_populated_weights_dir_passes(self, tmp_path):
        d = tmp_path / "weights"
        d.mkdir()
        (d / "model.ckpt").write_bytes(b"\x00")
        assert check_weights(BridgeConfig(weights_dir=str(d))) == str(d)

    def test_device_validation(self):
        with pytest.raises(ValueError):
            BridgeConfig(device="tpu")

    def test_dt_hours_validation(self, tmp_path):
        src = tmp_path / "in.wxs"
        make_state_file(src)
        with pytest.raises(ValueError):
            bridge_step(str(src), str(tmp_path / "o.wxs"), dt_hours=0, identity=True)


class TestCliUsage:
    def test_help(self, capsys):
        assert dispatch(["--help"]) == 0
        assert dispatch(["step", "--help"]) == 0

    def test_missing_flags(self, capsys):
        assert dispatch(["step"]) == 2

    def test_no_command(self, capsys):
        assert dispatch([]) == 2
