import os
import sys
import textwrap

import numpy as np
import pytest

from wxcast.errors import (
    StepperContractViolation,
    StepperFailed,
    StepperNoOutput,
    StepperTimeout,
)
from wxcast.stepper import (
    DEFAULT_TIMEOUT,
    StepperSpec,
    parse_stepper,
    step,
    validate_step_contract,
)

from conftest import make_state

PATCH_TIME_SRC = textwrap.dedent(
    """
    import os, shutil, struct, sys
    src, dst = sys.argv[1], sys.argv[2]
    shutil.copyfile(src, dst)
    dt = int(os.environ["WX_DT_HOURS"])
    with open(dst, "r+b") as f:
        f.seek(24)
        (t,) = struct.unpack("<q", f.read(8))
        f.seek(24)
        f.write(struct.pack("<q", t + dt * 3600))
    """
)


def write_script(tmp_path, name, body):
    p = tmp_path / name
    p.write_text(body)
    return str(p)


def exec_template(script, extra=""):
    tail = f" {extra}" if extra else ""
    return f"{sys.executable} {script} {{in}} {{out}}{tail}"


class TestBuiltinSteppers:
    def test_persistence_payload_identical(self):
        s = make_state(seed=4, valid_time=0)
        out = step(StepperSpec("persistence"), s, dt_hours=6)
        assert out.valid_time == 6 * 3600
        assert out.data.tobytes() == s.data.tobytes()

    def test_persistence_does_not_mutate_input(self):
        s = make_state()
        before = s.data.copy()
        step(StepperSpec("persistence"), s)
        assert np.array_equal(s.data, before)

    def test_zonal_shift_brute_force(self):
        s = make_state(n_channels=2, n_lat=4, n_lon=9, seed=7)
        k = 3
        out = step(StepperSpec("zonal_advection", shift_cells_per_step=k), s)
        for c in range(2):
            for i in range(4):
                for j in range(9):
                    assert out.data[c, i, j] == s.data[c, i, (j - k) % 9]

    def test_zonal_negative_shift(self):
        s = make_state(n_lon=8, seed=8)
        out = step(StepperSpec("zonal_advection", shift_cells_per_step=-2), s)
        assert np.array_equal(out.data, np.roll(s.data, -2, axis=2))

    def test_zonal_composition_wraps_to_identity(self):
        s = make_state(n_lon=12, seed=9)
        spec = StepperSpec("zonal_advection", shift_cells_per_step=3)
        cur = s
        for i in range(4):  # 4 * 3 == 12 == n_lon
            cur = step(spec, cur, dt_hours=6, step_index=i)
        assert np.array_equal(cur.data, s.data)
        assert cur.valid_time == s.valid_time + 24 * 3600

    def test_dt_must_be_positive(self):
        with pytest.raises(ValueError):
            step(StepperSpec("persistence"), make_state(), dt_hours=0)


class TestParseStepper:
    def test_forms(self):
        assert parse_stepper("persistence").kind == "persistence"
        z = parse_stepper("zonal:4")
        assert z.kind == "zonal_advection" and z.shift_cells_per_step == 4
        e = parse_stepper("exec:cat {in} > {out}")
        assert e.kind == "external"

    def test_zonal_negative(self):
        assert parse_stepper("zonal:-2").shift_cells_per_step == -2

    def test_unknown(self):
        with pytest.raises(ValueError):
            parse_stepper("magic")

    def test_zonal_non_integer(self):
        with pytest.raises(ValueError):
            parse_stepper("zonal:fast")

    def test_default_timeout(self):
        assert parse_stepper("persistence").timeout == DEFAULT_TIMEOUT


class TestSpecValidation:
    def test_external_requires_both_placeholders(self):
        with pytest.raises(ValueError):
            StepperSpec("external", command_template="model {in}")
        with pytest.raises(ValueError):
            StepperSpec("external", command_template="model {out}")

    def test_placeholders_exactly_once(self):
        with pytest.raises(ValueError):
            StepperSpec("external", command_template="model {in} {in} {out}")

    def test_timeout_positive(self):
        with pytest.raises(ValueError):
            StepperSpec("external", command_template="run {in} {out}", timeout=0.0)

    def test_describe(self):
        assert StepperSpec("persistence").describe() == "persistence"
        assert "shift=5" in StepperSpec("zonal_advection", shift_cells_per_step=5).describe()


class TestExternalStepper:
    def test_copy_stepper_equals_persistence(self, tmp_path):
        script = write_script(
            tmp_path,
            "copy.py",
            "import shutil, sys\nshutil.copyfile(sys.argv[1], sys.argv[2])\n",
        )
        s = make_state(seed=10, valid_time=3600 * 6)
        spec = StepperSpec("external", command_template=exec_template(script))
        got = step(spec, s, dt_hours=6, step_index=0, scratch_dir=str(tmp_path))
        want = step(StepperSpec("persistence"), s, dt_hours=6)
        assert got.valid_time == want.valid_time
        assert got.data.tobytes() == want.data.tobytes()

    def test_stepper_that_stamps_time_itself(self, tmp_path):
        script = write_script(tmp_path, "patch.py", PATCH_TIME_SRC)
        s = make_state(seed=11)
        spec = StepperSpec("external", command_template=exec_template(script))
        got = step(spec, s, dt_hours=6, scratch_dir=str(tmp_path))
        assert got.valid_time == s.valid_time + 6 * 3600

    def test_wrong_output_time_rejected(self, tmp_path):
        body = PATCH_TIME_SRC.replace("t + dt * 3600", "t + 12345")
        script = write_script(tmp_path, "bad_time.py", body)
        spec = StepperSpec("external", command_template=exec_template(script))
        with pytest.raises(StepperContractViolation):
            step(spec, make_state(), dt_hours=6, scratch_dir=str(tmp_path))

    def test_env_vars_passed(self, tmp_path):
        body = textwrap.dedent(
            """
            import os, shutil, sys
            assert os.environ["WX_DT_HOURS"] == "12"
            assert os.environ["WX_STEP_INDEX"] == "4"
            shutil.copyfile(sys.argv[1], sys.argv[2])
            """
        )
        script = write_script(tmp_path, "env.py", body)
        spec = StepperSpec("external", command_template=exec_template(script))
        out = step(spec, make_state(), dt_hours=12, step_index=4, scratch_dir=str(tmp_path))
        assert out.valid_time == 12 * 3600

    def test_extra_placeholders_substituted(self, tmp_path):
        body = textwrap.dedent(
            """
            import shutil, sys
            assert sys.argv[3] == "6"
            assert sys.argv[4] == "2"
            shutil.copyfile(sys.argv[1], sys.argv[2])
            """
        )
        script = write_script(tmp_path, "args.py", body)
        tmpl = exec_template(script, extra="{dt_hours} {step_index}")
        spec = StepperSpec("external", command_template=tmpl)
        step(spec, make_state(), dt_hours=6, step_index=2, scratch_dir=str(tmp_path))

    def test_scratch_base_with_space(self, tmp_path):
        base = tmp_path / "has space"
        base.mkdir()
        script = write_script(
            tmp_path,
            "copy.py",
            "import shutil, sys\nshutil.copyfile(sys.argv[1], sys.argv[2])\n",
        )
        spec = StepperSpec("external", command_template=exec_template(script))
        out = step(spec, make_state(seed=1), dt_hours=6, scratch_dir=str(base))
        assert out.valid_time == 6 * 3600

    def test_scratch_removed_on_success(self, tmp_path):
        base = tmp_path / "scratch"
        base.mkdir()
        script = write_script(
            tmp_path,
            "copy.py",
            "import shutil, sys\nshutil.copyfile(sys.argv[1], sys.argv[2])\n",
        )
        spec = StepperSpec("external", command_template=exec_template(script))
        step(spec, make_state(), scratch_dir=str(base))
        assert os.listdir(base) == []

    def test_nonzero_exit_raises_and_keeps_scratch(self, tmp_path):
        base = tmp_path / "scratch"
        base.mkdir()
        script = write_script(
            tmp_path,
            "fail.py",
            "import sys\nprint('boom', file=sys.stderr)\nsys.exit(3)\n",
        )
        spec = StepperSpec("external", command_template=exec_template(script))
        with pytest.raises(StepperFailed) as ei:
            step(spec, make_state(), scratch_dir=str(base))
        assert ei.value.exit_code == 3
        assert "boom" in ei.value.stderr
        kept = os.listdir(base)
        assert len(kept) == 1
        # the hermetic input file must still be there for postmortems
        run_dir = base / kept[0]
        assert any(n.endswith("_in.wxs") for n in os.listdir(run_dir))
        assert str(run_dir) in str(ei.value)

    def test_missing_output_raises(self, tmp_path):
        script = write_script(tmp_path, "noop.py", "import sys\n")
        spec = StepperSpec("external", command_template=exec_template(script))
        with pytest.raises(StepperNoOutput):
            step(spec, make_state(), scratch_dir=str(tmp_path))

    def test_timeout(self, tmp_path):
        script = write_script(tmp_path, "slow.py", "import time\ntime.sleep(30)\n")
        spec = StepperSpec(
            "external", command_template=exec_template(script), timeout=0.3
        )
        with pytest.raises(StepperTimeout):
            step(spec, make_state(), scratch_dir=str(tmp_path))

    def test_unlaunchable_command(self, tmp_path):
        spec = StepperSpec(
            "external", command_template="/no/such/binary57 {in} {out}"
        )
        with pytest.raises(StepperFailed):
            step(spec, make_state(), scratch_dir=str(tmp_path))

    def test_wrong_channel_names_rejected(self, tmp_path):
        # stepper rewrites the channel table in place (same total length)
        body = textwrap.dedent(
            """
            import shutil, sys
            src, dst = sys.argv[1], sys.argv[2]
            shutil.copyfile(src, dst)
            with open(dst, "r+b") as f:
                f.seek(32 + 2)
                f.write(b"zz")
            """
        )
        script = write_script(tmp_path, "rename.py", body)
        spec = StepperSpec("external", command_template=exec_template(script))
        s = make_state(names=("ch0", "ch1"))
        with pytest.raises(StepperContractViolation) as ei:
            step(spec, s, scratch_dir=str(tmp_path))
        assert "channel" in str(ei.value)


class TestContractValidation:
    def test_ok(self):
        s = make_state(valid_time=0)
        out = s.replace(valid_time=6 * 3600)
        validate_step_contract(s, out, 6)

    def test_wrong_grid(self):
        s = make_state(n_lat=8, n_lon=16)
        other = make_state(n_lat=4, n_lon=16, valid_time=6 * 3600)
        with pytest.raises(StepperContractViolation) as ei:
            validate_step_contract(s, other, 6)
        assert "dims" in str(ei.value)

    def test_wrong_time(self):
        s = make_state(valid_time=0)
        out = s.replace(valid_time=5 * 3600)
        with pytest.raises(StepperContractViolation) as ei:
            validate_step_contract(s, out, 6)
        assert "time" in str(ei.value)

    def test_wrong_names(self):
        a = make_state(names=("a", "b"), valid_time=6 * 3600)
        b = make_state(names=("a", "c"))
        with pytest.raises(StepperContractViolation):
            validate_step_contract(b, a, 6)
