"""Pluggable forecast steppers: map a state at t to a state at t + dt.

Built-ins (persistence, zonal_advection) exist for testing and as oracles.
The external kind hosts any real model behind a subprocess file-exchange
protocol: the harness writes the input state as a WXS1 file, substitutes
{in}/{out} (and optionally {dt_hours}/{step_index}) into the command
template, runs it, and reads the output file back. `WX_DT_HOURS` and
`WX_STEP_INDEX` are exported redundantly with the placeholders.

Each external invocation gets its own scratch directory, removed on success
and retained on failure so the exchange files can be inspected.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import (
    CorruptFile,
    FormatError,
    InvalidData,
    StepperContractViolation,
    StepperFailed,
    StepperNoOutput,
    StepperTimeout,
)
from .tensorio import SECONDS_PER_HOUR, StateTensor, read_state, write_state

__all__ = [
    "StepperSpec",
    "parse_stepper",
    "step",
    "validate_step_contract",
    "DEFAULT_TIMEOUT",
]

KINDS = ("persistence", "zonal_advection", "external")

# One real-model step is minutes even on CPU; an hour bounds hangs without
# killing slow inference.
DEFAULT_TIMEOUT = 3600.0


@dataclass(frozen=True)
class StepperSpec:
    kind: str
    shift_cells_per_step: int = 0
    command_template: str = ""
    timeout: float = DEFAULT_TIMEOUT
    expects_normalized: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"stepper kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "external":
            for ph in ("{in}", "{out}"):
                n = self.command_template.count(ph)
                if n != 1:
                    raise ValueError(f"command template must contain {ph} exactly once, found {n}")
            if not self.timeout > 0:
                raise ValueError(f"timeout must be > 0, got {self.timeout}")

    def describe(self) -> str:
        """Short human-readable form, also used in rollout manifests."""
        if self.kind == "zonal_advection":
            return f"zonal_advection(shift={self.shift_cells_per_step})"
        if self.kind == "external":
            return f"external({self.command_template})"
        return self.kind


def parse_stepper(
    text: str,
    timeout: float = DEFAULT_TIMEOUT,
    expects_normalized: bool = False,
) -> StepperSpec:
    """Parse the CLI stepper notation.

    "persistence", "zonal:<k>" (k signed cells per step, eastward positive),
    or "exec:<command template>".
    """
    if text == "persistence":
        return StepperSpec(kind="persistence", expects_normalized=expects_normalized)
    if text.startswith("zonal:"):
        try:
            shift = int(text[len("zonal:"):])
        except ValueError as exc:
            raise ValueError(f"bad zonal stepper {text!r}: want zonal:<integer>") from exc
        return StepperSpec(
            kind="zonal_advection",
            shift_cells_per_step=shift,
            expects_normalized=expects_normalized,
        )
    if text.startswith("exec:"):
        return StepperSpec(
            kind="external",
            command_template=text[len("exec:"):],
            timeout=timeout,
            expects_normalized=expects_normalized,
        )
    raise ValueError(
        f"unknown stepper {text!r}: want persistence, zonal:<k>, or exec:<template>"
    )


def step(
    spec: StepperSpec,
    state: StateTensor,
    dt_hours: int = 6,
    step_index: int = 0,
    scratch_dir: str | None = None,
) -> StateTensor:
    """Advance one step. Output time is input time + dt_hours * 3600."""
    if dt_hours < 1:
        raise ValueError(f"dt_hours must be >= 1, got {dt_hours}")
    t_next = state.valid_time + dt_hours * SECONDS_PER_HOUR
    if spec.kind == "persistence":
        return state.replace(valid_time=t_next)
    if spec.kind == "zonal_advection":
        # Shift k lands the value at lon index j on j+k (mod n_lon): eastward
        # motion for positive k on the west-to-east column order.
        shifted = np.roll(state.data, spec.shift_cells_per_step, axis=2)
        return state.replace(data=shifted, valid_time=t_next)
    return _run_external(spec, state, dt_hours, step_index, scratch_dir)


def _scratch_base(scratch_dir: str | None) -> str | None:
    if scratch_dir is not None:
        return scratch_dir
    return os.environ.get("WX_SCRATCH") or None


def _run_external(
    spec: StepperSpec,
    state: StateTensor,
    dt_hours: int,
    step_index: int,
    scratch_dir: str | None,
) -> StateTensor:
    run_dir = tempfile.mkdtemp(prefix="wxstep_", dir=_scratch_base(scratch_dir))
    in_path = os.path.join(run_dir, f"step_{step_index:04d}_in.wxs")
    out_path = os.path.join(run_dir, f"step_{step_index:04d}_out.wxs")
    write_state(state, in_path)
    argv = _substitute(spec.command_template, in_path, out_path, dt_hours, step_index)
    env = dict(os.environ)
    env["WX_DT_HOURS"] = str(dt_hours)
    env["WX_STEP_INDEX"] = str(step_index)
    try:
        proc = subprocess.run(
            argv,
            env=env,
            capture_output=True,
            timeout=spec.timeout,
        )
    except subprocess.TimeoutExpired:
        raise StepperTimeout(
            f"stepper exceeded {spec.timeout} s at step {step_index} (scratch kept: {run_dir})"
        ) from None
    except OSError as exc:
        raise StepperFailed(
            f"could not launch stepper {argv[0]!r}: {exc} (scratch kept: {run_dir})"
        ) from exc
    if proc.returncode != 0:
        stderr = proc.stderr.decode("utf-8", "replace").strip()
        raise StepperFailed(
            f"stepper exited {proc.returncode} at step {step_index}: "
            f"{stderr or '<no stderr>'} (scratch kept: {run_dir})",
            exit_code=proc.returncode,
            stderr=stderr,
        )
    if not os.path.exists(out_path):
        raise StepperNoOutput(
            f"stepper exited 0 but wrote no output file at step {step_index} "
            f"(scratch kept: {run_dir})"
        )
    try:
        out = read_state(out_path)
    except (FormatError, CorruptFile, InvalidData) as exc:
        raise StepperContractViolation(
            f"stepper output is not a readable state file: {exc} (scratch kept: {run_dir})"
        ) from exc
    # Steppers that merely copy bytes (the protocol-conformance baseline)
    # echo the input timestamp; the harness stamps those forward. Any other
    # timestamp is a contract violation.
    if out.valid_time == state.valid_time:
        out = out.replace(valid_time=state.valid_time + dt_hours * SECONDS_PER_HOUR)
    out = out.replace(normalized=state.normalized)
    validate_step_contract(state, out, dt_hours)
    shutil.rmtree(run_dir, ignore_errors=True)
    return out


def _substitute(template: str, in_path: str, out_path: str, dt_hours: int, step_index: int) -> list[str]:
    # Placeholders are substituted after tokenization so paths with spaces
    # stay single arguments.
    subs = {
        "{in}": in_path,
        "{out}": out_path,
        "{dt_hours}": str(dt_hours),
        "{step_index}": str(step_index),
    }
    argv = []
    for token in shlex.split(template):
        for key, val in subs.items():
            token = token.replace(key, val)
        argv.append(token)
    if not argv:
        raise ValueError("empty stepper command template")
    return argv


def validate_step_contract(inp: StateTensor, out: StateTensor, dt_hours: int) -> None:
    """Check the step postcondition; raises with field-level detail."""
    problems = []
    if out.schema.names != inp.schema.names:
        problems.append(
            f"channel names differ ({len(out.schema)} vs {len(inp.schema)} channels)"
        )
    if out.data.shape != inp.data.shape:
        problems.append(f"dims {out.data.shape} vs expected {inp.data.shape}")
    expected_t = inp.valid_time + dt_hours * SECONDS_PER_HOUR
    if out.valid_time != expected_t:
        got_h = (out.valid_time - inp.valid_time) / SECONDS_PER_HOUR
        problems.append(f"time advanced {got_h} h, expected {dt_hours} h")
    if not np.isfinite(out.data).all():
        problems.append("payload contains NaN or Inf")
    if problems:
        raise StepperContractViolation("; ".join(problems))
