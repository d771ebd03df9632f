"""Command-line interface.

Exit codes: 0 success, 1 domain error (one-line diagnostic on stderr, no
stack trace), 2 usage error. Scratch directory precedence for external
steppers: --scratch-dir flag, then WX_SCRATCH environment variable, then the
system temp directory.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

from . import cyclone, render, rollout, stepper, tensorio, verify
from .normalize import denormalize, normalize
from .errors import InvalidData, WxError
from .schema import GridGeometry, ChannelDescriptor, ChannelSchema, build_schema

__all__ = ["dispatch", "main"]

NORM_SUFFIX = ".norm.wxs"


def _read_state_cli(path: str) -> tensorio.StateTensor:
    # Files carry physical units unless the CLI naming convention says
    # otherwise; the flag itself is never serialized.
    st = tensorio.read_state(path)
    if str(path).endswith(NORM_SUFFIX):
        st = st.replace(normalized=True)
    return st


def _schema_for_id(schema_id: str) -> ChannelSchema:
    if schema_id == "msl":
        return ChannelSchema(
            (ChannelDescriptor("msl", "Mean sea level pressure", "Pa"),),
            schema_id="custom",
        )
    return build_schema(schema_id)


def _cmd_schema(args: argparse.Namespace) -> int:
    if args.schema_cmd == "print":
        sch = build_schema(args.schema_id)
        for i, ch in enumerate(sch.channels):
            level = str(ch.pressure_level) if ch.pressure_level is not None else "-"
            print(f"{i:3d}  {ch.name:8s} {ch.units:12s} {level}")
        return 0
    st = tensorio.read_state(args.file)
    if args.strict_era5:
        want = build_schema("fcnv2-73").names
        if (st.geom.n_lat, st.geom.n_lon) != (720, 1440):
            raise InvalidData(
                f"strict mode requires a 720x1440 grid, file has "
                f"{st.geom.n_lat}x{st.geom.n_lon}"
            )
        if st.schema.names != want:
            raise InvalidData("strict mode requires the 73-channel schema in canonical order")
    print(
        f"ok: {st.n_channels} channels, {st.geom.n_lat}x{st.geom.n_lon} grid, "
        f"valid {tensorio.iso_utc(st.valid_time)}, schema {st.schema.schema_id}"
    )
    return 0


def _cmd_normalize(args: argparse.Namespace) -> int:
    state = _read_state_cli(args.infile)
    stats = tensorio.read_stats(args.stats, state.schema)
    out = denormalize(state, stats) if args.invert else normalize(state, stats)
    tensorio.write_state(out, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_rollout(args: argparse.Namespace) -> int:
    initial = _read_state_cli(args.init)
    spec = stepper.parse_stepper(
        args.stepper, timeout=args.timeout, expects_normalized=args.expects_normalized
    )
    stats = tensorio.read_stats(args.stats, initial.schema) if args.stats else None
    cfg = rollout.RolloutConfig(
        stepper=spec,
        n_steps=args.steps,
        out_dir=args.out_dir,
        dt_hours=args.dt_hours,
        keep_normalized=args.keep_normalized,
        resume=args.resume,
        scratch_dir=args.scratch_dir,
    )
    traj = rollout.run_rollout(initial, cfg, stats)
    span = traj.n_steps * traj.dt_hours
    print(f"wrote {len(traj)} states ({span} h span) to {args.out_dir}")
    return 0


def _tracker_config(args: argparse.Namespace) -> cyclone.TrackerConfig:
    region = tuple(float(v) for v in args.region.split(","))
    if len(region) != 4:
        raise ValueError("--region must be latmin,latmax,lonmin,lonmax")
    return cyclone.TrackerConfig(
        seed_region=region,
        gate_km=None if args.no_gate else args.gate_km,
        pressure_channel=args.channel,
        smooth=args.smooth,
    )


def _cmd_track(args: argparse.Namespace) -> int:
    traj = rollout.read_trajectory(args.traj_dir)
    track = cyclone.extract_track(traj, _tracker_config(args))
    cyclone.write_track_csv(track, args.out)
    print(f"wrote {len(track)} fixes to {args.out}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    try:
        n_lat, n_lon = (int(v) for v in args.grid.split(","))
    except ValueError as exc:
        raise ValueError("--grid must be H,W") from exc
    geom = GridGeometry.global_grid(n_lat, n_lon)
    schema = _schema_for_id(args.schema_id)
    track = cyclone.linear_track(
        t0=tensorio.parse_time(args.start),
        dt_hours=args.dt_hours,
        n_fixes=args.steps + 1,
        lat0=args.lat0,
        lon0=args.lon0,
        dlat=args.dlat,
        dlon=args.dlon,
        min_pressure=(args.background - args.depth) * 100.0,
    )
    states = cyclone.synth_states(
        track, args.background, args.depth, args.radius, geom, schema
    )
    traj = rollout.write_trajectory(
        states, args.out_dir, args.dt_hours, stepper_desc="synth_cyclone"
    )
    print(f"wrote {len(traj)} synthetic states to {args.out_dir}")
    return 0


def _cmd_verify_mse(args: argparse.Namespace) -> int:
    pred = rollout.read_trajectory(args.pred_dir)
    truth = rollout.read_trajectory(args.truth_dir)
    stats = tensorio.read_stats(args.stats, pred.state(0).schema)
    reports = verify.score_trajectory(pred, truth, stats, metric="mse")
    verify.write_scores_csv(reports, args.out)
    print(f"wrote {len(reports)} leads to {args.out}")
    return 0


def _cmd_verify_rmse(args: argparse.Namespace) -> int:
    pred = rollout.read_trajectory(args.pred_dir)
    truth = rollout.read_trajectory(args.truth_dir)
    reports = verify.score_trajectory(pred, truth, metric="rmse", channel=args.channel)
    verify.write_scores_csv(reports, args.out)
    print(f"wrote {len(reports)} leads to {args.out}")
    return 0


def _cmd_verify_track(args: argparse.Namespace) -> int:
    pred = cyclone.read_track_csv(args.pred)
    truth = cyclone.read_track_csv(args.truth)
    errors, mean = cyclone.track_error(pred, truth)
    for k, err in enumerate(errors):
        print(f"{k} {err:.6f}")
    print(f"mean_km {mean:.6f}")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["step", "error_km"])
            for k, err in enumerate(errors):
                writer.writerow([k, repr(err)])
    return 0


def _cmd_render(args: argparse.Namespace) -> int:
    state = _read_state_cli(args.infile)
    if args.region:
        state = render.subset_region(state, render.Region.parse(args.region))
    value_range = None
    if args.range:
        lo, hi = (float(v) for v in args.range.split(","))
        value_range = (lo, hi)
    spec = render.RenderSpec(
        channel=args.channel,
        projection=args.projection,
        central_meridian=args.central_meridian,
        colormap=args.colormap,
        value_range=value_range,
        width_px=args.width,
        graticule_deg=None if args.no_graticule else args.graticule,
    )
    render.render_field(state, spec, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wxcast",
        description="Autoregressive weather-forecast harness: state I/O, "
        "rollouts, cyclone tracking, verification, rendering.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schema", help="inspect schemas and state files")
    ssub = p.add_subparsers(dest="schema_cmd", required=True)
    sp = ssub.add_parser("print", help="one line per channel of a canonical schema")
    sp.add_argument("schema_id", choices=["fcnv2-73", "fcn-20"])
    sp.set_defaults(func=_cmd_schema)
    sv = ssub.add_parser("validate", help="validate a WXS1 state file")
    sv.add_argument("file")
    sv.add_argument(
        "--strict-era5",
        action="store_true",
        help="require the 720x1440 grid and canonical 73-channel schema",
    )
    sv.set_defaults(func=_cmd_schema)

    p = sub.add_parser("normalize", help="apply or invert channel standardization")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--stats", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--invert", action="store_true", help="denormalize instead")
    p.set_defaults(func=_cmd_normalize)

    p = sub.add_parser("rollout", help="run the autoregressive forecast loop")
    p.add_argument("--init", required=True, help="initial condition (WXS1)")
    p.add_argument(
        "--stepper",
        required=True,
        help='persistence | zonal:<k> | exec:"<command with {in} {out}>"',
    )
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--dt-hours", type=int, default=6)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--stats", help="stats CSV (required for normalized flows)")
    p.add_argument("--resume", action="store_true", help="continue a validated prefix")
    p.add_argument("--keep-normalized", action="store_true", help="persist normalized states")
    p.add_argument(
        "--expects-normalized",
        action="store_true",
        help="stepper consumes and produces normalized states",
    )
    p.add_argument("--timeout", type=float, default=stepper.DEFAULT_TIMEOUT)
    p.add_argument("--scratch-dir", default=None)
    p.set_defaults(func=_cmd_rollout)

    p = sub.add_parser("track", help="extract a cyclone track from a trajectory")
    p.add_argument("--traj-dir", required=True)
    p.add_argument("--region", required=True, help="seed box latmin,latmax,lonmin,lonmax")
    p.add_argument("--gate-km", type=float, default=750.0)
    p.add_argument("--no-gate", action="store_true", help="plain global argmin per step")
    p.add_argument("--smooth", action="store_true", help="3x3 box mean before the argmin")
    p.add_argument("--channel", default="msl")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_track)

    p = sub.add_parser("synth", help="generate a synthetic-cyclone trajectory")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--steps", type=int, default=17)
    p.add_argument("--dt-hours", type=int, default=6)
    p.add_argument("--start", default="2000-01-01T00:00:00Z")
    p.add_argument("--lat0", type=float, default=25.0)
    p.add_argument("--lon0", type=float, default=290.0)
    p.add_argument("--dlat", type=float, default=1.0)
    p.add_argument("--dlon", type=float, default=-1.0)
    p.add_argument("--background", type=float, default=1013.0, help="hPa")
    p.add_argument("--depth", type=float, default=50.0, help="hPa")
    p.add_argument("--radius", type=float, default=3.0, help="degrees")
    p.add_argument("--grid", default="720,1440", help="H,W")
    p.add_argument(
        "--schema-id",
        default="msl",
        choices=["msl", "fcnv2-73", "fcn-20"],
        help="msl = single-channel fixture schema",
    )
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("verify", help="score forecasts against truth")
    vsub = p.add_subparsers(dest="verify_cmd", required=True)
    vm = vsub.add_parser("mse", help="normalized MSE per lead and channel")
    vm.add_argument("--pred-dir", required=True)
    vm.add_argument("--truth-dir", required=True)
    vm.add_argument("--stats", required=True)
    vm.add_argument("--out", required=True)
    vm.set_defaults(func=_cmd_verify_mse)
    vr = vsub.add_parser("rmse", help="cos-latitude-weighted RMSE of one channel")
    vr.add_argument("--pred-dir", required=True)
    vr.add_argument("--truth-dir", required=True)
    vr.add_argument("--channel", required=True)
    vr.add_argument("--out", required=True)
    vr.set_defaults(func=_cmd_verify_rmse)
    vt = vsub.add_parser("track", help="great-circle error between two track CSVs")
    vt.add_argument("--pred", required=True)
    vt.add_argument("--truth", required=True)
    vt.add_argument("--out")
    vt.set_defaults(func=_cmd_verify_track)

    p = sub.add_parser("render", help="render a channel to a P6 pixmap")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--projection", choices=["equirect", "robinson"], default="equirect")
    p.add_argument("--central-meridian", type=float, default=180.0)
    p.add_argument("--out", required=True)
    p.add_argument("--region", help="latmin,latmax,lonmin,lonmax crop before rendering")
    p.add_argument("--range", help="value range min,max")
    p.add_argument("--width", type=int, default=1440)
    p.add_argument("--graticule", type=float, default=30.0)
    p.add_argument("--no-graticule", action="store_true")
    p.add_argument("--colormap", choices=["diverging", "sequential"], default="diverging")
    p.set_defaults(func=_cmd_render)

    return parser


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except WxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
