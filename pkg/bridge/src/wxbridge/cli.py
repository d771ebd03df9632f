"""Command line interface.

Exit codes: 0 success, 1 domain failure (one line on stderr), 2 usage.
The `step` subcommand speaks the harness's external-stepper protocol, so a
rollout can use it directly:

    wxcast rollout --stepper 'exec:wxbridge step --identity --in {in} --out {out}' ...
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import sys

from . import era5, fetch, stats, stepping
from .errors import BridgeError

log = logging.getLogger("wxbridge")


def _cmd_step(args: argparse.Namespace) -> int:
    cfg = stepping.BridgeConfig(
        model_id=args.model_id, weights_dir=args.weights_dir or "", device=args.device
    )
    stepping.bridge_step(
        args.infile,
        args.out,
        dt_hours=args.dt_hours,
        identity=args.identity,
        cfg=cfg,
    )
    return 0


def _parse_when(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        parsed = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValueError(f"not a timestamp: {text!r}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=dt.timezone.utc)
    return int(parsed.timestamp())


def _cmd_convert(args: argparse.Namespace) -> int:
    state = era5.era5_to_wxs(args.infiles, _parse_when(args.time), args.out)
    c, h, w = state.data.shape
    print(f"wrote {args.out}: {c} channels on {h}x{w}")
    return 0


def _cmd_stats(args: argparse.Namespace) -> int:
    pairs = stats.convert_stats(args.means, args.stds, args.out)
    print(f"wrote {args.out}: {len(pairs)} channels")
    return 0


def _cmd_fetch_initial(args: argparse.Namespace) -> int:
    try:
        date = dt.date.fromisoformat(args.date)
    except ValueError:
        raise ValueError(f"not a date: {args.date!r}")
    staged = fetch.fetch_initial(
        date, args.hour, args.out_dir, credentials=args.credentials
    )
    for p in staged:
        print(p)
    return 0


def _cmd_fetch_weights(args: argparse.Namespace) -> int:
    path = fetch.fetch_weights(args.dest, model_id=args.model_id)
    print(f"weights present at {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wxbridge",
        description="adapter between the forecast harness and real models/data",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("step", help="advance one step (external-stepper protocol)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dt-hours", type=int, default=6)
    p.add_argument(
        "--identity",
        action="store_true",
        help="bypass the model: validate and copy the input byte-exactly",
    )
    p.add_argument("--model-id", default=stepping.DEFAULT_MODEL_ID)
    p.add_argument("--weights-dir", default=None)
    p.add_argument("--device", choices=["cpu", "gpu"], default="cpu")
    p.set_defaults(func=_cmd_step)

    p = sub.add_parser("convert", help="ERA5 NetCDF snapshot to a state file")
    p.add_argument(
        "--in",
        dest="infiles",
        action="append",
        required=True,
        help="source NetCDF (repeat for multiple files)",
    )
    p.add_argument("--time", required=True, help="ISO timestamp or Unix seconds")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("stats", help="published .npy stats to the stats CSV")
    p.add_argument("--means", required=True)
    p.add_argument("--stds", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("fetch-initial", help="download one ERA5 snapshot")
    p.add_argument("--date", required=True, help="YYYY-MM-DD")
    p.add_argument("--hour", type=int, default=0)
    p.add_argument("--out-dir", default=".")
    p.add_argument("--credentials", default=None, help="CDS credentials file")
    p.set_defaults(func=_cmd_fetch_initial)

    p = sub.add_parser("fetch-weights", help="stage model weights locally")
    p.add_argument("--dest", required=True)
    p.add_argument("--model-id", default=stepping.DEFAULT_MODEL_ID)
    p.set_defaults(func=_cmd_fetch_weights)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except BridgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
