"""Command-line entry point.

Subcommands: train, eval, render, gradcheck, synth, trend.  Exit codes:
0 success, 1 contract/validation error, 2 I/O or file-format error.  All
run state flows through flags and the JSON config; no environment
variables are consulted.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import load_config
from .errors import ContractError, FileFormatError, NumericsError, SchemaError


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpf",
        description="Dense prediction fields: train/evaluate/render "
                    "coordinate-queried dense prediction models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a JSON config")
    p_train.add_argument("--config", required=True, help="path to config JSON")

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a dataset dir")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True, help="dataset directory")

    p_render = sub.add_parser("render", help="render a prediction map to a PGM file")
    p_render.add_argument("--checkpoint", required=True)
    p_render.add_argument("--image", required=True, help="input PPM")
    p_render.add_argument("--guidance", required=True, help="guidance PPM")
    p_render.add_argument("--out", required=True, help="output PGM path")
    p_render.add_argument("--res", default=None, metavar="HxW",
                          help="output resolution (default: guidance resolution)")

    p_gc = sub.add_parser("gradcheck", help="finite-difference check of the full model")
    p_gc.add_argument("--task", choices=["parsing", "intrinsic", "both"],
                      default="both")
    p_gc.add_argument("--probes", type=int, default=60)

    p_synth = sub.add_parser("synth", help="write a synthetic dataset directory")
    p_synth.add_argument("--task", choices=["parsing", "intrinsic"], required=True)
    p_synth.add_argument("--out", required=True)
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--n", type=int, default=25, help="number of scenes")
    p_synth.add_argument("--res", type=int, default=64)
    p_synth.add_argument("--guidance-scale", type=int, default=1)
    p_synth.add_argument("--regions", type=int, default=5)
    p_synth.add_argument("--classes", type=int, default=4)
    p_synth.add_argument("--levels", type=int, default=3)
    p_synth.add_argument("--points", type=int, default=8)
    p_synth.add_argument("--pairs", type=int, default=30)

    p_trend = sub.add_parser("trend", help="guidance-resolution sweep experiment")
    p_trend.add_argument("--config", required=True)
    return parser


def _parse_res(text: str) -> tuple[int, int]:
    try:
        h, w = text.lower().split("x")
        return int(h), int(w)
    except ValueError as exc:
        raise SchemaError(f"--res expects HxW, got {text!r}") from exc


def _cmd_train(args) -> int:
    from .trainer import train
    cfg = load_config(args.config)
    result = train(cfg, log=print)
    print(json.dumps(result.report, indent=1, sort_keys=True))
    if result.checkpoint_path:
        print(f"checkpoint: {result.checkpoint_path}")
    return 0


def _cmd_eval(args) -> int:
    from .trainer import evaluate_checkpoint
    report = evaluate_checkpoint(args.checkpoint, args.data)
    print(json.dumps(report, indent=1, sort_keys=True))
    return 0


def _cmd_render(args) -> int:
    from .trainer import render_to_file
    res = _parse_res(args.res) if args.res else None
    render_to_file(args.checkpoint, args.image, args.guidance, args.out, res)
    print(f"wrote {args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    from .trainer import run_gradcheck
    tasks = ["parsing", "intrinsic"] if args.task == "both" else [args.task]
    ok = True
    for task in tasks:
        res = run_gradcheck(task, probes=args.probes)
        status = "PASS" if res.passed else "FAIL"
        print(f"{task}: {status} worst rel error {res.max_rel_error:.3e} "
              f"(parameter {res.worst_param}, {res.probes_used} probes)")
        ok = ok and res.passed
    if not ok:
        raise NumericsError("gradient check failed")
    return 0


def _cmd_synth(args) -> int:
    from .data_io.datasets import write_dataset
    from .data_io.synthetic import SyntheticConfig
    cfg = SyntheticConfig(task=args.task, resolution=args.res,
                          guidance_scale=args.guidance_scale,
                          regions=args.regions, classes=args.classes,
                          levels=args.levels, points_per_image=args.points,
                          pairs_per_image=args.pairs)
    ids = write_dataset(cfg, args.seed, args.out, args.n)
    print(f"wrote {len(ids)} scenes to {args.out}")
    return 0


def _cmd_trend(args) -> int:
    from .trainer import trend_experiment
    cfg = load_config(args.config)
    table = trend_experiment(cfg, log=print)
    print(json.dumps(table, indent=1, sort_keys=True))
    return 0


_COMMANDS = {"train": _cmd_train, "eval": _cmd_eval, "render": _cmd_render,
             "gradcheck": _cmd_gradcheck, "synth": _cmd_synth, "trend": _cmd_trend}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ContractError, SchemaError, NumericsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FileFormatError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
