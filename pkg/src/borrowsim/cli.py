"""Command-line front end: run sweeps, validate scenario files, list recipes."""

from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, check_config, cost_estimate, normalize_config
from .recipes import RECIPES, list_recipes, recipe_config
from .sweep import run_config, write_outputs


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise SystemExit(f"error: cannot read {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise SystemExit(
            f"error: {path} is not valid JSON (line {exc.lineno}, column {exc.colno}): {exc.msg}"
        )


def _apply_overrides(cfg: dict, args) -> dict:
    """Seed/reps precedence: CLI flag, then environment, then the file."""
    cfg = dict(cfg)
    env_seed = os.environ.get("OC_SEED")
    env_reps = os.environ.get("OC_REPS")
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise SystemExit(f"error: OC_SEED must be an integer, got {env_seed!r}")
    if env_reps is not None:
        try:
            cfg["reps"] = int(env_reps)
        except ValueError:
            raise SystemExit(f"error: OC_REPS must be an integer, got {env_reps!r}")
    if args.seed is not None:
        cfg["seed"] = args.seed
    if getattr(args, "reps", None) is not None:
        cfg["reps"] = args.reps
    return cfg


def _resolve_config(args) -> dict:
    if bool(args.config) == bool(args.recipe):
        raise SystemExit("error: give exactly one of --config or --recipe")
    if args.recipe:
        if args.recipe not in RECIPES:
            raise SystemExit(
                f"error: unknown recipe {args.recipe!r}; see the 'recipes' command"
            )
        return recipe_config(args.recipe)
    return _load_config(args.config)


def _cmd_run(args) -> int:
    cfg = _apply_overrides(_resolve_config(args), args)
    errors = check_config(cfg)
    if errors:
        for e in errors:
            print(f"invalid: {e}", file=sys.stderr)
        return 2
    cfg = normalize_config(cfg)
    out_dir = args.out or os.path.join("results", cfg["scenario_id"])
    result = run_config(cfg, threads=args.threads)
    try:
        written = write_outputs(result, cfg, out_dir)
        with open(os.path.join(out_dir, "config.json"), "w") as fh:
            json.dump(cfg, fh, indent=1)
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write outputs to {out_dir}: {exc}", file=sys.stderr)
        return 1
    for line in result.summary_lines():
        print(f"{cfg['scenario_id']}: {line}")
    print(f"{cfg['scenario_id']}: wrote {', '.join(written)}")
    return 0


def _cmd_validate(args) -> int:
    cfg = _apply_overrides(_load_config(args.config), args)
    errors = check_config(cfg)
    if errors:
        for e in errors:
            print(f"invalid: {e}")
        return 2
    cfg = normalize_config(cfg)
    cells, draws = cost_estimate(cfg)
    print(f"OK: {cfg['scenario_id']} ({cfg['kind']}, {cfg['trial']})")
    print(f"cells: {cells}")
    print(f"monte carlo draws: {draws}")
    return 0


def _cmd_recipes(_args) -> int:
    print(list_recipes())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="borrowsim",
        description="Operating-characteristics sweeps for borrowing designs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario file or built-in recipe")
    run.add_argument("--config", help="path to a scenario JSON file")
    run.add_argument("--recipe", help="name of a built-in recipe")
    run.add_argument("--out", help="output directory (default results/<scenario_id>)")
    run.add_argument("--seed", type=int, help="override the seed")
    run.add_argument("--reps", type=int, help="override the replication count")
    run.add_argument("--threads", type=int, help="worker threads (default: all cores)")
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a scenario file without running it")
    val.add_argument("--config", required=True)
    val.add_argument("--seed", type=int, help="seed to assume for the check")
    val.add_argument("--reps", type=int, help="replication count to assume")
    val.set_defaults(func=_cmd_validate)

    rec = sub.add_parser("recipes", help="list built-in recipes")
    rec.set_defaults(func=_cmd_recipes)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"invalid: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
