"""Command-line experiment runner.

Exit codes: 0 success, 1 validation failure, 2 simulation failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .errors import SimulationError, ValidationError
from .experiment import MODES, default_spec_text, load_spec, run_experiment

SUBCOMMAND_MODE = {
    "characterize": "characterize",
    "simulate-static": "static",
    "simulate-resonant": "resonant",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cantisense", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, type=Path, help="YAML experiment spec")
        if out:
            sp.add_argument("--out", type=Path, default=Path("out"), help="output directory")
            sp.add_argument("--seed", type=int, help="override the config seed")
            sp.add_argument("--workers", type=int, default=1, help="parallel sweep points")
            sp.add_argument("--decimate", type=int, help="keep every n-th trace sample")

    for name in ("characterize", "simulate-static", "simulate-resonant", "sweep"):
        common(sub.add_parser(name))
    sp = sub.add_parser("simulate-assay")
    common(sp)
    sp.add_argument("--sensing", choices=("static", "resonant"),
                    help="sensor mode (default: the config's assay_* mode, else static)")
    common(sub.add_parser("validate"), out=False)
    sp = sub.add_parser("default-config", help="print a valid spec for a mode")
    sp.add_argument("--mode", choices=MODES, default="resonant")
    return p


def _mode_for(args) -> str | None:
    if args.command in SUBCOMMAND_MODE:
        return SUBCOMMAND_MODE[args.command]
    if args.command == "simulate-assay":
        if args.sensing:
            return f"assay_{args.sensing}"
        import yaml
        raw = yaml.safe_load(args.config.read_text()) or {}
        mode = str(raw.get("mode", "")).lower() if isinstance(raw, dict) else ""
        return mode if mode.startswith("assay") else "assay_static"
    return None


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "default-config":
        sys.stdout.write(default_spec_text(args.mode))
        return 0
    try:
        spec = load_spec(args.config, _mode_for(args))
        if args.command == "validate":
            print(f"ok: {args.config} is a valid {spec.mode} spec")
            return 0
        if args.command != "sweep" and spec.sweep is not None:
            spec = dataclasses.replace(spec, sweep=None)
        if args.command == "sweep" and spec.sweep is None:
            print("error: sweep: section missing from spec", file=sys.stderr)
            return 1
        if args.seed is not None:
            spec = dataclasses.replace(spec, seed=args.seed, raw={**spec.raw, "seed": args.seed})
        if args.decimate is not None:
            if args.decimate < 1:
                print("error: --decimate must be >= 1", file=sys.stderr)
                return 1
            raw = {**spec.raw, "output": {**(spec.raw.get("output") or {}), "decimate": args.decimate}}
            spec = dataclasses.replace(spec, decimate=args.decimate, raw=raw)
        run_experiment(spec, args.out, workers=args.workers)
    except ValidationError as e:
        for issue in e.issues:
            print(f"error: {issue}", file=sys.stderr)
        return 1
    except SimulationError as e:
        print(f"simulation failed: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    print(f"wrote results to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
