"""Command-line front end.

    shiftband generate-env --config env.json --out means.csv
    shiftband ground-truth --config env.json --out phases.json
    shiftband run --config experiment.json [--out DIR] [--parallel N] [--dry-run]
    shiftband report --config summary.json
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from .env import EnvSpec
from .errors import ShiftbandError
from .ground_truth import DEFAULT_CAP, compute_significant_shifts, theoretical_bounds
from .harness import ExperimentConfig, _schema_error, load_schema, run_experiment


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ShiftbandError(f"{path}: invalid JSON ({exc})") from None


def _load_env(path: str) -> EnvSpec:
    data = _read_json(path)
    try:
        jsonschema.validate(data, load_schema("env.schema.json"))
    except jsonschema.ValidationError as exc:
        raise _schema_error(exc) from None
    return EnvSpec.from_dict(data)


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def cmd_generate_env(args) -> int:
    spec = _load_env(args.config)
    model = spec.expand()
    _write(model.to_csv(), args.out)
    if args.out not in (None, "-"):
        print(spec.to_json())
    return 0


def cmd_ground_truth(args) -> int:
    spec = _load_env(args.config)
    model = spec.expand()
    ann = compute_significant_shifts(model, cap=args.cap)
    d = ann.to_dict()
    b = theoretical_bounds(ann)
    d["bounds"] = {"sum_sqrt": b.sum_sqrt, "jensen_bound": b.jensen_bound, "tv_bound": b.tv_bound}
    _write(json.dumps(d, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_run(args) -> int:
    config = ExperimentConfig.from_dict(_read_json(args.config))
    if args.parallel is not None:
        config.parallel = args.parallel
    if args.dry_run:
        print(f"policy={config.policy['name']} env={config.env.kind} K={config.env.K}")
        for T, seed in config.cells():
            print(f"T={T} seed={seed}")
        print(f"{len(config.cells())} trials")
        return 0
    result = run_experiment(config)
    out = dict(config.output)
    if args.out:
        d = Path(args.out)
        out.setdefault("csv", str(d / "trials.csv"))
        out.setdefault("json", str(d / "summary.json"))
    _write(result.to_csv(), out.get("csv"))
    if out.get("json"):
        _write(result.to_json() + "\n", out["json"])
    if out.get("events"):
        _write(result.events_jsonl(), out["events"])
    return 0


def cmd_report(args) -> int:
    data = _read_json(args.config)
    rows = data.get("horizons", [])
    print(f"{'T':>8} {'seeds':>6} {'mean':>12} {'se':>10} {'restart%':>9} {'L':>3} {'ratio':>10}")
    for h in rows:
        gt = h.get("ground_truth") or {}
        ratio = h.get("bound_ratio")
        print(
            f"{h['T']:>8} {h['num_seeds']:>6} {h['mean_regret']:>12.3f} {h['std_error']:>10.3f} "
            f"{100 * h['restart_fraction']:>8.1f}% {gt.get('L', '-'):>3} "
            f"{'-' if ratio is None else f'{ratio:.3e}':>10}"
        )
    if data.get("slope") is not None:
        print(f"log-log slope: {data['slope']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="shiftband", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-env", help="expand an EnvSpec into a mean-matrix CSV")
    p.add_argument("--config", required=True, help="EnvSpec JSON file")
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_generate_env)

    p = sub.add_parser("ground-truth", help="significant shifts and yardstick bounds for an EnvSpec")
    p.add_argument("--config", required=True, help="EnvSpec JSON file")
    p.add_argument("--out", help="JSON path (stdout if omitted)")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="largest horizon for the exact scan")
    p.set_defaults(func=cmd_ground_truth)

    p = sub.add_parser("run", help="run an experiment grid")
    p.add_argument("--config", required=True, help="experiment JSON file")
    p.add_argument("--out", help="directory for trials.csv and summary.json")
    p.add_argument("--parallel", type=int, help="worker processes")
    p.add_argument("--dry-run", action="store_true", help="print the trial grid and exit")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="print a summary JSON as a table")
    p.add_argument("--config", required=True, help="summary JSON written by 'run'")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ShiftbandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
