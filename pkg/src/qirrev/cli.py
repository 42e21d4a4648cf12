"""Command-line front end.

    qirrev run CONFIG [--out PATH] [--set key=value]... [--seed N] [--quiet]
    qirrev validate CONFIG

Exit codes: 0 success, 2 validation error, 3 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from .errors import NumericError, QirrevError, ValidationError
from .scenario import ESTIMATE_COLUMNS, TRAJECTORY_COLUMNS, load_scenario, run_scenario

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3


def to_jsonable(obj):
    """Replace non-finite floats by the strings ``"inf"``, ``"-inf"``, ``"nan"``."""
    if isinstance(obj, float):
        if math.isfinite(obj):
            return obj
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dump_report(report: dict) -> str:
    # float repr is the shortest string that round-trips (at most 17 significant digits)
    return json.dumps(to_jsonable(report), indent=2, allow_nan=False) + "\n"


def _error(kind: str, exc: BaseException) -> None:
    payload = {"error": getattr(exc, "name", type(exc).__name__), "category": kind, "message": str(exc)}
    violation = getattr(exc, "violation", None)
    if violation is not None:
        payload["violation"] = violation
    print(json.dumps(to_jsonable(payload)), file=sys.stderr)


def _set_dotted(config: dict, key: str, value) -> None:
    parts = key.split(".")
    node = config
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ValidationError(f"ConfigError: cannot set '{key}', '{part}' is not an object")
    node[parts[-1]] = value


def apply_overrides(config: dict, overrides: list[str]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise ValidationError(f"ConfigError: override '{item}' is not key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set_dotted(config, key.strip(), value)
    return config


def _read_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"ConfigError: cannot read {path}: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"ConfigError: {path} is not valid JSON: {exc}") from None


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in (row[c] for c in columns)])


def side_tables(report: dict) -> dict[str, tuple]:
    res = report["results"]
    tables = {}
    if "trajectory" in res:
        tables["trajectory"] = (TRAJECTORY_COLUMNS, res["trajectory"])
    if "estimates" in res:
        tables["estimates"] = (ESTIMATE_COLUMNS, res["estimates"])
    return tables


def cmd_run(args) -> int:
    try:
        config = apply_overrides(_read_config(args.config), args.set or [])
        if args.seed is not None:
            config["seed"] = args.seed
        scenario = load_scenario(config)
    except NumericError as exc:
        _error("numeric", exc)
        return EXIT_NUMERIC
    except QirrevError as exc:
        _error("validation", exc)
        return EXIT_VALIDATION
    try:
        report = run_scenario(scenario)
    except ValidationError as exc:
        _error("validation", exc)
        return EXIT_VALIDATION
    except NumericError as exc:
        _error("numeric", exc)
        return EXIT_NUMERIC
    text = dump_report(report)
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        for name, (columns, rows) in side_tables(report).items():
            _write_csv(out.with_suffix(f".{name}.csv"), columns, rows)
    else:
        sys.stdout.write(text)
    if not args.quiet and args.out:
        print(f"wrote {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        load_scenario(_read_config(args.config))
    except QirrevError as exc:
        _error("validation", exc)
        return EXIT_VALIDATION
    if not args.quiet:
        print(f"{args.config}: ok", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qirrev", description=__doc__.splitlines()[0] if __doc__ else None)
    parser.add_argument("--quiet", action="store_true", help="suppress progress messages")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario and write a report")
    run.add_argument("config")
    run.add_argument("--out", help="report path; CSV tables are written next to it")
    run.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config entry (dotted key)")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    run.set_defaults(func=cmd_run)

    val = sub.add_parser("validate", help="check a scenario without computing")
    val.add_argument("config")
    val.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
