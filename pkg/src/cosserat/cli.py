"""Command-line front end: ``cosserat run|study|validate <scenario>``.

Exit status: 0 when every check passes, 1 when a check fails or the
numerics break down, 2 for bad input (unreadable or invalid scenario).
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .expressions import ExpressionError
from .report import render_records, render_table
from .runner import convergence_study, prepare, run_scenario
from .scenario import ScenarioError, load_scenario

__all__ = ["main", "bundled_scenarios", "resolve_scenario", "OUTPUT_DIR_ENV"]

OUTPUT_DIR_ENV = "COSSERAT_OUTPUT_DIR"

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


def bundled_scenarios() -> dict[str, Path]:
    """Scenario files shipped with the package, keyed by file stem."""
    root = resources.files("cosserat") / "scenarios"
    return {Path(p.name).stem: Path(str(p)) for p in sorted(root.iterdir(), key=lambda q: q.name) if p.name.endswith(".toml")}


def resolve_scenario(arg: str) -> Path:
    """A path on disk, or the name of a bundled scenario."""
    path = Path(arg)
    if path.exists():
        return path
    bundled = bundled_scenarios()
    if arg in bundled:
        return bundled[arg]
    return path


def _output_path(out: str | None) -> Path | None:
    if out is None:
        return None
    path = Path(out)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    return path


def _emit(text: str, out: str | None) -> None:
    path = _output_path(out)
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cosserat", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("scenario", help="scenario file, or the name of a bundled scenario")
        p.add_argument("--out", help=f"write the report here (relative paths resolve under ${OUTPUT_DIR_ENV} if set)")
        p.add_argument("--format", choices=("table", "records"), default="table")
        p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every residual tolerance")

    common(sub.add_parser("run", help="run every check of a scenario"))
    study = sub.add_parser("study", help="refinement study with observed orders")
    common(study)
    study.add_argument("--levels", type=int, default=3)
    val = sub.add_parser("validate", help="check a scenario file without running it")
    val.add_argument("scenario")
    sub.add_parser("list", help="list bundled scenarios")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        for name, path in bundled_scenarios().items():
            print(f"{name}\t{path}")
        return EXIT_PASS
    try:
        scale = getattr(args, "tol_scale", 1.0)
        if not scale > 0 or scale == float("inf"):
            raise ScenarioError("--tol-scale: expected a positive number")
        if args.command == "study" and args.levels < 3:
            raise ScenarioError("--levels: expected an integer >= 3")
        sc = load_scenario(resolve_scenario(args.scenario))
        if args.command == "validate":
            prepare(sc)
            print(f"{sc.name}: valid {sc.kind} scenario")
            return EXIT_PASS
        if args.command == "study":
            report = convergence_study(sc, args.levels, scale)
        else:
            report = run_scenario(sc, scale)
    except (ScenarioError, ExpressionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: scenario {args.scenario!r}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    text = render_records(report) if args.format == "records" else render_table(report)
    _emit(text, args.out)
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
