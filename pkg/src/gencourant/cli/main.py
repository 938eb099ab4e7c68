"""Command line entry point.

    gencourant check <command> --scene FILE [--points N] [--seed S] [--tol T]
                     [--samples K] [--policy heterotic|typeII]
                     [--format json|csv] [--out PATH] [--param NAME=VAL ...]
    gencourant scenes list
    gencourant scenes validate FILE [FILE ...]

Exit codes: 0 pass, 1 fail (including evaluation errors), 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..sugra import DilatonPolicy
from .checks import COMMANDS, CheckError, EvaluationError, run_check
from .scenefile import FIXTURE_DIR, SceneError, list_fixtures, load_fixture, load_scene

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _param(text: str):
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {name!r}: {value!r} is not a number") from None


def resolve_scene_path(text: str) -> Path:
    """A path as given, or a bundled fixture by name (``su2`` or ``fixtures/su2.json``)."""
    p = Path(text)
    if p.exists():
        return p
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    bundled = FIXTURE_DIR / f"{stem}.json"
    if bundled.exists() and (p.parent in (Path("."), Path("fixtures"))):
        return bundled
    return p


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gencourant", description="Residual checks for generalized geometry scenes.")
    sub = ap.add_subparsers(dest="group", required=True)

    chk = sub.add_parser("check", help="run a residual check on a scene")
    chk.add_argument("command", choices=list(COMMANDS))
    chk.add_argument("--scene", required=True, help="scene file or bundled fixture name")
    chk.add_argument("--points", type=int, default=16)
    chk.add_argument("--seed", type=int, default=0)
    chk.add_argument("--tol", type=float, default=1e-8)
    chk.add_argument("--samples", type=int, default=4, help="random inputs per point")
    chk.add_argument("--policy", choices=["heterotic", "typeII"], default="heterotic")
    chk.add_argument("--format", choices=["json", "csv"], default="json")
    chk.add_argument("--out", type=Path)
    chk.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VAL")

    scn = sub.add_parser("scenes", help="list bundled fixtures or validate scene files")
    ssub = scn.add_subparsers(dest="action", required=True)
    ssub.add_parser("list")
    val = ssub.add_parser("validate")
    val.add_argument("files", nargs="+")
    return ap


def _check(args) -> int:
    scene = load_scene(resolve_scene_path(args.scene), dict(args.param))
    report = run_check(args.command, scene, points=args.points, seed=args.seed, tol=args.tol,
                       samples=args.samples, policy=DilatonPolicy(args.policy))
    text = report.render(args.format)
    if args.out:
        args.out.write_text(text)
        print(f"{args.command} {scene.name}: {'pass' if report.passed else 'FAIL'} "
              f"max_abs={report.max_abs:.3e} tol={report.tol:g}")
    else:
        sys.stdout.write(text)
    return EXIT_PASS if report.passed else EXIT_FAIL


def _scenes(args) -> int:
    if args.action == "list":
        for name in list_fixtures():
            sc = load_fixture(name)
            print(f"{name:18s} {sc.model.kind:9s} n={sc.n} m={sc.m} bianchi={sc.bianchi:9s} {sc.description}")
        return EXIT_PASS
    status = EXIT_PASS
    for f in args.files:
        try:
            sc = load_scene(resolve_scene_path(f))
        except SceneError as err:
            print(f"{f}: invalid: {err}")
            status = EXIT_USAGE
        else:
            print(f"{f}: ok ({sc.name}, n={sc.n}, m={sc.m}, bianchi {sc.bianchi})")
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.group == "check":
            return _check(args)
        return _scenes(args)
    except (SceneError, CheckError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except EvaluationError as err:
        print(f"evaluation error: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
