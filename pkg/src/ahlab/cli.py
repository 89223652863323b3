"""Command line interface.

Exit status: 0 all asserted checks pass, 1 verdict/identity failure, 2 input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import DEFAULT_THRESHOLDS, RunConfig
from .expr import ExprError
from .geometry import curvature_package
from .identities import (
    AH_NAMES,
    AK2_NAMES,
    BIANCHI_NAMES,
    CLASS_NAMES,
    CONST_NAMES,
    SYMMETRY_NAMES,
    ah_residuals,
    ak2_identities,
    bianchi_residuals,
    class_residuals,
    const_antihol_identities,
    curvature_form_fit,
    symmetry_residuals,
)
from .models import MODELS, build_model
from .report import (
    EXIT_INPUT_ERROR,
    EXIT_PASS,
    EXIT_VERDICT_FAILURE,
    SpecError,
    export_spec,
    package_document,
    resolve_manifold,
    run_suite,
)
from .tensors import GeometryError

IDENTITY_GROUPS = {}
for _names, _fn in (
    (SYMMETRY_NAMES, symmetry_residuals),
    (CLASS_NAMES, class_residuals),
    (AH_NAMES, ah_residuals),
    (BIANCHI_NAMES, bianchi_residuals),
    (AK2_NAMES, ak2_identities),
):
    for _n in _names:
        IDENTITY_GROUPS[_n] = _fn


class InputError(Exception):
    pass


def _threshold(text: str):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    if name not in DEFAULT_THRESHOLDS:
        raise argparse.ArgumentTypeError(f"unknown threshold name {name!r}")
    try:
        v = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad threshold value {value!r}") from None
    return name, v


def _point(text: str) -> list:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad point {text!r}") from None


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON file with RunConfig fields")
    p.add_argument("--seed", type=int)
    p.add_argument("--points", type=int, help="points per manifold")
    p.add_argument("--samples", type=int, help="planes sampled per point")
    p.add_argument("--threshold", type=_threshold, action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--derivative-mode", choices=("jets", "finite_difference_oracle"))
    p.add_argument("--format", choices=("human", "machine"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ahlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="full identity suite and classification verdict")
    check.add_argument("spec", help="spec file, or a model expression such as 'fubini_study(3,4)'")
    _run_options(check)
    check.add_argument("--output", help="write the report here instead of stdout")
    check.add_argument("--timing", action="store_true", help="include timing in machine reports")

    models = sub.add_parser("models", help="built-in model spaces")
    msub = models.add_subparsers(dest="models_command", required=True)
    exp = msub.add_parser("export", help="write a model as a spec file")
    exp.add_argument("name", help="model expression, e.g. 'bergman(3,-4)' or 'round_s6'")
    exp.add_argument("path")
    msub.add_parser("list", help="list model constructors")

    ident = sub.add_parser("identity", help="evaluate a single identity")
    ident.add_argument("spec")
    ident.add_argument("--name", required=True, choices=sorted(set(IDENTITY_GROUPS) | set(CONST_NAMES) | {"form_fit"}))
    ident.add_argument("--nu", type=float, default=0.0, help="antiholomorphic constant for eq_2_5..eq_2_8")
    ident.add_argument("--point", type=_point, action="append", help="evaluate here (repeatable)")
    _run_options(ident)

    curv = sub.add_parser("curvature", help="dump the curvature package at a point")
    curv.add_argument("spec")
    curv.add_argument("--point", type=_point, required=True)
    return parser


def config_from_args(args) -> RunConfig:
    data: dict = {}
    if getattr(args, "config", None):
        try:
            loaded = yaml.safe_load(Path(args.config).read_text()) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError("config must be a mapping")
        data.update(loaded)
    thresholds = dict(data.get("thresholds") or {})
    thresholds.update(dict(args.threshold))
    data["thresholds"] = thresholds
    for attr, key in (
        ("seed", "seed"),
        ("points", "points_per_manifold"),
        ("samples", "samples_per_point"),
        ("derivative_mode", "derivative_mode"),
        ("format", "output_format"),
    ):
        v = getattr(args, attr, None)
        if v is not None:
            data[key] = v
    try:
        return RunConfig.from_mapping(data)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None


def cmd_check(args, out) -> int:
    config = config_from_args(args)
    M = resolve_manifold(args.spec)
    report = run_suite(M, config)
    text = report.machine(args.timing) if config.output_format == "machine" else report.human()
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    return report.exit_code


def cmd_models(args, out) -> int:
    if args.models_command == "list":
        for name in MODELS:
            out.write(name + "\n")
        return EXIT_PASS
    try:
        M = build_model(args.name)
    except (ValueError, GeometryError) as exc:
        raise InputError(str(exc)) from None
    export_spec(M, args.path)
    out.write(f"wrote {M.name} to {args.path}\n")
    return EXIT_PASS


def cmd_identity(args, out) -> int:
    config = config_from_args(args)
    M = resolve_manifold(args.spec)
    points = args.point or list(M.sample_points(config.rng(0), config.points_per_manifold))
    th = config.all_thresholds
    rows = []
    ok = True
    for p in points:
        if len(p) != M.dim:
            raise InputError(f"point has {len(p)} coordinates, expected {M.dim}")
        pkg = curvature_package(M, p, mode=config.derivative_mode)
        if args.name == "form_fit":
            fit = curvature_form_fit(pkg)
            value, limit, extra = fit.residual, th["form_fit"], {"f": fit.f, "h": fit.h}
        else:
            if args.name in CONST_NAMES:
                rep = const_antihol_identities(pkg, nu=args.nu, thresholds=th)
            else:
                rep = IDENTITY_GROUPS[args.name](pkg, thresholds=th)
            value, limit, extra = rep[args.name].residual, rep[args.name].threshold, {}
        passed = value <= limit
        ok &= passed
        rows.append({"point": [float(v) for v in p], "residual": value, "threshold": limit, "pass": passed, **extra})
    if config.output_format == "machine":
        out.write(json.dumps({"identity": args.name, "manifold": M.name, "results": rows}, sort_keys=True, indent=2) + "\n")
    else:
        for r in rows:
            pt = ", ".join(f"{v:.6g}" for v in r["point"])
            out.write(f"{args.name} at ({pt}): {r['residual']:.3e} {'pass' if r['pass'] else 'FAIL'}\n")
    return EXIT_PASS if ok else EXIT_VERDICT_FAILURE


def cmd_curvature(args, out) -> int:
    M = resolve_manifold(args.spec)
    if len(args.point) != M.dim:
        raise InputError(f"point has {len(args.point)} coordinates, expected {M.dim}")
    pkg = curvature_package(M, np.array(args.point))
    doc = package_document(pkg)
    doc["manifold"] = M.name
    out.write(json.dumps(doc, sort_keys=True) + "\n")
    return EXIT_PASS


COMMANDS = {"check": cmd_check, "models": cmd_models, "identity": cmd_identity, "curvature": cmd_curvature}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args, out)
    except (InputError, SpecError, ExprError, GeometryError) as exc:
        print(f"ahlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
