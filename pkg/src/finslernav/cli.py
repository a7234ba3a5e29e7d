"""Command-line front door.

    finslernav curvature SPEC [--point X] [--dir Y] [--samples N] [--seed S] [--format json|csv]
    finslernav navigate SPEC [--samples N] [--out PATH]
    finslernav check-fields SPEC [--samples N] [--seed S]
    finslernav verify (SPEC | --model NAME) [--check ID|all ...] [--samples N] [--seed S]
    finslernav export-model --model NAME [--out PATH]

Every command that takes ``SPEC`` also accepts ``--model NAME`` instead.
Exit status: 0 on success, 1 when a check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import exprdsl
from .errors import ExprSyntaxError, FinslerNavError
from .fields import check_conformal_kropina
from .finsler import curvature_report, fundamental_tensor
from .modelspaces import get_model, model_names
from .navigation import composite
from .spec import ManifoldSpec, make_rng
from .verify import CHECKS, TOL_C, TOL_H, _num, results_json, run_all

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2


class InputError(Exception):
    """Bad command-line input; reported with exit status 2."""


def _dumps(obj) -> str:
    return json.dumps(_num(obj), sort_keys=True, indent=2) + "\n"


def _vector(text: str, dim: int, flag: str):
    try:
        v = [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise InputError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if len(v) != dim:
        raise InputError(f"{flag} needs {dim} components, got {len(v)}")
    return np.array(v)


def _load_spec(args) -> ManifoldSpec:
    if getattr(args, "model", None):
        if args.model not in model_names():
            raise InputError(f"unknown model {args.model!r}; known models: {', '.join(model_names())}")
        return get_model(args.model).spec
    if not getattr(args, "spec", None):
        raise InputError("give a spec file or --model NAME")
    path = Path(args.spec)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        spec = ManifoldSpec.from_json(text)
    except ExprSyntaxError as exc:
        where = f" in expression {exc.text!r}" if exc.text is not None else ""
        raise InputError(f"{path}: {exc}{where}") from None
    except FinslerNavError as exc:
        raise InputError(f"{path}: {type(exc).__name__}: {exc}") from None
    return spec if spec.name is not None else spec.replace(name=path.stem)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# commands


def _transverse_axes(g, y, n):
    flags = []
    for e in np.eye(n):
        cos2 = (y @ g @ e) ** 2 / ((y @ g @ y) * (e @ g @ e))
        if cos2 < 1 - 1e-6:
            flags.append(e)
    return flags


def _curvature_csv(reports, n) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)]
    head += ["F", "Ric", "S"] + [f"K_e{i + 1}" for i in range(n)]
    head += ["res_homogeneity", "res_R_y", "res_scalar_flag"]
    w.writerow(head)
    for r in reports:
        ks = [""] * n
        for v, k in zip(r.flags, r.K):
            ks[int(np.argmax(np.abs(v)))] = repr(k)
        row = [repr(t) for t in r.x + r.y] + [repr(r.F), repr(r.Ric), repr(r.S)] + ks
        row += [repr(r.residuals[k]) for k in ("homogeneity", "R_y", "scalar_flag")]
        w.writerow(row)
    return buf.getvalue()


def cmd_curvature(args) -> int:
    spec = _load_spec(args)
    F = spec.finsler()
    n = spec.dim
    rng = make_rng(args.seed + 1)
    if args.point is not None:
        points = [_vector(args.point, n, "--point")]
    else:
        points = list(spec.sample_points(args.samples, args.seed))
    fixed_dir = None if args.dir is None else _vector(args.dir, n, "--dir")
    reports = []
    for x in points:
        y = fixed_dir if fixed_dir is not None else spec.sample_directions(F, x, 1, rng)[0]
        g = fundamental_tensor(F, x, y)
        reports.append(curvature_report(F, x, y, flags=_transverse_axes(g, np.asarray(y, float), n)))
    if args.format == "csv":
        _emit(_curvature_csv(reports, n), args.out)
    else:
        _emit(_dumps({"spec": spec.name, "seed": args.seed, "reports": [r.to_dict() for r in reports]}), args.out)
    return EXIT_OK


def _composite_spec(spec: ManifoldSpec, res) -> ManifoldSpec:
    W = tuple(exprdsl.to_string(exprdsl.simplify(c)) for c in res.wind.components)
    return spec.replace(
        W=W,
        V=None,
        metric_type=res.classification,
        beta_norm=None,
        name=f"{spec.name or 'spec'}-navigated",
    )


def cmd_navigate(args) -> int:
    spec = _load_spec(args)
    if spec.V is None:
        raise InputError("navigate needs a spec with a 'V' field")
    F = spec.finsler()
    res = composite(F, spec.field_V(), spec.quasi_points(args.samples))
    out_spec = _composite_spec(spec, res)
    if args.out:
        out_spec.dump(args.out)
    summary = res.to_dict()
    disc = [s["discriminant"] for s in summary.pop("samples")]
    summary["sample_count"] = len(disc)
    summary["discriminant_range"] = [min(disc), max(disc)]
    sys.stdout.write(_dumps({"composite": summary, "spec": out_spec.to_dict()}))
    return EXIT_OK


def cmd_check_fields(args) -> int:
    spec = _load_spec(args)
    if spec.V is None:
        raise InputError("check-fields needs a spec with a 'V' field")
    points = spec.sample_points(args.samples, args.seed)
    rep = check_conformal_kropina(spec.metric(), spec.wind(), spec.field_V(), points)
    sys.stdout.write(_dumps({"spec": spec.name, "seed": args.seed, "report": rep.to_dict()}))
    return EXIT_OK if rep.verdict != "None" else EXIT_FAILED


def cmd_verify(args) -> int:
    spec = _load_spec(args)
    wanted = args.check or ["all"]
    if "all" in wanted:
        ids = sorted(CHECKS)
    else:
        unknown = [c for c in wanted if c not in CHECKS]
        if unknown:
            raise InputError(f"unknown check(s) {', '.join(unknown)}; known: all, {', '.join(sorted(CHECKS))}")
        ids = sorted(set(wanted))
    try:
        results = run_all(spec, ids, args.samples, args.seed, args.tol_h, args.tol_c)
    except ValueError as exc:  # bad FINSLER_NAV_THREADS
        raise InputError(str(exc)) from None
    _emit(results_json(results), args.out)
    return EXIT_FAILED if any(r.verdict == "fail" for r in results) else EXIT_OK


def cmd_export_model(args) -> int:
    if not args.model:
        raise InputError("export-model needs --model NAME")
    spec = _load_spec(args)
    _emit(spec.to_json(), args.out)
    return EXIT_OK


def cmd_list_models(args) -> int:
    for name in model_names():
        sys.stdout.write(name + "\n")
    return EXIT_OK


# parser


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="finslernav", description="Finsler navigation toolkit: curvature, Zermelo navigation, checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def source(sp, required_spec=False):
        sp.add_argument("spec", nargs=None if required_spec else "?", help="ManifoldSpec JSON file")
        sp.add_argument("--model", help="registered model name instead of a spec file")

    def sampling(sp, samples):
        sp.add_argument("--samples", type=_positive_int, default=samples, help="number of sample points")
        sp.add_argument("--seed", type=_nonneg_int, default=0, help="RNG seed")

    c = sub.add_parser("curvature", help="curvature report at sampled or given (x, y)")
    source(c)
    sampling(c, 5)
    c.add_argument("--point", help="base point, comma separated (use --point=-1,0 for a leading minus)")
    c.add_argument("--dir", help="direction y, comma separated (use --dir=-1,0 for a leading minus)")
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.add_argument("--out", help="write here instead of stdout")
    c.set_defaults(func=cmd_curvature)

    n = sub.add_parser("navigate", help="navigate the spec's metric with its extra wind V")
    source(n)
    n.add_argument("--samples", type=_positive_int, default=200, help="quasi-random points for the regime test")
    n.add_argument("--out", help="write the resulting ManifoldSpec here")
    n.set_defaults(func=cmd_navigate)

    f = sub.add_parser("check-fields", help="conformal/Killing test of V against critical data (h, W)")
    source(f)
    sampling(f, 20)
    f.set_defaults(func=cmd_check_fields)

    v = sub.add_parser("verify", help="run the sampling checks")
    source(v)
    v.add_argument("--check", action="append", help="check id or 'all' (repeatable)")
    v.add_argument("--samples", type=_positive_int, default=None, help="sample points per check")
    v.add_argument("--seed", type=_nonneg_int, default=0)
    v.add_argument("--tol-h", type=_positive_float, default=TOL_H, help="field residual tolerance")
    v.add_argument("--tol-c", type=_positive_float, default=TOL_C, help="curvature residual tolerance")
    v.add_argument("--out", help="write the JSON report here instead of stdout")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("export-model", help="write a registered model as a ManifoldSpec")
    e.add_argument("--model", required=True)
    e.add_argument("--out")
    e.set_defaults(func=cmd_export_model)

    m = sub.add_parser("list-models", help="print registered model names")
    m.set_defaults(func=cmd_list_models)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"finslernav: error: {exc}\n")
    except FinslerNavError as exc:
        src = getattr(args, "spec", None) or getattr(args, "model", None) or "<input>"
        sys.stderr.write(f"finslernav: error: {src}: {type(exc).__name__}: {exc}\n")
    return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
