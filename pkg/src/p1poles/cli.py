"""Command line interface: ``p1poles <command> [options]``.

Options can also come from a flat ``key = value`` file given with
``--config``; flags on the command line win over the file, which wins over
built-in defaults. Exit codes: 0 success, 1 internal error, 2 invalid input,
3 verification failure.
"""
from __future__ import annotations

import argparse
import ast
import csv
import json
import math
import operator
import sys
from concurrent.futures import ProcessPoolExecutor

import gmpy2
import numpy as np

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2, 3

SWEEP_HEADER = ["C", "x_lo", "x_asym", "x_lim", "x_hi", "x_found", "err"]


class InputError(ValueError):
    """Bad user input; maps to exit code 2."""


# -- expression evaluator for --C-expr ------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"exp": gmpy2.exp, "sqrt": gmpy2.sqrt, "ln": gmpy2.log, "log": gmpy2.log}


def eval_expr(text: str, digits: int = 40):
    """Evaluate numbers, + - * / **, exp, sqrt, ln, pi and e in gmpy2 at ``digits`` decimals."""
    from ._prec import working_precision

    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as e:
        raise InputError(f"cannot parse expression {text!r}") from e

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            # re-read the literal so decimals keep full precision
            return gmpy2.mpfr(ast.get_source_segment(src, node) or repr(node.value))
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name) and node.id in ("pi", "e"):
            return gmpy2.const_pi() if node.id == "pi" else gmpy2.exp(1)
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS
                and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise InputError(f"unsupported element in expression: {ast.dump(node)[:60]}")

    src = text.replace("^", "**")
    with working_precision(digits):
        return ev(tree)


# -- config ---------------------------------------------------------------------


def read_config(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment; keys use - or _ freely."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise InputError(f"cannot read config file: {e}") from e
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{n}: expected key = value")
        k, v = (p.strip() for p in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _apply_config(sub: argparse.ArgumentParser, cfg: dict) -> None:
    dests = {a.dest: a for a in sub._actions}
    vals = {}
    for k, v in cfg.items():
        a = dests.get(k)
        if a is None:
            continue
        if isinstance(a, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            vals[k] = v.lower() in ("1", "true", "yes", "on")
        else:
            vals[k] = v  # argparse applies ``type`` to string defaults
    sub.set_defaults(**vals)


# -- helpers ----------------------------------------------------------------------


def _emit(obj, args) -> None:
    text = obj if isinstance(obj, str) else json.dumps(obj, indent=2)
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _C_value(args):
    if getattr(args, "C_expr", None):
        v = eval_expr(args.C_expr, args.digits + 10)
        return float(v)
    if args.C is None:
        raise InputError("one of --C or --C-expr is required")
    try:
        c = complex(args.C.replace("i", "j")) if "j" in args.C or "i" in args.C else float(args.C)
    except ValueError as e:
        raise InputError(f"bad value for --C: {args.C!r}") from e
    return c


def _ctl(args):
    from .ode import StepControl

    return StepControl(digits=args.digits)


def _grids(args):
    from .predictor import default_grids

    return default_grids(args.k_max, args.A, args.x_max)


# -- commands ---------------------------------------------------------------------


def cmd_coeffs(args):
    from .series import compute_h0_series

    if args.order < 4:
        raise InputError("--order must be at least 4")
    return compute_h0_series(args.order).to_json()


def cmd_table(args):
    from .series import compute_transseries_table

    if args.K < 1 or args.M < 0:
        raise InputError("need K >= 1 and M >= 0")
    return compute_transseries_table(args.K, args.M).to_json()


def cmd_gm(args):
    from .transasymptotic import compute_Gm, gm_to_json

    if args.max < 0:
        raise InputError("--max must be >= 0")
    G = compute_Gm(args.max)
    if args.format == "latex":
        return "\n".join(f"G_{{{m}}}(s) = {g.latex()}" for m, g in enumerate(G))
    return gm_to_json(G)


def cmd_predict(args):
    from .predictor import predict

    C = _C_value(args)
    real = not isinstance(C, complex) or C.imag == 0
    grids = _grids(args) if real and not args.no_grids else None
    karray = args.karray if (args.complex or args.karray is not None) else None
    if args.complex and karray is None:
        karray = 1
    return predict(C, grids, A=args.A, complex_array=karray).to_json()


def _find(C, args):
    from .poles import NoPole, first_real_pole

    res = first_real_pole(C, A=args.A, x_seed=args.x_seed, ctl=_ctl(args), x_stop=args.x_stop)
    if isinstance(res, NoPole):
        return None, {"kind": "no_pole", "C": C, "A": res.A, "x_stop": args.x_stop or res.A,
                      "note": "no blow-up before x_stop"}
    return res, res.to_json()


def cmd_find(args):
    C = _C_value(args)
    if isinstance(C, complex) or C <= 0:
        raise InputError("find needs a real C > 0")
    return _find(C, args)[1]


def cmd_verify(args):
    from .predictor import predict

    C = _C_value(args)
    if isinstance(C, complex) or C <= 12:
        raise InputError("verify needs a real C > 12")
    pred = predict(C, None if args.no_grids else _grids(args), A=args.A)
    rec, found = _find(C, args)
    report = {"kind": "verify_report", "prediction": pred.to_json(), "pole": found}
    ok = False
    if rec is not None and pred.x_hi is not None:
        x = complex(rec.x).real
        tol = args.tol + float(rec.err)
        lo = pred.x_lo if pred.x_lo is not None else -math.inf
        ok = lo - tol <= x <= pred.x_hi + tol
        report["x_found"] = x
        report["tolerance"] = tol
    report["pass"] = bool(ok)
    return report, (EXIT_OK if ok else EXIT_VERIFY)


def _sweep_row(payload):
    C, ns = payload
    from .predictor import predict

    args = argparse.Namespace(**ns)
    pred = predict(C, None if args.no_grids else _grids(args), A=args.A)
    try:
        rec, _ = _find(C, args)
    except RuntimeError:
        rec = None
    xf = complex(rec.x).real if rec is not None else None
    err = float(rec.err) if rec is not None else None
    xa = pred.x_asym.real if isinstance(pred.x_asym, complex) else pred.x_asym
    return [C, pred.x_lo, xa, pred.x_lim, pred.x_hi, xf, err]


def cmd_sweep(args):
    if args.steps < 0 or args.Cmin <= 0:
        raise InputError("need --steps >= 0 and --Cmin > 0")
    if args.steps == 0 or args.Cmin > args.Cmax:
        Cs = []
    else:
        Cs = [float(c) for c in np.geomspace(args.Cmin, args.Cmax, args.steps)]
    ns = {k: v for k, v in vars(args).items() if k != "func"}
    jobs = [(C, ns) for C in Cs]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(args.workers) as ex:
            rows = list(ex.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(SWEEP_HEADER)
        for row in rows:
            w.writerow(["" if v is None else repr(float(v)) for v in row])
    finally:
        if out is not sys.stdout:
            out.close()
    return None


def cmd_stokes(args):
    from .stokes import antistokes_limit

    C = _C_value(args)
    radii = tuple(float(r) for r in args.radii.split(","))
    return antistokes_limit(C, R=args.x_seed, radii=radii, ctl=_ctl(args)).to_json()


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="p1poles", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, C=False, run=False):
        sp.add_argument("--config", help="flat key = value option file")
        sp.add_argument("--output", "-o", help="write to this file instead of stdout")
        sp.add_argument("--digits", type=int, default=34, help="working precision, decimal digits")
        if C:
            sp.add_argument("--C", help="transseries constant (real, or complex like 1e6+2e5j)")
            sp.add_argument("--C-expr", dest="C_expr", help="expression, e.g. '12*exp(10)*sqrt(10)'")
        if run:
            sp.add_argument("--A", type=float, default=None, help="threshold A (default from the h0 envelope)")
            sp.add_argument("--x-seed", dest="x_seed", type=float, default=30.0)
            sp.add_argument("--x-stop", dest="x_stop", type=float, default=None,
                            help="stop the inward integration here (default A)")
            sp.add_argument("--x-max", dest="x_max", type=float, default=40.0)
            sp.add_argument("--k-max", dest="k_max", type=int, default=40)
            sp.add_argument("--no-grids", dest="no_grids", action="store_true",
                            help="skip the h_k grids (no limsup estimate)")
            sp.add_argument("--tol", type=float, default=1e-8)

    s = sub.add_parser("coeffs", help="asymptotic series of h0")
    common(s)
    s.add_argument("--order", type=int, default=20)
    s.set_defaults(func=cmd_coeffs)

    s = sub.add_parser("table", help="transseries coefficient table")
    common(s)
    s.add_argument("--K", type=int, default=4)
    s.add_argument("--M", type=int, default=10)
    s.set_defaults(func=cmd_table)

    s = sub.add_parser("gm", help="matching functions G_m(s)")
    common(s)
    s.add_argument("--max", type=int, default=2)
    s.add_argument("--format", choices=["json", "latex"], default="json")
    s.set_defaults(func=cmd_gm)

    s = sub.add_parser("predict", help="pole prediction for a constant C")
    common(s, C=True, run=True)
    s.add_argument("--complex", action="store_true", help="also return the complex pole array")
    s.add_argument("--karray", type=int, default=None, help="array half-width N (k = -N..N)")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("find", help="locate the first real pole by integration")
    common(s, C=True, run=True)
    s.set_defaults(func=cmd_find, digits=25)

    s = sub.add_parser("verify", help="predict, locate and compare")
    common(s, C=True, run=True)
    s.set_defaults(func=cmd_verify, digits=25)

    s = sub.add_parser("sweep", help="CSV of predictions and located poles over a C range")
    common(s, run=True)
    s.add_argument("--Cmin", type=float, required=False, default=1e4)
    s.add_argument("--Cmax", type=float, required=False, default=1e6)
    s.add_argument("--steps", type=int, default=5)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_sweep, digits=25)

    s = sub.add_parser("stokes", help="effective constants on the antistokes lines")
    common(s, C=True)
    s.add_argument("--x-seed", dest="x_seed", type=float, default=30.0)
    s.add_argument("--radii", default="30,40")
    s.set_defaults(func=cmd_stokes)
    return p


def parse_args(argv=None) -> argparse.Namespace:
    p = build_parser()
    args = p.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sub = p._subparsers._group_actions[0].choices[args.command]
        _apply_config(sub, cfg)
        args = p.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    from .series import BranchError

    try:
        res = args.func(args)
    except (InputError, BranchError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    code = EXIT_OK
    if isinstance(res, tuple):
        res, code = res
    if res is not None:
        _emit(res, args)
    return code


if __name__ == "__main__":
    sys.exit(main())
