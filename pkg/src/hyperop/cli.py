"""``hyperop`` command line: spectra, functional calculus, GNS and the verify runner.

Exit codes: 0 success, 1 verification or precondition failure, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from .algebra import Hypercomplex, as_tag
from .errors import HyperopError, InputError, PreconditionError
from .jsonio import dumps
from .operators import QuasilinearOp, k_entries

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


# -- I/O ---------------------------------------------------------------------------------------


def _read_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _emit(obj, report: str | None) -> None:
    text = dumps(obj)
    if report:
        with open(report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_op(path: str, algebra: str | None) -> QuasilinearOp:
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise InputError("operator JSON must be an object")
    if algebra and "algebra" not in obj:
        obj = dict(obj, algebra=algebra)
    try:
        return QuasilinearOp.from_json(obj)
    except HyperopError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"malformed operator: {exc}") from exc


def parse_scalar(text: str, algebra: str) -> Hypercomplex:
    """``"re,c1,...,cm"`` as an element of the named algebra (missing entries are zero)."""
    tag = as_tag(algebra)
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"bad scalar {text!r}") from exc
    if not vals or len(vals) > tag.dim:
        raise InputError(f"scalar needs 1..{tag.dim} comma-separated numbers, got {text!r}")
    return Hypercomplex(tag, vals + [0.0] * (tag.dim - len(vals)))


# -- commands -------------------------------------------------------------------------------------


def cmd_spectrum(args) -> int:
    from . import spectral
    T = _load_op(args.input, args.algebra)
    if args.mode == "selfadjoint":
        est = spectral.spectrum_selfadjoint(T)
    elif args.mode == "diag":
        ent = k_entries(T)
        off = ent.copy()
        idx = np.arange(T.n)
        off[idx, idx] = 0.0
        if np.max(np.abs(off), initial=0.0) > (args.tol or 0.0):
            raise PreconditionError("diag mode needs a diagonal K-matrix")
        est = spectral.spectrum_left_diagonal([Hypercomplex(T.tag, ent[k, k]) for k in range(T.n)])
    else:
        M = parse_scalar(args.M or "0,1", T.tag.kind)
        r = max(2.0, 1.5 * T.norm())
        kw = {"window": (-r, r, -r, r)}
        if args.grid:
            kw["grid"] = args.grid
        est = spectral.spectrum_scan(T, M, **kw)
    _emit(est.to_json(), args.report)
    return EXIT_OK


def parse_function(spec: str, algebra: str):
    """Function strings: ``poly:[[..],..]``, ``abs``, ``sqrt``, ``exp:t,M``, ``cayley:M``."""
    from .calculus import PolySpec
    head, _, rest = spec.partition(":")
    if head == "poly":
        try:
            coeffs = json.loads(rest)
        except json.JSONDecodeError as exc:
            raise InputError(f"bad polynomial coefficients {rest!r}") from exc
        if not isinstance(coeffs, list) or not coeffs:
            raise InputError("poly: needs a non-empty list of coefficients")
        return ("poly", PolySpec.from_coeffs(algebra, coeffs))
    if head in ("abs", "sqrt") and not rest:
        return (head, None)
    if head == "exp":
        t, _, m = rest.partition(",")
        try:
            return ("exp", (float(t), parse_scalar(m, algebra)))
        except ValueError as exc:
            raise InputError(f"bad exp spec {spec!r}") from exc
    if head == "cayley":
        return ("cayley", parse_scalar(rest, algebra))
    raise InputError(f"unknown function spec {spec!r}")


def apply_function(T: QuasilinearOp, fspec) -> QuasilinearOp:
    from . import calculus
    kind, data = fspec
    if kind == "poly":
        return calculus.poly_eval(T, data)
    if kind == "abs":
        return calculus.continuous_calculus(T, abs)
    if kind == "sqrt":
        return calculus.sqrt_positive(T)
    if kind == "exp":
        return calculus.exp_group(T, data[1], data[0])
    return calculus.cayley(T, data)


def cmd_calc(args) -> int:
    T = _load_op(args.input, args.algebra)
    _emit(apply_function(T, parse_function(args.function, T.tag.kind)).to_json(), args.report)
    return EXIT_OK


def cmd_sqrt(args) -> int:
    from .calculus import sqrt_positive
    T = _load_op(args.input, args.algebra)
    _emit(sqrt_positive(T).to_json(), args.report)
    return EXIT_OK


def cmd_polar(args) -> int:
    from .calculus import polar_decompose
    T = _load_op(args.input, args.algebra)
    P, A = polar_decompose(T)
    _emit({"partial_isometry": P.to_json(), "modulus": A.to_json()}, args.report)
    return EXIT_OK


def cmd_cayley(args) -> int:
    from .calculus import cayley
    T = _load_op(args.input, args.algebra)
    M = parse_scalar(args.M or "0,1", T.tag.kind)
    _emit(cayley(T, M).to_json(), args.report)
    return EXIT_OK


def _load_generators(path: str, algebra: str | None):
    """``{"algebra","n","generators":[op...]}`` or ``{"algebra","n","full":true}``."""
    from .states import right_linear_basis
    obj = _read_json(path)
    if not isinstance(obj, dict):
        raise InputError("algebra JSON must be an object")
    kind = obj.get("algebra", algebra or "H")
    try:
        n = int(obj["n"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError("algebra JSON needs 'n'") from exc
    if obj.get("full"):
        return list(right_linear_basis(kind, n))
    gens = obj.get("generators")
    if not isinstance(gens, list) or not gens:
        raise InputError("algebra JSON needs 'generators' or 'full': true")
    out = []
    for g in gens:
        g = dict(g, algebra=g.get("algebra", kind), n=g.get("n", n))
        out.append(QuasilinearOp.from_json(g))
    return out


def cmd_gns(args) -> int:
    from .states import StateFunctional, gns_build
    from .verify import make_rng
    gens = _load_generators(args.algebra_file, args.algebra)
    obj = _read_json(args.state)
    if not isinstance(obj, dict):
        raise InputError("state JSON must be an object")
    rho = StateFunctional.from_json(obj)
    res = gns_build(gens, rho, rng=make_rng(args.seed, "gns"))
    _emit(res.to_json(), args.report)
    tol = args.tol if args.tol is not None else 1e-10
    r = res.residuals
    bad = {k: r[k] for k in ("reproduction", "multiplicative", "adjoint", "contraction_excess") if r.get(k, 0.0) > tol}
    if not r.get("cyclic", True):
        bad["cyclic"] = False
    if bad:
        print(f"GNS residuals above {tol:g}: {bad}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(args) -> int:
    from . import verify
    report = verify.run(args.suite, seed=args.seed, trials=args.trials)
    _emit(report.to_json(), args.report)
    for rec in report.records:
        if not rec.ok:
            print(f"FAIL {rec.name}: {rec.passed}/{rec.trials}, max residual {rec.max_residual:.3e} "
                  f"(tol {rec.tolerance:g})", file=sys.stderr)
    return EXIT_OK if report.ok else EXIT_FAIL


# -- entry point ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--algebra", choices=("H", "O"), help="algebra for inputs that omit it")
    common.add_argument("--M", help='unit imaginary slice axis as "re,c1,...,cm"')
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--report", metavar="PATH", help="write JSON here instead of stdout")

    p = argparse.ArgumentParser(prog="hyperop", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="spectrum of an operator")
    s.add_argument("input", help="operator JSON ('-' for stdin)")
    s.add_argument("--mode", choices=("selfadjoint", "diag", "scan"), default="selfadjoint")
    s.add_argument("--grid", type=int)
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("calc", parents=[common], help="apply a function to an operator")
    s.add_argument("input")
    s.add_argument("function", help='"poly:[[..],..]", "abs", "sqrt", "exp:t,M" or "cayley:M"')
    s.set_defaults(func=cmd_calc)

    for name, fn, text in (("sqrt", cmd_sqrt, "positive square root"),
                           ("polar", cmd_polar, "polar decomposition T = P A"),
                           ("cayley", cmd_cayley, "Cayley transform with axis --M")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("input")
        s.set_defaults(func=fn)

    s = sub.add_parser("gns", parents=[common], help="GNS representation of a state")
    s.add_argument("algebra_file", help='{"algebra","n","generators":[...]} or {"algebra","n","full":true}')
    s.add_argument("state", help="state functional JSON")
    s.set_defaults(func=cmd_gns)

    s = sub.add_parser("verify", parents=[common], help="run seeded property suites")
    s.add_argument("suite", help="algebra, kmodule, operator, spectral, calculus, projections, states or all")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore" if args.command == "verify" else "default")
            return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HyperopError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
