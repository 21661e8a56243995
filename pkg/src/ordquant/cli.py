"""The `ordquant` command line tool.

Standard out carries exactly the declared payload (rendered expression, a
number, JSON, or CSV files on disk); diagnostics go to standard error.
Exit codes: 0 ok, 2 usage or parse error, 3 no break-time crossing,
4 i/o failure, 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from fractions import Fraction

import numpy as np

from . import exprparse, opcore, selfcheck
from .ehrenfest import (
    ConfigError,
    HorizonError,
    OscillatorModel,
    compute_ehrenfest,
    departure,
    ehrenfest_numeric,
)
from .exprparse import ExprSyntaxError
from .liouville import (
    GaussianEnsemble,
    HarmonicFlow,
    IdentityFlow,
    verify_smoothing_identity,
    verify_smoothing_truncated,
)
from .phasespace import COORD_P, COORD_Q, PhasePoly, inverse_smooth, smooth

#: parameters behind the package's reference departure curves: two quartic
#: oscillators with unit frequencies started at q_i = p_i = 1 and g = 0.1
DEFAULT_MODEL = {
    "N": 2,
    "k": 2,
    "g": 0.1,
    "hbar": 1.0,
    "omega": [1.0, 1.0],
    "q0": [1.0, 1.0],
    "p0": [1.0, 1.0],
}

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NO_CROSSING = 3
EXIT_IO = 4
EXIT_VERIFY = 5


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _print_err(message: str) -> None:
    print(f"ordquant: {message}", file=sys.stderr)


def _format_value(value: complex) -> str:
    """15 significant digits; pure reals print without an imaginary part."""
    if value.imag == 0:
        return f"{value.real:.15g}"
    sign = "+" if value.imag >= 0 else "-"
    return f"{value.real:.15g} {sign} {abs(value.imag):.15g}i"


def _json_time(value: float | None):
    if value is None:
        return None
    return "inf" if math.isinf(value) else value


def _parse_center(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(EXIT_USAGE, f"invalid center {text!r}")
    if len(values) % 2:
        raise CliError(EXIT_USAGE, "center needs an even number of coordinates")
    return values


def _check_center_covers(poly, center: tuple[float, ...]) -> None:
    modes = poly.modes() if hasattr(poly, "modes") else set()
    needed = max(modes, default=-1) + 1
    if len(center) < 2 * needed:
        raise CliError(
            EXIT_USAGE,
            f"dimension mismatch: expression uses {needed} mode(s), center has "
            f"{len(center)} coordinate(s)",
        )


def _load_model(path: str) -> OscillatorModel:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            config = json.load(handle)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read model file: {exc}")
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_USAGE, f"model file is not valid JSON: {exc}")
    try:
        return OscillatorModel.from_config(config)
    except ConfigError as exc:
        raise CliError(EXIT_USAGE, f"invalid model config: {exc}")


# -- commands -----------------------------------------------------------------


def cmd_order(args) -> int:
    family = exprparse.expression_family(args.expr)
    if family == "operator":
        poly = exprparse.parse_operator_expr(args.expr)
    else:
        poly = opcore.quantize_symmetric(exprparse.parse_phase_expr(args.expr))
    print(exprparse.render_operator(opcore.canonicalize(poly, args.target)))
    return EXIT_OK


def cmd_expect(args) -> int:
    center = _parse_center(args.center)
    if args.hbar <= 0:
        raise CliError(EXIT_USAGE, "hbar must be positive")
    family = exprparse.expression_family(args.expr)
    if args.mode == "symmetric":
        if family == "operator":
            raise CliError(
                EXIT_USAGE, "symmetric mode expects a phase expression (q, p variables)"
            )
        poly = exprparse.parse_phase_expr(args.expr)
        _check_center_covers(poly, center)
        value = smooth(poly, Fraction(args.hbar)).evaluate(center, hbar=args.hbar)
    else:
        if family != "operator":
            raise CliError(
                EXIT_USAGE, "raw mode expects an operator expression (Q, P, a, ad)"
            )
        poly = exprparse.parse_operator_expr(args.expr)
        _check_center_covers(poly, center)
        value = opcore.coherent_expectation(poly, center, args.hbar)
    print(_format_value(value))
    return EXIT_OK


def cmd_smooth(args) -> int:
    try:
        sigma = Fraction(args.sigma)
    except (ValueError, ZeroDivisionError):
        raise CliError(EXIT_USAGE, f"invalid sigma {args.sigma!r}")
    if sigma < 0:
        raise CliError(EXIT_USAGE, "sigma must be >= 0")
    poly = exprparse.parse_phase_expr(args.expr)
    result = inverse_smooth(poly, sigma) if args.inverse else smooth(poly, sigma)
    print(exprparse.render_phase(result))
    return EXIT_OK


def cmd_ehrenfest(args) -> int:
    model = _load_model(args.model)
    try:
        result = compute_ehrenfest(model, args.method)
    except HorizonError as exc:
        _print_err(str(exc))
        return EXIT_NO_CROSSING
    payload = {}
    if args.method in ("analytic", "both"):
        payload["t_analytic"] = _json_time(result.t_analytic)
    if args.method in ("numeric", "both"):
        payload["t_numeric"] = _json_time(result.t_numeric)
    payload.update(
        {
            "omega_typical": _json_time(result.omega_typical),
            "action_typical": result.action_typical,
            "classicality": result.classicality,
        }
    )
    print(json.dumps(payload))
    return EXIT_OK


def cmd_figure1(args) -> int:
    if args.points < 2:
        raise CliError(EXIT_USAGE, "points must be >= 2")
    if args.t_max <= 0:
        raise CliError(EXIT_USAGE, "t-max must be > 0")
    model = _load_model(args.model) if args.model else OscillatorModel.from_config(DEFAULT_MODEL)
    try:
        hbar_tokens = args.hbar_list.split(",")
        hbar_values = [float(tok) for tok in hbar_tokens]
    except ValueError:
        raise CliError(EXIT_USAGE, f"invalid hbar list {args.hbar_list!r}")
    if any(h <= 0 for h in hbar_values):
        raise CliError(EXIT_USAGE, "hbar values must be positive")
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create output directory: {exc}")
    grid = np.linspace(0.0, args.t_max, args.points)
    curves = []
    for token, hbar in zip(hbar_tokens, hbar_values):
        m = model.with_hbar(hbar)
        name = f"delta_hbar_{token.strip()}.csv"
        path = os.path.join(args.out, name)
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write("t,delta\n")
                for t in grid:
                    handle.write(f"{t:.17g},{departure(m, float(t)):.17g}\n")
        except OSError as exc:
            raise CliError(EXIT_IO, f"cannot write {path}: {exc}")
        t_cross = math.inf if m.is_harmonic() else ehrenfest_numeric(m)
        curves.append({"hbar": hbar, "file": name, "t_cross": _json_time(t_cross)})
    index_path = os.path.join(args.out, "index.json")
    try:
        with open(index_path, "w", encoding="utf-8", newline="\n") as handle:
            json.dump({"model": _model_payload(model), "curves": curves}, handle, indent=2)
            handle.write("\n")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {index_path}: {exc}")
    return EXIT_OK


def _model_payload(model: OscillatorModel) -> dict:
    return {
        "N": model.n,
        "k": model.k,
        "g": model.g,
        "hbar": model.hbar,
        "omega": list(model.omega),
        "q0": [model.center[2 * i] for i in range(model.n)],
        "p0": [model.center[2 * i + 1] for i in range(model.n)],
    }


def _coordinate_index(poly: PhasePoly) -> int:
    terms = list(poly.terms())
    if len(terms) == 1:
        mono, coeff = terms[0]
        if len(mono) == 1 and mono[0][1] == 1:
            from .scalars import ExactScalar

            if isinstance(coeff, ExactScalar) and coeff == ExactScalar.rational(1):
                (mode, coord), _ = mono[0]
                return 2 * mode + coord
    raise CliError(
        EXIT_USAGE,
        "model-flow verification expects a single bare coordinate (e.g. 'q1')",
    )


def cmd_mc_verify(args) -> int:
    if bool(args.model) == bool(args.flow):
        raise CliError(EXIT_USAGE, "give exactly one of --model or --flow")
    if args.samples < 100:
        raise CliError(EXIT_USAGE, "samples must be >= 100")
    if args.sigma <= 0:
        raise CliError(EXIT_USAGE, "sigma must be > 0")
    poly = exprparse.parse_phase_expr(args.expr)
    if args.model:
        model = _load_model(args.model)
        coord = _coordinate_index(poly)
        if coord >= 2 * model.n:
            raise CliError(EXIT_USAGE, "coordinate exceeds the model's modes")
        report = verify_smoothing_truncated(
            model, coord, args.sigma, args.t, args.samples, args.seed
        )
    else:
        n_modes = max(poly.modes(), default=0) + 1
        if args.center:
            center = _parse_center(args.center)
            _check_center_covers(poly, center)
        else:
            center = (0.0,) * (2 * n_modes)
        ensemble = GaussianEnsemble(center=center, sigma=args.sigma)
        if args.flow == "identity":
            flow = IdentityFlow()
        else:
            flow = HarmonicFlow([args.omega] * (len(center) // 2))
        report = verify_smoothing_identity(
            poly, ensemble, flow, args.t, args.samples, args.seed
        )
    print(json.dumps(report.to_json_dict()))
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_selfcheck(args) -> int:
    if args.inject_commutator_fault:
        opcore.set_commutator_fault(True)
    try:
        try:
            results = selfcheck.run_suites(args.filter)
        except ValueError as exc:
            raise CliError(EXIT_USAGE, str(exc))
        counterexample = None
        payload = {"suites": {}, "ok": True}
        for name, (cases, failures) in results.items():
            payload["suites"][name] = {"cases": cases, "failed": len(failures)}
            if failures and counterexample is None:
                counterexample = f"{name}: {failures[0]}"
                payload["ok"] = False
        payload["counterexample"] = counterexample
        print(json.dumps(payload))
        if counterexample is not None:
            _print_err(f"self-check failed: {counterexample}")
            return EXIT_VERIFY
        return EXIT_OK
    finally:
        if args.inject_commutator_fault:
            opcore.set_commutator_fault(False)


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ordquant",
        description="Symmetric/normal operator ordering, Gaussian smoothing, "
        "Monte Carlo checks, and oscillator break times.",
    )
    parser.add_argument(
        "--verbose", action="store_true", help="emit a JSON run report on stderr"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("order", help="reorder an operator (or quantized phase) expression")
    p.add_argument("--expr", required=True)
    p.add_argument("--target", required=True, choices=["qp", "pq", "normal", "antinormal"])
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("expect", help="coherent-state expectation value")
    p.add_argument("--expr", required=True)
    p.add_argument("--center", required=True, help="comma list q1,p1[,q2,p2,...]")
    p.add_argument("--hbar", required=True, type=float)
    p.add_argument("--mode", default="symmetric", choices=["symmetric", "raw"])
    p.set_defaults(func=cmd_expect)

    p = sub.add_parser("smooth", help="Gaussian-smooth a phase polynomial")
    p.add_argument("--expr", required=True)
    p.add_argument("--sigma", required=True, help="width (rational or decimal)")
    p.add_argument("--inverse", action="store_true")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("ehrenfest", help="break time of an oscillator model")
    p.add_argument("--model", required=True, help="model config JSON file")
    p.add_argument("--method", default="both", choices=["analytic", "numeric", "both"])
    p.set_defaults(func=cmd_ehrenfest)

    p = sub.add_parser("figure1", help="departure curves delta(t) as CSV per hbar")
    p.add_argument("--model", help="model config JSON (default: reference quartic pair)")
    p.add_argument("--hbar-list", required=True, help="comma list, e.g. 1,0.1,0.01")
    p.add_argument("--t-max", type=float, default=60.0)
    p.add_argument("--points", type=int, default=600)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("mc-verify", help="Monte Carlo smoothing verification")
    p.add_argument("--model", help="model config JSON (truncated-order check)")
    p.add_argument("--flow", choices=["identity", "harmonic"])
    p.add_argument("--expr", required=True)
    p.add_argument("--sigma", required=True, type=float)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--samples", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--center", help="ensemble center (flows only; default origin)")
    p.add_argument("--omega", type=float, default=1.0, help="harmonic frequency")
    p.set_defaults(func=cmd_mc_verify)

    p = sub.add_parser("selfcheck", help="run the exact-identity suites")
    p.add_argument("--filter", help="run only suites whose name contains this")
    p.add_argument(
        "--inject-commutator-fault",
        action="store_true",
        help="debug: corrupt the canonical commutator to prove the suites bite",
    )
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        code = args.func(args)
    except CliError as exc:
        _print_err(str(exc))
        code = exc.code
    except ExprSyntaxError as exc:
        _print_err(str(exc))
        code = EXIT_USAGE
    if args.verbose:
        inputs = {
            key: value
            for key, value in vars(args).items()
            if key not in ("func", "verbose") and value is not None
        }
        report = {
            "command": argv,
            "inputs": inputs,
            "exit": code,
            "elapsed_s": round(time.monotonic() - started, 6),
        }
        print(json.dumps(report), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
