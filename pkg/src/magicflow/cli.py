"""magicflow command line.

Exit codes: 0 success, 1 mathematical failure (verdict disagreement, invalid
state, failed suite), 2 usage error (bad flags, unsupported configuration).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

from .clifford import load_circuit, prepare_stabilizer, random_clifford
from .convolution import ConvParams, iterate
from .errors import (DimensionMismatch, InvalidModulus, MagicFlowError, NoNontrivialParams,
                     SizeCapExceeded, UnsupportedConfiguration, VerdictDisagreement)
from .io import dumps_state, read_state, write_text
from .magic import ClassifyOptions, classify
from .operators import DensityOperator
from .phase_space import check_modulus
from .states import (default_depth, magic_product_vector, psi_k, random_mixed_state,
                     random_pure_state, zero_state)
from .verify import SUITES, run_suite

EXIT_OK, EXIT_MATH, EXIT_USAGE = 0, 1, 2
BUILDERS = ("zeros", "psi_k", "magic", "random", "mixed", "stabilizer")
USAGE_ERRORS = (DimensionMismatch, InvalidModulus, NoNontrivialParams, SizeCapExceeded,
                UnsupportedConfiguration)


class UsageError(Exception):
    pass


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _emit(text: str, path: str | None) -> None:
    if path:
        write_text(path, text)
    else:
        sys.stdout.write(text)


def _params(args, d: int) -> ConvParams | None:
    if args.s is None and args.t is None:
        return None
    if args.s is None or args.t is None:
        raise UsageError("--s and --t must be given together")
    if d == 2:
        raise UsageError("qubits use the three-input convolution; --s/--t do not apply")
    try:
        return ConvParams(args.s, args.t, d)
    except UnsupportedConfiguration:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _require(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} needs {' '.join(missing)}")


# ------------------------------------------------------------------ commands

def cmd_build_state(args) -> int:
    _require(args, "d", "n")
    d, n = check_modulus(args.d), args.n
    if n < 1:
        raise UsageError("--n must be at least 1")
    meta = {"builder": args.kind, "seed": args.seed}
    if args.kind == "zeros":
        rho = zero_state(n, d)
    elif args.kind in ("psi_k", "magic"):
        if args.kind == "psi_k":
            _require(args, "k")
        k = n if args.k is None else args.k
        if not 0 <= k <= n:
            raise UsageError(f"--k must lie in [0, {n}]")
        meta["k"] = k
        if args.kind == "magic":
            rho = DensityOperator.from_vector(magic_product_vector(n, d, k), n, d)
        else:
            meta["depth"] = default_depth(n)
            rho = psi_k(n, d, k, seed=args.seed)
    elif args.kind == "random":
        rho = random_pure_state(n, d, args.seed)
    elif args.kind == "mixed":
        rho = random_mixed_state(n, d, args.seed)
    else:
        if args.circuit:
            circuit = load_circuit(args.circuit)
            if (circuit.n, circuit.d) != (n, d):
                raise UsageError(f"circuit acts on n={circuit.n}, d={circuit.d}")
            meta["circuit"] = circuit.to_dict()
        else:
            circuit = random_clifford(n, d, default_depth(n), args.seed)
            meta["depth"] = default_depth(n)
        rho = prepare_stabilizer(circuit)
    _emit(dumps_state(rho, args.repr, meta), args.out)
    return EXIT_OK


def cmd_run_cg(args) -> int:
    _require(args, "input", "L")
    rho = read_state(args.input)
    params = _params(args, rho.d)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rho_L, trace = iterate(rho, params, args.L, args.mode)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    meta = {"L": args.L, "params": str(trace.params), "mode": trace.mode}
    state_text = dumps_state(rho_L, args.repr, meta)
    if args.out:
        write_text(args.out, state_text)
    if args.trace:
        write_text(args.trace, trace.to_csv())
    elif args.out:
        sys.stdout.write(trace.to_csv())
    else:
        sys.stdout.write(state_text)
    return EXIT_OK


def _classify_options(args, d: int) -> ClassifyOptions:
    return ClassifyOptions(flow=args.flow or args.L is not None, L=args.L,
                           params=_params(args, d), mode=args.mode)


def cmd_classify(args) -> int:
    _require(args, "input")
    rho = read_state(args.input)
    try:
        report = classify(rho, _classify_options(args, rho.d))
    except VerdictDisagreement as exc:
        if exc.report is not None:
            _emit(exc.report.to_json() + "\n", args.out)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH
    _emit(report.to_json() + "\n", args.out)
    if args.out:
        print(report.summary())
    return EXIT_OK


def cmd_verify(args) -> int:
    result = run_suite(args.suite, args.n, args.d, args.seed, args.samples)
    _emit(result.to_json() + "\n", args.out)
    if not result.passed:
        print(f"suite {args.suite} failed {len(result.failures)} of {result.checks} checks",
              file=sys.stderr)
        return EXIT_MATH
    return EXIT_OK


def cmd_report(args) -> int:
    """Human-readable summary of a report JSON, or of a state file (classified here)."""
    _require(args, "input")
    with open(args.input) as fh:
        data = json.load(fh)
    if "verdicts" in data:
        verdicts = data["verdicts"]
        agree = all(v is not False for v in verdicts.values())
        lines = [f"n={data['n']} d={data['d']} k={data['k']} |G|={data['group_size']} "
                 f"symmetries={data['symmetry_count']} S={data['entropy']:.6f} "
                 f"MG={data['magic_gap']:.6f} L={data['iterations_used']} "
                 f"verdicts={'agree' if agree else 'DISAGREE'}"]
        lines += [f"  {name}: {value}" for name, value in sorted(verdicts.items())]
        _emit("\n".join(lines) + "\n", args.out)
        return EXIT_OK if agree else EXIT_MATH
    rho = read_state(args.input)
    try:
        report = classify(rho, _classify_options(args, rho.d))
    except VerdictDisagreement as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH
    text = report.summary() + "\n"
    for name in sorted(report.class_by):
        text += f"  k by {name}: {report.class_by[name]}\n"
    if report.trace is not None:
        text += report.trace.to_csv()
    _emit(text, args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, help="local dimension: 2 or an odd prime")
    common.add_argument("--n", type=int, help="number of sites")
    common.add_argument("--seed", type=_seed, default=0, help="seed for every random choice (default 0)")
    common.add_argument("--in", dest="input", help="input file")
    common.add_argument("--out", help="output file (default stdout)")

    flow = argparse.ArgumentParser(add_help=False)
    flow.add_argument("--s", type=int)
    flow.add_argument("--t", type=int)
    flow.add_argument("--L", type=int, help="number of flow steps")
    flow.add_argument("--mode", choices=("dense", "char", "auto"), default="auto")

    parser = argparse.ArgumentParser(prog="magicflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-state", parents=[common], help="write a state file")
    p.add_argument("kind", choices=BUILDERS)
    p.add_argument("--k", type=int, help="number of magic sites")
    p.add_argument("--circuit", help="circuit JSON for the stabilizer builder")
    p.add_argument("--repr", choices=("dense", "char"), default="dense")
    p.set_defaults(func=cmd_build_state)

    p = sub.add_parser("run-cg", parents=[common, flow], help="iterate the self-convolution flow")
    p.add_argument("--trace", help="write the flow trace CSV here")
    p.add_argument("--repr", choices=("dense", "char"), default="dense")
    p.set_defaults(func=cmd_run_cg)

    p = sub.add_parser("classify", parents=[common, flow], help="magic class report as JSON")
    p.add_argument("--flow", action="store_true", help="classify the flowed state")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", parents=[common], help="run a property suite")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--samples", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", parents=[common, flow], help="readable summary of a report or state")
    p.add_argument("--flow", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "L", None) is not None and args.L < 0:
        parser.error("--L must be nonnegative")
    try:
        return args.func(args)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MagicFlowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
