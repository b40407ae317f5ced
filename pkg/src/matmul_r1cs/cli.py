"""Command-line front end.

Exit codes: 0 success or satisfied, 1 checked and failed, 2 usage error,
3 I/O or parse error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from pathlib import Path

from .errors import CircuitError, ModulusMismatch, ParseError, ShapeError, SpecError, ValidationError
from .field import DEFAULT_MODULUS, PrimeModulus, as_modulus, sample_challenge
from .matmul import (
    EXHAUSTIVE_MAX_MODULUS,
    Encoding,
    MatMulSpec,
    exhaustive_report,
    matmul_mod,
    matrix_from_json,
    matrix_to_json,
    random_matrix,
    soundness_trial,
    synthesize_matmul,
    trial_seed,
)
from .nonlinear import (
    FixedPointParams,
    exp_reference,
    gelu_quadratic,
    run_gadget,
    softmax_reference,
)
from .r1cs import (
    deserialize_assignment,
    deserialize_instance,
    instance_stats,
    is_satisfied,
    serialize_assignment,
    serialize_instance,
)

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if v == int(v) and abs(v) < 1e15:
            return str(int(v))
        return f"{v:.6g}"
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write(path, data) -> None:
    if isinstance(data, str):
        data = data.encode()
    if path is None or path == "-":
        sys.stdout.write(data.decode())
        return
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from None


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _modulus(args) -> PrimeModulus:
    try:
        return as_modulus(args.modulus)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None


def _dims(args) -> tuple[int, int, int]:
    dims = (args.a, args.n, args.b)
    if any(d is None for d in dims):
        raise UsageError("--a, --n and --b are required")
    if any(d < 1 for d in dims):
        raise UsageError("dimensions must be positive")
    return dims


def _encoding(name) -> Encoding:
    try:
        return Encoding.parse(name)
    except SpecError as exc:
        raise UsageError(str(exc)) from None


def _public(spec_str: str) -> dict:
    names = {s.strip() for s in spec_str.split(",") if s.strip()}
    bad = names - {"x", "w", "y"}
    if bad:
        raise UsageError(f"--public accepts x, w, y; got {sorted(bad)}")
    return {"x_public": "x" in names, "w_public": "w" in names, "y_public": "y" in names}


def _pair(text: str, what: str) -> tuple[int, int]:
    try:
        r, c = (int(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"{what} must look like r,c") from None
    return r, c


# -- commands --------------------------------------------------------------


def _spec_from_args(args, modulus) -> MatMulSpec:
    a, n, b = _dims(args)
    enc = _encoding(args.encoding)
    z = None
    if enc.polynomial:
        if not args.challenge_seed:
            raise UsageError(f"encoding {enc.value} requires --challenge-seed")
        z = sample_challenge(args.challenge_seed.encode(), modulus)
    return MatMulSpec(a, n, b, enc, z, modulus, **_public(args.public))


def cmd_compile(args) -> int:
    modulus = _modulus(args)
    spec = _spec_from_args(args, modulus)
    syn = synthesize_matmul(spec).finalize()
    inst = syn.instance
    inst.metadata["public"] = args.public
    if spec.encoding.polynomial:
        inst.metadata["challenge_seed"] = args.challenge_seed
    stats = instance_stats(inst).as_dict()
    if args.out:
        _write(args.out, serialize_instance(inst))
    _write(args.stats_out, _json({"stats": stats, "metadata": inst.metadata}))
    return EXIT_OK


def _spec_from_metadata(inst) -> MatMulSpec:
    meta = inst.metadata
    try:
        enc = Encoding.parse(meta["encoding"])
        a, n, b = int(meta["a"]), int(meta["n"]), int(meta["b"])
        public = _public(meta.get("public", "x,y"))
        z = None
        if enc.polynomial:
            z = inst.modulus(int(meta["challenge"]))
    except (KeyError, ValueError, SpecError) as exc:
        raise UsageError(f"instance metadata does not describe a matmul circuit: {exc}") from None
    return MatMulSpec(a, n, b, enc, z, inst.modulus, **public)


def cmd_witness(args) -> int:
    inst = deserialize_instance(_read(args.instance))
    spec = _spec_from_metadata(inst)
    p = inst.p
    X = matrix_from_json(_read(args.x), p)
    W = matrix_from_json(_read(args.w), p)
    if (len(X), len(X[0]) if X else 0) != (spec.a, spec.n):
        raise UsageError(f"X must be {spec.a}x{spec.n}")
    if (len(W), len(W[0]) if W else 0) != (spec.n, spec.b):
        raise UsageError(f"W must be {spec.n}x{spec.b}")
    circuit = synthesize_matmul(spec, X, W)
    syn = circuit.finalize()
    if syn.instance != inst:
        raise UsageError("instance file does not match a fresh synthesis of its own metadata")
    _write(args.out, serialize_assignment(syn.assignment))
    if args.y_out:
        _write(args.y_out, matrix_to_json(circuit.y_values))
    return EXIT_OK


def cmd_check(args) -> int:
    try:
        inst = deserialize_instance(_read(args.instance))
        asg = deserialize_assignment(_read(args.assignment))
        report = is_satisfied(inst, asg)
    except (ShapeError, ModulusMismatch, ValidationError) as exc:
        raise InputError(str(exc)) from None
    if report.ok:
        print("satisfied")
        return EXIT_OK
    print(f"unsatisfied: first failing row {report.failing_row}")
    return EXIT_FAILED


BENCH_HEADER = [
    "a", "n", "b", "encoding", "n_constraints", "n_variables", "left_wires",
    "a_nonzeros", "b_nonzeros", "c_nonzeros", "product_rows", "naive_product_ratio",
]


def bench_rows(sweep, encodings, modulus, seed: str = "bench"):
    z = sample_challenge(seed.encode(), modulus)
    rows = []
    for a, n, b in sweep:
        naive_products = a * b * n
        for enc in encodings:
            spec = MatMulSpec(a, n, b, enc, z if enc.polynomial else None, modulus)
            st = instance_stats(synthesize_matmul(spec).finalize().instance)
            rows.append([
                a, n, b, enc.value, st.n_constraints, st.n_variables, st.left_wire_count,
                st.a_nonzeros, st.b_nonzeros, st.c_nonzeros, st.product_rows,
                naive_products / st.n_constraints,
            ])
    return rows


def cmd_bench(args) -> int:
    modulus = _modulus(args)
    sweep = []
    for item in args.sweep or []:
        try:
            dims = tuple(int(t) for t in item.split(","))
        except ValueError:
            raise UsageError(f"bad --sweep entry {item!r}") from None
        if len(dims) != 3 or min(dims) < 1:
            raise UsageError(f"--sweep entries are a,n,b with positive values, got {item!r}")
        sweep.append(dims)
    if args.a is not None or args.n is not None or args.b is not None:
        sweep.append(_dims(args))
    if not sweep:
        raise UsageError("bench needs at least one --sweep a,n,b")
    encodings = [_encoding(e) for e in args.encoding] if args.encoding else list(Encoding)
    rows = bench_rows(sweep, encodings, modulus, args.challenge_seed or "bench")
    if args.format == "json":
        _write(args.out, _json([dict(zip(BENCH_HEADER, r)) for r in rows]))
    else:
        _write(args.out, _csv(BENCH_HEADER, rows))
    return EXIT_OK


def cmd_soundness(args) -> int:
    modulus = _modulus(args)
    a, n, b = _dims(args)
    enc = _encoding(args.encoding)
    if not enc.polynomial:
        raise UsageError("soundness experiments need --encoding crpc or crpc-psq")
    r, c = _pair(args.tamper_entry, "--tamper-entry")
    if not (0 <= r < a and 0 <= c < b):
        raise UsageError(f"--tamper-entry outside {a}x{b}")
    delta = args.tamper_delta
    if delta % modulus.p == 0:
        raise UsageError("--tamper-delta must be nonzero mod p")
    if args.exhaustive:
        if modulus.p > EXHAUSTIVE_MAX_MODULUS:
            raise UsageError("--exhaustive needs --modulus <= 65536")
        rng = random.Random(trial_seed(args.seed.encode(), 0))
        X = random_matrix(rng, a, n, modulus.p)
        W = random_matrix(rng, n, b, modulus.p)
        Y = matmul_mod(X, W, modulus.p)
        Y[r][c] = (Y[r][c] + delta) % modulus.p
        report = exhaustive_report(modulus, X, W, Y)
        doc = report.to_dict()
        doc["mode"] = "exhaustive"
    else:
        if args.trials < 1:
            raise UsageError("--trials must be >= 1")
        spec = MatMulSpec(a, n, b, enc, None, modulus)
        report = soundness_trial(spec, (r, c, delta), args.trials, args.seed.encode())
        doc = report.to_dict()
        doc["mode"] = "statistical"
    doc["encoding"] = enc.value
    doc["n"] = n
    doc["tamper"] = {"entry": [r, c], "delta": delta}
    doc["invariants_hold"] = report.invariants_hold()
    _write(args.out, _json(doc))
    return EXIT_OK if report.invariants_hold() else EXIT_FAILED


APPROX_HEADER = ["input", "float_reference", "circuit_output_dequantized", "abs_error"]


def _grid(text: str) -> list[float]:
    try:
        lo, hi, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise UsageError("--grid must look like lo:hi:step") from None
    if step <= 0 or hi < lo:
        raise UsageError("--grid needs step > 0 and hi >= lo")
    count = int(round((hi - lo) / step)) + 1
    if count > 100000:
        raise UsageError("--grid has too many points")
    return [lo + i * step for i in range(count) if lo + i * step <= hi + 1e-9]


def approx_rows(function: str, xs: list[float], params: FixedPointParams, modulus=DEFAULT_MODULUS):
    """Returns (rows, all_satisfied)."""
    rows = []
    ok = True
    if function in ("exp", "gelu"):
        for x in xs:
            if function == "exp" and x > 0:
                raise UsageError("exp is only defined for nonpositive inputs")
            run = run_gadget(function, [x], params, modulus)
            ok &= run.satisfied
            xq = run.inputs[0]
            fr = exp_reference(xq, params) if function == "exp" else gelu_quadratic(xq)
            rows.append([xq, fr, run.outputs[0], abs(run.outputs[0] - fr)])
    else:
        run = run_gadget(function, xs, params, modulus)
        ok &= run.satisfied
        if function == "softmax":
            refs = softmax_reference(run.inputs)
            outs = run.outputs
        else:
            refs = [max(run.inputs)] * len(xs)
            outs = run.outputs * len(xs)
        for x, fr, o in zip(run.inputs, refs, outs):
            rows.append([x, fr, o, abs(o - fr)])
    return rows, ok


def cmd_approx(args) -> int:
    modulus = _modulus(args)
    if (args.grid is None) == (args.values is None):
        raise UsageError("give exactly one of --grid or --values")
    if args.grid is not None:
        xs = _grid(args.grid)
    else:
        try:
            xs = [float(t) for t in args.values.split(",")]
        except ValueError:
            raise UsageError("--values must be comma-separated numbers") from None
    if not xs:
        raise UsageError("no input points")
    params = FixedPointParams(
        scale_bits=args.scale_bits,
        bit_width=args.bit_width,
        threshold=round(args.threshold * (1 << args.scale_bits)),
        exp_iters=args.exp_iters,
    )
    try:
        params.validate(modulus)
    except SpecError as exc:
        raise UsageError(str(exc)) from None
    rows, ok = approx_rows(args.function, xs, params, modulus)
    if args.format == "json":
        _write(args.out, _json({"rows": [dict(zip(APPROX_HEADER, r)) for r in rows], "satisfied": ok}))
    else:
        _write(args.out, _csv(APPROX_HEADER, rows))
    return EXIT_OK if ok else EXIT_FAILED


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matmul-r1cs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dims=True):
        p.add_argument("--modulus", default=str(DEFAULT_MODULUS.p), help="prime field modulus (decimal)")
        if dims:
            p.add_argument("--a", type=int)
            p.add_argument("--n", type=int)
            p.add_argument("--b", type=int)

    p = sub.add_parser("compile", help="synthesize a matmul instance")
    common(p)
    p.add_argument("--encoding", default="crpc-psq", choices=[e.value for e in Encoding])
    p.add_argument("--challenge-seed")
    p.add_argument("--public", default="x,y", help="comma list of public matrices among x,w,y")
    p.add_argument("--out", help="instance JSON path")
    p.add_argument("--stats-out", help="stats JSON path (default stdout)")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("witness", help="generate an assignment for a compiled instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--w", required=True)
    p.add_argument("--out", required=True, help="assignment JSON path")
    p.add_argument("--y-out", help="write the computed Y matrix here")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("check", help="check an assignment against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--assignment", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bench", help="constraint and variable counts per encoding")
    common(p)
    p.add_argument("--sweep", action="append", help="a,n,b (repeatable)")
    p.add_argument("--encoding", action="append", choices=[e.value for e in Encoding])
    p.add_argument("--challenge-seed")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("soundness", help="tamper-detection experiments")
    common(p)
    p.add_argument("--encoding", default="crpc-psq", choices=[e.value for e in Encoding])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", default="soundness")
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--tamper-entry", default="0,0")
    p.add_argument("--tamper-delta", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_soundness)

    p = sub.add_parser("approx", help="accuracy of a nonlinear gadget against floats")
    common(p, dims=False)
    p.add_argument("--function", required=True, choices=["exp", "softmax", "gelu", "max"])
    p.add_argument("--grid", help="lo:hi:step")
    p.add_argument("--values", help="comma-separated inputs")
    p.add_argument("--scale-bits", type=int, default=8)
    p.add_argument("--bit-width", type=int, default=24)
    p.add_argument("--threshold", type=float, default=-16.0, help="exp clipping threshold in real units")
    p.add_argument("--exp-iters", type=int, default=6)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_approx)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, ParseError, ValidationError, ShapeError, ModulusMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (SpecError, CircuitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())
