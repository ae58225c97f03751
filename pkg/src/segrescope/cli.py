"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 resource-guard refusal, 4 numerical
non-convergence (only with ``--strict``).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import codes as codes_mod
from .errors import NotFilledError, ResourceError, SegrescopeError
from .measures import MeasureSpec, pure_measure
from .roof import convex_roof_upper_bound, wootters_mixed
from .secant import RANK_TOL, best_rank_r, least_filling_k, numerical_rank, secant_dimension
from .segre import SEPARABILITY_TOL, Kind, partition_reshape, separability_residual
from .states import DensityMatrix, PureState, SystemShape, load_state

EXIT_OK, EXIT_INPUT, EXIT_RESOURCE, EXIT_NONCONVERGED = 0, 2, 3, 4
VERBS = ("measure", "segre-check", "reshape", "secant-dim", "fill-scan", "rank", "roof", "codes")


class InputError(SegrescopeError):
    pass


class NonConvergence(SegrescopeError):
    def __init__(self, message, payload):
        super().__init__(message)
        self.payload = payload


def _dims(text: str) -> SystemShape:
    try:
        return SystemShape(int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --dims {text!r}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="segrescope", description=__doc__.splitlines()[0])
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--dims", type=_dims)
    p.add_argument("--state")
    p.add_argument("--rho")
    p.add_argument("--kind", choices=("concurrence", "fmeasure", "segre", "full"), default="concurrence")
    p.add_argument("--norm-const", type=float, default=1.0)
    p.add_argument("--k", type=int)
    p.add_argument("--kmax", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--L", type=int)
    p.add_argument("--split", type=int, default=1)
    p.add_argument("--restarts", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float)
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--q", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--family", choices=("general", "multiqubit"), default="general")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--strict", action="store_true")
    return p


def _need(args, name):
    value = getattr(args, name)
    if value is None:
        raise InputError(f"{args.verb} requires --{name.replace('_', '-')}")
    return value


def _load(path, cls):
    obj = load_state(path)
    if not isinstance(obj, cls):
        raise InputError(f"{path} holds a {type(obj).__name__}, expected a {cls.__name__}")
    return obj


def _spec(args) -> MeasureSpec:
    kind = {"concurrence": "CONCURRENCE", "segre": "CONCURRENCE"}.get(args.kind, "FMEASURE")
    return MeasureSpec(kind, args.norm_const)


def _quadric_kind(args) -> Kind:
    return Kind.SEGRE if args.kind in ("concurrence", "segre") else Kind.FULL


def _f(x: float) -> str:
    return f"{x:.6f}"


def cmd_measure(args):
    state = _load(_need(args, "state"), PureState)
    spec = _spec(args)
    value = pure_measure(state, spec)
    data = {"dims": list(state.shape.dims), "kind": spec.kind.value, "normalization": spec.normalization,
            "value": value}
    return data, f"{spec.symbol} = {_f(value)}"


def cmd_segre_check(args):
    state = _load(_need(args, "state"), PureState)
    tol = SEPARABILITY_TOL if args.tol is None else args.tol
    kind = _quadric_kind(args)
    res = separability_residual(state, kind)
    data = {"dims": list(state.shape.dims), "kind": kind.value, "residual": res, "tol": tol,
            "separable": res <= tol}
    return data, f"residual = {_f(res)}\nseparable = {str(res <= tol).lower()}"


def cmd_reshape(args):
    state = _load(_need(args, "state"), PureState)
    mat = partition_reshape(state, args.split)
    sv = np.linalg.svd(mat, compute_uv=False)
    rank = numerical_rank(mat, RANK_TOL if args.tol is None else args.tol)
    data = {"dims": list(state.shape.dims), "split": args.split, "rows": mat.shape[0], "cols": mat.shape[1],
            "re": mat.real.tolist(), "im": mat.imag.tolist(), "singular_values": sv.tolist(),
            "numerical_rank": rank}
    lines = [f"{mat.shape[0]} x {mat.shape[1]} matrix, numerical rank {rank}",
             "singular values: " + " ".join(_f(s) for s in sv)]
    return data, "\n".join(lines)


def _report_text(rep) -> str:
    return (f"dims={','.join(map(str, rep.shape.dims))} k={rep.k} ambient={rep.ambient_dim} "
            f"expected={rep.expected_dim} computed={rep.computed_dim} defect={rep.defect} "
            f"fills={str(rep.fills).lower()}")


def cmd_secant_dim(args):
    shape = _need(args, "dims")
    rep = secant_dimension(shape, _need(args, "k"), trials=args.trials, seed=args.seed,
                           rank_tol=RANK_TOL if args.tol is None else args.tol)
    return rep.to_json_obj(), _report_text(rep)


def cmd_fill_scan(args):
    shape = _need(args, "dims")
    kmax = _need(args, "kmax")
    tol = RANK_TOL if args.tol is None else args.tol
    try:
        least = least_filling_k(shape, kmax, trials=args.trials, seed=args.seed, rank_tol=tol)
    except NotFilledError:
        least = None
    top = kmax if least is None else least
    reports = [secant_dimension(shape, k, trials=args.trials, seed=args.seed, rank_tol=tol) for k in range(top + 1)]
    data = {"dims": list(shape.dims), "kmax": kmax, "least_filling_k": least,
            "reports": [r.to_json_obj() for r in reports]}
    text = "\n".join(_report_text(r) for r in reports)
    text += f"\nleast filling k = {least if least is not None else 'none'}"
    if least is None and args.strict:
        raise NonConvergence(f"no k <= {kmax} fills", data)
    return data, text


def cmd_rank(args):
    state = _load(_need(args, "state"), PureState)
    est = best_rank_r(state, _need(args, "r"), restarts=10 if args.restarts is None else args.restarts,
                      max_iters=500 if args.iters is None else args.iters, seed=args.seed,
                      stall_tol=1e-10 if args.tol is None else args.tol)
    data = {"dims": list(state.shape.dims), **est.to_json_obj(), "seed": args.seed}
    text = (f"r = {est.r}\nresidual = {est.residual:.6e}\nconverged = {str(est.converged).lower()}")
    if args.strict and not est.converged:
        raise NonConvergence("rank fit did not converge", data)
    return data, text


def cmd_roof(args):
    rho = _load(_need(args, "rho"), DensityMatrix)
    spec = _spec(args)
    res = convex_roof_upper_bound(rho, spec, L=args.L, restarts=20 if args.restarts is None else args.restarts,
                                  max_iters=500 if args.iters is None else args.iters, seed=args.seed)
    data = {"dims": list(rho.shape.dims), "kind": spec.kind.value, "normalization": spec.normalization,
            "seed": args.seed, **res.to_json_obj()}
    text = f"{spec.symbol} <= {_f(res.value)}  (L={res.L}, starts={res.restarts_used})"
    if rho.shape.dims == (2, 2) and spec.kind.value == "CONCURRENCE" and spec.normalization == 1.0:
        data["wootters"] = wootters_mixed(rho)
        text += f"\nWootters = {_f(data['wootters'])}"
    return data, text


def cmd_codes(args):
    q, l = _need(args, "q"), _need(args, "l")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        params = codes_mod.perfect_code_params(q, l, args.family)
        row = {**params.to_json_obj(), "ambient_dim": params.ambient_dim}
        if args.verify:
            rep = codes_mod.verify_fill(params, trials=args.trials, seed=args.seed,
                                        rank_tol=RANK_TOL if args.tol is None else args.tol)
            row.update(expected_dim=rep.expected_dim, computed_dim=rep.computed_dim, fills=rep.fills)
    row["warnings"] = [str(w.message) for w in caught]
    cols = ["q", "l", "t", "k", "ambient_dim"] + (["expected_dim", "computed_dim", "fills"] if args.verify else [])
    header = " ".join(c.replace("_dim", "") for c in cols)
    values = " ".join(str(row[c]).lower() if isinstance(row[c], bool) else str(row[c]) for c in cols)
    text = f"{header}\n{values}"
    for w in row["warnings"]:
        text += f"\nwarning: {w}"
    if args.strict and args.verify and not row["fills"]:
        raise NonConvergence("predicted fill not reproduced", row)
    return row, text


COMMANDS = {
    "measure": cmd_measure,
    "segre-check": cmd_segre_check,
    "reshape": cmd_reshape,
    "secant-dim": cmd_secant_dim,
    "fill-scan": cmd_fill_scan,
    "rank": cmd_rank,
    "roof": cmd_roof,
    "codes": cmd_codes,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK

    def fail(code, message, payload=None):
        print(f"segrescope: {message}", file=stderr)
        if args.json:
            doc = {"error": message, "exit_code": code}
            if payload is not None:
                doc["result"] = payload
            print(json.dumps(doc), file=stdout)
        return code

    try:
        data, text = COMMANDS[args.verb](args)
    except ResourceError as exc:
        return fail(EXIT_RESOURCE, str(exc))
    except NonConvergence as exc:
        return fail(EXIT_NONCONVERGED, str(exc), exc.payload)
    except (SegrescopeError, IndexError, ValueError) as exc:
        return fail(EXIT_INPUT, str(exc))
    print(json.dumps(data) if args.json else text, file=stdout)
    return EXIT_OK


def main(argv=None) -> int:
    return run(argv)
