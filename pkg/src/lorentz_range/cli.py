"""Command-line entry point.

Exit codes: 0 when every check passes, 1 when a mathematical assertion
fails, 2 on usage errors (bad flags, malformed specs, domain violations).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from .calderon import check_hilbert_domination, hilbert_of_step
from .concave import ConcaveFn
from .errors import LabError
from .harness import Corpus, SuiteConfig, gen_corpus, run_suite
from .optimal_range import (check_phi0_maximality, criterion_continuous, criterion_discrete,
                            psi_function, psi_values, witness_general, witness_indicator)
from .rearrangement import DecreasingStep, StepFn
from .reports import _clean, fmt, reports_to_csv
from .spectral import (LipschitzFn, commutator_identity_check, doi_apply, identity_scale,
                       matrix_from_dict, matrix_to_dict, triangular_truncate, weak_l1_probe)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _num(x):
    """Round to the 12 significant digits used for all printed output."""
    if isinstance(x, dict):
        return {k: _num(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_num(v) for v in x]
    if isinstance(x, float) and math.isfinite(x):
        return float(f"{x:.12g}")
    return x


def _load_json_arg(text: str, what: str):
    if text is None:
        raise UsageError(f"--{what} is required")
    if not text.lstrip().startswith(("{", "[")):
        try:
            with open(text) as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {what} from {text!r}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed {what} JSON: {exc}") from exc


def _phi(args, name="phi") -> ConcaveFn:
    return ConcaveFn.from_dict(_load_json_arg(getattr(args, name), name))


def _psi(args, phi: ConcaveFn) -> ConcaveFn:
    return _phi(args, "psi") if args.psi else psi_function(phi)


def _emit(args, payload: dict, rows: list | None = None, header: list | None = None):
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
        text = buf.getvalue()
    else:
        text = json.dumps(_num(_clean(payload)), sort_keys=True, indent=1) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _u_grid(args) -> np.ndarray:
    if args.u:
        u = np.asarray(args.u, dtype=float)
        if np.any(~(u > 0)) or not np.all(np.isfinite(u)):
            raise UsageError("--u values must be positive and finite")
        return u
    d = args.decades
    return np.geomspace(10.0 ** (-d / 2), 10.0 ** (d / 2), args.points)


def cmd_psi(args) -> int:
    phi = _phi(args)
    u = _u_grid(args)
    v, w = psi_values(phi, u)
    rows = list(zip(u.tolist(), v.tolist(), w.tolist()))
    _emit(args, {"phi": phi.to_dict(), "rows": [{"u": a, "psi": b, "w_star": c} for a, b, c in rows]},
          rows, ["u", "psi", "w_star"])
    return EXIT_OK


def cmd_check_continuous(args) -> int:
    phi = _phi(args)
    psi = _psi(args, phi)
    d = max(args.decades, 8)
    rep = criterion_continuous(phi, psi, np.geomspace(10.0 ** (-d / 2), 10.0 ** (d / 2), args.points))
    _emit(args, rep.to_dict(), rep.csv_rows(), ["u", "G", "phi", "ratio"])
    return EXIT_OK if rep.verdict == "bounded_with_c" else EXIT_FAIL


def cmd_check_discrete(args) -> int:
    phi = _phi(args)
    rep = criterion_discrete(phi, args.n)
    _emit(args, rep.to_dict(), rep.csv_rows(), ["n", "lhs", "phi_over_n", "ratio"])
    return EXIT_OK if rep.verdict == "bounded_with_c" else EXIT_FAIL


def cmd_witness(args) -> int:
    phi = _phi(args)
    if args.x:
        x = DecreasingStep.from_layers(_load_json_arg(args.x, "x")["layers"])
        wg = witness_general(x, phi, _psi(args, phi))
        payload = {"y": wg.y.to_dict(), "norm_y": wg.norm_y, "norm_x_psi": wg.norm_x_psi,
                   "bound": 8.0 * wg.norm_x_psi, "dominates": wg.dominates, "pass": wg.passed}
        _emit(args, payload, [(wg.norm_y, wg.norm_x_psi, wg.passed)], ["norm_y", "norm_x_psi", "pass"])
        return EXIT_OK if wg.passed else EXIT_FAIL
    if not args.u or len(args.u) != 1:
        raise UsageError("witness needs --x or exactly one --u")
    u = float(_u_grid(args)[0])
    wi = witness_indicator(phi, u)
    payload = {"u": u, "y": wi.y.to_dict(), "w_used": wi.w_used, "norm": wi.norm, "psi_u": wi.psi_u,
               "dominates": wi.dominates, "pass": wi.passed}
    _emit(args, payload, [(u, wi.w_used, wi.norm, wi.psi_u, wi.passed)], ["u", "w_used", "norm", "psi", "pass"])
    return EXIT_OK if wi.passed else EXIT_FAIL


def cmd_hilbert(args) -> int:
    spec = _load_json_arg(args.x, "x")
    if "layers" in spec:
        mu = DecreasingStep.from_layers(spec["layers"])
        t = np.asarray(args.t, dtype=float) if args.t else np.geomspace(mu.u[0] * 1e-3, mu.u[-1] * 1e3, 32)
        rep = check_hilbert_domination(mu, t)
        payload = {"t": list(rep.t_grid), "slack": list(rep.slacks), "min_slack": rep.min_slack, "pass": rep.passed}
        _emit(args, payload, list(zip(rep.t_grid, rep.slacks)), ["t", "slack"])
        return EXIT_OK if rep.passed else EXIT_FAIL
    x = StepFn.from_dict(spec)
    if not args.t:
        raise UsageError("hilbert on a step function needs --t")
    vals = [hilbert_of_step(x, float(t)) for t in args.t]
    _emit(args, {"t": list(args.t), "H": vals}, list(zip(args.t, vals)), ["t", "H"])
    return EXIT_OK


def cmd_phi0_check(args) -> int:
    if args.x:
        xs = [DecreasingStep.from_layers(_load_json_arg(args.x, "x")["layers"])]
    else:
        xs = gen_corpus(Corpus("step_functions", args.seed, args.samples))
    reps = [check_phi0_maximality(x) for x in xs]
    rows = [(i, r.s_norm, r.phi0_norm, r.passed) for i, r in enumerate(reps)]
    payload = {"samples": [{"s_norm": r.s_norm, "phi0_norm": r.phi0_norm, "pass": r.passed} for r in reps],
               "pass": all(r.passed for r in reps)}
    _emit(args, payload, rows, ["sample_id", "s_norm", "phi0_norm", "pass"])
    return EXIT_OK if payload["pass"] else EXIT_FAIL


def cmd_truncate(args) -> int:
    if args.matrix:
        V = matrix_from_dict(_load_json_arg(args.matrix, "matrix"))
        TV = triangular_truncate(V)
        payload = {"T": matrix_to_dict(TV)}
        ratio = weak_l1_probe(V) if np.any(V) else 0.0
        payload["weak_l1_ratio"] = ratio
        _emit(args, payload, [(0, ratio)], ["sample_id", "ratio"])
        return EXIT_OK
    corpus = gen_corpus(Corpus("gaussian_matrices", args.seed, args.samples, {"dim": args.dim}))
    ratios = [weak_l1_probe(V) for V in corpus]
    _emit(args, {"samples": ratios, "max": max(ratios)}, list(enumerate(ratios)), ["sample_id", "ratio"])
    return EXIT_OK


def cmd_doi(args) -> int:
    if args.a:
        fspec = _load_json_arg(args.f, "f")
        f = LipschitzFn(fspec["x"], fspec["y"])
        A = matrix_from_dict(_load_json_arg(args.a, "a"))
        V = matrix_from_dict(_load_json_arg(args.matrix, "matrix"))
        out = doi_apply(f, A, V)
        _emit(args, {"result": matrix_to_dict(out)})
        return EXIT_OK
    pairs = gen_corpus(Corpus("hermitian_pairs", args.seed, args.samples, {"dim": args.dim}))
    funcs = gen_corpus(Corpus("lipschitz_functions", args.seed, args.samples))
    dev = [commutator_identity_check(f, A, B) / identity_scale(f, A, B) for (A, B), f in zip(pairs, funcs)]
    ok = all(d <= 1e-10 for d in dev)
    _emit(args, {"samples": dev, "max": max(dev), "pass": ok}, list(enumerate(dev)), ["sample_id", "ratio"])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_suite(args) -> int:
    cfg = _load_json_arg(args.config, "config") if args.config else {}
    cfg.setdefault("seed", args.seed)
    if args.phi:
        cfg["phi"] = _load_json_arg(args.phi, "phi")
    if args.psi:
        cfg["psi"] = _load_json_arg(args.psi, "psi")
    if args.experiments:
        cfg["experiments"] = args.experiments
    if args.parallel:
        cfg["parallel"] = True
    if args.dim != 64:
        cfg["dim"] = args.dim
    reports = run_suite(SuiteConfig.from_dict(cfg))
    if args.format == "csv":
        text = reports_to_csv(reports)
    else:
        text = json.dumps([_num(r.to_dict(timing=not args.no_timing)) for r in reports], sort_keys=True, indent=1) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


COMMANDS = {
    "psi": cmd_psi,
    "check-continuous": cmd_check_continuous,
    "check-discrete": cmd_check_discrete,
    "witness": cmd_witness,
    "hilbert": cmd_hilbert,
    "phi0-check": cmd_phi0_check,
    "truncate": cmd_truncate,
    "doi": cmd_doi,
    "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--phi", help="phi spec: inline JSON or path")
    common.add_argument("--psi", help="psi spec (defaults to the computed optimal range)")
    common.add_argument("--u", type=float, nargs="+", help="evaluation points u > 0")
    common.add_argument("--decades", type=float, default=8.0)
    common.add_argument("--points", type=int, default=81)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--dim", type=int, default=64)
    common.add_argument("--samples", type=int, default=50)
    common.add_argument("--out")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--config", help="JSON document mirroring the flags")

    parser = argparse.ArgumentParser(prog="lorentz-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "check-discrete":
            p.add_argument("--n", type=int, default=4096)
        if name in ("witness", "hilbert", "phi0-check"):
            p.add_argument("--x", help="DecreasingStep {'layers': ...} or StepFn JSON")
        if name == "hilbert":
            p.add_argument("--t", type=float, nargs="+")
        if name in ("truncate", "doi"):
            p.add_argument("--matrix", help="matrix JSON {n, re, im, hermitian}")
        if name == "doi":
            p.add_argument("--a", help="hermitian matrix JSON")
            p.add_argument("--f", help="Lipschitz function JSON {x: [...], y: [...]}")
        if name == "suite":
            p.add_argument("--experiments", nargs="+")
            p.add_argument("--parallel", action="store_true")
            p.add_argument("--no-timing", action="store_true", help="omit wall times (byte-stable output)")
    return parser


def _apply_config(args, parser):
    """Fill flags left at their defaults from a --config document."""
    if not args.config or args.command == "suite":
        return
    cfg = _load_json_arg(args.config, "config")
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, dest) in (None, parser.get_default(dest)):
            if isinstance(value, (dict, list)) and dest in ("phi", "psi", "x", "matrix", "a", "f"):
                value = json.dumps(value)
            setattr(args, dest, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args, parser)
        return COMMANDS[args.command](args)
    except (UsageError, LabError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
