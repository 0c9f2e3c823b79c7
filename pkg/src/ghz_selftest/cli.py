"""Command-line front end: ``ghz-selftest <command> [options]``.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 resource cap.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from typing import Any, Sequence

import numpy as np

from .bell import (DEFAULT_DIM_CAP, ProbabilityTable, Realization, bell_operator, bell_value_from_correlators,
                   check_dim_cap, correlators_from_probabilities, ideal_realization, quantum_value)
from .bounds import critical_visibility, local_bound, spectral_bound, visibility_sweep
from .linalg import random_unitary
from .observables import (PARTY_CLASSES, bell_coefficients, canonical_pair, extraction_unitary,
                          resolved_ideal_matrix)
from .scenario import DEFAULT_STRATEGY_CAP, BellScenario, ResourceCapExceeded, check_strategy_cap
from .sos import selftest_relation_suite, verify_ghz_structure, verify_sos_identity

SCHEMA = "ghz-selftest/1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3


class InputError(Exception):
    pass


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def parse_grid(text: str) -> list[tuple[int, int, int]]:
    """``"2,2,2;3,2,2"`` -> ``[(2, 2, 2), (3, 2, 2)]``."""
    out = []
    for chunk in text.replace(" ", ";").split(";"):
        if not chunk:
            continue
        parts = chunk.split(",")
        try:
            triple = tuple(int(p) for p in parts)
        except ValueError:
            raise InputError(f"grid entry {chunk!r} is not a comma-separated integer triple") from None
        if len(triple) != 3 or min(triple) < 2:
            raise InputError(f"grid entry {chunk!r} must be N,m,d with each value >= 2")
        out.append(triple)
    if not out:
        raise InputError("empty grid")
    return out


def _scenarios(args) -> list[BellScenario]:
    if args.grid:
        return [BellScenario(*t) for t in parse_grid(args.grid)]
    try:
        return [BellScenario(args.N, args.m, args.d)]
    except ValueError as exc:
        raise InputError(str(exc)) from None


# -- commands ------------------------------------------------------------------

def cmd_quantum_value(args) -> tuple[list[dict], int]:
    rows = []
    for s in _scenarios(args):
        check_dim_cap(s, args.dim_cap)
        r = ideal_realization(s, args.dim_cap)
        op = bell_operator(r, cap=args.dim_cap)
        qv = quantum_value(r.state, op)
        rows.append({"N": s.N, "m": s.m, "d": s.d, "quantum_value": qv,
                     "beta_q_formula": op.beta_q_formula,
                     "formula_matches": bool(abs(qv - op.beta_q_formula) < 1e-8),
                     "max_eigenvalue": spectral_bound(op)})
    return rows, EXIT_OK


def cmd_local_bound(args) -> tuple[list[dict], int]:
    rows = []
    for s in _scenarios(args):
        check_strategy_cap(s, args.cap)
        coeffs = bell_coefficients(s.m, s.d)
        if args.zero_coefficients:
            coeffs = coeffs.zeroed()
        t0 = time.perf_counter()
        res = local_bound(s, coeffs, shards=args.shards, cap=args.cap,
                          with_quantum=s.total_dim <= args.dim_cap)
        wall = (time.perf_counter() - t0) * 1000
        beta_q = res.beta_q_formula
        rows.append({"N": s.N, "m": s.m, "d": s.d, "beta_local": res.beta_local,
                     "argmax_strategy": res.argmax_strategy.flattened(), "beta_q": beta_q,
                     "ratio": res.beta_local / beta_q, "strategies_evaluated": res.strategy_count_evaluated,
                     "wall_time_ms": round(wall, 3)})
    return rows, EXIT_OK


def _random_observable(d: int, rng: np.random.Generator) -> np.ndarray:
    u = random_unitary(d, rng)
    phases = np.exp(2j * np.pi * rng.integers(0, d, size=d) / d)
    return u @ np.diag(phases) @ u.conj().T


def _extraction_residual(m: int, d: int) -> float:
    z, t = canonical_pair(d, m)
    worst = 0.0
    for cls in PARTY_CLASSES:
        w = extraction_unitary(cls, m, d)
        for canon, x in ((z.matrix, 2), (t.matrix, 3)):
            diff = w @ canon @ w.conj().T - resolved_ideal_matrix(cls, x, m, d)
            worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def verify_scenario(s: BellScenario, tol: float, seed: int, draws: int, corrupt: bool = False,
                    dim_cap: int = DEFAULT_DIM_CAP) -> dict:
    check_dim_cap(s, dim_cap)
    r = ideal_realization(s, dim_cap)
    if corrupt:
        obs = [list(row) for row in r.observables]
        obs[0][0] = np.eye(s.d, dtype=complex)
        r = r.replace(observables=obs)
    suite = selftest_relation_suite(r, tol)
    checks = dict(suite.maxima())
    rng = np.random.default_rng(seed)
    worst_random = 0.0
    for _ in range(draws):
        obs = [[_random_observable(s.d, rng) for _ in range(s.m)] for _ in range(s.N)]
        rr = Realization(s, r.state, obs)
        for n in range(1, s.N + 1):
            worst_random = max(worst_random, verify_sos_identity(n, rr, tol).identity_residual)
    checks["SOS_identity_random"] = worst_random
    checks["extraction_unitaries"] = _extraction_residual(s.m, s.d)
    ghz = verify_ghz_structure(r.state, s, tol=tol)
    checks["ghz_structure"] = max(ghz.off_pattern_mass, ghz.diagonal_spread)
    results = [{"check": name, "max_residual": float(v), "passed": bool(v < tol)}
               for name, v in checks.items()]
    return {"N": s.N, "m": s.m, "d": s.d, "checks": results,
            "all_passed": all(c["passed"] for c in results)}


def cmd_verify(args) -> tuple[list[dict], int]:
    rows = [verify_scenario(s, args.tol, args.seed, args.draws, args.corrupt, args.dim_cap)
            for s in _scenarios(args)]
    code = EXIT_OK
    for row in rows:
        for c in row["checks"]:
            if not c["passed"]:
                code = EXIT_FAIL
                print(f"FAIL ({row['N']},{row['m']},{row['d']}) {c['check']}: "
                      f"{c['max_residual']:.3e} >= tol {args.tol:g}", file=sys.stderr)
    return rows, code


def load_probability_table(path: str) -> ProbabilityTable:
    """Read ``{"N", "m", "d", "p": {"x1,..,xN": {"a1,..,aN": prob}}}``; absent outcomes count as 0."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise InputError(f"{path}: top level must be an object")
    for key in ("N", "m", "d", "p"):
        if key not in raw:
            raise InputError(f"{path}: missing field {key!r}")
    try:
        s = BellScenario(raw["N"], raw["m"], raw["d"])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    N, m, d = s.as_tuple()
    p = np.zeros((m,) * N + (d,) * N)
    seen = set()
    if not isinstance(raw["p"], dict):
        raise InputError(f"{path}: field 'p' must be an object")
    for xkey, slice_ in raw["p"].items():
        xs = _parse_key(xkey, N, 1, m, f"{path}: input record {xkey!r}")
        if not isinstance(slice_, dict):
            raise InputError(f"{path}: input record {xkey!r} must map outcome keys to numbers")
        for akey, val in slice_.items():
            a = _parse_key(akey, N, 0, d - 1, f"{path}: record {xkey!r}/{akey!r}")
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
                raise InputError(f"{path}: record {xkey!r}/{akey!r} has non-numeric value {val!r}")
            p[tuple(x - 1 for x in xs) + a] = val
        seen.add(xs)
    missing = [xs for xs in np.ndindex(*(m,) * N) if tuple(x + 1 for x in xs) not in seen]
    if missing:
        raise InputError(f"{path}: no record for inputs {tuple(x + 1 for x in missing[0])}")
    return ProbabilityTable(s, p)


def _parse_key(key: str, n: int, lo: int, hi: int, where: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in key.split(","))
    except ValueError:
        raise InputError(f"{where}: key is not comma-separated integers") from None
    if len(vals) != n or any(not lo <= v <= hi for v in vals):
        raise InputError(f"{where}: expected {n} integers in {lo}..{hi}")
    return vals


def probability_table_to_json(table: ProbabilityTable) -> dict:
    N, m, d = table.scenario.as_tuple()
    p = {}
    for xs in np.ndindex(*(m,) * N):
        p[",".join(str(x + 1) for x in xs)] = {
            ",".join(map(str, a)): float(table.p[xs + a]) for a in np.ndindex(*(d,) * N)}
    return {"N": N, "m": m, "d": d, "p": p}


def cmd_eval_table(args) -> tuple[list[dict], int]:
    table = load_probability_table(args.path)
    s = table.scenario
    try:
        corr = correlators_from_probabilities(table)
    except ValueError as exc:
        raise InputError(f"{args.path}: {exc}") from None
    value = bell_value_from_correlators(corr, bell_coefficients(s.m, s.d))
    beta_l = local_bound(s, cap=args.cap, shards=args.shards, with_quantum=False).beta_local
    return [{"N": s.N, "m": s.m, "d": s.d, "bell_value": value, "beta_local": beta_l,
             "margin": value - beta_l, "certifies_nonlocality": bool(value > beta_l + args.tol)}], EXIT_OK


def cmd_robustness(args) -> tuple[list[dict], int]:
    rows = []
    grid = list(np.linspace(0.0, 1.0, args.points))
    for s in _scenarios(args):
        check_dim_cap(s, args.dim_cap)
        beta_l = local_bound(s, cap=args.cap, shards=args.shards, with_quantum=False).beta_local
        points = visibility_sweep(s, grid, beta_l)
        v_crit = critical_visibility(points, beta_l)
        rows.append({"N": s.N, "m": s.m, "d": s.d, "beta_local": beta_l,
                     "beta_q": points[-1].value, "critical_visibility": v_crit,
                     "points": [{"v": p.v, "value": p.value, "violates": p.violates} for p in points]})
    return rows, EXIT_OK


COMMANDS = {"quantum-value": cmd_quantum_value, "local-bound": cmd_local_bound, "verify": cmd_verify,
            "eval-table": cmd_eval_table, "robustness": cmd_robustness}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, default=2, help="number of parties")
    common.add_argument("--m", type=int, default=2, help="inputs per party")
    common.add_argument("--d", type=int, default=2, help="outcomes per input")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--grid", help='list of scenarios, e.g. "2,2,2;3,2,2"')
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", help="write the report to this file instead of stdout")
    common.add_argument("--seed", type=int, default=0, help="seed for random-observable sampling")
    common.add_argument("--shards", type=int, default=1, help="worker processes for enumeration")
    common.add_argument("--cap", type=int, default=DEFAULT_STRATEGY_CAP, help="strategy enumeration cap")
    common.add_argument("--dim-cap", type=int, default=DEFAULT_DIM_CAP, help="Hilbert space dimension cap")
    parser = argparse.ArgumentParser(prog="ghz-selftest", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("quantum-value", parents=[common], help="quantum value of the ideal realization")
    lb = sub.add_parser("local-bound", parents=[common], help="exhaustive classical bound")
    lb.add_argument("--zero-coefficients", action="store_true", help=argparse.SUPPRESS)
    ver = sub.add_parser("verify", parents=[common], help="full verification suite")
    ver.add_argument("--draws", type=int, default=3, help="random-observable draws for the SOS identity")
    ver.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    ev = sub.add_parser("eval-table", parents=[common], help="Bell value of a probability table file")
    ev.add_argument("path")
    rob = sub.add_parser("robustness", parents=[common], help="white-noise visibility sweep")
    rob.add_argument("--points", type=int, default=11, help="number of visibilities in [0, 1]")
    return parser


def render(command: str, rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        payload = {"schema": SCHEMA, "command": command, "results": _jsonable(rows)}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    flat = [{k: json.dumps(_jsonable(v)) if isinstance(v, (list, dict)) else v for k, v in row.items()}
            for row in rows]
    writer = csv.DictWriter(buf, fieldnames=list(flat[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(flat)
    return buf.getvalue()


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if not args.tol > 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        rows, code = COMMANDS[args.command](args)
    except ResourceCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = render(args.command, rows, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return code
