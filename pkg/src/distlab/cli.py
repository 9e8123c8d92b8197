"""Command-line front door: generate, verify, discriminate, and report.

Every subcommand writes one JSON report to stdout (schema version "1") and a
one-line human summary to stderr.  Reports embed a run manifest with content
digests of the input files; with SOURCE_DATE_EPOCH set, repeated runs are
byte-identical.  Exit codes: 0 pass, 1 failed check, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .discrimination import (
    check_perfect,
    check_unambiguous,
    harness_from_json,
    harness_to_json,
    local_global_fuzz,
    theorem1_ppt_invariance,
    verdict_from_json,
    verdict_to_json,
)
from .linalg import DEFAULT_TOL
from .povm import (
    Locc1Tree,
    counterexample_c4,
    flatten_locc1,
    is_ppt_povm,
    is_projective,
    locc1_from_json,
    povm_from_json,
    povm_to_json,
    ppt_min_eigenvalue,
    restrict_povm,
    verify_locc1,
    verify_povm,
    verify_sep,
)
from .sdp import SolveOptions, problem_from_json, solution_from_json, solution_to_json, solve
from .states import (
    bell_states,
    domino_states,
    extended_domino_basis,
    generalized_bell_states,
    state_set_from_json,
    state_set_to_json,
)

SCHEMA_VERSION = "1"

PAYLOAD_PARSERS = {
    "state_set": state_set_from_json,
    "povm": povm_from_json,
    "verdict": verdict_from_json,
    "harness": harness_from_json,
    "sdp_solution": solution_from_json,
    "verification": dict,
    "theorem1": dict,
    "counterexample": dict,
}


class CliError(Exception):
    """Usage or input problem: maps to exit code 2."""


def _default_tol() -> float:
    raw = os.environ.get("DISTLAB_TOL")
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError as exc:
        raise CliError(f"DISTLAB_TOL is not a number: {raw!r}") from exc


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = float(epoch) if epoch is not None else time.time()
    return datetime.fromtimestamp(moment, tz=timezone.utc).isoformat()


def _parse_dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise CliError(f"bad dimension list {text!r}") from exc
    if not dims or any(d < 1 for d in dims):
        raise CliError(f"bad dimension list {text!r}")
    return dims


def _load_json(path: str, digests: dict) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    digests[path] = hashlib.sha256(raw).hexdigest()
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed JSON in {path}: {exc}") from exc


def _report(command: str, argv: list[str], payload_kind: str, payload, manifest_extra: dict) -> dict:
    started = manifest_extra.pop("started_at")
    return {
        "schema_version": SCHEMA_VERSION,
        "payload_kind": payload_kind,
        "payload": payload,
        "manifest": {
            "command": command,
            "arguments": list(argv),
            "seed": manifest_extra.pop("seed", None),
            "tool_version": __version__,
            "input_digests": manifest_extra.pop("input_digests"),
            "started_at": started,
            "finished_at": _timestamp(),
        },
    }


def parse_report(obj: dict):
    """Validate a report and parse the payload back into its domain type."""
    if not isinstance(obj, dict):
        raise ValueError("report must be a JSON object")
    unknown = set(obj) - {"schema_version", "payload_kind", "payload", "manifest"}
    if unknown:
        raise ValueError(f"unknown report fields {sorted(unknown)}")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unknown schema version {obj.get('schema_version')!r}")
    kind = obj.get("payload_kind")
    if kind not in PAYLOAD_PARSERS:
        raise ValueError(f"unknown payload kind {kind!r}")
    return kind, PAYLOAD_PARSERS[kind](obj["payload"])


def summarize(report: dict) -> str:
    """One deterministic human-readable line (6 significant digits)."""
    if report.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unknown schema version {report.get('schema_version')!r}")
    kind = report["payload_kind"]
    p = report["payload"]
    if kind == "state_set":
        return f"STATES: {len(p['states'])} states in ({', '.join(str(d) for d in p['dims'])})"
    if kind == "povm":
        return f"POVM: {len(p['elements'])} elements in ({', '.join(str(d) for d in p['dims'])})"
    if kind == "verdict":
        status = "PASS" if p["passes"] else "FAIL"
        return f"{p['mode'].upper()} DISCRIMINATION: {status} (success {p['success_probability']:.6f})"
    if kind == "harness":
        total = p["trials"] * len(p["kinds"])
        if p["passes"]:
            return f"FUZZ: {total}/{total} OK"
        return f"FUZZ: {len(p['failures'])} failures in {total} trials"
    if kind == "sdp_solution":
        return f"SDP: {p['status']} value {p['objective_value']:.6f} ({p['iterations']} iterations)"
    if kind == "verification":
        status = "PASS" if p["passed"] else "FAIL"
        res = p["completeness_residual"]
        res_text = f"{res:.6g}" if isinstance(res, (int, float)) else "n/a"
        return f"VERIFY {p['kind']}: {status} (completeness {res_text})"
    if kind == "theorem1":
        return (
            f"THEOREM1: opt {p['opt_small']:.6f} -> {p['opt_big']:.6f} "
            f"(delta {p['delta']:.6f})"
        )
    if kind == "counterexample":
        return (
            f"COUNTEREXAMPLE: projective={p['projective']}, "
            f"restriction projective={p['restriction_projective']}"
        )
    raise ValueError(f"unknown payload kind {kind!r}")


def _cmd_gen(args, digests):
    family = args.family
    if family == "bell":
        states = bell_states()
    elif family == "gbell":
        dims = _parse_dims(args.dims or "")
        if len(dims) != 2 or dims[0] != dims[1]:
            raise CliError("gbell needs square dims d,d")
        states = generalized_bell_states(dims[0])
    elif family == "domino":
        states = domino_states()
    elif family == "domino-ext":
        dims = _parse_dims(args.dims or "")
        if len(dims) != 2:
            raise CliError("domino-ext needs dims m,n")
        try:
            states = extended_domino_basis(*dims)
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown family {family!r}")
    return 0, "state_set", state_set_to_json(states)


def _load_povm_or_tree(path: str, digests: dict):
    obj = _load_json(path, digests)
    try:
        if isinstance(obj, dict) and "root" in obj:
            return locc1_from_json(obj)
        return povm_from_json(obj)
    except (ValueError, KeyError, TypeError) as exc:
        raise CliError(f"bad POVM file {path}: {exc}") from exc


def _cmd_verify(args, digests):
    tol = args.tol if args.tol is not None else _default_tol()
    loaded = _load_povm_or_tree(args.povm, digests)
    details: dict = {}
    if args.kind == "locc1":
        if not isinstance(loaded, Locc1Tree):
            raise CliError("kind locc1 expects a measurement-tree JSON file")
        tree_valid = verify_locc1(loaded, tol)
        povm = flatten_locc1(loaded, tol) if tree_valid else None
        details["tree_valid"] = tree_valid
        if povm is None:
            payload = {
                "kind": args.kind,
                "passed": False,
                "completeness_residual": float("nan"),
                "min_eigenvalue": float("nan"),
                "details": details,
            }
            return 1, "verification", payload
    else:
        if not hasattr(loaded, "elements"):
            raise CliError(f"kind {args.kind} expects a POVM JSON file")
        povm = loaded
    report = verify_povm(povm, tol)
    passed = report.passed
    try:
        if args.kind == "projective":
            details["projective"] = passed and is_projective(povm, tol)
            passed = details["projective"]
        elif args.kind == "ppt":
            cut = _parse_dims(args.cut) if args.cut else None
            details["ppt"] = passed and is_ppt_povm(povm, partition=cut, tol=tol)
            details["min_pt_eigenvalue"] = ppt_min_eigenvalue(povm) if passed else float("nan")
            passed = details["ppt"]
        elif args.kind == "sep":
            details["sep_witness_ok"] = passed and verify_sep(povm, tol)
            passed = details["sep_witness_ok"]
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    payload = {
        "kind": args.kind,
        "passed": bool(passed),
        "completeness_residual": report.completeness_residual,
        "min_eigenvalue": min(report.element_min_eigs),
        "details": details,
    }
    return (0 if passed else 1), "verification", payload


def _cmd_discriminate(args, digests):
    tol = args.tol if args.tol is not None else _default_tol()
    states = state_set_from_json(_load_json(args.states, digests))
    loaded = _load_povm_or_tree(args.povm, digests)
    povm = flatten_locc1(loaded) if not hasattr(loaded, "elements") else loaded
    try:
        if args.mode == "perfect":
            verdict = check_perfect(povm, states, tol)
        else:
            inconclusive = [int(x) for x in args.inconclusive.split(",")] if args.inconclusive else []
            verdict = check_unambiguous(povm, states, inconclusive, tol)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return (0 if verdict.passes else 1), "verdict", verdict_to_json(verdict)


def _cmd_sdp(args, digests):
    try:
        problem = problem_from_json(_load_json(args.problem, digests))
    except ValueError as exc:
        raise CliError(f"bad SDP problem in {args.problem}: {exc}") from exc
    opts = SolveOptions(tol=args.tol if args.tol is not None else 1e-6, max_iter=args.max_iter)
    sol = solve(problem, opts)
    return (0 if sol.status == "optimal" else 1), "sdp_solution", solution_to_json(sol)


def _cmd_theorem1(args, digests):
    states = state_set_from_json(_load_json(args.states, digests))
    new_dims = _parse_dims(args.new_dims)
    try:
        result = theorem1_ppt_invariance(states, new_dims)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    ok = (
        result.small.solution.status == "optimal"
        and result.big.solution.status == "optimal"
        and abs(result.delta) <= args.delta_tol
    )
    payload = {
        "opt_small": result.opt_small,
        "opt_big": result.opt_big,
        "delta": result.delta,
        "delta_tol": args.delta_tol,
        "distinguishable_small": result.small.distinguishable,
        "distinguishable_big": result.big.distinguishable,
        "status_small": result.small.solution.status,
        "status_big": result.big.solution.status,
    }
    return (0 if ok else 1), "theorem1", payload


def _cmd_fuzz(args, digests):
    tol = args.tol if args.tol is not None else _default_tol()
    if args.states:
        states = state_set_from_json(_load_json(args.states, digests))
    else:
        states = bell_states().subset([0, 1, 2])
    new_dims = _parse_dims(args.new_dims)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    if not kinds:
        raise CliError("at least one kind required")
    try:
        report = local_global_fuzz(states, kinds, new_dims, args.trials, args.seed, tol)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    return (0 if report.passes else 1), "harness", harness_to_json(report)


def _cmd_counterexample(args, digests):
    povm = counterexample_c4()
    projective = is_projective(povm, 1e-12)
    restriction = restrict_povm(povm, (3,))
    restriction_valid = verify_povm(restriction, 1e-12).passed
    restriction_projective = is_projective(restriction, 1e-9)
    b1 = sorted(float(x) for x in np.linalg.eigvalsh(restriction.elements[0]))
    payload = {
        "povm": povm_to_json(povm),
        "projective": projective,
        "restriction": povm_to_json(restriction),
        "restriction_valid": restriction_valid,
        "restriction_projective": restriction_projective,
        "restriction_first_eigenvalues": b1,
    }
    ok = projective and restriction_valid and not restriction_projective
    return (0 if ok else 1), "counterexample", payload


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="distlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a state family")
    p.add_argument("--family", required=True, choices=["bell", "gbell", "domino", "domino-ext"])
    p.add_argument("--dims", help="comma-separated local dimensions, e.g. 3,3")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("verify", help="verify a POVM file against a kind")
    p.add_argument("--povm", required=True)
    p.add_argument("--kind", default="general", choices=["general", "projective", "ppt", "sep", "locc1"])
    p.add_argument("--cut", help="party subset for PPT, e.g. 0 or 0,2")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("discriminate", help="check a POVM against a state set")
    p.add_argument("--states", required=True)
    p.add_argument("--povm", required=True)
    p.add_argument("--mode", default="perfect", choices=["perfect", "unambiguous"])
    p.add_argument("--inconclusive", help="comma-separated outcome indices")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=_cmd_discriminate)

    p = sub.add_parser("sdp", help="solve an SDP problem file")
    p.add_argument("--problem", required=True)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int, default=50000)
    p.set_defaults(func=_cmd_sdp)

    p = sub.add_parser("theorem1", help="PPT optimum before and after embedding")
    p.add_argument("--states", required=True)
    p.add_argument("--new-dims", required=True)
    p.add_argument("--delta-tol", type=float, default=2e-3)
    p.set_defaults(func=_cmd_theorem1)

    p = sub.add_parser("fuzz", help="sampled restriction harness")
    p.add_argument("--kinds", required=True, help="comma-separated kinds, e.g. locc1,sep,ppt")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--states", help="state-set JSON (default: three Bell states)")
    p.add_argument("--new-dims", default="3,3")
    p.add_argument("--tol", type=float)
    p.set_defaults(func=_cmd_fuzz)

    p = sub.add_parser("counterexample", help="the projectivity-breaking restriction fixture")
    p.set_defaults(func=_cmd_counterexample)

    return parser


def _jsonable(obj):
    """Strict-JSON copy: non-finite floats become null."""
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def run(argv: list[str]) -> int:
    """Execute one subcommand; print the JSON report to stdout, summary to stderr."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage diagnostic
        return int(exc.code or 0)
    digests: dict = {}
    started = _timestamp()
    seed = getattr(args, "seed", None)
    try:
        code, payload_kind, payload = args.func(args, digests)
    except CliError as exc:
        print(f"distlab: error: {exc}", file=sys.stderr)
        return 2
    report = _report(
        args.command,
        argv,
        payload_kind,
        _jsonable(payload),
        {"started_at": started, "seed": seed, "input_digests": digests},
    )
    sys.stdout.write(json.dumps(report, separators=(",", ":"), allow_nan=False) + "\n")
    print(summarize(report), file=sys.stderr)
    return code


def main() -> None:  # pragma: no cover - console entry point
    sys.exit(run(sys.argv[1:]))
