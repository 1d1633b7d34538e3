"""Command-line interface.

Every subcommand prints one JSON report on standard output.  Exit status is
0 on success or a conserving verdict, 1 for a decided violation and 2 when
the input is malformed or a budget prevents a decision.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from importlib import metadata
from pathlib import Path

from . import enumeration as en
from .conservation import MaterializeError, extract_params, is_number_conserving, materialize
from .formats import (
    FormatError,
    catalog_line,
    config_from_json,
    config_to_json,
    load_rule,
    load_rules,
    read_json,
    rule_to_json,
    summary_line,
)
from .lattice import LatticeShape, parse_direction
from .rules import DenseRule, ParametricRule, RuleError, StateSet
from .simulate import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    exhaustive_oracle,
    finite_support_oracle,
    global_step,
    sampled_oracle,
    sigma,
)

EXIT_OK, EXIT_VIOLATED, EXIT_ERROR = 0, 1, 2


class CliError(Exception):
    def __init__(self, code: str, message: str, payload: dict | None = None):
        super().__init__(message)
        self.code = code
        self.payload = payload or {}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # report usage errors as JSON, exit 2
        raise CliError("usage", message)


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _lambda_arg(text: str | None, d: int):
    """``"0,+1;0,+2;..."`` to a list of direction pairs."""
    if text is None:
        return None
    pairs = []
    for chunk in text.split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise CliError("usage", f"malformed lambda pair {chunk!r}")
        pairs.append(tuple(parse_direction(p, d) for p in parts))
    return pairs


def _shape_arg(text: str) -> LatticeShape:
    try:
        return LatticeShape(tuple(int(t) for t in text.split(",")))
    except ValueError as exc:
        raise CliError("usage", f"bad shape {text!r}: {exc}") from None


def _dense(f) -> DenseRule:
    if isinstance(f, DenseRule):
        return f
    try:
        return materialize(f)
    except MaterializeError as exc:
        raise CliError(
            "not-closed", str(exc), {"witness": list(exc.config), "value": exc.value}
        ) from None


# --------------------------------------------------------------------------
# Subcommands; each returns (exit status, result payload, input files)
# --------------------------------------------------------------------------

def cmd_check(args) -> tuple[int, dict, list[str]]:
    results = []
    first_bad = None
    for n, (f, _) in enumerate(load_rules(args.rule)):
        eta = parse_direction(args.eta, f.d) if args.eta else 0
        lam = _lambda_arg(args.lam, f.d)
        if isinstance(f, ParametricRule):
            try:
                f = materialize(f)
            except MaterializeError as exc:
                verdict = {"status": "violated", "witness": list(exc.config),
                           "equation": "reconstruction", "value": exc.value, "reason": exc.reason}
                results.append(verdict)
                first_bad = first_bad if first_bad is not None else n
                continue
        verdict = is_number_conserving(f, eta, lam, workers=args.threads).to_json()
        results.append(verdict)
        if verdict["status"] != "conserving" and first_bad is None:
            first_bad = n
    if not results:
        raise CliError("malformed-rule", "no rule found in input")
    status = EXIT_OK if first_bad is None else EXIT_VIOLATED
    if len(results) == 1:
        return status, results[0], [args.rule]
    payload = {
        "rules": len(results),
        "conserving": sum(r["status"] == "conserving" for r in results),
        "first_violation": None if first_bad is None else {"rule": first_bad, **results[first_bad]},
    }
    return status, payload, [args.rule]


def cmd_enumerate(args) -> tuple[int, dict, list[str]]:
    req = en.EnumerationRequest(
        args.dim,
        StateSet.parse(args.states),
        rotation_symmetric=args.rotation_symmetric,
        passive=args.passive,
        axis_extension_only=args.axis_extension_only,
        count_only=args.count_only,
    )
    space = en.search_space(req)
    estimate = {
        "monomer_parameters": space.monomer_params,
        "dimer_parameters": space.dimer_params,
        "unpruned_candidates": space.unpruned_candidates,
        "monomer_choices": space.monomer_choices,
        "estimate": space.estimate,
    }
    if args.max_estimate is not None and space.estimate > args.max_estimate:
        raise CliError("too-large", "search space estimate exceeds --max-estimate",
                       {"search_space": estimate})
    rules, labels = [], []
    for f, lab in en.enumerate_ncca(req, workers=args.threads):
        rules.append(f)
        labels.append(lab)
    payload: dict = {"count": len(rules), "search_space": estimate}
    if not args.count_only:
        summary = en.summarize(labels)
        payload["summary"] = summary
        lines = [catalog_line(f, lab.tags) for f, lab in zip(rules, labels)]
        lines.append(summary_line(summary))
        if args.out:
            Path(args.out).write_text("\n".join(lines) + "\n")
            payload["out"] = args.out
        else:
            payload["catalog"] = [json.loads(x) for x in lines[:-1]]
    return EXIT_OK, payload, []


def cmd_classify(args) -> tuple[int, dict, list[str]]:
    out = []
    for f, _ in load_rules(args.rule):
        f = _dense(f)
        verdict = is_number_conserving(f, workers=args.threads)
        if not verdict.conserving:
            raise CliError("not-conserving", "only conserving rules can be classified",
                           verdict.to_json())
        out.append(en.classify(f, check=False).tags)
    if not out:
        raise CliError("malformed-rule", "no rule found in input")
    payload = {"labels": out[0]} if len(out) == 1 else {"labels": out}
    return EXIT_OK, payload, [args.rule]


def cmd_simulate(args) -> tuple[int, dict, list[str]]:
    f = _dense(load_rule(args.rule))
    x = config_from_json(read_json(args.config))
    if args.steps < 0:
        raise CliError("usage", "--steps must be non-negative")
    trace = [sigma(x)]
    for _ in range(args.steps):
        x = global_step(f, x)
        trace.append(sigma(x))
    payload = {"steps": args.steps, "sigma": trace, "final": config_to_json(x)}
    return EXIT_OK, payload, [args.rule, args.config]


def cmd_oracle(args) -> tuple[int, dict, list[str]]:
    f = _dense(load_rule(args.rule))
    if args.mode == "finite-support":
        verdict = finite_support_oracle(f)
    else:
        shape = _shape_arg(args.shape) if args.shape else LatticeShape.cube(f.d)
        if args.mode == "exhaustive":
            verdict = exhaustive_oracle(f, shape, budget=args.budget, workers=args.threads)
        else:
            verdict = sampled_oracle(f, shape, args.samples, args.seed)
    payload = {"mode": args.mode, **verdict.to_json()}
    return (EXIT_OK if verdict.conserving else EXIT_VIOLATED), payload, [args.rule]


def cmd_convert(args) -> tuple[int, dict, list[str]]:
    f = load_rule(args.rule)
    if args.to == "dense":
        g = _dense(f)
    else:
        dense = _dense(f)
        verdict = is_number_conserving(dense, workers=args.threads)
        if not verdict.conserving:
            raise CliError("not-conserving", "only conserving rules have a parametric form",
                           verdict.to_json())
        eta = parse_direction(args.eta, f.d) if args.eta else 0
        g = extract_params(dense, eta, _lambda_arg(args.lam, f.d))
    obj = rule_to_json(g)
    payload: dict = {"kind": obj["kind"]}
    if args.out:
        Path(args.out).write_text(json.dumps(obj) + "\n")
        payload["out"] = args.out
    else:
        payload["rule"] = obj
    return EXIT_OK, payload, [args.rule]


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ncca", description="Number-conserving cellular automata toolkit.")
    p.add_argument("--version", action="version", version=_version())
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def threads(sp):
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker cap (default: available CPUs)")

    sp = sub.add_parser("check", help="decide number conservation of a rule or catalog")
    sp.add_argument("--rule", required=True)
    sp.add_argument("--eta", help="leading direction, e.g. 0 or +1")
    sp.add_argument("--lambda", dest="lam", help='pairs like "0,+1;0,+2;+1,+2;+1,-2"')
    threads(sp)
    sp.set_defaults(run=cmd_check)

    sp = sub.add_parser("enumerate", help="list every conserving rule")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--states", required=True, help="comma-separated, e.g. 0,1,2")
    sp.add_argument("--rotation-symmetric", action="store_true")
    sp.add_argument("--passive", action="store_true")
    sp.add_argument("--axis-extension-only", action="store_true")
    sp.add_argument("--count-only", action="store_true")
    sp.add_argument("--max-estimate", type=int, help="refuse larger search spaces")
    sp.add_argument("--out", help="catalog file (JSON Lines)")
    threads(sp)
    sp.set_defaults(run=cmd_enumerate)

    sp = sub.add_parser("classify", help="label a conserving rule")
    sp.add_argument("--rule", required=True)
    threads(sp)
    sp.set_defaults(run=cmd_classify)

    sp = sub.add_parser("simulate", help="iterate the global map")
    sp.add_argument("--rule", required=True)
    sp.add_argument("--config", required=True)
    sp.add_argument("--steps", type=int, default=1)
    sp.set_defaults(run=cmd_simulate)

    sp = sub.add_parser("oracle", help="brute-force conservation check on a torus")
    sp.add_argument("--rule", required=True)
    sp.add_argument("--mode", choices=["exhaustive", "finite-support", "sampled"], required=True)
    sp.add_argument("--shape", help="comma-separated extents (default 5 per axis)")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    threads(sp)
    sp.set_defaults(run=cmd_oracle)

    sp = sub.add_parser("convert", help="convert between dense and parametric rules")
    sp.add_argument("--rule", required=True)
    sp.add_argument("--to", choices=["dense", "parametric"], required=True)
    sp.add_argument("--eta")
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--out")
    threads(sp)
    sp.set_defaults(run=cmd_convert)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    report: dict = {"command": argv, "version": _version()}
    start = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise CliError("usage", "--threads must be at least 1")
        status, payload, inputs = args.run(args)
        report["inputs"] = {p: _digest(p) for p in inputs}
        report["result"] = payload
    except CliError as exc:
        status = EXIT_ERROR if exc.code != "not-conserving" else EXIT_VIOLATED
        report["error"] = {"code": exc.code, "message": str(exc), **exc.payload}
    except BudgetExceeded as exc:
        status = EXIT_ERROR
        report["error"] = {"code": "budget-exceeded", "message": str(exc),
                           "needed": exc.needed, "budget": exc.budget}
    except FormatError as exc:
        status = EXIT_ERROR
        report["error"] = {"code": "malformed-input", "message": str(exc)}
    except (RuleError, ValueError) as exc:
        status = EXIT_ERROR
        report["error"] = {"code": "invalid-input", "message": str(exc)}
    except OSError as exc:
        status = EXIT_ERROR
        report["error"] = {"code": "io", "message": str(exc)}
    report["seconds"] = round(time.perf_counter() - start, 6)
    print(json.dumps(report))
    return status


if __name__ == "__main__":
    sys.exit(main())
