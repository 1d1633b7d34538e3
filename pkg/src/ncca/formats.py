"""JSON encodings of rules, torus configurations and catalogs.

Rule files::

    {"dimension": 2, "states": [0, 1], "kind": "dense", "table": [...]}
    {"dimension": 2, "states": [0, 1], "kind": "parametric", "eta": "0",
     "lambda": [["0", "+1"], ...], "monomers": {"+1:1": 0, ...},
     "dimers": {"0:1,+1:1": 1, ...}}

Catalog files hold one dense rule per line with an extra ``"labels"`` list,
followed by one ``{"summary": {...}}`` line.  Unknown keys are rejected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator

from .lattice import LatticeShape, direction_label, parse_direction, validate_lambda
from .rules import DenseRule, ParametricRule, Rule, RuleError, StateSet
from .simulate import TorusConfiguration


class FormatError(RuleError):
    pass


_COMMON = {"dimension", "states", "kind"}
_DENSE = _COMMON | {"table"}
_PARAMETRIC = _COMMON | {"eta", "lambda", "monomers", "dimers"}


def _require(obj: dict, allowed: set, required: set, what: str) -> None:
    if not isinstance(obj, dict):
        raise FormatError(f"{what} must be a JSON object")
    extra = set(obj) - allowed
    if extra:
        raise FormatError(f"unknown keys in {what}: {sorted(extra)}")
    missing = required - set(obj)
    if missing:
        raise FormatError(f"missing keys in {what}: {sorted(missing)}")


def _int(x: Any, what: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise FormatError(f"{what} must be an integer, got {x!r}")
    return x


def _int_list(xs: Any, what: str) -> list[int]:
    if not isinstance(xs, list):
        raise FormatError(f"{what} must be a list")
    return [_int(x, what) for x in xs]


def _monomer_key(text: str, d: int) -> tuple[int, int]:
    try:
        v, q = text.split(":")
        return parse_direction(v, d), int(q)
    except ValueError as exc:
        raise FormatError(f"malformed monomer key {text!r}: {exc}") from None


def _dimer_key(text: str, d: int) -> tuple[int, int, int, int]:
    try:
        left, right = text.split(",")
        u, p = _monomer_key(left, d)
        w, q = _monomer_key(right, d)
    except ValueError:
        raise FormatError(f"malformed dimer key {text!r}") from None
    return (u, p, w, q) if u < w else (w, q, u, p)


def rule_from_json(obj: dict, *, extra_keys: Iterable[str] = ()) -> Rule:
    extra = set(extra_keys)
    if not isinstance(obj, dict):
        raise FormatError("a rule must be a JSON object")
    kind = obj.get("kind")
    if kind == "dense":
        _require(obj, _DENSE | extra, _DENSE, "dense rule")
    elif kind == "parametric":
        _require(obj, _PARAMETRIC | extra, _PARAMETRIC, "parametric rule")
    else:
        raise FormatError(f"rule kind must be 'dense' or 'parametric', got {kind!r}")
    d = _int(obj["dimension"], "dimension")
    Q = StateSet(tuple(_int_list(obj["states"], "states")))
    if kind == "dense":
        return DenseRule(d, Q, _int_list(obj["table"], "table"))

    if not isinstance(obj["eta"], str):
        raise FormatError("eta must be a direction string")
    eta = parse_direction(obj["eta"], d)
    lam_raw = obj["lambda"]
    if not isinstance(lam_raw, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(s, str) for s in p) for p in lam_raw
    ):
        raise FormatError("lambda must be a list of direction-string pairs")
    lam = validate_lambda([tuple(parse_direction(s, d) for s in p) for p in lam_raw], d)
    for name in ("monomers", "dimers"):
        if not isinstance(obj[name], dict):
            raise FormatError(f"{name} must be a JSON object")
    monomers = {_monomer_key(k, d): _int(v, "monomer value") for k, v in obj["monomers"].items()}
    dimers = {_dimer_key(k, d): _int(v, "dimer value") for k, v in obj["dimers"].items()}
    return ParametricRule(d, Q, monomers, dimers, eta, lam)


def rule_to_json(f: Rule) -> dict:
    out: dict = {"dimension": f.d, "states": list(f.states.states)}
    if isinstance(f, DenseRule):
        out["kind"] = "dense"
        out["table"] = f.table.tolist()
        return out
    out["kind"] = "parametric"
    out["eta"] = direction_label(f.eta)
    out["lambda"] = [[direction_label(u), direction_label(w)] for u, w in f.lam]
    out["monomers"] = {
        f"{direction_label(v)}:{q}": x for (v, q), x in sorted(f.monomers.items())
    }
    out["dimers"] = {
        f"{direction_label(u)}:{p},{direction_label(w)}:{q}": x
        for (u, p, w, q), x in sorted(f.dimers.items())
    }
    return out


def config_from_json(obj: dict) -> TorusConfiguration:
    _require(obj, {"shape", "cells"}, {"shape", "cells"}, "configuration")
    try:
        shape = LatticeShape(tuple(_int_list(obj["shape"], "shape")))
        return TorusConfiguration(shape, _int_list(obj["cells"], "cells"))
    except ValueError as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc)) from None


def config_to_json(x: TorusConfiguration) -> dict:
    return {"shape": list(x.shape.dims), "cells": x.cells.tolist()}


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def load_rule(path: str | Path) -> Rule:
    return rule_from_json(read_json(path))


def load_rules(path: str | Path) -> Iterator[tuple[Rule, list[str] | None]]:
    """Rules from a single rule file or a catalog (JSON Lines) file."""
    text = Path(path).read_text()
    try:
        single = json.loads(text)
    except json.JSONDecodeError:
        single = None
    if isinstance(single, dict):
        if "summary" in single:
            return
        yield rule_from_json(single, extra_keys={"labels"}), single.get("labels")
        return
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{n}: invalid JSON ({exc})") from None
        if isinstance(obj, dict) and set(obj) == {"summary"}:
            continue
        yield rule_from_json(obj, extra_keys={"labels"}), obj.get("labels")


def catalog_line(f: DenseRule, labels: list[str] | None) -> str:
    obj = rule_to_json(f)
    if labels is not None:
        obj["labels"] = labels
    return json.dumps(obj, separators=(",", ":"))


def summary_line(summary: dict) -> str:
    return json.dumps({"summary": summary}, separators=(",", ":"), sort_keys=True)
