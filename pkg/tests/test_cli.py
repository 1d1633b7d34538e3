import json

import numpy as np
import pytest

from ncca.cli import main
from ncca.conservation import extract_params, materialize
from ncca.formats import (
    FormatError,
    config_from_json,
    load_rules,
    rule_from_json,
    rule_to_json,
)
from ncca.rules import DenseRule, identity_rule, shift_rule, traffic_rule

from conftest import Q01, Q012


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        p.write_text(json.dumps(obj))
        return str(p)

    return write


def test_rule_json_round_trip():
    for f in [identity_rule(2, Q012), traffic_rule(3, 2)]:
        assert rule_from_json(rule_to_json(f)) == f
        P = extract_params(f, eta=1)
        assert rule_from_json(json.loads(json.dumps(rule_to_json(P)))) == P


def test_parametric_shift_has_one_monomer_family():
    obj = rule_to_json(extract_params(shift_rule(2, Q012, 2)))
    assert {k: v for k, v in obj["monomers"].items() if v} == {"-1:1": 1, "-1:2": 2}
    assert obj["eta"] == "0"
    assert obj["lambda"] == [["0", "+1"], ["0", "+2"], ["+1", "+2"], ["+1", "-2"]]


def test_format_rejections():
    good = rule_to_json(identity_rule(1, Q01))
    with pytest.raises(FormatError):
        rule_from_json({**good, "extra": 1})
    with pytest.raises(FormatError):
        rule_from_json({**good, "kind": "sparse"})
    with pytest.raises(FormatError):
        rule_from_json({k: v for k, v in good.items() if k != "table"})
    with pytest.raises(FormatError):
        rule_from_json({**good, "table": [0.5] * 8})
    with pytest.raises(FormatError):
        config_from_json({"shape": [5], "cells": [0] * 5, "x": 1})
    with pytest.raises(FormatError):
        config_from_json({"shape": [4], "cells": [0] * 4})
    p = rule_to_json(extract_params(identity_rule(2, Q01)))
    with pytest.raises(FormatError):
        rule_from_json({**p, "monomers": {**p["monomers"], "bad": 1}})


def test_dimer_keys_accept_either_order():
    p = rule_to_json(extract_params(traffic_rule(2, 1)))
    flipped = {}
    for k, v in p["dimers"].items():
        a, b = k.split(",")
        flipped[f"{b},{a}"] = v
    assert rule_from_json({**p, "dimers": flipped}) == rule_from_json(p)


def test_check(capsys, files):
    code, rep = run(capsys, "check", "--rule", files("id.json", rule_to_json(identity_rule(2, Q01))))
    assert code == 0 and rep["result"]["status"] == "conserving" and rep["result"]["witness"] is None
    assert len(next(iter(rep["inputs"].values()))) == 64
    xor = DenseRule.from_function(2, Q01, lambda N: N[0] ^ N[1])
    code, rep = run(capsys, "check", "--rule", files("x.json", rule_to_json(xor)))
    assert code == 1 and rep["result"]["status"] == "violated" and rep["result"]["witness"]
    code, rep = run(capsys, "check", "--rule", files("t.json", rule_to_json(traffic_rule(2, 1))),
                    "--eta", "+2", "--lambda", "0,+1;0,-2;-1,-2;+1,-2")
    assert code == 0


def test_enumerate_and_recheck_catalog(capsys, tmp_path):
    code, rep = run(capsys, "enumerate", "--dim", "2", "--states", "0,1", "--count-only")
    assert code == 0 and rep["result"]["count"] == 9
    out = tmp_path / "cat.jsonl"
    code, rep = run(capsys, "enumerate", "--dim", "2", "--states", "0,1", "--out", str(out), "--threads", "2")
    assert rep["result"]["summary"]["traffic"] == 4
    lines = out.read_text().splitlines()
    assert len(lines) == 10 and "summary" in json.loads(lines[-1])
    assert all("labels" in json.loads(x) for x in lines[:-1])
    code, rep = run(capsys, "check", "--rule", str(out))
    assert code == 0 and rep["result"]["conserving"] == 9
    code, rep = run(capsys, "classify", "--rule", str(out))
    assert len(rep["result"]["labels"]) == 9
    assert [r for r, _ in load_rules(out)][0].d == 2


def test_enumerate_refuses_large_estimate(capsys):
    code, rep = run(capsys, "enumerate", "--dim", "2", "--states", "0,1,2", "--max-estimate", "10")
    assert code == 2 and rep["error"]["code"] == "too-large"
    assert rep["error"]["search_space"]["dimer_parameters"] == 16
    code, rep = run(capsys, "enumerate", "--dim", "8", "--states", "0,1,2,3", "--count-only")
    assert code == 2


def test_convert_round_trip(capsys, files, tmp_path):
    src = files("t.json", rule_to_json(traffic_rule(2, 3)))
    par = tmp_path / "p.json"
    code, _ = run(capsys, "convert", "--rule", src, "--to", "parametric", "--out", str(par))
    assert code == 0
    code, rep = run(capsys, "convert", "--rule", str(par), "--to", "dense")
    assert rule_from_json(rep["result"]["rule"]) == traffic_rule(2, 3)
    xor = DenseRule.from_function(2, Q01, lambda N: N[0] ^ N[1])
    code, rep = run(capsys, "convert", "--rule", files("x.json", rule_to_json(xor)), "--to", "parametric")
    assert code == 1 and rep["error"]["witness"]


def test_simulate_and_oracle(capsys, files):
    rule = files("s.json", rule_to_json(shift_rule(2, Q01, 2)))
    cfg = files("c.json", {"shape": [5, 5], "cells": [1, 1] + [0] * 23})
    code, rep = run(capsys, "simulate", "--rule", rule, "--config", cfg, "--steps", "5")
    assert code == 0 and rep["result"]["sigma"] == [2] * 6
    assert rep["result"]["final"]["cells"] == [1, 1] + [0] * 23
    code, rep = run(capsys, "oracle", "--rule", rule, "--mode", "finite-support")
    assert code == 0
    code, rep = run(capsys, "oracle", "--rule", rule, "--mode", "sampled", "--shape", "5,5", "--samples", "50")
    assert code == 0 and rep["result"]["seed"] == 0
    code, rep = run(capsys, "oracle", "--rule", rule, "--mode", "exhaustive", "--shape", "5,6")
    assert code == 2 and rep["error"]["code"] == "budget-exceeded"


def test_deterministic_payload(capsys, files):
    rule = files("t.json", rule_to_json(traffic_rule(2, 1)))
    _, a = run(capsys, "oracle", "--rule", rule, "--mode", "sampled", "--seed", "4", "--samples", "20")
    _, b = run(capsys, "oracle", "--rule", rule, "--mode", "sampled", "--seed", "4", "--samples", "20")
    assert a["result"] == b["result"]


def test_usage_errors(capsys, files, tmp_path):
    assert run(capsys, "nope")[0] == 2
    assert run(capsys, "check")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, rep = run(capsys, "check", "--rule", str(bad))
    assert code == 2 and rep["error"]["code"] == "malformed-input"
    code, rep = run(capsys, "check", "--rule", str(tmp_path / "missing.json"))
    assert code == 2 and rep["error"]["code"] == "io"
    rule = files("i.json", rule_to_json(identity_rule(3, Q01)))
    cfg = files("c.json", {"shape": [5, 5], "cells": [0] * 25})
    code, rep = run(capsys, "simulate", "--rule", rule, "--config", cfg)
    assert code == 2
