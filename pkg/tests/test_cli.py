import json
import re
import subprocess
import sys

import jsonschema
import pytest

from dpnsound.cg import build_cg
from dpnsound.cli import main
from dpnsound.dds import dpn_to_dds
from dpnsound.dot import cg_to_dot, dds_to_dot
from dpnsound.dpn import DPN, Marking
from dpnsound.pnml import load_pnml, to_pnml
from dpnsound.report import REPORT_SCHEMA, strip_timing

from conftest import FIXTURES, model_path

EXIT = {"auction": 2, "auction_reset": 2, "auction_thresh": 2, "road_fines": 2, "sound_trivial": 0}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def nodes_edges(dot):
    nodes = re.findall(r"^\s*[ns]\d+ \[", dot, re.M)
    edges = re.findall(r"^\s*[ns]\d+ -> [ns]\d+", dot, re.M)
    return nodes, edges


@pytest.mark.parametrize("name", FIXTURES)
def test_exit_codes_and_schema(capsys, name):
    code, out, _ = run(capsys, "check", model_path(name), "--json", "-")
    assert code == EXIT[name]
    data = json.loads(out)
    jsonschema.validate(data, REPORT_SCHEMA)
    assert data["sound"] == (code == 0)
    # output flags never change the exit code
    assert run(capsys, "check", model_path(name), "-q")[0] == code


def test_auction_text(capsys):
    code, out, _ = run(capsys, "check", model_path("auction"))
    assert code == 2
    assert "P1" in out and "--init[" in out and "--timer[" in out


def test_report_fields(capsys):
    data = json.loads(run(capsys, "check", model_path("sound_trivial"), "--json", "-")[1])
    assert data["witness"] is None and data["violated"] is None
    data = json.loads(run(capsys, "check", model_path("auction_reset"), "--json", "-")[1])
    assert data["deadTransitions"] == ["reset"] and data["violated"] == "P3"
    data = json.loads(run(capsys, "check", model_path("auction"), "--json", "-")[1])
    assert [s["transition"] for s in data["witness"]] == ["init", "timer"]
    assert data["sizes"]["cg"] == [6, 10]


def test_json_deterministic(capsys):
    a = json.loads(run(capsys, "check", model_path("auction"), "--json", "-")[1])
    b = json.loads(run(capsys, "check", model_path("auction"), "--json", "-")[1])
    assert strip_timing(a) == strip_timing(b)


def test_dot_auction(capsys, tmp_path):
    out = tmp_path / "cg.dot"
    dds = tmp_path / "dds.dot"
    assert run(capsys, "check", model_path("auction"), "-q", "--dot-cg", out, "--dot-dds", dds)[0] == 2
    text = out.read_text()
    nodes, edges = nodes_edges(text)
    assert len(nodes) == 6 and len(edges) == 10
    assert len(re.findall(r'label="p3 \|[^"]*", peripheries=2', text)) == 1
    assert len(nodes_edges(dds.read_text())[0]) == 3


def test_dot_thresh_violating_nodes(capsys):
    text = run(capsys, "check", model_path("auction_thresh"), "-q", "--dot-cg", "-")[1]
    red = re.findall(r'label="([^|"]*) \|[^"]*", style=filled, fillcolor=red', text)
    assert red == ["p2,p3", "p2,p3"]


def test_dot_single_node(gw, capsys, tmp_path):
    net = DPN.build(["p"], [], [], [], Marking({"p": 1}), Marking({"p": 1}), check=False)
    dds = dpn_to_dds(net)
    for text in (dds_to_dot(dds), cg_to_dot(build_cg(dds, gw), dds.final)):
        nodes, edges = nodes_edges(text)
        assert len(nodes) == 1 and not edges
    # the command line validates nets first, and a net needs at least one transition
    path = tmp_path / "one.pnml"
    path.write_text(to_pnml(net))
    code, _, err = run(capsys, "check", path)
    assert code == 1 and "EmptyTransitions" in err


def test_mutate_and_check(capsys, tmp_path):
    out = tmp_path / "vars.pnml"
    assert run(capsys, "mutate", "vars", model_path("auction"), "-n", "2", "-o", out)[0] == 0
    net = load_pnml(out)
    assert len(net.variables) > 2
    assert run(capsys, "check", out, "-q")[0] == 2
    code, text, _ = run(capsys, "mutate", "states", model_path("auction"), "-n", "3")
    assert code == 0 and "seq_p3" in text


def test_oracle_command(capsys):
    code, out, _ = run(capsys, "oracle", model_path("auction"), "--box", "o=0..2,t=0..2")
    assert code == 2 and "P1" in out
    assert run(capsys, "oracle", model_path("sound_trivial"))[0] == 0


@pytest.mark.parametrize("argv", [
    [], ["check"], ["check", "x.pnml", "--bound", "0"], ["bogus"], ["mutate", "vars", "x", "-n", "-1"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 1 and "error" in err


def test_runtime_errors(capsys, tmp_path):
    code, _, err = run(capsys, "check", tmp_path / "missing.pnml")
    assert code == 1 and "dpnsound: error" in err
    bad = tmp_path / "bad.pnml"
    bad.write_text("<pnml><net>")
    assert run(capsys, "check", bad)[0] == 1
    assert run(capsys, "check", model_path("auction"), "--solver", tmp_path / "nope")[0] == 1
    assert run(capsys, "oracle", model_path("auction"), "--box", "q=0..1")[0] == 1


def test_budget_is_inconclusive(capsys):
    code, out, err = run(capsys, "check", model_path("road_fines"), "--budget", "3")
    assert code == 1 and "inconclusive" in out and "BudgetExceeded" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "dpnsound", "check", str(model_path("sound_trivial")), "-q"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
