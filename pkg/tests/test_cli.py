import json
import subprocess
import sys

import pytest

from pseudoarc_lab.cli import main
from pseudoarc_lab.serialization import loads, to_json, verify_stamp
from pseudoarc_lab.path_morphisms import from_values


@pytest.fixture
def run(tmp_path, capsys):
    ws = tmp_path / "ws"

    def _run(*argv):
        code = main(["--workspace", str(ws), *argv])
        out = capsys.readouterr()
        lines = [ln for ln in out.out.splitlines() if ln.strip()]
        payload = json.loads(lines[-1]) if lines and lines[-1].startswith("{") else None
        return code, payload, out

    _run.ws = ws
    return _run


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(to_json(obj)))
    return str(path)


def test_gen_tower_is_deterministic(run):
    code, a, _ = run("gen", "tower", "--seed", "4")
    assert code == 0
    code, b, _ = run("gen", "tower", "--seed", "4")
    assert code == 0 and a["hash"] == b["hash"]
    text = (run.ws / "objects" / f"{a['hash']}.json").read_text()
    doc = json.loads(text)
    assert verify_stamp(doc)
    assert doc["kind"] == "tangled_tower"


def test_gen_same_seed_gives_identical_bytes(tmp_path, capsys):
    outs = []
    for k in range(2):
        ws = tmp_path / f"ws{k}"
        assert main(["--workspace", str(ws), "gen", "tangled", "--target", "2", "--seed", "9"]) == 0
        h = json.loads(capsys.readouterr().out)["hash"]
        outs.append((ws / "objects" / f"{h}.json").read_bytes())
    assert outs[0] == outs[1]


def test_root_zero_is_a_usage_error(run):
    code, _, out = run("gen", "tower", "--root", "0")
    assert code == 1
    assert "--root" in out.err


def test_unknown_command_is_a_usage_error(run):
    code, _, _ = run("frobnicate")
    assert code == 1


def test_missing_file_is_a_usage_error(run):
    code, _, _ = run("check", "morphism", "nope.json")
    assert code == 1


def test_deep_tower_is_a_resource_error(run):
    code, _, out = run("gen", "tower", "--depth", "3")
    assert code == 2
    assert "resource limit" in out.err


def test_check_morphism_pass_and_fail(run, tmp_path):
    good = _write(tmp_path, "good.json", from_values([0, 1, 2, 1], 2))
    code, rep, _ = run("check", "morphism", good)
    assert code == 0 and rep["pass"]
    code, rep, _ = run("check", "tangled", good)
    assert code == 3 and not rep["pass"]


def test_tampered_file_is_a_parse_error(run, tmp_path):
    code, rep, _ = run("gen", "morphism", "--seed", "1", "--dom-len", "4", "--cod-len", "2")
    assert code == 0
    path = run.ws / "objects" / f"{rep['hash']}.json"
    doc = json.loads(path.read_text())
    doc["pairs"] = doc["pairs"][:-1]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    code, _, out = run("check", "morphism", str(bad))
    assert code == 1
    assert "hash" in out.err


def test_construct_pipeline(run):
    code, p, _ = run("gen", "tower", "--seed", "0")
    assert code == 0
    code, q, _ = run("gen", "tower", "--seed", "1")
    assert code == 0
    code, cert, _ = run("construct", "back-and-forth", p["hash"], q["hash"], "--rounds", "2")
    assert code == 0 and cert["kind"] == "back_and_forth_certificate"
    code, pair, _ = run("bundle", p["hash"], q["hash"])
    assert code == 0
    code, rep, _ = run("check", "certificate", cert["hash"], pair["hash"])
    assert code == 0 and rep["pass"]
    code, rep, _ = run("check", "certificate", cert["hash"], p["hash"], q["hash"])
    assert code == 0 and rep["pass"]
    log = (run.ws / "runlog.jsonl").read_text().splitlines()
    assert any(json.loads(ln).get("rounds") == 2 for ln in log)


def test_back_and_forth_running_out_stores_partial(run):
    code, p, _ = run("gen", "tower", "--seed", "3")
    code, q, _ = run("gen", "tower", "--seed", "5")
    code, rep, _ = run("construct", "back-and-forth", p["hash"], q["hash"], "--rounds", "2")
    assert code == 2
    assert (run.ws / "objects" / f"{rep['partial']}.json").exists()


def test_end_move_and_check(run):
    code, t, _ = run("gen", "tangled", "--target", "2", "--seed", "0")
    assert code == 0
    code, em, _ = run("construct", "end-move", t["hash"], "--vertex", "0")
    assert code == 0
    code, rep, _ = run("check", "end-move", em["hash"], t["hash"], "--vertex", "0")
    assert code == 0 and rep["pass"]


def test_end_move_on_untangled_is_a_precondition_failure(run, tmp_path):
    f = _write(tmp_path, "f.json", from_values([0, 1, 2], 2))
    code, _, _ = run("construct", "end-move", f, "--vertex", "0")
    assert code == 3


def test_join_and_strictify(run):
    code, a, _ = run("gen", "digraph", "--path", "2", "--seed", "1")
    code, b, _ = run("gen", "digraph", "--path", "1", "--seed", "2")
    code, j, _ = run("construct", "join", a["hash"], b["hash"])
    assert code == 0
    code, rep, _ = run("check", "join", j["hash"], a["hash"], b["hash"])
    assert code == 0 and rep["pass"]
    code, s, _ = run("construct", "strictify", a["hash"])
    assert code == 0
    code, rep, _ = run("check", "digraph", s["hash"])
    assert code == 0


def test_subabsorb_and_check(run, tmp_path):
    code, t, _ = run("gen", "tower", "--seed", "0")
    m = _write(tmp_path, "m.json", from_values([0, 1, 0], 1))
    code, res, _ = run("construct", "subabsorb", t["hash"], m, "--level", "0")
    assert code == 0
    code, rep, _ = run("check", "absorption", res["hash"], t["hash"], m)
    assert code == 0 and rep["pass"]


def test_decompose_and_classify(run, tmp_path):
    f = _write(tmp_path, "f.json", from_values([0, 1, 2, 1, 2, 3], 3))
    code, dec, _ = run("construct", "decompose", f)
    assert code == 0
    code, rep, _ = run("check", "factorization", dec["hash"])
    assert code == 0 and rep["pass"]
    code, cls, _ = run("classify", f)
    assert code == 0 and cls["turning"] == 2


def test_amalgamate_statuses(run, tmp_path):
    f = _write(tmp_path, "f.json", from_values([0, 1, 0, 1], 1))
    g = _write(tmp_path, "g.json", from_values([1, 0, 1, 0, 1], 1))
    code, rep, _ = run("construct", "amalgamate", f, g, "--bound", "1")
    assert code == 2 and rep["status"] == "inconclusive"
    code, rep, _ = run("construct", "amalgamate", f, g, "--bound", "30")
    assert code == 0 and rep["status"] == "found"


def test_subfactorisability(run):
    code, d, _ = run("gen", "digraph", "--path", "2", "--seed", "4")
    code, rep, _ = run("construct", "subfactorisability", d["hash"], "--covering", "--bound", "60")
    assert code == 0 and rep["status"] == "found"


def test_export_round_trip(run, tmp_path):
    code, t, _ = run("gen", "tower", "--seed", "2")
    out = tmp_path / "tower.json"
    code, _, _ = run("export", "json", t["hash"], "-o", str(out))
    assert code == 0
    obj = loads(out.read_text())
    code, rep, _ = run("check", "tower", str(out))
    assert code == 0 and rep["pass"]
    assert obj.depth == 2
    code, _, cap = run("export", "dot", t["hash"])
    assert code == 0 and cap.out.startswith("digraph Tower") and "->" in cap.out


def test_hash_command(run):
    code, t, _ = run("gen", "digraph", "--seed", "1")
    code, rep, _ = run("hash", t["hash"][:12])
    assert code == 0 and rep["hash"] == t["hash"] and rep["stamped"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "pseudoarc_lab", "--workspace", str(tmp_path / "w"),
                           "gen", "morphism", "--seed", "0"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["kind"] == "relation"
