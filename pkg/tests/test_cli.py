import json

import pytest

from qszego.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_kernel_eval_at_one(capsys):
    code, out, _ = run(capsys, "kernel-eval", "--sigma", "1,0,0,0")
    assert code == 0
    assert json.loads(out)["value"] == [12.0, 0.0, 0.0, 0.0]


def test_kernel_eval_with_points(capsys):
    code, out, _ = run(capsys, "kernel-eval", "--s", "1", "--g", "0,0,0,1,0,0,0")
    assert code == 0
    assert json.loads(out)["value"] == [0.375, 0.0, 0.0, 0.0]


def test_usage_errors_exit_with_two(capsys):
    assert run(capsys, "kernel-eval", "--g", "0,0")[0] == 2
    assert run(capsys, "decay", "--index", "1,2")[0] == 2
    assert run(capsys, "tile", "locate")[0] == 2
    assert run(capsys, "invariance", "--n", "1")[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def test_tile_children(capsys):
    code, out, _ = run(capsys, "tile", "children", "--gamma", "0")
    assert code == 0
    assert len(json.loads(out)) == 1024


def test_tile_locate(capsys):
    code, out, _ = run(capsys, "tile", "locate", "--point", "2.5,0,0,1.5,0,0,0", "--j", "0")
    assert code == 0
    assert json.loads(out)["a"] == [1, 0, 0, 0]


def test_group_audit_report_is_deterministic(capsys, tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert run(capsys, "group-audit", "--out", str(first))[0] == 0
    assert run(capsys, "group-audit", "--out", str(second), "--threads", "2")[0] == 0
    a = (first / "group-audit.json").read_bytes()
    assert a == (second / "group-audit.json").read_bytes()
    report = json.loads(a)
    assert report["status"] == "pass"
    assert [b["name"] for b in report["batteries"]] == ["group", "commutator-table"]


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed = 9\nsamples = 50\n")
    code, out, _ = run(capsys, "invariance", "--config", str(cfg), "--seed", "2", "--json")
    assert code == 0
    report = json.loads(out)
    assert report["seed"] == 2
    assert report["config"]["samples"] == 50
    cfg.write_text("bogus = 1\n")
    assert run(capsys, "invariance", "--config", str(cfg))[0] == 2


def test_commutator_subcommand(capsys):
    code, out, _ = run(capsys, "commutator", "--symbol", "const", "--nodes", "100")
    assert code == 0
    assert "overall pass" in out


def test_atom_make_then_check(capsys, tmp_path):
    assert run(capsys, "atom", "make", "--nodes", "1024", "--out", str(tmp_path))[0] == 0
    code, out, _ = run(capsys, "atom", "check", "--atom", str(tmp_path / "atom.json"))
    assert code == 0
    assert json.loads(out)["passed"] is True
