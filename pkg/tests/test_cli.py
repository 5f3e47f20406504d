import json
import subprocess
import sys

import pytest

from poissonmla.cli import main


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_gen_instance_and_roundtrip(tmp_path, capsys):
    path = tmp_path / "star.json"
    rc, _, _ = run(capsys, "gen-instance", "--kind", "AppendixBStar", "--param", "n=16", "--out", str(path))
    assert rc == 0
    rc, out, _ = run(capsys, "partition", "--instance", str(path), "--algorithm", "plan")
    assert rc == 0 and abs(json.loads(out)["clusters"][0]["period"] - 40 ** 0.5) < 1e-12
    rc, out, _ = run(capsys, "partition", "--instance", str(path), "--algorithm", "gen")
    assert rc == 0 and "branches" in json.loads(out)


def test_simulate_and_bounds(capsys):
    rc, out, _ = run(capsys, "simulate", "--kind", "SingleEdge", "--param", "w=2", "--param", "lam=1",
                     "--tau", "8", "--trials", "20", "--scheduler", "plan:blind", "--scheduler", "instant")
    assert rc == 0 and set(json.loads(out)["schedulers"]) == {"plan:blind", "instant"}
    rc, out, _ = run(capsys, "bounds", "--kind", "SingleEdge", "--param", "w=1", "--param", "lam=1", "--tau", "100")
    doc = json.loads(out)
    assert rc == 0 and abs(doc["lower"]["SingleEdgeHeavy"] - 26.5165) < 1e-3
    assert "Light" in doc["lower"]  # pi == 1 is light as well


def test_opt_from_csv(tmp_path, capsys):
    inst = tmp_path / "e.json"
    run(capsys, "gen-instance", "--kind", "SingleEdge", "--param", "w=1", "--out", str(inst))
    seq = tmp_path / "s.csv"
    seq.write_text("time,vertex\n0.2,1\n0.5,1\n1.4,1\n")
    rc, out, _ = run(capsys, "opt", "--instance", str(inst), "--sequence", str(seq), "--tau", "2")
    assert rc == 0 and abs(json.loads(out)["cost"]["total"] - 2.3) < 1e-12


def test_roe_and_appendix_b(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"kind": "SingleEdge", "param": ["w=2", "lam=1"], "tau": 4, "scheduler": ["plan:blind"]}))
    rc, out, _ = run(capsys, "roe", "--config", str(conf), "--trials", "30", "--out", str(tmp_path / "roe"))
    assert rc == 0 and "plan:blind" in out
    assert (tmp_path / "roe" / "roe_trials.csv").exists()
    rc, out, _ = run(capsys, "appendix-b", "--n", "16", "--trials", "5", "--periods", "3")
    assert rc == 0 and "16" in out


def test_selftest(capsys):
    rc, out, _ = run(capsys, "selftest", "--kind", "SingleEdge", "--param", "lam=2", "--tau", "5", "--trials", "2000")
    assert rc == 0 and json.loads(out)["passed"] is True


def test_exit_codes(tmp_path, capsys):
    # validation errors
    assert run(capsys, "simulate", "--kind", "SingleEdge", "--tau", "-1")[0] == 2
    assert run(capsys, "simulate", "--instance", str(tmp_path / "missing.json"), "--tau", "1")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(capsys, "partition", "--instance", str(bad))[0] == 2
    rc, _, err = run(capsys, "bounds", "--kind", "SingleEdge", "--param", "w=2", "--tau", "1", "--bound", "Light")
    assert rc == 2 and "pi <= 1" in err
    # capacity
    assert run(capsys, "roe", "--kind", "SingleEdge", "--tau", "100", "--trials", "2")[0] == 3
    seq = tmp_path / "big.csv"
    seq.write_text("time,vertex\n" + "".join(f"{i / 20},1\n" for i in range(13)))
    assert run(capsys, "opt", "--kind", "SingleEdge", "--sequence", str(seq), "--tau", "1")[0] == 3
    # argparse usage errors
    with pytest.raises(SystemExit) as exc:
        main(["nope"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "poissonmla", "bounds", "--kind", "SingleEdge", "--tau", "10",
                        "--bound", "InstantLight", "--param", "w=0.5"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["upper"]["InstantLight"] == 5.0
