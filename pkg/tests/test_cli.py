import json
import subprocess
import sys
from importlib import resources

import pytest
from gmpy2 import mpq

from qmzv import QContext, zeta_q
from qmzv.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# -- eval --------------------------------------------------------------------


def test_eval_matches_engine(capsys):
    code, out, err = run(capsys, "eval", "--index", "2", "--q", "1/2", "--terms", "64")
    assert code == 0 and err == ""
    val = zeta_q(QContext(mpq(1, 2)), (2,), m_max=64)
    assert f"partial = {val.partial}" in out
    assert f"tail = {val.tail}" in out
    assert "terms_used = 64" in out
    assert "display only" in out
    assert "decimal ~= 0.686" in out


def test_eval_multi_index(capsys):
    code, out, _ = run(capsys, "eval", "--index", "3,1,1", "--q", "2/3", "--terms", "20")
    assert code == 0
    assert "index = (3, 1, 1)" in out


def test_eval_rejects_non_admissible_index(capsys):
    code, out, err = run(capsys, "eval", "--index", "1,2", "--q", "1/2")
    assert code == 2 and out == "" and "error" in err


def test_eval_rejects_q_outside_unit_interval(capsys):
    code, _, err = run(capsys, "eval", "--index", "3", "--q", "3/2")
    assert code == 2 and "error" in err
    code, _, err = run(capsys, "eval", "--index", "3", "--q", "0.5")
    assert code == 2


def test_eval_rejects_malformed_index_and_small_terms(capsys):
    code, _, err = run(capsys, "eval", "--index", "2;1", "--q", "1/2")
    assert code == 2 and "--index" in err
    code, _, err = run(capsys, "eval", "--index", "2", "--q", "1/2", "--terms", "3")
    assert code == 2 and "--terms" in err


# -- expand ------------------------------------------------------------------


def test_expand_Z_pinned(capsys):
    code, out, _ = run(capsys, "expand", "Z", "--s", "2", "--word", "z1*z1")
    assert code == 0
    assert out == "z1*z3 + z2*z2 + z3*z1\n"


def test_expand_d_pinned(capsys):
    code, out, _ = run(capsys, "expand", "d", "--word", "xi1*xi1")
    assert code == 0
    assert out == "xi1*xi1 + xi2\n"


def test_expand_rho_pinned(capsys):
    code, out, _ = run(capsys, "expand", "rho", "--left", "xi1", "--right", "z1")
    assert code == 0
    assert out == "xi1*z1 + z1*xi1 + z2\n"


def test_expand_empty_word_and_phi(capsys):
    code, out, _ = run(capsys, "expand", "phi", "--s", "1", "--word", "1")
    assert code == 0
    assert out == "xi1\n"
    code, out, _ = run(capsys, "expand", "Phi", "--l", "2", "--word", "1")
    assert code == 0
    assert out == "xi1*xi1\n"


def test_expand_flag_validation(capsys):
    code, _, err = run(capsys, "expand", "phi", "--word", "z1")
    assert code == 2 and "--s" in err
    code, _, err = run(capsys, "expand", "d", "--word", "z1", "--s", "1")
    assert code == 2 and "does not take" in err
    code, _, err = run(capsys, "expand", "rho", "--left", "xi1", "--right", "xi1", "--word", "z1")
    assert code == 2
    code, _, err = run(capsys, "expand", "d", "--word", "w1")
    assert code == 2  # unknown letter
    code, _, err = run(capsys, "expand", "rho", "--left", "z1", "--right", "xi1")
    assert code == 2  # left factor must stay in the xi part


# -- verify ------------------------------------------------------------------


def test_verify_truncated_passes(capsys):
    code, out, _ = run(
        capsys, "verify", "T1", "--a", "1", "--b", "2", "--n", "4", "--q", "1/2",
        "--terms", "100",
    )
    assert code == 0
    record = json.loads(out)
    assert record["verdict"] == "pass"
    assert record["identity"] == "T1"
    assert record["params"]["q"] == "1/2"
    assert record["mode"] == "truncated"
    assert record["elapsed_ms"] is None


def test_verify_symbolic_passes(capsys):
    code, out, _ = run(capsys, "verify", "S3", "--s", "4")
    assert code == 0
    record = json.loads(out)
    assert record["verdict"] == "pass" and record["mode"] == "symbolic"
    assert "q" not in record["params"]


def test_verify_mutation_fails(capsys):
    code, out, _ = run(capsys, "verify", "S1", "--k", "3", "--mutate", "lhs-extra-word")
    assert code == 1
    assert json.loads(out)["verdict"] == "fail"


def test_verify_undersized_terms_is_indeterminate(capsys):
    code, out, _ = run(
        capsys, "verify", "T3", "--b", "3", "--n", "5", "--M", "3", "--q", "1/2",
        "--terms", "4",
    )
    assert code == 3
    assert json.loads(out)["verdict"] == "indeterminate"


def test_verify_usage_errors(capsys):
    code, _, err = run(capsys, "verify", "E1", "--v", "xi1", "--w", "z1", "--M", "3")
    assert code == 2 and "--q" in err
    code, _, err = run(capsys, "verify", "B9", "--k", "1")
    assert code == 2 and "B9" in err
    code, _, err = run(capsys, "verify", "S3", "--s", "4", "--a", "1")
    assert code == 2
    code, _, err = run(capsys, "verify", "T2", "--b", "2", "--n", "3", "--q", "1/2", "--terms", "3")
    assert code == 2


def test_verify_csv_shape(capsys):
    code, out, _ = run(
        capsys, "verify", "E7", "--k", "3", "--m1", "4", "--m2", "2", "--q", "1/3",
        "--format", "csv",
    )
    assert code == 0
    header, row = out.strip().split("\n")
    assert header == "identity,mode,params,verdict,lhs,rhs,slack,elapsed_ms,message"
    cells = row.split(",")
    assert cells[0] == "E7" and cells[1] == "exact" and cells[3] == "pass"
    assert cells[2] == "k=3;m1=4;m2=2;q=1/3"


def test_verify_out_file(tmp_path, capsys):
    target = tmp_path / "record.json"
    code, out, _ = run(
        capsys, "verify", "S4", "--l", "3", "--out", str(target)
    )
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["verdict"] == "pass"


# -- suite -------------------------------------------------------------------


SMOKE = resources.files("qmzv").joinpath("plans/smoke.plan")
NEGATIVE = resources.files("qmzv").joinpath("plans/negative.plan")


def test_suite_smoke_plan_passes_and_is_deterministic(tmp_path, capsys):
    plan = tmp_path / "smoke.plan"
    plan.write_text(SMOKE.read_text())
    outs = []
    for argv in (
        ("suite", "--plan", str(plan)),
        ("suite", "--plan", str(plan)),
        ("suite", "--plan", str(plan), "--jobs", "4"),
    ):
        code, out, _ = run(capsys, *argv)
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1] == outs[2]
    report = json.loads(outs[0])
    assert report["verdict"] == "pass"
    assert report["summary"]["total"] == report["summary"]["pass"] > 0
    assert report["plan"] == "smoke.plan"


def test_suite_negative_plan_all_fail(tmp_path, capsys):
    plan = tmp_path / "negative.plan"
    plan.write_text(NEGATIVE.read_text())
    code, out, _ = run(capsys, "suite", "--plan", str(plan))
    assert code == 1
    report = json.loads(out)
    assert report["summary"]["fail"] == report["summary"]["total"] > 0
    assert report["summary"]["indeterminate"] == 0


def test_suite_csv_and_q_override(tmp_path, capsys):
    plan = tmp_path / "tiny.plan"
    plan.write_text("E7 k=2 m1=3 m2=1\n")
    code, out, _ = run(capsys, "suite", "--plan", str(plan), "--q", "1/5", "--format", "csv")
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 2
    assert "q=1/5" in lines[1]


def test_suite_usage_errors(tmp_path, capsys):
    code, _, err = run(capsys, "suite", "--plan", str(tmp_path / "missing.plan"))
    assert code == 2 and "cannot read plan" in err
    plan = tmp_path / "ok.plan"
    plan.write_text("S3 s=1\n")
    code, _, err = run(capsys, "suite", "--plan", str(plan), "--q", "7/5")
    assert code == 2
    code, _, err = run(capsys, "suite", "--plan", str(plan), "--terms", "3")
    assert code == 2
    bad = tmp_path / "bad.plan"
    bad.write_text("S3 s=1 w=z1\n")
    code, _, err = run(capsys, "suite", "--plan", str(bad))
    assert code == 2 and "line 1" in err


def test_suite_jobs_env_default(tmp_path, capsys, monkeypatch):
    plan = tmp_path / "tiny.plan"
    plan.write_text("S1 k=1..3\n")
    code, serial, _ = run(capsys, "suite", "--plan", str(plan))
    monkeypatch.setenv("QMZV_JOBS", "3")
    code2, threaded, _ = run(capsys, "suite", "--plan", str(plan))
    assert code == code2 == 0
    assert serial == threaded


# -- top level ---------------------------------------------------------------


def test_version_and_bad_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == "qmzv 0.1.0"
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_installed_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-c", "import qmzv.cli, sys; sys.exit(qmzv.cli.main(['--version']))"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "qmzv 0.1.0"
