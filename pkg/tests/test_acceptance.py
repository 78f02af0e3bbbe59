"""Acceptance gate: six end-to-end criteria, one printed verdict line each.

Each test prints `ACCEPTANCE <n> <label>: PASS|FAIL (<detail>)` and then
asserts, so the verdict lines survive in the captured output either way.
Budgets are wall-clock seconds on the stated grids.
"""

import itertools
import re
import time
from importlib import resources

from gmpy2 import mpq

from qmzv import (
    A_eval,
    A_eval_direct,
    QContext,
    check,
    run_suite,
    xi,
    z,
)
from qmzv.cli import main
from qmzv.verifier import _parse_q_value

CEILING = mpq(1, 10**15)


def _plan_subset(prefix: str) -> str:
    text = resources.files("qmzv").joinpath("plans/default.plan").read_text()
    keep = [ln for ln in text.splitlines() if re.match(rf"{prefix}\d ", ln.strip())]
    return "\n".join(keep) + "\n"


def _verdict(n: int, label: str, ok: bool, detail: str) -> str:
    line = f"ACCEPTANCE {n} {label}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    return line


def _cv_field(side: str, field: str) -> str:
    return re.search(rf"{field}=([^;]+)", side).group(1)


def test_criterion_1_symbolic_suite():
    t0 = time.perf_counter()
    report = run_suite(_plan_subset("S"), plan_name="S-slice")
    elapsed = time.perf_counter() - t0
    total = report["summary"]["total"]
    ok = report["verdict"] == "pass" and total == 696 and elapsed < 60
    line = _verdict(1, "symbolic suite", ok, f"{total} checks, {elapsed:.1f}s")
    assert ok, line


def test_criterion_2_exact_suite():
    t0 = time.perf_counter()
    report = run_suite(_plan_subset("E"), plan_name="E-slice")
    elapsed = time.perf_counter() - t0
    total = report["summary"]["total"]
    ok = report["verdict"] == "pass" and total == 15504 and elapsed < 120
    line = _verdict(2, "exact suite", ok, f"{total} checks, {elapsed:.1f}s")
    assert ok, line


def test_criterion_3_oracle_equivalence():
    t0 = time.perf_counter()
    alphabet = (z(1), z(2), z(3), xi(1), xi(2))
    words = [w for r in range(4) for w in itertools.product(alphabet, repeat=r)]
    cases = 0
    mismatches = 0
    for q in (mpq(1, 2), mpq(1, 3), mpq(9, 10)):
        ctx = QContext(q)
        for w in words:
            for M in range(1, 13):
                for star in (False, True):
                    if A_eval(ctx, w, M, star) != A_eval_direct(ctx, w, M, star):
                        mismatches += 1
                    cases += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and cases >= 1000 and elapsed < 60
    line = _verdict(3, "oracle equivalence", ok, f"{cases} cases, {elapsed:.1f}s")
    assert ok, line


def test_criterion_4_truncated_suite():
    t0 = time.perf_counter()
    report = run_suite(_plan_subset("T"), plan_name="T-slice")
    problems = []
    if report["verdict"] != "pass":
        problems.append(f"suite verdict {report['verdict']}")
    if report["summary"]["total"] != 426:
        problems.append(f"row count {report['summary']['total']}")
    for row in report["checks"]:
        for side in ("lhs", "rhs"):
            if mpq(_cv_field(row[side], "tail")) > CEILING:
                problems.append(f"{row['identity']} {row['params']} {side} tail too large")
    # doubling the truncation bound must keep every row passing; share one
    # context per q so kernel caches carry across rows as in the suite run
    ctxs: dict[str, QContext] = {}
    for row in report["checks"]:
        params = {k: v for k, v in row["params"].items() if k != "q"}
        ctx = ctxs.setdefault(row["params"]["q"], QContext(_parse_q_value(row["params"]["q"])))
        terms = int(_cv_field(row["lhs"], "terms"))
        redo = check(row["identity"], params, ctx, m_max=2 * terms)
        if redo.verdict != "pass":
            problems.append(f"{row['identity']} {row['params']} not stable under doubling")
    elapsed = time.perf_counter() - t0
    ok = not problems and elapsed < 600
    detail = f"{report['summary']['total']} checks doubled once, {elapsed:.1f}s"
    if problems:
        detail += "; " + "; ".join(problems[:3])
    line = _verdict(4, "truncated suite", ok, detail)
    assert ok, line


def test_criterion_5_negative_controls():
    plan = resources.files("qmzv").joinpath("plans/negative.plan").read_text()
    report = run_suite(plan, plan_name="negative.plan")
    s = report["summary"]
    modes = {row["mode"] for row in report["checks"]}
    ok = (
        s["total"] >= 6
        and s["fail"] == s["total"]
        and s["indeterminate"] == 0
        and modes == {"symbolic", "exact", "truncated"}
    )
    line = _verdict(5, "negative controls", ok, f"{s['fail']}/{s['total']} fail, 0 indeterminate")
    assert ok, line


def test_criterion_6_deterministic_reports(tmp_path):
    t0 = time.perf_counter()
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    code_a = main(["suite", "--out", str(out_a)])
    code_b = main(["suite", "--out", str(out_b)])
    elapsed = time.perf_counter() - t0
    identical = out_a.read_bytes() == out_b.read_bytes()
    ok = code_a == 0 and code_b == 0 and identical
    size = out_a.stat().st_size
    line = _verdict(6, "deterministic reports", ok, f"2 runs, {size} bytes each, {elapsed:.1f}s")
    assert ok, line
