"""Command-line front end: evaluate q-series, expand maps, run checks.

Subcommands:

* eval    -- print one truncated q-series value with its certified tail.
* expand  -- print the canonical form of d, phi, Phi, Z, or rho applied to
  words given in text syntax.
* verify  -- run a single identity check; exit status encodes the verdict.
* suite   -- run a plan file (default: the packaged full-grid plan) and emit
  a JSON or CSV report.

Exit codes: 0 all-pass, 1 any fail, 2 usage or configuration error, 3
indeterminate with no fail.  Reports are byte-deterministic for a fixed
plan, q list, and truncation policy; decimal renderings are display-only.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from importlib import resources

from gmpy2 import mpq

from ._version import __version__
from .qseries import QContext, zeta_q
from .verifier import (
    IDENTITY_TAGS,
    MUTATIONS,
    _parse_q_value,
    check,
    run_suite,
)
from .word_algebra import Phi, Z_map, d_map, format_poly, parse_word, phi, rho

_EXIT_BY_VERDICT = {"pass": 0, "fail": 1, "indeterminate": 3}

_INT_FLAGS = ("a", "b", "n", "m", "M", "N", "k", "s", "sp", "l", "beta", "j", "m1", "m2", "L")
_WORD_FLAGS = ("w", "v")

_CSV_COLUMNS = (
    "identity",
    "mode",
    "params",
    "verdict",
    "lhs",
    "rhs",
    "slack",
    "elapsed_ms",
    "message",
)


class _Usage(Exception):
    """Raised for post-parse validation failures; maps to exit code 2."""


def _q_context(text: str) -> QContext:
    return QContext(_parse_q_value(text))


def _check_terms(terms: int | None) -> None:
    if terms is not None and terms < 4:
        raise _Usage(f"--terms must be >= 4 when fixed, got {terms}")


def _default_jobs() -> int:
    raw = os.environ.get("QMZV_JOBS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


def _write_out(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _flatten_params(params: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in params.items())


def _report_to_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for row in report["checks"]:
        writer.writerow(
            [
                row["identity"],
                row["mode"],
                _flatten_params(row["params"]),
                row["verdict"],
                row["lhs"],
                row["rhs"],
                "" if row["slack"] is None else row["slack"],
                "" if row["elapsed_ms"] is None else row["elapsed_ms"],
                row["message"],
            ]
        )
    return buf.getvalue()


def _record_to_csv(record: dict) -> str:
    return _report_to_csv({"checks": [record]})


# -- eval --------------------------------------------------------------------


def _cmd_eval(args: argparse.Namespace) -> int:
    _check_terms(args.terms)
    try:
        index = tuple(int(tok) for tok in args.index.split(","))
    except ValueError:
        raise _Usage(f"--index must be comma-separated integers, got {args.index!r}") from None
    ctx = _q_context(args.q)
    value = zeta_q(ctx, index, m_max=args.terms)
    lines = [
        f"index = ({', '.join(str(a) for a in index)})",
        f"q = {args.q}",
        f"partial = {value.partial}",
        f"tail = {value.tail}",
        f"terms_used = {value.terms_used}",
        f"decimal ~= {float(value.partial):.15g} (display only)",
    ]
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


# -- expand ------------------------------------------------------------------


def _expand_result(args: argparse.Namespace):
    name = args.map

    def need(flag: str):
        val = getattr(args, flag)
        if val is None:
            raise _Usage(f"expand {name} requires --{flag}")
        return val

    def refuse(*flags: str) -> None:
        for flag in flags:
            if getattr(args, flag) is not None:
                raise _Usage(f"expand {name} does not take --{flag}")

    if name == "d":
        refuse("s", "l", "left", "right")
        return d_map(parse_word(need("word")))
    if name == "phi":
        refuse("l", "left", "right")
        return phi(need("s"), parse_word(need("word")))
    if name == "Phi":
        refuse("s", "left", "right")
        return Phi(need("l"), parse_word(need("word")))
    if name == "Z":
        refuse("l", "left", "right")
        return Z_map(need("s"), parse_word(need("word")))
    refuse("s", "l", "word")
    return rho(parse_word(need("left")), parse_word(need("right")))


def _cmd_expand(args: argparse.Namespace) -> int:
    _write_out(format_poly(_expand_result(args)) + "\n", args.out)
    return 0


# -- verify ------------------------------------------------------------------


def _cmd_verify(args: argparse.Namespace) -> int:
    _check_terms(args.terms)
    spec = IDENTITY_TAGS.get(args.tag)
    if spec is None:
        raise _Usage(f"unknown identity tag {args.tag!r}")
    params: dict = {}
    for flag in _INT_FLAGS + _WORD_FLAGS:
        val = getattr(args, flag)
        if val is not None:
            params[flag] = val
    if args.mutate is not None:
        params["mutate"] = args.mutate
    ctx = None
    if spec.mode != "symbolic":
        if args.q is None:
            raise _Usage(f"{args.tag} needs --q")
        ctx = _q_context(args.q)
    result = check(
        args.tag, params, ctx, m_max=args.terms if spec.mode == "truncated" else None,
        timing=args.timing,
    )
    record = result.to_record()
    if args.format == "csv":
        _write_out(_record_to_csv(record), args.out)
    else:
        _write_out(json.dumps(record, indent=2) + "\n", args.out)
    return _EXIT_BY_VERDICT[result.verdict]


# -- suite -------------------------------------------------------------------


def _load_plan(path: str | None) -> tuple[str, str]:
    if path is None:
        ref = resources.files("qmzv").joinpath("plans/default.plan")
        return ref.read_text(), "default.plan"
    with open(path) as fh:
        return fh.read(), os.path.basename(path)


def _cmd_suite(args: argparse.Namespace) -> int:
    _check_terms(args.terms)
    try:
        plan_text, plan_name = _load_plan(args.plan)
    except OSError as exc:
        raise _Usage(f"cannot read plan: {exc}") from None
    q_values = None
    if args.q is not None:
        q_values = [_parse_q_value(tok) for tok in args.q.split(",")]
    report = run_suite(
        plan_text,
        q_values=q_values,
        m_max=args.terms,
        jobs=args.jobs,
        timing=args.timing,
        plan_name=plan_name,
    )
    if args.format == "csv":
        _write_out(_report_to_csv(report), args.out)
    else:
        _write_out(json.dumps(report, indent=2) + "\n", args.out)
    return _EXIT_BY_VERDICT[report["verdict"]]


# -- parser ------------------------------------------------------------------


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv"), default="json", help="report format")
    p.add_argument("--out", metavar="PATH", default=None, help="write output to PATH (default stdout)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmzv",
        description="Exact q-series evaluation and mechanical identity checking.",
    )
    parser.add_argument("--version", action="version", version=f"qmzv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate a truncated q-series value")
    p_eval.add_argument("--index", required=True, help="comma-separated exponents, e.g. 3,1,1")
    p_eval.add_argument("--q", required=True, help="rational in (0,1) as p/r, e.g. 1/2")
    p_eval.add_argument("--terms", type=int, default=None, help="fixed truncation bound (>= 4)")
    p_eval.add_argument("--out", metavar="PATH", default=None)
    p_eval.set_defaults(func=_cmd_eval)

    p_exp = sub.add_parser("expand", help="expand a word-algebra map to canonical form")
    p_exp.add_argument("map", choices=("d", "phi", "Phi", "Z", "rho"))
    p_exp.add_argument("--word", default=None, help="word in text syntax, e.g. z1*xi1 (1 = empty)")
    p_exp.add_argument("--left", default=None, help="left word for rho")
    p_exp.add_argument("--right", default=None, help="right word for rho")
    p_exp.add_argument("--s", type=int, default=None, help="order for phi and Z")
    p_exp.add_argument("--l", type=int, default=None, help="order for Phi")
    p_exp.add_argument("--out", metavar="PATH", default=None)
    p_exp.set_defaults(func=_cmd_expand)

    p_ver = sub.add_parser("verify", help="run a single identity check")
    p_ver.add_argument("tag", help="identity tag, e.g. S3, E1, T1")
    for flag in _INT_FLAGS:
        p_ver.add_argument(f"--{flag}", type=int, default=None)
    for flag in _WORD_FLAGS:
        p_ver.add_argument(f"--{flag}", default=None)
    p_ver.add_argument("--q", default=None, help="rational in (0,1) as p/r")
    p_ver.add_argument("--terms", type=int, default=None, help="fixed truncation bound (>= 4)")
    p_ver.add_argument("--mutate", choices=MUTATIONS, default=None, help="negative control")
    p_ver.add_argument("--timing", action="store_true", help="record elapsed milliseconds")
    _add_output_flags(p_ver)
    p_ver.set_defaults(func=_cmd_verify)

    p_suite = sub.add_parser("suite", help="run a verification plan")
    p_suite.add_argument("--plan", default=None, help="plan file (default: packaged default.plan)")
    p_suite.add_argument("--q", default=None, help="comma-separated q list, e.g. 1/2,2/3")
    p_suite.add_argument("--terms", type=int, default=None, help="fixed truncation bound (>= 4)")
    p_suite.add_argument("--jobs", type=int, default=_default_jobs(), help="worker threads")
    p_suite.add_argument("--timing", action="store_true", help="record elapsed milliseconds")
    _add_output_flags(p_suite)
    p_suite.set_defaults(func=_cmd_suite)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Usage as exc:
        print(f"qmzv: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"qmzv: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
