"""Registry of checkable identities and the machinery to run them.

Every identity is registered under a stable tag and runs in one of three
modes:

* symbolic  (S1..S9)  -- both sides are WordPoly values; pass means literal
  equality of canonical forms.
* exact     (E1..E8)  -- both sides are exact rationals built from finite
  sums; pass means equality.
* truncated (T1..T6)  -- both sides are CertifiedValue intervals; pass means
  the intervals intersect and both tails are below the configured ceiling.
  Disjoint intervals are a rigorous refutation and yield fail; intersecting
  intervals with an oversized tail yield indeterminate, never fail.

Suites are described by line-oriented plan files (`TAG key=value ...`) with
integer ranges, word macros, row filters, and deliberate mutations for
negative controls.  Reports are deterministic: canonical parameter order,
rationals in lowest terms, and no timestamps unless timing is requested.
"""

from __future__ import annotations

import ast
import hashlib
import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

from gmpy2 import mpq

from ._version import __version__
from .indices import enumerate_admissible, enumerate_compositions
from .qseries import (
    A_eval,
    A_eval_direct,
    CertifiedValue,
    K_eval,
    QContext,
    _conv_kernel,
    _f_kernel,
    _g_profile,
    _h_kernel,
    _k_profile,
    _k_tail,
    f_eval,
    g_eval,
    p_eval,
    tail_closed_form,
    zeta_q,
)
from .word_algebra import (
    Letter,
    Phi,
    Word,
    WordPoly,
    Z_map,
    d_map,
    eta,
    format_poly,
    format_word,
    in_d1_subalgebra,
    in_xi_subalgebra,
    in_z_subalgebra,
    parse_word,
    phi,
    rho,
    xi,
    z,
)

_ZERO = mpq(0)
_ONE = mpq(1)

DEFAULT_CEILING = mpq(1, 10**15)
DEFAULT_Q = (mpq(1, 2), mpq(2, 3))

# truncation bounds grow in blocks so cache keys coincide across a grid
_AUTO_BLOCK = 32
_AUTO_CAP = 8192

MUTATIONS = ("lhs-extra-word", "rhs-extra-word", "lhs-extra-term", "rhs-extra-term")


# -- results -----------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a single identity check."""

    identity: str
    params: dict
    mode: str
    verdict: str  # "pass" | "fail" | "indeterminate"
    lhs: str
    rhs: str
    slack: str | None = None
    elapsed_ms: int | None = None
    message: str = ""

    def to_record(self) -> dict:
        return {
            "identity": self.identity,
            "params": self.params,
            "mode": self.mode,
            "verdict": self.verdict,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "elapsed_ms": self.elapsed_ms,
            "message": self.message,
        }


def _ser_rat(x: mpq) -> str:
    return str(mpq(x))


def _ser_q(q: mpq) -> str:
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}"


def _ser_cv(v: CertifiedValue) -> str:
    return f"partial={v.partial};tail={v.tail};terms={v.terms_used}"


# -- identity registry -------------------------------------------------------


@dataclass(frozen=True)
class IdentitySpec:
    """Registry entry: mode, canonical parameter order, and a description."""

    tag: str
    mode: str
    params: tuple[str, ...]
    description: str


IDENTITY_TAGS: dict[str, IdentitySpec] = {
    s.tag: s
    for s in (
        IdentitySpec("S1", "symbolic", ("k",), "d on a xi_1 run expands over all compositions"),
        IdentitySpec("S2", "symbolic", ("k",), "d on a xi_1 run satisfies the prefix recursion"),
        IdentitySpec("S3", "symbolic", ("s",), "Z_s annihilates the empty word for s >= 1"),
        IdentitySpec("S4", "symbolic", ("l",), "Phi_l sends the empty word to (-xi_1)^l"),
        IdentitySpec("S5", "symbolic", ("l", "w"), "Phi_l commutes past a z_1 prefix with signs"),
        IdentitySpec("S6", "symbolic", ("k", "w"), "alternating rho/d sums convert xi_1 runs to z-letters"),
        IdentitySpec("S7", "symbolic", ("s", "w"), "Z_s shifts a z_1 prefix into z-letters"),
        IdentitySpec("S8", "symbolic", ("s", "a"), "Z_s of a z_1 run is the full composition sum"),
        IdentitySpec("S9", "symbolic", ("s", "a", "w"), "phi_s through a xi_1 run and z_1 prefix"),
        IdentitySpec("E1", "exact", ("v", "w", "M"), "harmonic product: A_v A_w = A_rho(v,w)"),
        IdentitySpec("E2", "exact", ("v", "M"), "weak chains via d: A*_v = A_d(v)"),
        IdentitySpec("E3", "exact", ("w", "M"), "A satisfies the head-letter recursion"),
        IdentitySpec("E4", "exact", ("s", "v", "N", "M"), "p-weighted chains pass through a letter"),
        IdentitySpec("E5", "exact", ("sp", "s", "w", "N"), "two f-kernels contract through phi_s"),
        IdentitySpec("E6", "exact", ("j", "n", "M"), "g expands into star sums with merged top"),
        IdentitySpec("E7", "exact", ("k", "m1", "m2"), "two-part composition partial fraction"),
        IdentitySpec("E8", "exact", ("m", "n", "L"), "telescoped geometric difference sum"),
        IdentitySpec("T1", "truncated", ("a", "b", "n"), "restricted sum formula with trailing ones"),
        IdentitySpec("T2", "truncated", ("b", "n"), "sum formula: fixed-depth sum collapses to one value"),
        IdentitySpec("T3", "truncated", ("b", "n", "M"), "kernel recursion through f against g"),
        IdentitySpec("T4", "truncated", ("b", "m", "M"), "kernel expansion over signed kernel chains"),
        IdentitySpec("T5", "truncated", ("a", "b", "n"), "kernel route rewritten through Z_s words"),
        IdentitySpec("T6", "truncated", ("w", "s", "l", "beta"), "g-weighted f-kernel contracts through phi_s"),
    )
}

# parameter kinds drive plan parsing and CLI coercion
_WORD_PARAMS: frozenset[tuple[str, str]] = frozenset(
    {
        ("S5", "w"),
        ("S6", "w"),
        ("S7", "w"),
        ("S9", "w"),
        ("E1", "v"),
        ("E1", "w"),
        ("E2", "v"),
        ("E3", "w"),
        ("E4", "v"),
        ("E5", "w"),
        ("T6", "w"),
    }
)


def _is_word_param(tag: str, name: str) -> bool:
    return (tag, name) in _WORD_PARAMS


def _require_int(params: dict, name: str, low: int) -> int:
    val = params.get(name)
    if not isinstance(val, int) or isinstance(val, bool):
        raise ValueError(f"parameter {name} must be an integer, got {val!r}")
    if val < low:
        raise ValueError(f"parameter {name} must be >= {low}, got {val}")
    return val


def _require_word(params: dict, name: str, predicate, label: str) -> Word:
    val = params.get(name)
    if val is None:
        raise ValueError(f"missing word parameter {name}")
    w = tuple(val)
    if not all(isinstance(u, Letter) for u in w):
        raise ValueError(f"parameter {name} must be a word, got {val!r}")
    if not predicate(WordPoly.from_word(w)):
        raise ValueError(f"parameter {name} must be a {label} word, got {format_word(w)}")
    return w


def _any_word(_: WordPoly) -> bool:
    return True


_VALIDATORS: dict[str, Callable[[dict], None]] = {}


def _validator(tag: str):
    def deco(fn):
        _VALIDATORS[tag] = fn
        return fn

    return deco


def _validate_params(tag: str, params: dict) -> None:
    spec = IDENTITY_TAGS[tag]
    extra = set(params) - set(spec.params)
    if extra:
        raise ValueError(f"{tag} does not take parameters {sorted(extra)}")
    missing = set(spec.params) - set(params)
    if missing:
        raise ValueError(f"{tag} is missing parameters {sorted(missing)}")
    _VALIDATORS[tag](params)


@_validator("S1")
def _val_s1(p: dict) -> None:
    _require_int(p, "k", 1)


_VALIDATORS["S2"] = _VALIDATORS["S1"]


@_validator("S3")
def _val_s3(p: dict) -> None:
    _require_int(p, "s", 0)


@_validator("S4")
def _val_s4(p: dict) -> None:
    _require_int(p, "l", 0)


@_validator("S5")
def _val_s5(p: dict) -> None:
    _require_int(p, "l", 0)
    _require_word(p, "w", in_d1_subalgebra, "z_1/xi_1")


@_validator("S6")
def _val_s6(p: dict) -> None:
    _require_int(p, "k", 0)
    _require_word(p, "w", in_d1_subalgebra, "z_1/xi_1")


@_validator("S7")
def _val_s7(p: dict) -> None:
    _require_int(p, "s", 0)
    _require_word(p, "w", in_d1_subalgebra, "z_1/xi_1")


@_validator("S8")
def _val_s8(p: dict) -> None:
    _require_int(p, "s", 0)
    _require_int(p, "a", 1)


@_validator("S9")
def _val_s9(p: dict) -> None:
    _require_int(p, "s", 0)
    _require_int(p, "a", 0)
    _require_word(p, "w", in_d1_subalgebra, "z_1/xi_1")


@_validator("E1")
def _val_e1(p: dict) -> None:
    _require_word(p, "v", in_xi_subalgebra, "xi")
    _require_word(p, "w", _any_word, "any")
    _require_int(p, "M", 1)


@_validator("E2")
def _val_e2(p: dict) -> None:
    _require_word(p, "v", in_xi_subalgebra, "xi")
    _require_int(p, "M", 1)


@_validator("E3")
def _val_e3(p: dict) -> None:
    w = _require_word(p, "w", _any_word, "any")
    if not w:
        raise ValueError("E3 needs a nonempty word")
    _require_int(p, "M", 1)


@_validator("E4")
def _val_e4(p: dict) -> None:
    _require_int(p, "s", 1)
    v = _require_word(p, "v", in_d1_subalgebra, "z_1/xi_1")
    if len(v) != 1:
        raise ValueError(f"E4 needs a single letter z1 or xi1, got {format_word(v)}")
    N = _require_int(p, "N", 2)
    M = _require_int(p, "M", 1)
    if N <= M:
        raise ValueError(f"E4 needs N > M, got N={N}, M={M}")


@_validator("E5")
def _val_e5(p: dict) -> None:
    _require_int(p, "sp", 1)
    _require_int(p, "s", 1)
    _require_word(p, "w", in_d1_subalgebra, "z_1/xi_1")
    _require_int(p, "N", 1)


@_validator("E6")
def _val_e6(p: dict) -> None:
    _require_int(p, "j", 1)
    _require_int(p, "n", 1)
    _require_int(p, "M", 1)


@_validator("E7")
def _val_e7(p: dict) -> None:
    _require_int(p, "k", 2)
    m1 = _require_int(p, "m1", 2)
    m2 = _require_int(p, "m2", 1)
    if m1 <= m2:
        raise ValueError(f"E7 needs m1 > m2, got m1={m1}, m2={m2}")


@_validator("E8")
def _val_e8(p: dict) -> None:
    m = _require_int(p, "m", 2)
    n = _require_int(p, "n", 1)
    _require_int(p, "L", 1)
    if m <= n:
        raise ValueError(f"E8 needs m > n, got m={m}, n={n}")


def _val_depth_weight(p: dict, a_key: str | None) -> None:
    if a_key is not None:
        _require_int(p, a_key, 0)
    b = _require_int(p, "b", 1)
    _require_int(p, "n" if "n" in p else "m", b + 1)


@_validator("T1")
def _val_t1(p: dict) -> None:
    _val_depth_weight(p, "a")


@_validator("T2")
def _val_t2(p: dict) -> None:
    _val_depth_weight(p, None)


@_validator("T3")
def _val_t3(p: dict) -> None:
    _val_depth_weight(p, None)
    _require_int(p, "M", 1)


@_validator("T4")
def _val_t4(p: dict) -> None:
    _val_depth_weight(p, None)
    _require_int(p, "M", 1)


_VALIDATORS["T5"] = _VALIDATORS["T1"]


@_validator("T6")
def _val_t6(p: dict) -> None:
    _require_word(p, "w", in_d1_subalgebra, "z_1/xi_1")
    _require_int(p, "s", 1)
    _require_int(p, "l", 1)
    # beta = 1 makes both sides diverge; the identity is only checkable beyond it
    _require_int(p, "beta", 2)


# -- symbolic evaluators -----------------------------------------------------


def _xi_run(k: int) -> Word:
    return (xi(1),) * k


def _neg_xi_power(l: int) -> WordPoly:
    return WordPoly.from_word(_xi_run(l), (-1) ** l)


def _s1(p: dict) -> tuple[WordPoly, WordPoly]:
    k = p["k"]
    lhs = d_map(_xi_run(k))
    rhs = WordPoly.zero()
    for r in range(1, k + 1):
        for c in enumerate_compositions(r, k):
            rhs = rhs + WordPoly.from_word(tuple(xi(ci) for ci in c))
    return lhs, rhs


def _s2(p: dict) -> tuple[WordPoly, WordPoly]:
    k = p["k"]
    lhs = d_map(_xi_run(k))
    rhs = WordPoly.zero()
    for a in range(1, k + 1):
        rhs = rhs + d_map(_xi_run(k - a)).prepend(xi(a))
    return lhs, rhs


def _s3(p: dict) -> tuple[WordPoly, WordPoly]:
    s = p["s"]
    return Z_map(s, ()), WordPoly.one() if s == 0 else WordPoly.zero()


def _s4(p: dict) -> tuple[WordPoly, WordPoly]:
    l = p["l"]
    return Phi(l, ()), _neg_xi_power(l)


def _s5(p: dict) -> tuple[WordPoly, WordPoly]:
    l, w = p["l"], p["w"]
    lhs = Phi(l, (z(1),) + w)
    rhs = WordPoly.zero()
    for j in range(l + 1):
        part = Phi(j, w).prepend(z(1))
        for _ in range(l - j):
            part = part.prepend(xi(1))
        rhs = rhs + (-1) ** (l - j) * part
    return lhs, rhs


def _s6(p: dict) -> tuple[WordPoly, WordPoly]:
    k, w = p["k"], p["w"]
    lhs = WordPoly.zero()
    rhs = WordPoly.zero()
    for l in range(k + 1):
        dv = d_map(_xi_run(k - l))
        lhs = lhs + (-1) ** l * rho(dv, _xi_run(l) + (z(1),) + w)
        rhs = rhs + rho(dv, w).prepend(z(l + 1))
    return lhs, rhs


def _s7(p: dict) -> tuple[WordPoly, WordPoly]:
    s, w = p["s"], p["w"]
    lhs = Z_map(s, (z(1),) + w)
    rhs = WordPoly.zero()
    for l in range(s + 1):
        rhs = rhs + Z_map(s - l, w).prepend(z(l + 1))
    return lhs, rhs


def _s8(p: dict) -> tuple[WordPoly, WordPoly]:
    s, a = p["s"], p["a"]
    lhs = Z_map(s, (z(1),) * a)
    rhs = WordPoly.zero()
    for c in enumerate_compositions(a, s + a):
        rhs = rhs + WordPoly.from_word(tuple(z(ci) for ci in c))
    return lhs, rhs


def _s9(p: dict) -> tuple[WordPoly, WordPoly]:
    s, a, w = p["s"], p["a"], p["w"]
    lhs = phi(s, _xi_run(a) + (z(1),) + w)
    rhs = WordPoly.zero()
    for t in range(s + 1):
        coeff = eta(a, s - t) + eta(a + 1, s - t - 1)
        rhs = rhs + coeff * phi(t, w).prepend(z(1))
    return lhs, rhs


_SYMBOLIC: dict[str, Callable[[dict], tuple[WordPoly, WordPoly]]] = {
    "S1": _s1,
    "S2": _s2,
    "S3": _s3,
    "S4": _s4,
    "S5": _s5,
    "S6": _s6,
    "S7": _s7,
    "S8": _s8,
    "S9": _s9,
}


# -- exact evaluators --------------------------------------------------------


def _e1(ctx: QContext, p: dict) -> tuple[mpq, mpq]:
    v, w, M = p["v"], p["w"], p["M"]
    lhs = A_eval(ctx, WordPoly.from_word(v), M) * A_eval(ctx, WordPoly.from_word(w), M)
    rhs = A_eval(ctx, rho(v, w), M)
    return lhs, rhs


def _e2(ctx: QContext, p: dict) -> tuple[mpq, mpq]:
    v, M = p["v"], p["M"]
    lhs = A_eval(ctx, WordPoly.from_word(v), M, star=True)
    rhs = A_eval(ctx, d_map(v), M)
    return lhs, rhs


def _e3(ctx: QContext, p: dict) -> tuple[mpq, mpq]:
    w, M = p["w"], p["M"]
    lhs = A_eval_direct(ctx, w, M)
    rhs = _ZERO
    for m in range(1, M):
        rhs = rhs + ctx.j_letter(w[0], m) * ctx.a_final(w[1:], m, False)
    return lhs, rhs


def _e4(ctx: QContext, p: dict) -> tuple[mpq, mpq]:
    s, v, N, M = p["s"], p["v"][0], p["N"], p["M"]
    lhs = _ZERO
    rhs = _ZERO
    for chain in itertools.combinations(range(M + 1, N), s + 1):
        ns = tuple(reversed(chain))
        lhs = lhs + p_eval(ctx, ns[:s], ns[s]) * ctx.j_letter(v, ns[s])
        rhs = rhs + ctx.j_letter(v, ns[0]) * p_eval(ctx, ns[1:], M)
        for i in range(1, s + 1):
            term = ctx.q_pow(ns[0]) / ctx.q_int(ns[0])
            for kj in ns[1 : i + 1]:
                term = term / ctx.q_int(kj)
            rhs = rhs + term * p_eval(ctx, ns[i + 1 :], M)
    return lhs, rhs


def _e5(ctx: QContext, p: dict) -> tuple[mpq, mpq]:
    sp, s, w, N = p["sp"], p["s"], p["w"], p["N"]
    lhs = _ZERO
    for m1 in range(2, N):
        for m2 in range(1, m1):
            lhs = lhs + (
                f_eval(ctx, sp, N, m1) * f_eval(ctx, s, m1, m2) * ctx.a_final(w, m2, False)
            )
    pol = phi(s, w)
    rhs = _ZERO
    for m in range(1, N):
        rhs = rhs + f_eval(ctx, sp, N, m) * A_eval(ctx, pol, m)
    return lhs, rhs


def _g_direct(ctx: QContext, l: int, beta: int, M: int) -> mpq:
    # literal weak-chain enumeration M = m_1 >= m_2 >= ... >= m_l >= 1
    def rec(i: int, top: int) -> mpq:
        if i == l:
            return _ONE
        total = _ZERO
        for m in range(1, top + 1):
            total = total + ctx.q_pow(m) / ctx.q_int(m) * rec(i + 1, m)
        return total

    head = ctx.q_pow((beta - 1) * M) / ctx.q_int(M) ** beta
    return head * rec(1, M)


def _e6(ctx: QContext, p: dict) -> tuple[mpq, mpq]:
    j, n, M = p["j"], p["n"], p["M"]
    lhs = _g_direct(ctx, j, n, M)
    rhs = _ZERO
    for t in range(j):
        head = ctx.q_pow((n + j - t - 2) * M) / ctx.q_int(M) ** (n + j - t - 1)
        rhs = rhs + head * ctx.a_final(_xi_run(t), M, True)
    return lhs, rhs


def _e7(ctx: QContext, p: dict) -> tuple[mpq, mpq]:
    k, m1, m2 = p["k"], p["m1"], p["m2"]
    lhs = _ZERO
    for b1, b2 in enumerate_compositions(2, k):
        lhs = lhs + (
            ctx.q_pow((b1 - 1) * m1 + (b2 - 1) * m2) / (ctx.q_int(m1) ** b1 * ctx.q_int(m2) ** b2)
        )
    d = m1 - m2
    rhs = ctx.q_pow((k - 2) * m2) / ctx.q_int(m2) ** (k - 1) / ctx.q_int(d)
    rhs = rhs - ctx.q_pow((k - 2) * m1) / ctx.q_int(m1) ** (k - 1) * ctx.q_pow(d) / ctx.q_int(d)
    return lhs, rhs


def _e8(ctx: QContext, p: dict) -> tuple[mpq, mpq]:
    m, n, L = p["m"], p["n"], p["L"]
    lhs = _ZERO
    for l in range(1, L + 1):
        lhs = lhs + ctx.q_pow(l + m) / (ctx.q_int(l + m) * ctx.q_int(l + n))
    head = ctx.q_pow(m - n) / ctx.q_int(m - n)
    acc = _ZERO
    for l in range(1, m - n + 1):
        acc = acc + ctx.q_pow(l + n) / ctx.q_int(l + n)
    for l in range(L + 1, L + m - n + 1):
        acc = acc - ctx.q_pow(l + n) / ctx.q_int(l + n)
    return lhs, head * acc


_EXACT: dict[str, Callable[[QContext, dict], tuple[mpq, mpq]]] = {
    "E1": _e1,
    "E2": _e2,
    "E3": _e3,
    "E4": _e4,
    "E5": _e5,
    "E6": _e6,
    "E7": _e7,
    "E8": _e8,
}


# -- truncated evaluators ----------------------------------------------------


def _count_admissible(b: int, n: int) -> int:
    # |I_0(b, n)| = C(n-2, b-1): drop one from the leading part
    return math.comb(n - 2, b - 1)


def _geom_factor(ctx: QContext, e: int) -> mpq:
    return (ctx.q / ctx.one_minus_q) ** e


def _nz(w: Word) -> int:
    return sum(1 for u in w if u.kind == "z")


def _cxi(ctx: QContext, w: Word) -> mpq:
    # each xi_k letter summed freely: sum_m q^{km} = q^k/(1-q^k)
    out = _ONE
    for u in w:
        if u.kind == "xi":
            out = out * ctx.q_pow(u.index) / (1 - ctx.q_pow(u.index))
    return out


def _zeta_family(ctx: QContext, indices: Iterable[tuple[int, ...]], X: int) -> CertifiedValue:
    out = CertifiedValue(_ZERO, _ZERO, X)
    for idx in indices:
        out = out + zeta_q(ctx, idx, m_max=X)
    return out


def _t1_lhs_indices(b: int, n: int, a: int) -> list[tuple[int, ...]]:
    return [tuple(alpha) + (1,) * a for alpha in enumerate_admissible(b, n)]


def _t1_rhs_indices(a: int, b: int, n: int) -> list[tuple[int, ...]]:
    out = []
    for beta in enumerate_admissible(a + 1, a + b + 1):
        out.append((beta[0] + n - b - 1,) + tuple(beta)[1:])
    return out


def _t1(ctx: QContext, p: dict, X: int) -> tuple[CertifiedValue, CertifiedValue]:
    a, b, n = p["a"], p["b"], p["n"]
    lhs = _zeta_family(ctx, _t1_lhs_indices(b, n, a), X)
    rhs = _zeta_family(ctx, _t1_rhs_indices(a, b, n), X)
    return lhs, rhs


def _t1_tails(ctx: QContext, p: dict, X: int) -> tuple[mpq, mpq]:
    a, b, n = p["a"], p["b"], p["n"]
    lt = _count_admissible(b, n) * tail_closed_form(ctx, a + b, X)
    rt = _count_admissible(a + 1, a + b + 1) * tail_closed_form(ctx, a + 1, X)
    return lt, rt


def _t2(ctx: QContext, p: dict, X: int) -> tuple[CertifiedValue, CertifiedValue]:
    b, n = p["b"], p["n"]
    lhs = _zeta_family(ctx, _t1_lhs_indices(b, n, 0), X)
    return lhs, zeta_q(ctx, (n,), m_max=X)


def _t2_tails(ctx: QContext, p: dict, X: int) -> tuple[mpq, mpq]:
    b, n = p["b"], p["n"]
    return _count_admissible(b, n) * tail_closed_form(ctx, b, X), tail_closed_form(ctx, 1, X)


def _t3_rhs(ctx: QContext, b: int, n: int, M: int, X: int) -> CertifiedValue:
    rhs = CertifiedValue(g_eval(ctx, b, n - b + 1, M), _ZERO, X)
    for s in range(1, b):
        F = _f_kernel(ctx, s, X - M)
        prof = _k_profile(ctx, b - s, n - s, X)
        part = _ZERO
        inner = _ZERO
        for N in range(M + 1, X + 1):
            fv = F[N - M]
            if fv:
                part = part + prof[N] * fv
                inner = inner + _k_tail(ctx, b - s, n - s, N, X) * fv
        outer = (
            _count_admissible(b - s, n - s)
            * _geom_factor(ctx, b - s - 1)
            * ctx.q_pow(M)
            * ctx.tail_geom(ctx.q * ctx.q, s, X - M)
        )
        rhs = rhs - CertifiedValue(part, inner + outer, X)
    return rhs


def _t3(ctx: QContext, p: dict, X: int) -> tuple[CertifiedValue, CertifiedValue]:
    b, n, M = p["b"], p["n"], p["M"]
    lhs = K_eval(ctx, b, n, M, m_max=X)
    return lhs, _t3_rhs(ctx, b, n, M, X)


def _t3_tails(ctx: QContext, p: dict, X: int) -> tuple[mpq, mpq]:
    b, n, M = p["b"], p["n"], p["M"]
    rt = _ZERO
    for s in range(1, b):
        F = _f_kernel(ctx, s, X - M)
        for N in range(M + 1, X + 1):
            if F[N - M]:
                rt = rt + _k_tail(ctx, b - s, n - s, N, X) * F[N - M]
        rt = rt + (
            _count_admissible(b - s, n - s)
            * _geom_factor(ctx, b - s - 1)
            * ctx.q_pow(M)
            * ctx.tail_geom(ctx.q * ctx.q, s, X - M)
        )
    return _k_tail(ctx, b, n, M, X), rt


def _t4_err(ctx: QContext, b: int, beta: int, M: int, X: int) -> mpq:
    err = _ZERO
    for l in range(1, b):
        err = err + (
            2 ** (l - 1)
            * _geom_factor(ctx, b - l - 1)
            * ctx.q_pow((beta - 1) * M)
            * ctx.tail_geom(ctx.q_pow(beta), l, X - M)
        )
    return err


def _t4(ctx: QContext, p: dict, X: int) -> tuple[CertifiedValue, CertifiedValue]:
    b, m, M = p["b"], p["m"], p["M"]
    beta = m - b + 1
    lhs = K_eval(ctx, b, m, M, m_max=X)
    part = g_eval(ctx, b, beta, M)
    L = X - M
    for l in range(1, b):
        gtab = _g_profile(ctx, b - l, beta, X)
        for r in range(1, l + 1):
            H = _h_kernel(ctx, r, l, L)
            acc = _ZERO
            for t in range(r, L + 1):
                if H[t]:
                    acc = acc + gtab[M + t] * H[t]
            part = part + (-1) ** r * acc
    err = _t4_err(ctx, b, beta, M, X)
    # the discarded chains carry both signs; widen symmetrically
    return lhs, CertifiedValue(part - err, 2 * err, X)


def _t4_tails(ctx: QContext, p: dict, X: int) -> tuple[mpq, mpq]:
    b, m, M = p["b"], p["m"], p["M"]
    return _k_tail(ctx, b, m, M, X), 2 * _t4_err(ctx, b, m - b + 1, M, X)


def _t5_words(b: int, a: int) -> list[tuple[int, dict[Word, int]]]:
    out = []
    for s in range(b):
        pol = Z_map(s, (z(1),) * a)
        if not in_z_subalgebra(pol):
            raise ValueError(f"Z_{s} of a z_1 run left the z-subalgebra: {format_poly(pol)}")
        out.append((s, pol.terms))
    return out


def _t5(ctx: QContext, p: dict, X: int) -> tuple[CertifiedValue, CertifiedValue]:
    a, b, n = p["a"], p["b"], p["n"]
    lhs = _zeta_family(ctx, _t1_lhs_indices(b, n, a), X)
    part = _ZERO
    tail = _ZERO
    for s, terms in _t5_words(b, a):
        for w, c in sorted(terms.items()):
            part = part + c * ctx.a_final((z(n - s),) + w, X + 1, False)
            tail = tail + abs(c) * tail_closed_form(ctx, len(w) + 1, X)
    return lhs, CertifiedValue(part, tail, X)


def _t5_tails(ctx: QContext, p: dict, X: int) -> tuple[mpq, mpq]:
    a, b, n = p["a"], p["b"], p["n"]
    lt = _count_admissible(b, n) * tail_closed_form(ctx, a + b, X)
    rt = _ZERO
    for _, terms in _t5_words(b, a):
        for w, c in terms.items():
            rt = rt + abs(c) * tail_closed_form(ctx, len(w) + 1, X)
    return lt, rt


def _t6_sides(ctx: QContext, p: dict, X: int, partials: bool):
    w, s, l, beta = p["w"], p["s"], p["l"], p["beta"]
    qb = ctx.q_pow(beta - 1)
    lt = ctx.q * _geom_factor(ctx, l - 1) * _cxi(ctx, w) * ctx.tail_geom(qb, s + _nz(w) + 1, X)
    pol = phi(s, w)
    rt = _ZERO
    for w2, c in sorted(pol.terms.items()):
        rt = rt + abs(c) * _cxi(ctx, w2) * ctx.tail_geom(qb, _nz(w2) + 1, X)
    rt = _geom_factor(ctx, l - 1) * rt
    if not partials:
        return lt, rt
    gtab = _g_profile(ctx, l, beta, X)
    conv = _conv_kernel(ctx, s, w, X)
    lp = _ZERO
    for m in range(2, X + 1):
        if conv[m]:
            lp = lp + gtab[m] * conv[m]
    rp = _ZERO
    for w2, c in sorted(pol.terms.items()):
        prof = ctx.a_profile(w2, X, False)
        acc = _ZERO
        for m in range(1, X + 1):
            if prof[m]:
                acc = acc + gtab[m] * prof[m]
        rp = rp + c * acc
    return CertifiedValue(lp, lt, X), CertifiedValue(rp, rt, X)


def _t6(ctx: QContext, p: dict, X: int) -> tuple[CertifiedValue, CertifiedValue]:
    return _t6_sides(ctx, p, X, partials=True)


def _t6_tails(ctx: QContext, p: dict, X: int) -> tuple[mpq, mpq]:
    return _t6_sides(ctx, p, X, partials=False)


_TRUNCATED: dict[str, Callable[[QContext, dict, int], tuple[CertifiedValue, CertifiedValue]]] = {
    "T1": _t1,
    "T2": _t2,
    "T3": _t3,
    "T4": _t4,
    "T5": _t5,
    "T6": _t6,
}

_TAILS: dict[str, Callable[[QContext, dict, int], tuple[mpq, mpq]]] = {
    "T1": _t1_tails,
    "T2": _t2_tails,
    "T3": _t3_tails,
    "T4": _t4_tails,
    "T5": _t5_tails,
    "T6": _t6_tails,
}


def _floor_for(tag: str, p: dict) -> int:
    if tag in ("T1", "T5"):
        return p["a"] + p["b"]
    if tag == "T2":
        return p["b"]
    if tag in ("T3", "T4"):
        return p["M"] + p["b"]
    return p["s"] + len(p["w"]) + 2


def _auto_m_max(ctx: QContext, tag: str, params: dict, ceiling: mpq) -> int:
    """Smallest block multiple with both side tails at most ceiling/16 and
    below q^{X/2} (squared comparison keeps everything rational)."""
    floor = _floor_for(tag, params)
    X = _AUTO_BLOCK * ((floor + _AUTO_BLOCK) // _AUTO_BLOCK)
    target = ceiling / 16
    while X < _AUTO_CAP:
        lt, rt = _TAILS[tag](ctx, params, X)
        worst = max(lt, rt)
        if lt <= target and rt <= target and worst * worst <= ctx.q_pow(X):
            return X
        X += _AUTO_BLOCK
    return _AUTO_CAP


# -- single-check entry points -----------------------------------------------


def _normalize_params(tag: str, params: dict) -> dict:
    out = {}
    for name, val in params.items():
        if _is_word_param(tag, name) and isinstance(val, str):
            out[name] = parse_word(val)
        elif _is_word_param(tag, name) and val is not None and not isinstance(val, tuple):
            out[name] = tuple(val)
        else:
            out[name] = val
    return out


def _serial_params(tag: str, params: dict, q: mpq | None, mutate: str | None) -> dict:
    spec = IDENTITY_TAGS[tag]
    out: dict = {}
    for name in spec.params:
        val = params[name]
        out[name] = format_word(val) if _is_word_param(tag, name) else val
    if q is not None:
        out["q"] = _ser_q(q)
    if mutate is not None:
        out["mutate"] = mutate
    return out


def _check_mutation(mode: str, mutate: str | None) -> None:
    if mutate is None:
        return
    if mutate not in MUTATIONS:
        raise ValueError(f"unknown mutation {mutate!r}; expected one of {MUTATIONS}")
    kind = mutate.split("-", 1)[1]
    if mode == "symbolic" and kind != "extra-word":
        raise ValueError(f"mutation {mutate} does not apply to symbolic checks")
    if mode != "symbolic" and kind != "extra-term":
        raise ValueError(f"mutation {mutate} does not apply to {mode} checks")


def check(
    tag: str,
    params: dict,
    ctx: QContext | None = None,
    *,
    m_max: int | None = None,
    ceiling: mpq = DEFAULT_CEILING,
    timing: bool = False,
) -> CheckResult:
    """Run one identity check and return its CheckResult.

    `params` holds the identity's parameters; the optional "mutate" entry
    perturbs one side to make the check fail (a negative control).  Numeric
    modes require `ctx`; truncated mode resolves `m_max` automatically when
    not given.  Unknown tags raise KeyError; invalid parameters raise
    ValueError.  An under-truncated but not refuted truncated check returns
    verdict "indeterminate".
    """
    spec = IDENTITY_TAGS.get(tag)
    if spec is None:
        raise KeyError(f"unknown identity tag {tag!r}")
    params = _normalize_params(tag, dict(params))
    mutate = params.pop("mutate", None)
    _check_mutation(spec.mode, mutate)
    _validate_params(tag, params)
    ceiling = mpq(ceiling)
    if ceiling <= 0:
        raise ValueError(f"ceiling must be positive, got {ceiling}")
    if spec.mode != "symbolic" and ctx is None:
        raise ValueError(f"{tag} needs a QContext (a value of q)")

    t0 = time.perf_counter_ns() if timing else None
    q = ctx.q if ctx is not None and spec.mode != "symbolic" else None

    if spec.mode == "symbolic":
        lhs, rhs = _SYMBOLIC[tag](params)
        if mutate == "lhs-extra-word":
            lhs = lhs + WordPoly.from_word((z(1),))
        elif mutate == "rhs-extra-word":
            rhs = rhs + WordPoly.from_word((z(1),))
        verdict = "pass" if lhs == rhs else "fail"
        message = "" if verdict == "pass" else f"sides differ in {len(lhs - rhs)} words"
        slack = None
        lhs_s, rhs_s = format_poly(lhs), format_poly(rhs)
    elif spec.mode == "exact":
        lhs, rhs = _EXACT[tag](ctx, params)
        if mutate == "lhs-extra-term":
            lhs = lhs + ctx.q
        elif mutate == "rhs-extra-term":
            rhs = rhs + ctx.q
        verdict = "pass" if lhs == rhs else "fail"
        message = "" if verdict == "pass" else f"difference {_ser_rat(lhs - rhs)}"
        slack = None
        lhs_s, rhs_s = _ser_rat(lhs), _ser_rat(rhs)
    else:
        if m_max is None:
            m_max = _auto_m_max(ctx, tag, params, ceiling)
        try:
            lhs, rhs = _TRUNCATED[tag](ctx, params, m_max)
        except ValueError as exc:
            return CheckResult(
                identity=tag,
                params=_serial_params(tag, params, q, mutate),
                mode=spec.mode,
                verdict="indeterminate",
                lhs="",
                rhs="",
                slack=None,
                elapsed_ms=_elapsed(t0),
                message=f"m_max={m_max} unusable: {exc}",
            )
        if mutate == "lhs-extra-term":
            lhs = CertifiedValue(lhs.partial + ctx.q, lhs.tail, lhs.terms_used)
        elif mutate == "rhs-extra-term":
            rhs = CertifiedValue(rhs.partial + ctx.q, rhs.tail, rhs.terms_used)
        gap = lhs.partial - rhs.partial
        slack_val = (lhs.tail + rhs.tail) - abs(gap)
        slack = _ser_rat(slack_val)
        if not lhs.intersects(rhs):
            verdict = "fail"
            message = "intervals disjoint"
        elif lhs.tail <= ceiling and rhs.tail <= ceiling:
            verdict = "pass"
            message = ""
        else:
            verdict = "indeterminate"
            message = f"tail exceeds ceiling {_ser_rat(ceiling)} at m_max={m_max}"
        lhs_s, rhs_s = _ser_cv(lhs), _ser_cv(rhs)

    return CheckResult(
        identity=tag,
        params=_serial_params(tag, params, q, mutate),
        mode=spec.mode,
        verdict=verdict,
        lhs=lhs_s,
        rhs=rhs_s,
        slack=slack,
        elapsed_ms=_elapsed(t0),
        message=message,
    )


def _elapsed(t0: int | None) -> int | None:
    if t0 is None:
        return None
    return (time.perf_counter_ns() - t0) // 1_000_000


def check_symbolic(tag: str, params: dict, **kw) -> CheckResult:
    """Run a symbolic (word algebra) identity check; tag must be S1..S9."""
    _expect_mode(tag, "symbolic")
    return check(tag, params, None, **kw)


def check_exact(tag: str, params: dict, ctx: QContext, **kw) -> CheckResult:
    """Run an exact finite-sum identity check; tag must be E1..E8."""
    _expect_mode(tag, "exact")
    return check(tag, params, ctx, **kw)


def check_truncated(
    tag: str, params: dict, ctx: QContext, m_max: int | None = None, **kw
) -> CheckResult:
    """Run a certified-interval identity check; tag must be T1..T6."""
    _expect_mode(tag, "truncated")
    return check(tag, params, ctx, m_max=m_max, **kw)


def _expect_mode(tag: str, mode: str) -> None:
    spec = IDENTITY_TAGS.get(tag)
    if spec is None:
        raise KeyError(f"unknown identity tag {tag!r}")
    if spec.mode != mode:
        raise ValueError(f"{tag} is a {spec.mode} identity, not {mode}")


# -- plan files --------------------------------------------------------------


_ALPHABETS: dict[str, tuple[Letter, ...]] = {
    "d1": (z(1), xi(1)),
    "xi": (xi(1), xi(2)),
    "xi3": (xi(1), xi(2), xi(3)),
    "zx": (z(1), z(2), z(3), xi(1), xi(2)),
    "z": (z(1), z(2), z(3)),
}


@dataclass(frozen=True)
class PlanEntry:
    """One fully expanded check: tag, concrete params, optional q and mutation."""

    tag: str
    params: dict
    q: mpq | None
    mutate: str | None
    line_no: int


def _parse_q_value(text: str) -> mpq:
    num, sep, den = text.partition("/")
    if not sep:
        raise ValueError(f"q must be written as p/r, got {text!r}")
    try:
        val = mpq(int(num), int(den))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational {text!r}: {exc}") from None
    if not (0 < val < 1):
        raise ValueError(f"q must satisfy 0 < q < 1, got {text}")
    return val


def _parse_int_values(text: str) -> list[int]:
    out: list[int] = []
    for tok in text.split(","):
        lo, sep, hi = tok.partition("..")
        if sep:
            a, b = int(lo), int(hi)
            if b < a:
                raise ValueError(f"empty range {tok!r}")
            out.extend(range(a, b + 1))
        else:
            out.append(int(tok))
    return out


def _macro_words(text: str) -> list[Word]:
    name, sep, rng = text[1:].partition(":")
    if name not in _ALPHABETS or not sep:
        raise ValueError(f"unknown word macro {text!r}")
    lo_s, dots, hi_s = rng.partition("..")
    if dots:
        lo, hi = int(lo_s), int(hi_s)
    else:
        lo, hi = 0, int(lo_s)
    if lo < 0 or hi < lo:
        raise ValueError(f"bad length range in {text!r}")
    alphabet = _ALPHABETS[name]
    out: list[Word] = []
    for length in range(lo, hi + 1):
        out.extend(tuple(p) for p in itertools.product(alphabet, repeat=length))
    return out


def _parse_word_values(text: str) -> list[Word]:
    if text.startswith("@"):
        return _macro_words(text)
    return [parse_word(tok) for tok in text.split(",")]


_ALLOWED_EXPR_NODES = (
    ast.Expression,
    ast.BoolOp,
    ast.And,
    ast.Or,
    ast.UnaryOp,
    ast.Not,
    ast.USub,
    ast.BinOp,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Compare,
    ast.Lt,
    ast.LtE,
    ast.Gt,
    ast.GtE,
    ast.Eq,
    ast.NotEq,
    ast.Name,
    ast.Load,
    ast.Constant,
)


def _compile_filter(expr: str) -> Callable[[dict], bool]:
    """Compile a row filter like "n>=b+1" down to a safe evaluator."""
    tree = ast.parse(expr, mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_EXPR_NODES):
            raise ValueError(f"filter {expr!r} uses unsupported syntax ({type(node).__name__})")
        if isinstance(node, ast.Constant) and not isinstance(node.value, int):
            raise ValueError(f"filter {expr!r} may only use integers")
    code = compile(tree, "<require>", "eval")

    def run(names: dict) -> bool:
        return bool(eval(code, {"__builtins__": {}}, names))

    return run


def parse_plan(text: str, default_q: Sequence[mpq] = DEFAULT_Q) -> list[PlanEntry]:
    """Expand a plan file into a deterministic list of PlanEntry rows.

    Each nonempty, non-comment line reads `TAG key=value ...`.  Integer
    values may be single (`3`), ranges (`1..4`), or comma lists; word values
    are word literals (`z1*xi1`, `1`) or macros like `@d1:3` (all words over
    z_1, xi_1 of length at most 3) and `@zx:1..2`.  Special keys: `q=` a
    comma list of rationals (default: the suite q list; ignored by symbolic
    identities), `require=` an integer row filter, `mutate=` a negative
    control.  Axes expand in written order with q innermost.
    """
    entries: list[PlanEntry] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        tag = fields[0]
        spec = IDENTITY_TAGS.get(tag)
        if spec is None:
            raise ValueError(f"line {line_no}: unknown identity tag {tag!r}")
        axes: list[tuple[str, list]] = []
        q_values: list[mpq] | None = None
        row_filter = None
        mutate = None
        for field in fields[1:]:
            key, sep, value = field.partition("=")
            if not sep or not key or not value:
                raise ValueError(f"line {line_no}: expected key=value, got {field!r}")
            if key == "q":
                q_values = [_parse_q_value(tok) for tok in value.split(",")]
            elif key == "require":
                row_filter = _compile_filter(value)
            elif key == "mutate":
                _check_mutation(spec.mode, value)
                mutate = value
            elif key in spec.params:
                if _is_word_param(tag, key):
                    axes.append((key, _parse_word_values(value)))
                else:
                    axes.append((key, _parse_int_values(value)))
            else:
                raise ValueError(f"line {line_no}: {tag} has no parameter {key!r}")
        declared = {name for name, _ in axes}
        missing = set(spec.params) - declared
        if missing:
            raise ValueError(f"line {line_no}: {tag} is missing parameters {sorted(missing)}")
        if spec.mode == "symbolic":
            q_axis: list[mpq | None] = [None]
        else:
            q_axis = list(q_values if q_values is not None else default_q)
            if not q_axis:
                raise ValueError(f"line {line_no}: no q values for {tag}")
        names = [name for name, _ in axes]
        for combo in itertools.product(*(vals for _, vals in axes)):
            params = dict(zip(names, combo))
            if row_filter is not None:
                ints = {k: v for k, v in params.items() if isinstance(v, int)}
                if not row_filter(ints):
                    continue
            for qv in q_axis:
                entries.append(PlanEntry(tag, dict(params), qv, mutate, line_no))
    return entries


# -- suite runner ------------------------------------------------------------


def _run_entry(
    entry: PlanEntry,
    ctxs: dict,
    m_max: int | None,
    ceiling: mpq,
    timing: bool,
) -> CheckResult:
    spec = IDENTITY_TAGS[entry.tag]
    try:
        params = dict(entry.params)
        if entry.mutate is not None:
            params["mutate"] = entry.mutate
        ctx = ctxs.get(entry.q) if entry.q is not None else None
        return check(entry.tag, params, ctx, m_max=m_max, ceiling=ceiling, timing=timing)
    except Exception as exc:  # noqa: BLE001 - suite must not abort on one row
        ser = {}
        for name in spec.params:
            val = entry.params.get(name)
            ser[name] = format_word(val) if isinstance(val, tuple) else val
        if entry.q is not None:
            ser["q"] = _ser_q(entry.q)
        if entry.mutate is not None:
            ser["mutate"] = entry.mutate
        return CheckResult(
            identity=entry.tag,
            params=ser,
            mode=spec.mode,
            verdict="indeterminate",
            lhs="",
            rhs="",
            slack=None,
            elapsed_ms=None,
            message=f"error: {type(exc).__name__}: {exc}",
        )


def run_suite(
    plan_text: str,
    *,
    q_values: Sequence[Union[mpq, str]] | None = None,
    m_max: int | None = None,
    ceiling: mpq = DEFAULT_CEILING,
    jobs: int = 1,
    timing: bool = False,
    plan_name: str = "-",
) -> dict:
    """Run every check in a plan and return the report dictionary.

    Rows run in plan order (optionally on a thread pool); the report is a
    deterministic fold: overall verdict "fail" if any row fails, else
    "indeterminate" if any row is indeterminate, else "pass".  Errors in a
    row become indeterminate entries rather than aborting the suite.
    """
    if q_values is None:
        qs = list(DEFAULT_Q)
    else:
        qs = [q if isinstance(q, mpq) else _parse_q_value(str(q)) for q in q_values]
    ceiling = mpq(ceiling)
    entries = parse_plan(plan_text, qs)
    ctxs = {q: QContext(q) for q in {e.q for e in entries if e.q is not None}}

    def run_one(entry: PlanEntry) -> CheckResult:
        return _run_entry(entry, ctxs, m_max, ceiling, timing)

    if jobs > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, entries))
    else:
        results = [run_one(e) for e in entries]

    counts = {"pass": 0, "fail": 0, "indeterminate": 0}
    for res in results:
        counts[res.verdict] += 1
    if counts["fail"]:
        overall = "fail"
    elif counts["indeterminate"]:
        overall = "indeterminate"
    else:
        overall = "pass"
    return {
        "engine": f"qmzv {__version__}",
        "plan": plan_name,
        "plan_sha256": hashlib.sha256(plan_text.encode("utf-8")).hexdigest(),
        "q_default": [_ser_q(q) for q in qs],
        "m_max": m_max,
        "ceiling": _ser_rat(ceiling),
        "timing": timing,
        "checks": [r.to_record() for r in results],
        "summary": {"total": len(results), **counts},
        "verdict": overall,
    }
