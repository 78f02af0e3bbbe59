"""Exact rational evaluation of the q-series objects.

Everything is computed with exact rational arithmetic (gmpy2.mpq); no
floating point enters any verified value.  Finite sums (A, A*, f, g, p, h)
are exact.  Infinite sums (zeta_q, K) are returned as CertifiedValue
intervals [partial, partial + tail] where the tail is an exact rational
majorant of the discarded remainder; the derivations of all majorants are
documented in docs/tail_bounds.md.

The evaluation engine is a suffix dynamic programming over truncation
profiles: for a word w = u_1 ... u_r,

    A_{u w'}(M) = sum_{M > m > 0} J_u(m) A_{w'}(m)

is filled bottom-up with two rolling arrays, giving every A_w(m) for
m <= M in O(r M) rational operations.  A QContext memoizes powers of q,
q-integers, profiles, and final values so that suite runs share work.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

from gmpy2 import mpq

from .indices import Composition, enumerate_admissible, enumerate_compositions
from .word_algebra import Letter, Word, WordPoly, xi, z

_ZERO = mpq(0)
_ONE = mpq(1)

_PROFILE_CACHE_SIZE = 8
_CONV_CACHE_SIZE = 6


class QContext:
    """Exact rational q with 0 < q < 1, plus internal memo tables."""

    def __init__(self, q) -> None:
        q = mpq(q)
        if not (0 < q < 1):
            raise ValueError(f"q must satisfy 0 < q < 1, got {q}")
        self.q = q
        self.one_minus_q = 1 - q
        self._pow: list[mpq] = [_ONE, q]
        self._qint: list = [None, _ONE]
        # finite-sum memo tables
        self._a_final: dict = {}
        self._profiles: OrderedDict = OrderedDict()
        self._k_profiles: dict = {}
        self._f_kernels: dict = {}
        self._h_kernels: dict = {}
        self._conv: OrderedDict = OrderedDict()
        # tail machinery: (base_num, base_den, r) -> growing partial sums
        self._tail_partials: dict = {}

    # -- scalars ------------------------------------------------------------

    def q_pow(self, e: int) -> mpq:
        if e < 0:
            raise ValueError(f"negative exponent {e}")
        pw = self._pow
        while len(pw) <= e:
            pw.append(pw[-1] * self.q)
        return pw[e]

    def q_int(self, m: int) -> mpq:
        if m < 1:
            raise ValueError(f"q-integer needs m >= 1, got {m}")
        qi = self._qint
        while len(qi) <= m:
            qi.append((1 - self.q_pow(len(qi))) / self.one_minus_q)
        return qi[m]

    def j_letter(self, u: Letter, m: int) -> mpq:
        k = u.index
        if u.kind == "z":
            return self.q_pow((k - 1) * m) / self.q_int(m) ** k
        return self.q_pow(k * m) / self.q_int(m) ** k

    # -- tail majorants -----------------------------------------------------

    def tail_geom(self, x: mpq, r: int, M: int) -> mpq:
        """sum_{m > M} C(m-1, r-1) x^m, exactly, for 0 < x < 1, M >= 0."""
        if r < 1:
            raise ValueError(f"tail_geom needs r >= 1, got {r}")
        if M < 0:
            raise ValueError(f"tail_geom needs M >= 0, got {M}")
        x = mpq(x)
        key = (x.numerator, x.denominator, r)
        entry = self._tail_partials.get(key)
        if entry is None:
            full = (x / (1 - x)) ** r
            entry = [full, [_ZERO]]  # closed form, partial sums by M
            self._tail_partials[key] = entry
        full, partials = entry
        while len(partials) <= M:
            m = len(partials)
            partials.append(partials[-1] + math.comb(m - 1, r - 1) * x**m)
        return full - partials[M]

    # -- profile engine -----------------------------------------------------

    def a_profile(self, w: Word, X: int, star: bool = False) -> list:
        """List P with P[m] = A_w(m) (or A*_w(m)) for 0 <= m <= X."""
        key = (w, star, X)
        prof = self._profiles.get(key)
        if prof is not None:
            self._profiles.move_to_end(key)
            return prof
        prev = [_ONE] * (X + 1)
        for u in reversed(w):
            jvals = [_ZERO] * X
            for m in range(1, X):
                jvals[m] = self.j_letter(u, m)
            cur = [_ZERO] * (X + 1)
            acc = _ZERO
            if star:
                for m in range(2, X + 1):
                    acc = acc + jvals[m - 1] * prev[m]
                    cur[m] = acc
            else:
                for m in range(2, X + 1):
                    acc = acc + jvals[m - 1] * prev[m - 1]
                    cur[m] = acc
            prev = cur
        self._profiles[key] = prev
        if len(self._profiles) > _PROFILE_CACHE_SIZE:
            self._profiles.popitem(last=False)
        return prev

    def a_final(self, w: Word, M: int, star: bool = False) -> mpq:
        key = (w, star, M)
        val = self._a_final.get(key)
        if val is not None:
            return val
        if not w:
            val = _ONE
        else:
            prof_key = (w, star, M)
            prof = self._profiles.get(prof_key)
            if prof is not None:
                val = prof[M]
            else:
                val = self._a_rolling(w, M, star)
        self._a_final[key] = val
        return val

    def _a_rolling(self, w: Word, M: int, star: bool) -> mpq:
        prev = [_ONE] * (M + 1)
        for u in reversed(w):
            cur = [_ZERO] * (M + 1)
            acc = _ZERO
            if star:
                for m in range(2, M + 1):
                    acc = acc + self.j_letter(u, m - 1) * prev[m]
                    cur[m] = acc
            else:
                for m in range(2, M + 1):
                    acc = acc + self.j_letter(u, m - 1) * prev[m - 1]
                    cur[m] = acc
            prev = cur
        return prev[M]


@dataclass(frozen=True)
class CertifiedValue:
    """The interval [partial, partial + tail] enclosing an infinite sum."""

    partial: mpq
    tail: mpq
    terms_used: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "partial", mpq(self.partial))
        object.__setattr__(self, "tail", mpq(self.tail))
        if self.tail < 0:
            raise ValueError(f"tail bound must be >= 0, got {self.tail}")

    @property
    def lower(self) -> mpq:
        return self.partial

    @property
    def upper(self) -> mpq:
        return self.partial + self.tail

    @classmethod
    def exact(cls, value, terms_used: int = 0) -> "CertifiedValue":
        return cls(mpq(value), _ZERO, terms_used)

    def __add__(self, other: "CertifiedValue") -> "CertifiedValue":
        if not isinstance(other, CertifiedValue):
            return NotImplemented
        return CertifiedValue(
            self.partial + other.partial,
            self.tail + other.tail,
            min(self.terms_used, other.terms_used),
        )

    def __sub__(self, other: "CertifiedValue") -> "CertifiedValue":
        # [a, a+s] - [b, b+t] = [a - b - t, a - b + s]
        if not isinstance(other, CertifiedValue):
            return NotImplemented
        return CertifiedValue(
            self.partial - other.partial - other.tail,
            self.tail + other.tail,
            min(self.terms_used, other.terms_used),
        )

    def scaled(self, c) -> "CertifiedValue":
        c = mpq(c)
        if c < 0:
            raise ValueError("scaling factor must be >= 0")
        return CertifiedValue(self.partial * c, self.tail * c, self.terms_used)

    def intersects(self, other: "CertifiedValue") -> bool:
        return self.lower <= other.upper and other.lower <= self.upper


# -- public operations ------------------------------------------------------


def q_int(ctx: QContext, m: int) -> mpq:
    """The q-integer [m] = (1 - q^m)/(1 - q)."""
    return ctx.q_int(m)


def J_letter(ctx: QContext, u: Letter, m: int) -> mpq:
    """J_{z_k}(m) = q^{(k-1)m}/[m]^k and J_{xi_k}(m) = q^{km}/[m]^k."""
    if m < 1:
        raise ValueError(f"J needs m >= 1, got {m}")
    return ctx.j_letter(u, m)


def _as_terms(p: Union[WordPoly, Word, Iterable[Letter]]) -> list[tuple[Word, int]]:
    if isinstance(p, WordPoly):
        return [(w, c) for w, c in sorted(p.terms.items())]
    return [(tuple(p), 1)]


def A_eval(ctx: QContext, p: Union[WordPoly, Word], M: int, star: bool = False) -> mpq:
    """A_p(M) (strict chains below M) or A*_p(M) (weak chains, strict top)."""
    if M < 1:
        raise ValueError(f"A needs M >= 1, got {M}")
    total = _ZERO
    for w, c in _as_terms(p):
        total = total + c * ctx.a_final(w, M, star)
    return total


def A_eval_direct(
    ctx: QContext, w: Union[Word, Iterable[Letter]], M: int, star: bool = False, max_len: int = 4
) -> mpq:
    """Literal nested-loop evaluation of A_w(M); an oracle for A_eval."""
    w = tuple(w)
    if M < 1:
        raise ValueError(f"A needs M >= 1, got {M}")
    if len(w) > max_len:
        raise ValueError(f"direct evaluation limited to words of length <= {max_len}")

    def rec(i: int, upper: int) -> mpq:
        if i == len(w):
            return _ONE
        total = _ZERO
        for m in range(1, upper):
            total = total + ctx.j_letter(w[i], m) * rec(i + 1, m + 1 if star else m)
        return total

    return rec(0, M)


def f_eval(ctx: QContext, l: int, N: int, M: int) -> mpq:
    """f_l(N, M): chains N = k_1 > ... > k_l > M; zero unless N - M >= l."""
    if l < 1:
        raise ValueError(f"f needs l >= 1, got {l}")
    if M < 0:
        raise ValueError(f"f needs M >= 0, got {M}")
    D = N - M
    if D < l:
        return _ZERO
    head = ctx.q_pow(D) / ctx.q_int(D)
    if l == 1:
        return head
    return head * ctx.a_final((z(1),) * (l - 1), D, False)


def g_eval(ctx: QContext, l: int, beta: int, M: int) -> mpq:
    """g_{l,beta}(M): weak chains M = m_1 >= ... >= m_l >= 1."""
    if l < 1 or beta < 1 or M < 1:
        raise ValueError(f"g needs l, beta, M >= 1, got {(l, beta, M)}")
    head = ctx.q_pow((beta - 1) * M) / ctx.q_int(M) ** beta
    if l == 1:
        return head
    return head * ctx.a_final((xi(1),) * (l - 1), M + 1, True)


def p_eval(ctx: QContext, ns: Sequence[int], n_last: int) -> mpq:
    """p(n_1, ..., n_s; n_last) with strictly decreasing ns > n_last >= 1."""
    ns = tuple(ns)
    if n_last < 1:
        raise ValueError(f"p needs n_last >= 1, got {n_last}")
    if not ns:
        return _ONE
    if any(ns[i] <= ns[i + 1] for i in range(len(ns) - 1)) or ns[-1] <= n_last:
        raise ValueError(f"p needs strictly decreasing arguments, got {ns} ; {n_last}")
    d1 = ns[0] - n_last
    out = ctx.q_pow(d1) / ctx.q_int(d1)
    for nj in ns[1:]:
        out = out / ctx.q_int(nj - n_last)
    return out


def h_eval(ctx: QContext, r: int, l: int, Ns: Sequence[int], M: int) -> mpq:
    """h_{r,l}(N_1, ..., N_r, M) = sum over c in I(r,l) of chained f-factors."""
    Ns = tuple(Ns)
    if r < 1 or l < r:
        raise ValueError(f"h needs 1 <= r <= l, got r={r}, l={l}")
    if len(Ns) != r:
        raise ValueError(f"h needs exactly r={r} chain points, got {Ns}")
    if any(Ns[i] <= Ns[i + 1] for i in range(r - 1)) or Ns[-1] <= M:
        raise ValueError(f"h needs strictly decreasing N_1 > ... > N_r > M, got {Ns} ; {M}")
    total = _ZERO
    for comp in enumerate_compositions(r, l):
        prod = _ONE
        for j in range(r - 1):
            prod = prod * f_eval(ctx, comp[j], Ns[j], Ns[j + 1])
        prod = prod * f_eval(ctx, comp[r - 1], Ns[r - 1], M)
        total = total + prod
    return total


# -- truncated infinite sums ------------------------------------------------


def tail_closed_form(ctx: QContext, r: int, M: int) -> mpq:
    """sum_{m > M} C(m-1, r-1) q^m: the depth-r chain-count majorant tail."""
    return ctx.tail_geom(ctx.q, r, M)


def _default_m_max(ctx: QContext, r: int, floor: int) -> int:
    # smallest M with tail <= q^{M/2}, compared as tail^2 <= q^M to stay rational
    M = max(floor, 1)
    while True:
        t = tail_closed_form(ctx, r, M)
        if t * t <= ctx.q_pow(M):
            return M
        M += 1


def zeta_q(ctx: QContext, alpha, m_max: int | None = None) -> CertifiedValue:
    """The q-analogue multiple zeta value at an admissible index, truncated.

    The partial sum runs over chains m_1 > ... > m_r > 0 with m_1 <= m_max;
    the tail is the exact majorant tail_closed_form(r, m_max).  When m_max is
    omitted, the smallest bound with tail <= q^{m_max/2} is used.
    """
    parts = tuple(alpha.parts) if isinstance(alpha, Composition) else tuple(alpha)
    if not parts or any((not isinstance(a, int)) or a < 1 for a in parts):
        raise ValueError(f"index must be a nonempty tuple of positive integers, got {parts}")
    if parts[0] < 2:
        raise ValueError(f"index {parts} is not admissible (first entry must be >= 2)")
    r = len(parts)
    if m_max is None:
        m_max = _default_m_max(ctx, r, r)
    if m_max < r:
        raise ValueError(f"m_max={m_max} cannot hold a depth-{r} chain")
    word = tuple(z(a) for a in parts)
    partial = ctx.a_final(word, m_max + 1, False)
    return CertifiedValue(partial, tail_closed_form(ctx, r, m_max), m_max)


def _k_profile(ctx: QContext, b: int, n: int, X: int) -> list:
    """List P with P[N] = the m_1 <= X partial sum of K_{b,n}(N), 1 <= N <= X."""
    key = (b, n, X)
    prof = ctx._k_profiles.get(key)
    if prof is not None:
        return prof
    prof = [_ZERO] * (X + 1)
    if b == 1:
        for N in range(1, X + 1):
            prof[N] = ctx.q_pow((n - 1) * N) / ctx.q_int(N) ** n
    else:
        for alpha in enumerate_admissible(b, n):
            # T[m] = sum over chains m_1 > ... > m_j = m (m_1 <= X) of the
            # first j letter weights; grow j from 1 to b - 1, then pin m_b = N
            T = [_ZERO] * (X + 1)
            for m in range(1, X + 1):
                T[m] = ctx.j_letter(z(alpha[0]), m)
            for j in range(1, b - 1):
                S = _suffix_sums(T)
                for m in range(1, X + 1):
                    T[m] = ctx.j_letter(z(alpha[j]), m) * S[m]
            S = _suffix_sums(T)
            for N in range(1, X + 1):
                prof[N] = prof[N] + ctx.j_letter(z(alpha[b - 1]), N) * S[N]
    ctx._k_profiles[key] = prof
    return prof


def _suffix_sums(T: list) -> list:
    """S[m] = sum of T[m'] over m < m' <= X."""
    X = len(T) - 1
    S = [_ZERO] * (X + 1)
    for m in range(X - 1, 0, -1):
        S[m] = S[m + 1] + T[m + 1]
    return S


def _k_tail(ctx: QContext, b: int, n: int, M: int, X: int) -> mpq:
    if b == 1:
        return _ZERO
    # each discarded chain has leading index m_1 > X; C(n-2, b-1) indices and
    # C(m_1 - M - 1, b - 2) chains share it, each term at most q^{m_1}
    scale = math.comb(n - 2, b - 1) * ctx.q_pow(M)
    return scale * ctx.tail_geom(ctx.q, b - 1, X - M)


def K_eval(ctx: QContext, b: int, n: int, M: int, m_max: int | None = None) -> CertifiedValue:
    """Truncation of the kernel sum K_{b,n}(M) over admissible depth-b weight-n
    indices with the innermost chain point pinned at M."""
    if b < 1 or n < 2 or M < 1:
        raise ValueError(f"K needs b >= 1, n >= 2, M >= 1, got {(b, n, M)}")
    if n <= b:
        raise ValueError(f"K needs n >= b + 1 so admissible indices exist, got b={b}, n={n}")
    if m_max is None:
        m_max = _default_m_max(ctx, max(b - 1, 1), M + b + 1)
    if m_max <= M + b:
        raise ValueError(f"m_max={m_max} too small; need m_max > M + b = {M + b}")
    prof = _k_profile(ctx, b, n, m_max)
    return CertifiedValue(prof[M], _k_tail(ctx, b, n, M, m_max), m_max)


# -- difference-kernel arrays ------------------------------------------------
#
# f_l(N, M) depends on N and M only through d = N - M, so sums over chains
# N_1 > N_2 > ... > M collapse to convolutions over the gap variables.  The
# arrays below are the workhorses of the truncated identity checks.


def _f_kernel(ctx: QContext, l: int, L: int) -> list:
    """List F with F[d] = f_l(M + d, M) for 0 <= d <= L (zero below d = l)."""
    key = (l, L)
    arr = ctx._f_kernels.get(key)
    if arr is None:
        prof = ctx.a_profile((z(1),) * (l - 1), max(L, 1), False)
        arr = [_ZERO] * (L + 1)
        for d in range(l, L + 1):
            arr[d] = ctx.q_pow(d) / ctx.q_int(d) * prof[d]
        ctx._f_kernels[key] = arr
    return arr


def _h_kernel(ctx: QContext, r: int, l: int, L: int) -> list:
    """List H with H[t] = sum of h_{r,l}(N_1, ..., N_r, M) over all chains
    N_1 > ... > N_r > M with N_1 - M = t; an r-fold convolution of f-kernels."""
    key = (r, l, L)
    arr = ctx._h_kernels.get(key)
    if arr is not None:
        return arr
    if r == 1:
        arr = _f_kernel(ctx, l, L)
    else:
        arr = [_ZERO] * (L + 1)
        for c1 in range(1, l - r + 2):
            F = _f_kernel(ctx, c1, L)
            G = _h_kernel(ctx, r - 1, l - c1, L)
            for t in range(r, L + 1):
                acc = _ZERO
                for d in range(c1, t - r + 2):
                    if F[d]:
                        acc = acc + F[d] * G[t - d]
                arr[t] = arr[t] + acc
    ctx._h_kernels[key] = arr
    return arr


def _conv_kernel(ctx: QContext, s: int, w: Word, X: int) -> list:
    """List C with C[m] = sum over 0 < m' < m of f_s(m, m') A_w(m'), m <= X."""
    key = (s, w, X)
    arr = ctx._conv.get(key)
    if arr is not None:
        ctx._conv.move_to_end(key)
        return arr
    F = _f_kernel(ctx, s, X)
    P = ctx.a_profile(w, X, False)
    arr = [_ZERO] * (X + 1)
    for m in range(2, X + 1):
        acc = _ZERO
        for mp in range(1, m):
            fv = F[m - mp]
            if fv:
                acc = acc + fv * P[mp]
        arr[m] = acc
    ctx._conv[key] = arr
    if len(ctx._conv) > _CONV_CACHE_SIZE:
        ctx._conv.popitem(last=False)
    return arr


def _g_profile(ctx: QContext, l: int, beta: int, X: int) -> list:
    """List G with G[m] = g_{l,beta}(m) for 1 <= m <= X."""
    prof = ctx.a_profile((xi(1),) * (l - 1), X + 1, True)
    out = [_ZERO] * (X + 1)
    for m in range(1, X + 1):
        out[m] = ctx.q_pow((beta - 1) * m) / ctx.q_int(m) ** beta * prof[m + 1]
    return out
