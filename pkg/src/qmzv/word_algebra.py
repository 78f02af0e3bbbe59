"""Noncommutative word algebra over the integers.

The algebra is freely generated by two families of letters z_k and xi_k
(k >= 1).  Words are tuples of letters, the empty word is the unit, and a
polynomial is a finite map from words to nonzero integer coefficients kept
in canonical form.  On top of the ring operations the module implements the
maps used by the verifier:

* ``rho``     -- stuffle-style product 'kernel': A_v(M) A_w(M) = A_rho(v,w)(M)
* ``circ``    -- xi_k o (xi_l v) = xi_{k+l} v
* ``d_map``   -- converts weak-inequality sums to strict ones
* ``phi``     -- contraction of an f-factor through a harmonic word
* ``Phi``     -- signed sums of phi-compositions
* ``Z_map``   -- Z_s(w) = sum_l rho(d(xi_1^{s-l}), Phi_l(w))
* ``eta``     -- the generating words sum_{c in I(a,n)} xi_1 z_1^{c_1} ...

The recursive maps are memoized on word keys; results are immutable and the
caches only ever store values that are equal under recomputation.
"""

from __future__ import annotations

import re
from functools import cache
from typing import Iterable, Mapping, NamedTuple, Union

from .indices import AdmissibleIndex, Composition, enumerate_compositions


class Letter(NamedTuple):
    kind: str
    index: int


Word = tuple[Letter, ...]

_KINDS = ("z", "xi")


def z(k: int) -> Letter:
    if k < 1:
        raise ValueError(f"letter index must be >= 1, got {k}")
    return Letter("z", k)


def xi(k: int) -> Letter:
    if k < 1:
        raise ValueError(f"letter index must be >= 1, got {k}")
    return Letter("xi", k)


def _check_letter(u: Letter) -> None:
    if not isinstance(u, Letter) or u.kind not in _KINDS or u.index < 1:
        raise ValueError(f"not a valid letter: {u!r}")


def _letter_key(u: Letter) -> tuple[str, int]:
    return (u.kind, u.index)


def word_key(w: Word) -> tuple:
    """Lexicographic sort key, letter by letter; xi_k orders before z_k."""
    return tuple(_letter_key(u) for u in w)


class WordPoly:
    """An integer-coefficient polynomial in canonical form (no zero terms)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Word, int] | None = None):
        clean: dict[Word, int] = {}
        if terms:
            for w, c in terms.items():
                w = tuple(w)
                for u in w:
                    _check_letter(u)
                if not isinstance(c, int):
                    raise ValueError(f"coefficient must be an integer, got {c!r}")
                if c != 0:
                    clean[w] = clean.get(w, 0) + c
                    if clean[w] == 0:
                        del clean[w]
        self._terms = clean

    @classmethod
    def _raw(cls, terms: dict[Word, int]) -> "WordPoly":
        p = object.__new__(cls)
        p._terms = terms
        return p

    @classmethod
    def zero(cls) -> "WordPoly":
        return cls._raw({})

    @classmethod
    def one(cls) -> "WordPoly":
        return cls._raw({(): 1})

    @classmethod
    def from_word(cls, w: Iterable[Letter], coeff: int = 1) -> "WordPoly":
        return cls({tuple(w): coeff})

    @property
    def terms(self) -> dict[Word, int]:
        return dict(self._terms)

    def coeff(self, w: Iterable[Letter]) -> int:
        return self._terms.get(tuple(w), 0)

    def words(self) -> list[Word]:
        return sorted(self._terms, key=word_key)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WordPoly):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "WordPoly") -> "WordPoly":
        if not isinstance(other, WordPoly):
            return NotImplemented
        out = dict(self._terms)
        for w, c in other._terms.items():
            s = out.get(w, 0) + c
            if s:
                out[w] = s
            else:
                out.pop(w, None)
        return WordPoly._raw(out)

    def __sub__(self, other: "WordPoly") -> "WordPoly":
        return self + (-other)

    def __neg__(self) -> "WordPoly":
        return WordPoly._raw({w: -c for w, c in self._terms.items()})

    def __mul__(self, other: Union["WordPoly", int]) -> "WordPoly":
        if isinstance(other, int):
            if other == 0:
                return WordPoly.zero()
            return WordPoly._raw({w: c * other for w, c in self._terms.items()})
        if not isinstance(other, WordPoly):
            return NotImplemented
        out: dict[Word, int] = {}
        for wa, ca in self._terms.items():
            for wb, cb in other._terms.items():
                w = wa + wb
                s = out.get(w, 0) + ca * cb
                if s:
                    out[w] = s
                else:
                    out.pop(w, None)
        return WordPoly._raw(out)

    def __rmul__(self, other: int) -> "WordPoly":
        if isinstance(other, int):
            return self * other
        return NotImplemented

    def prepend(self, u: Letter) -> "WordPoly":
        """Left-concatenate a single letter onto every word."""
        _check_letter(u)
        return WordPoly._raw({(u,) + w: c for w, c in self._terms.items()})

    def __repr__(self) -> str:
        return f"WordPoly({format_poly(self)})"

    def __str__(self) -> str:
        return format_poly(self)


def poly_add(p: WordPoly, q: WordPoly) -> WordPoly:
    return p + q


def poly_scale(c: int, p: WordPoly) -> WordPoly:
    return p * c


def poly_concat(p: WordPoly, q: WordPoly) -> WordPoly:
    return p * q


def _word_in_xi(w: Word) -> bool:
    return all(u.kind == "xi" for u in w)


def _word_in_d1(w: Word) -> bool:
    return all(u.index == 1 for u in w)


def _word_in_z(w: Word) -> bool:
    return all(u.kind == "z" for u in w)


def in_xi_subalgebra(p: WordPoly) -> bool:
    """True iff every letter of every word is some xi_k."""
    return all(_word_in_xi(w) for w in p._terms)


def in_d1_subalgebra(p: WordPoly) -> bool:
    """True iff every letter of every word is z_1 or xi_1."""
    return all(_word_in_d1(w) for w in p._terms)


def in_z_subalgebra(p: WordPoly) -> bool:
    """True iff every letter of every word is some z_k."""
    return all(_word_in_z(w) for w in p._terms)


def _as_poly(x: Union[WordPoly, Word]) -> WordPoly:
    if isinstance(x, WordPoly):
        return x
    return WordPoly.from_word(x)


def _bilinear(f, p: WordPoly, q: WordPoly) -> WordPoly:
    out = WordPoly.zero()
    for wa, ca in p._terms.items():
        for wb, cb in q._terms.items():
            out = out + f(wa, wb) * (ca * cb)
    return out


def _linear(f, p: WordPoly) -> WordPoly:
    out = WordPoly.zero()
    for w, c in p._terms.items():
        out = out + f(w) * c
    return out


@cache
def _rho_words(v: Word, w: Word) -> WordPoly:
    if not v:
        return WordPoly.from_word(w)
    if not w:
        return WordPoly.from_word(v)
    k, l = v[0].index, w[0].index
    vt, wt = v[1:], w[1:]
    if w[0].kind == "z":
        return (
            _rho_words(vt, w).prepend(xi(k))
            + _rho_words(v, wt).prepend(z(l))
            + _rho_words(vt, wt).prepend(z(k + l))
        )
    return (
        _rho_words(vt, w).prepend(xi(k))
        + _rho_words(v, wt).prepend(xi(l))
        + _rho_words(vt, wt).prepend(xi(k + l))
    )


def rho(v: Union[WordPoly, Word], w: Union[WordPoly, Word]) -> WordPoly:
    """The bilinear map with A_v(M) A_w(M) = A_rho(v,w)(M); v must be a xi-polynomial."""
    v, w = _as_poly(v), _as_poly(w)
    if not in_xi_subalgebra(v):
        raise ValueError(f"rho: left argument must lie in the xi-subalgebra, got {v}")
    return _bilinear(_rho_words, v, w)


def circ(k: int, v: Union[WordPoly, Word]) -> WordPoly:
    """xi_k o v: raises the leading letter index, annihilates the empty word."""
    if k < 1:
        raise ValueError(f"circ: index must be >= 1, got {k}")
    v = _as_poly(v)
    if not in_xi_subalgebra(v):
        raise ValueError(f"circ: argument must lie in the xi-subalgebra, got {v}")

    def on_word(w: Word) -> WordPoly:
        if not w:
            return WordPoly.zero()
        return WordPoly.from_word((xi(k + w[0].index),) + w[1:])

    return _linear(on_word, v)


@cache
def _d_word(w: Word) -> WordPoly:
    if not w:
        return WordPoly.one()
    k = w[0].index
    rest = _d_word(w[1:])
    return rest.prepend(xi(k)) + circ(k, rest)


def d_map(v: Union[WordPoly, Word]) -> WordPoly:
    """The map with A*_v(M) = A_d(v)(M) on the xi-subalgebra."""
    v = _as_poly(v)
    if not in_xi_subalgebra(v):
        raise ValueError(f"d_map: argument must lie in the xi-subalgebra, got {v}")
    return _linear(_d_word, v)


def _z1_run(n: int) -> Word:
    return (z(1),) * n


def _xi1_run(n: int) -> Word:
    return (xi(1),) * n


@cache
def _phi_word(s: int, w: Word) -> WordPoly:
    if s == 0:
        return WordPoly.from_word(w)
    if not w:
        return WordPoly.from_word((xi(1),) + _z1_run(s - 1))
    head, rest = w[0], w[1:]
    if head.kind == "z":
        out = _phi_word(s, rest).prepend(z(1))
        for i in range(1, s + 1):
            out = out + WordPoly.from_word((xi(1),) + _z1_run(i)) * _phi_word(s - i, rest)
        return out
    out = WordPoly.zero()
    for i in range(0, s + 1):
        out = out + WordPoly.from_word((xi(1),) + _z1_run(i)) * _phi_word(s - i, rest)
    return out


def phi(s: int, w: Union[WordPoly, Word]) -> WordPoly:
    """phi_s on the subalgebra generated by z_1 and xi_1."""
    if s < 0:
        raise ValueError(f"phi: s must be >= 0, got {s}")
    w = _as_poly(w)
    if not in_d1_subalgebra(w):
        raise ValueError(f"phi: argument must lie in the z_1/xi_1 subalgebra, got {w}")
    return _linear(lambda u: _phi_word(s, u), w)


def eta(a: int, n: int) -> WordPoly:
    """sum of xi_1 z_1^{c_1} ... xi_1 z_1^{c_a} over c_i >= 0 with sum n.

    The parts may be zero (so eta(a, 0) is the xi_1 run of length a); negative
    n gives the zero polynomial.
    """
    if a < 0:
        raise ValueError(f"eta: a must be >= 0, got {a}")
    if n < 0:
        return WordPoly.zero()
    if a == 0:
        return WordPoly.one() if n == 0 else WordPoly.zero()
    out: dict[Word, int] = {}
    # shift by one per part: weak compositions of n are compositions of n + a
    for comp in enumerate_compositions(a, n + a):
        w: Word = ()
        for c in comp:
            w = w + (xi(1),) + _z1_run(c - 1)
        out[w] = out.get(w, 0) + 1
    return WordPoly._raw(out)


@cache
def _Phi_word(l: int, w: Word) -> WordPoly:
    if l == 0:
        return WordPoly.from_word(w)
    out = WordPoly.zero()
    for r in range(1, l + 1):
        sign = -1 if r % 2 else 1
        for comp in enumerate_compositions(r, l):
            p = WordPoly.from_word(w)
            for c in reversed(comp.parts):
                p = phi(c, p)
            out = out + p * sign
    return out


def Phi(l: int, w: Union[WordPoly, Word]) -> WordPoly:
    """Phi_l = sum_{r=1}^{l} (-1)^r sum_{c in I(r,l)} phi_{c_1} ... phi_{c_r}."""
    if l < 0:
        raise ValueError(f"Phi: l must be >= 0, got {l}")
    w = _as_poly(w)
    if not in_d1_subalgebra(w):
        raise ValueError(f"Phi: argument must lie in the z_1/xi_1 subalgebra, got {w}")
    return _linear(lambda u: _Phi_word(l, u), w)


def Z_map(s: int, w: Union[WordPoly, Word]) -> WordPoly:
    """Z_s(w) = sum_{l=0}^{s} rho(d(xi_1^{s-l}), Phi_l(w))."""
    if s < 0:
        raise ValueError(f"Z_map: s must be >= 0, got {s}")
    w = _as_poly(w)
    if not in_d1_subalgebra(w):
        raise ValueError(f"Z_map: argument must lie in the z_1/xi_1 subalgebra, got {w}")
    out = WordPoly.zero()
    for u, c in w._terms.items():
        out = out + _Z_s_of_word(s, u) * c
    return out


@cache
def _Z_s_of_word(s: int, w: Word) -> WordPoly:
    out = WordPoly.zero()
    for l in range(0, s + 1):
        out = out + rho(d_map(WordPoly.from_word(_xi1_run(s - l))), _Phi_word(l, w))
    return out


def poly_to_index_combination(
    p: WordPoly, admissible: bool = False
) -> list[tuple[int, Composition]]:
    """Read a z-polynomial as integer multiples of index tuples.

    Each word z_{i_1} ... z_{i_r} becomes the composition (i_1, ..., i_r).
    With ``admissible=True`` every leading index must be >= 2 and the results
    are AdmissibleIndex instances.  Non-z letters and empty words are
    rejected with the offending word named.
    """
    out: list[tuple[int, Composition]] = []
    for w in p.words():
        if not _word_in_z(w):
            raise ValueError(f"word {format_word(w)} contains a non-z letter")
        if not w:
            raise ValueError("the empty word 1 has no index form")
        parts = tuple(u.index for u in w)
        if admissible:
            if parts[0] < 2:
                raise ValueError(f"word {format_word(w)} is not admissible")
            out.append((p._terms[w], AdmissibleIndex(parts)))
        else:
            out.append((p._terms[w], Composition(parts)))
    return out


# -- text syntax ------------------------------------------------------------

_LETTER_RE = re.compile(r"^(z|xi)([0-9]+)$")


def format_word(w: Word) -> str:
    if not w:
        return "1"
    return "*".join(f"{u.kind}{u.index}" for u in w)


def format_poly(p: WordPoly) -> str:
    if p.is_zero():
        return "0"
    chunks: list[str] = []
    for w in p.words():
        c = p._terms[w]
        mag = abs(c)
        if not w:
            body = str(mag)
        elif mag == 1:
            body = format_word(w)
        else:
            body = f"{mag}*{format_word(w)}"
        if not chunks:
            chunks.append(body if c > 0 else f"-{body}")
        else:
            chunks.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(chunks)


def parse_word(text: str) -> Word:
    """Parse e.g. 'z1*xi2*z1'; '1' is the empty word."""
    s = text.strip()
    if not s:
        raise ValueError("empty word text")
    if s == "1":
        return ()
    letters: list[Letter] = []
    for tok in s.split("*"):
        tok = tok.strip()
        m = _LETTER_RE.match(tok)
        if not m:
            raise ValueError(f"bad letter {tok!r} in word {text!r}")
        idx = int(m.group(2))
        if idx < 1:
            raise ValueError(f"letter index must be >= 1 in {tok!r}")
        letters.append(Letter(m.group(1), idx))
    return tuple(letters)


def parse_poly(text: str) -> WordPoly:
    """Parse e.g. 'z1*z3 + 2*z2*z2 - z3*z1' or '-3' or '0'."""
    s = text.strip()
    if not s:
        raise ValueError("empty polynomial text")
    if s == "0":
        return WordPoly.zero()
    s = s.replace("-", "+-")
    out = WordPoly.zero()
    for chunk in s.split("+"):
        chunk = chunk.strip()
        if not chunk:
            continue
        sign = 1
        if chunk.startswith("-"):
            sign = -1
            chunk = chunk[1:].strip()
        if not chunk:
            raise ValueError(f"dangling sign in {text!r}")
        toks = [t.strip() for t in chunk.split("*")]
        coeff = sign
        if toks and toks[0].isdigit():
            coeff = sign * int(toks[0])
            toks = toks[1:]
        if not toks:
            out = out + WordPoly({(): coeff})
        elif toks == ["1"]:
            out = out + WordPoly({(): coeff})
        else:
            word = parse_word("*".join(toks))
            out = out + WordPoly({word: coeff})
    return out
