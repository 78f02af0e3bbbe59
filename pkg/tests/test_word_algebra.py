import pytest
from hypothesis import given, settings, strategies as st

from qmzv import (
    Composition,
    Phi,
    WordPoly,
    Z_map,
    circ,
    d_map,
    eta,
    format_poly,
    format_word,
    in_d1_subalgebra,
    in_xi_subalgebra,
    in_z_subalgebra,
    parse_poly,
    parse_word,
    phi,
    poly_to_index_combination,
    rho,
    word_key,
    xi,
    z,
)

letters = st.sampled_from([z(1), z(2), z(3), xi(1), xi(2)])
words = st.lists(letters, max_size=3).map(tuple)
xi_words = st.lists(st.sampled_from([xi(1), xi(2)]), max_size=2).map(tuple)
d1_words = st.lists(st.sampled_from([z(1), xi(1)]), max_size=3).map(tuple)
polys = st.lists(st.tuples(words, st.integers(-3, 3)), max_size=4).map(
    lambda ts: sum((WordPoly.from_word(w, c) for w, c in ts), WordPoly.zero())
)


def test_letters_validate():
    assert z(2).kind == "z" and z(2).index == 2
    assert xi(1).kind == "xi"
    with pytest.raises(ValueError):
        z(0)
    with pytest.raises(ValueError):
        xi(-1)


def test_wordpoly_canonical_form():
    p = WordPoly.from_word((z(1),)) - WordPoly.from_word((z(1),))
    assert p.is_zero() and len(p) == 0
    q = WordPoly.from_word((z(1),), 2) + WordPoly.from_word((z(1),), -1)
    assert q.coeff((z(1),)) == 1


@given(polys, polys, polys)
def test_addition_laws(p, q, r):
    assert p + q == q + p
    assert (p + q) + r == p + (q + r)
    assert p + WordPoly.zero() == p
    assert p - p == WordPoly.zero()
    assert -(-p) == p


@given(polys, polys, polys)
@settings(max_examples=50)
def test_concatenation_laws(p, q, r):
    assert (p * q) * r == p * (q * r)
    assert p * WordPoly.one() == p
    assert WordPoly.one() * p == p
    assert (p + q) * r == p * r + q * r


@given(words, st.integers(-5, 5))
def test_scalar_multiplication(w, c):
    assert c * WordPoly.from_word(w) == WordPoly.from_word(w, c)
    assert 0 * WordPoly.from_word(w) == WordPoly.zero()


@given(letters, words)
def test_prepend_matches_concatenation(u, w):
    assert WordPoly.from_word(w).prepend(u) == WordPoly.from_word((u,) + w)


def test_word_key_ordering():
    ws = [(z(1), z(3)), (z(2), z(2)), (z(3), z(1))]
    assert sorted(ws, key=word_key) == ws
    assert sorted([(xi(2),), (xi(1), xi(1))], key=word_key) == [(xi(1), xi(1)), (xi(2),)]
    assert sorted([(z(2),), (z(1), xi(1)), (xi(1), z(1))], key=word_key) == [
        (xi(1), z(1)),
        (z(1), xi(1)),
        (z(2),),
    ]


def test_subalgebra_predicates():
    assert in_xi_subalgebra(WordPoly.from_word((xi(1), xi(3))))
    assert not in_xi_subalgebra(WordPoly.from_word((xi(1), z(1))))
    assert in_d1_subalgebra(WordPoly.from_word((z(1), xi(1))))
    assert not in_d1_subalgebra(WordPoly.from_word((z(2),)))
    assert in_z_subalgebra(WordPoly.from_word((z(2), z(1))))
    assert in_z_subalgebra(WordPoly.zero())


# -- the harmonic product ----------------------------------------------------


def test_rho_single_letters():
    assert rho((xi(1),), (z(1),)) == parse_poly("xi1*z1 + z1*xi1 + z2")
    assert rho((xi(1),), (xi(1),)) == parse_poly("2*xi1*xi1 + xi2")
    assert rho((xi(2),), (z(3),)) == parse_poly("xi2*z3 + z3*xi2 + z5")


def test_rho_empty_is_identity():
    w = (z(2), xi(1))
    assert rho((), w) == WordPoly.from_word(w)
    assert rho((xi(1),), ()) == WordPoly.from_word((xi(1),))


def test_rho_rejects_z_on_left():
    with pytest.raises(ValueError):
        rho((z(1),), (z(1),))


@given(xi_words, xi_words)
@settings(max_examples=60)
def test_rho_commutes_on_xi_words(v, w):
    assert rho(v, w) == rho(w, v)


@given(xi_words, xi_words, xi_words)
@settings(max_examples=40, deadline=None)
def test_rho_associates_on_xi_words(u, v, w):
    assert rho(rho(u, v), w) == rho(u, rho(v, w))


@given(xi_words, words, words, st.integers(-2, 2))
@settings(max_examples=40)
def test_rho_bilinear(v, w1, w2, c):
    rhs = WordPoly.from_word(w1) + c * WordPoly.from_word(w2)
    assert rho(WordPoly.from_word(v), rhs) == rho(v, w1) + c * rho(v, w2)


# -- circ and d --------------------------------------------------------------


def test_circ_raises_leading_index():
    assert circ(2, (xi(1), xi(3))) == WordPoly.from_word((xi(3), xi(3)))
    assert circ(3, ()) == WordPoly.zero()
    with pytest.raises(ValueError):
        circ(1, (z(1),))


def test_d_map_small():
    assert d_map(()) == WordPoly.one()
    assert d_map((xi(2),)) == WordPoly.from_word((xi(2),))
    assert d_map((xi(1), xi(1))) == parse_poly("xi1*xi1 + xi2")
    assert format_poly(d_map((xi(1),) * 3)) == "xi1*xi1*xi1 + xi1*xi2 + xi2*xi1 + xi3"


def test_d_map_rejects_z_letters():
    with pytest.raises(ValueError):
        d_map((z(1),))


# -- phi, eta, Phi, Z --------------------------------------------------------


def test_phi_base_cases():
    assert phi(0, (z(1), xi(1))) == WordPoly.from_word((z(1), xi(1)))
    assert phi(1, ()) == WordPoly.from_word((xi(1),))
    assert phi(3, ()) == WordPoly.from_word((xi(1), z(1), z(1)))
    assert phi(1, (xi(1),)) == parse_poly("xi1*xi1 + xi1*z1")
    assert phi(1, (z(1),)) == parse_poly("z1*xi1 + xi1*z1")


def test_phi_rejects_other_letters():
    with pytest.raises(ValueError):
        phi(1, (z(2),))
    with pytest.raises(ValueError):
        phi(-1, (z(1),))


def test_eta_weak_parts():
    assert eta(0, 0) == WordPoly.one()
    assert eta(0, 2) == WordPoly.zero()
    assert eta(2, -1) == WordPoly.zero()
    assert eta(2, 0) == WordPoly.from_word((xi(1), xi(1)))
    assert eta(1, 2) == WordPoly.from_word((xi(1), z(1), z(1)))
    assert eta(2, 1) == parse_poly("xi1*z1*xi1 + xi1*xi1*z1")


def test_Phi_matches_signed_composition_sum():
    # the one-step recursion and the composition expansion must agree
    for l in range(5):
        for w in [(), (z(1),), (xi(1), z(1))]:
            direct = Phi(l, w)
            rec = WordPoly.from_word(w) if l == 0 else WordPoly.zero()
            for a in range(1, l + 1):
                rec = rec - phi(a, Phi(l - a, w))
            if l >= 1:
                assert direct == rec
            else:
                assert direct == WordPoly.from_word(w)


def test_Z_map_small():
    assert Z_map(0, (z(1), z(1))) == WordPoly.from_word((z(1), z(1)))
    assert Z_map(2, (z(1), z(1))) == parse_poly("z1*z3 + z2*z2 + z3*z1")
    assert Z_map(1, ()) == WordPoly.zero()
    assert Z_map(0, ()) == WordPoly.one()


@given(st.integers(0, 4), st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_Z_of_z1_run_stays_in_z_subalgebra(s, a):
    pol = Z_map(s, (z(1),) * a)
    assert in_z_subalgebra(pol)
    combos = poly_to_index_combination(pol)
    assert all(c == 1 for c, _ in combos)
    assert all(idx.weight == s + a and idx.depth == a for _, idx in combos)


def test_poly_to_index_combination():
    combos = poly_to_index_combination(Z_map(2, (z(1), z(1))))
    assert [(c, tuple(idx)) for c, idx in combos] == [
        (1, (1, 3)),
        (1, (2, 2)),
        (1, (3, 1)),
    ]
    with pytest.raises(ValueError):
        poly_to_index_combination(WordPoly.from_word((xi(1),)))
    with pytest.raises(ValueError):
        poly_to_index_combination(WordPoly.one())
    admissible = poly_to_index_combination(WordPoly.from_word((z(2), z(1))), admissible=True)
    assert tuple(admissible[0][1]) == (2, 1)
    with pytest.raises(ValueError):
        poly_to_index_combination(WordPoly.from_word((z(1),)), admissible=True)


# -- text round trips --------------------------------------------------------


def test_parse_word_examples():
    assert parse_word("1") == ()
    assert parse_word("z1*xi2*z1") == (z(1), xi(2), z(1))
    with pytest.raises(ValueError):
        parse_word("z0")
    with pytest.raises(ValueError):
        parse_word("w1")
    with pytest.raises(ValueError):
        parse_word("")


@given(words)
def test_format_parse_word_round_trip(w):
    assert parse_word(format_word(w)) == w


@given(polys)
def test_format_parse_poly_round_trip(p):
    assert parse_poly(format_poly(p)) == p


def test_composition_from_indices_module_interops():
    pol = Z_map(1, (z(1),))
    combos = poly_to_index_combination(pol)
    assert combos == [(1, Composition((2,)))]
