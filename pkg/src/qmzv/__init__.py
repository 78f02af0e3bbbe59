"""Exact-arithmetic toolkit for q-analogues of multiple zeta values.

The package evaluates finite multiple harmonic sums and their infinite
q-series limits in exact rational arithmetic, implements the noncommutative
word algebra that organizes those sums, and ships a verifier that checks a
registry of identities symbolically, exactly, or with certified truncation
intervals.
"""

from ._version import __version__
from .indices import (
    AdmissibleIndex,
    Composition,
    enumerate_admissible,
    enumerate_compositions,
)
from .word_algebra import (
    Letter,
    Phi,
    Word,
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
    poly_add,
    poly_concat,
    poly_scale,
    poly_to_index_combination,
    rho,
    word_key,
    xi,
    z,
)
from .qseries import (
    CertifiedValue,
    QContext,
    A_eval,
    A_eval_direct,
    J_letter,
    K_eval,
    f_eval,
    g_eval,
    h_eval,
    p_eval,
    q_int,
    tail_closed_form,
    zeta_q,
)
from .verifier import (
    DEFAULT_CEILING,
    CheckResult,
    IDENTITY_TAGS,
    MUTATIONS,
    check,
    check_exact,
    check_symbolic,
    check_truncated,
    parse_plan,
    run_suite,
)

__all__ = [
    "AdmissibleIndex",
    "Composition",
    "enumerate_admissible",
    "enumerate_compositions",
    "Letter",
    "Word",
    "WordPoly",
    "z",
    "xi",
    "rho",
    "circ",
    "d_map",
    "phi",
    "Phi",
    "Z_map",
    "eta",
    "poly_add",
    "poly_scale",
    "poly_concat",
    "poly_to_index_combination",
    "in_xi_subalgebra",
    "in_d1_subalgebra",
    "in_z_subalgebra",
    "format_word",
    "format_poly",
    "parse_word",
    "parse_poly",
    "word_key",
    "QContext",
    "CertifiedValue",
    "q_int",
    "J_letter",
    "A_eval",
    "A_eval_direct",
    "f_eval",
    "g_eval",
    "p_eval",
    "h_eval",
    "K_eval",
    "zeta_q",
    "tail_closed_form",
    "CheckResult",
    "IDENTITY_TAGS",
    "MUTATIONS",
    "DEFAULT_CEILING",
    "check",
    "check_symbolic",
    "check_exact",
    "check_truncated",
    "parse_plan",
    "run_suite",
    "__version__",
]
