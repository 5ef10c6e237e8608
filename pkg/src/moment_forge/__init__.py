"""Two-route first-moment computations for twisted L-functions.

The package evaluates the average of L(s0, f x chi) * conj(L(s0, chi)) over
even primitive Dirichlet characters modulo a prime q along two independent
paths: direct character summation through approximate functional equations,
and closed-form character-sum kernels (orthogonality, Gauss twists,
Kloosterman sums).  The two routes agree up to truncation roundoff, which is
the central consistency check exposed by the CLI.
"""

__version__ = "0.1.0"

from .charsums import CharacterTable, PrimeModulus, enumerate_characters
from .levaluator import l_chi_afe, l_f, l_twisted_afe, verify_voronoi
from .maassdata import MaassForm, load_bundled, load_form
from .moments import (
    ExponentFit,
    MomentReport,
    beta_params,
    exponent_fit,
    lhs_moment,
    m_exponent,
    main_term,
    moment_report,
    nonvanishing_scan,
    s_terms_closed_form,
)
from .store import ReportStore
from .weights import EvaluationPoint, WeightParams, weight_v, weight_w

__all__ = [
    "CharacterTable",
    "EvaluationPoint",
    "ExponentFit",
    "MaassForm",
    "MomentReport",
    "PrimeModulus",
    "ReportStore",
    "WeightParams",
    "beta_params",
    "enumerate_characters",
    "exponent_fit",
    "l_chi_afe",
    "l_f",
    "l_twisted_afe",
    "lhs_moment",
    "load_bundled",
    "load_form",
    "m_exponent",
    "main_term",
    "moment_report",
    "nonvanishing_scan",
    "s_terms_closed_form",
    "verify_voronoi",
    "weight_v",
    "weight_w",
    "__version__",
]
