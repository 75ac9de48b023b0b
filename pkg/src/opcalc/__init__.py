"""opcalc: functional calculi for matrices.

Sectorial contour calculus, algebraic extension by regularizers, Stieltjes,
Hirsch and semigroup subcalculi with topological extension, the
Hille-Phillips calculus and the measurable calculus of normal matrices.
"""

from .borel import (NormalHandle, approx_identity_suite, composition_check, make_normal,
                    mfc_axiom_suite, phi_borel)
from .errors import *  # noqa: F401,F403
from .extend import (LinearRelation, anchored_membership, candidate_regularizers, check_fc_axioms,
                     extend_phi, is_anchor_set, oracle_evaluator, sectorial_evaluator)
from .funsym import FunctionSymbol, HirschRep, MeasureRep, StieltjesRep
from .hp import (coi_approximants, commutant_check, complex_inversion, hp_sectorial_compat,
                 make_semigroup, psi_hp)
from .numlin import DEFAULT_TOL, ToleranceConfig
from .report import CalculusReport
from .sector import make_handle, phi, phi_ee, phi_elementary
from .subcalc import (ConvergenceProbe, dungey_psi, phi_hirsch, phi_hol_semigroup,
                      phi_resolvent_integral, phi_stieltjes, stieltjes_truncation_sequence,
                      uniform_extension_eval)

__version__ = "0.1.0"
