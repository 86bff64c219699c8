"""Linear-optics state discrimination analyzed through Fock-basis dephasing.

Photon counting behind a passive linear-optics circuit is equivalent to
dephasing the output state in the Fock basis. This package simulates such
circuits on sparse multimode Fock states, computes the resulting fidelities
and failure probabilities for unambiguous state discrimination, checks the
moment conditions a circuit must satisfy, compiles one-photon POVMs into
circuits and searches circuit space for optimal schemes.
"""

from .dephase import (BlockMixture, DiagonalMixture, dephase_partial, dephase_total,
                      distribution_csv, pattern_distribution)
from .discrimination import (ConditionReport, UsdReport, classify_patterns,
                             conditional_mode_check, highest_order_products,
                             normal_ordered_moment, optimal_form_check, orthogonal_hierarchy,
                             usd_hierarchy, usd_report)
from .fock import (ComplexTolerance, FockPattern, PureState, apply_lowering, basis_state,
                   build_pure_state, coherent_product_state, inner_product, tensor, vacuum)
from .linop import (GivensParameterization, LinearCircuit, beam_splitter_50_50,
                    compose_from_givens, decompose_to_givens, embed_with_vacuum, haar_random,
                    identity, transform, validate_unitary)
from .metrics import (check_fidelity_bounds, dephased_fidelity, fidelity_block,
                      fidelity_diagonal, fidelity_pure)
from .naimark import naimark_unitary, simulate_povm, usd_povm, validate_povm
from .search import SearchConfig, ancilla_sweep, minimize_failure, toy_feasibility

__version__ = "0.1.0"
