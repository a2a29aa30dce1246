"""Greedy bases of mixed-norm sequence spaces: constructions, constants and checks."""
from .analysis import (ConstantsReport, PropertyAReport, democracy_constant, fundamental_function,
                       greedy_permutations, kt_check, kt_upper_bound, nondemocracy_demo,
                       one_greedy_check, property_A_check, random_lattice_basis,
                       suppression_constant, unconditionality_constant)
from .construction import (BasisElementId, ConstructionParams, BlockAveragingFamily, SubsetNormCertificate,
                           apply_T_X, apply_T_Y, basis_vector, build_params, choose_epsilons,
                           family_size, operator_norm_lower_bound, relaxed_params,
                           select_parameters, subset_norm, y_vector)
from .errors import (CapacityError, CoefficientRecoveryError, GreedyBasesError,
                     InconsistencyError, InvalidIndexError, UnsupportedSpaceError)
from .greedy import (FiniteBasis, GreedySelection, greedy_approximant, greedy_constant_estimate,
                     greedy_order, greedy_trace, lebesgue_ratio, sigma_n_exact)
from .maximal import (averaging_domination_check, hl_maximal, hl_maximal_reference,
                      strong_type_ratio)
from .space import (Exponent, Explicit, Growing, MixedIndex, SpaceSpec, SparseVector, Uniform,
                    dual_exponent, extreme_points, norm, norming_functional)

__version__ = "0.1.0"
