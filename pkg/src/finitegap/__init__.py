"""Finite-gap Jacobi matrices with slowly decaying perturbations."""

from .bandset import (BandSet, EquilibriumMeasure, diophantine_quality, dist_to_bands,
                      equilibrium_measure, frequency_of, green_function, make_band_set)
from .coffman import (CoffmanSystem, assemble_free_case, classify_solution, diagonal_sum_check,
                      evolve, find_profile_solution, gamma_product, phi_psi_limit_check)
from .eigens import (eigenvalues_truncation, gap_eigenvalues, outside_spectrum, q_sum,
                     variational_bound)
from .errors import (BandSetError, HypothesisError, NotABandEdgeError, ParameterRangeError,
                     QuadratureError, SingularStepError)
from .oprl import (JacobiParams, detect_szego_limit, evaluate_polynomials, free_closed_form,
                   ratio_trace, root_asymptotics_exponent, window_oscillation)
from .perturb import (Perturbation, check_condition_b, check_condition_c, make_perturbation,
                      periodic_block_sums, sequence_norms, weighted_partial_sums,
                      almost_periodic_weighted_sum)
from .torus import (PeriodicJacobi, band_edge_solutions, bands_of_periodic, discriminant,
                    periodic_harmonic_measures)

__version__ = "0.1.0"
