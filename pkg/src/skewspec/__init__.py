"""Spectral toolkit for skew-shift Schrodinger operators.

Finite restrictions of h*Delta + f(orbit) are built, diagonalized, and
certified: eigenvalue isolation, Green's-function suitability, level-set
curve tracing, fast-variable resonance elimination, and density-of-spectrum
experiments, all exposed through one CLI (`skewspec`).
"""

__version__ = "0.1.0"

from .dynamics import (Frequency, SampledCurve, SamplingFunction, TorusPoint,
                       eval_sampling, eval_sampling_deriv, mod1_int_mult,
                       potential_value, skew_shift_iterate, sqrt2_frequency,
                       truncate_sampling)
from .operators import (ModelParams, SiteVector, WindowOperator, apply,
                        basis_vector, build_restriction, derivative_diagonal,
                        rayleigh_quotient, weighted_norm)
from .eigensolve import (EigenPair, Spectrum, eigenpair_nearest,
                         eigenvalues_all, eigenvalues_in_interval, sturm_count)
from .greens import (SuitabilityParams, SuitabilityVerdict, UnsuitabilityGrid,
                     greens_entry, hs_norm, is_suitable, resolvent_norm,
                     resonance_grid, section_interval_count, unsuitability_grid)
from .perturb import (CurveSample, IsolationCertificate, IsolationFailure,
                      check_isolated, clamp_extend, continue_eigenvalue,
                      extension_budget, glue_curves, good_x_set,
                      hellmann_feynman, psi0_approx, select_separated,
                      trace_curve, verify_perturbation_bound)
from .fastvar import (FastVarConfig, GridMask, RectUnionMask, branch_inverses,
                      fast_coords, resonant_measure)
from .density import (DensityReport, EdgeReport, appendix_a_model,
                      certify_interval, delta_density, density_table,
                      edge_bounds, figure1_model)
