"""Dual BC_n many-particle systems: hyperbolic Sutherland and rational RSvD.

Public surface: domain types and builders (core), checked linear algebra
(matengine), Lax/Hamiltonian constructions (laxops), the action-angle duality
map (duality), trajectory solvers (dynamics), asymptotic analysis
(scattering), self-verification suites (verify), and the CLI (cli).
"""

from .core import (AsymptoticState, ChamberError, CouplingError, Couplings,
                   DomainError, EPS_CHAMBER, PhasePointR, PhasePointS,
                   alpha_beta, build_C, build_E, build_h, build_Lambda,
                   build_Q, build_xi, couplings_from_rsvd, delta_decomposition,
                   delta_phase, validate_chamber, z_factor, z_vector)
from .duality import (DualityResult, dualize_R_to_S, dualize_S_to_R,
                      symplecticity_certificate)
from .dynamics import (IntegrationError, TimeGrid, Trajectory,
                       conserved_actions, ode_rhs_R, ode_rhs_S, solve_rsvd,
                       solve_sutherland)
from .laxops import (RsvdLax, SutherlandLax, build_lax_R, build_lax_S,
                     cauchy_determinant_error, cauchy_minor_check, embed_R,
                     embed_S, hamiltonian_R, hamiltonian_S,
                     momentum_residual_R, momentum_residual_S, v_weights)
from .matengine import (EigenResult, PrecisionConfig, eig_general_real_spectrum,
                        eig_hermitian, finite_diff_jacobian,
                        leading_principal_minors, sqrt_posdef)
from .scattering import (AsymptoticFit, DecayReport, fit_linear_asymptote,
                         scattering_map_R, scattering_map_S, verify_decay_rates,
                         wave_map_R, wave_map_S)
from .verify import run_suite

__version__ = "0.1.0"
