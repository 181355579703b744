"""Dyadic Green tensors and quantum-plasmonics field data for finite bodies.

Core pipeline: describe an absorbing dielectric body (Lorentz-pole
materials on a voxel grid), solve the volume integral equation for its
dyadic Green tensor, and from it compute the double-continuum field
coefficients, the local density of states and Purcell factors, with
residual tests for every identity along the way.  All numerics run in
natural units (c = eps0 = hbar = 1); see :mod:`greenvox.constants`.
"""

__version__ = "0.1.0"

from .constants import Constants, UnitSystem, from_internal, to_internal
from .geometry import Box, GridError, MaskShape, Sphere, VoxelGrid, build_grid, eps_on_grid
from .green_free import (PlaneWaveMode, fd_curl, fd_curl_curl, g0_closed,
                         g0_longitudinal, im_g0_spectral, phi_plane_wave,
                         scalar_green, self_term, sommerfeld_residual)
from .ldos import (DecayRates, EmitterSpec, gamma_decomposed, im_green_at,
                   ldos_identity_residual, purcell, purcell_sweep, vacuum_decay_rate)
from .modes import (FieldCoefficientSample, MedModeIndex, NearSingularError,
                    e_coefficient, e_coefficient_via_green, m_coefficient,
                    noise_current_amplitude, u_numerator_e, u_numerator_m,
                    v_component_e, v_component_m)
from .permittivity import (LorentzPole, PermittivityModel, PrincipalValueQuadrature,
                           coupling_alpha_tilde, eval_eps, kk_residual, scaled_contrast)
from .quadrature import SphereQuadrature, make_shell_quadrature
from .scene import SceneConfig, SceneError, load_scene, scene_to_dict
from .vie import (DenseCapError, InteractionOperator, MediumSolver, SolverError,
                  assemble, dyson_residual, green_medium, solve_system)
