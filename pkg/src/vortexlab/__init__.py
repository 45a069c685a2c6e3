"""Numerical laboratory for the linearized dynamics of a smooth point-like vortex:
background profile, Green's kernels, spectral density functions, the
discretized linear operator and the time evolution built from them."""
from .profile import DefaultProfile, TabulatedProfile, VortexProfile, default_profile
from .greens import free_green, fd_green, longrange_green, step_green, verify_green_bound
from .sdf import build_initial_data, compact_bump, gaussian, limit_gamma, solve_pi
from .spectrum import assemble_Lk, lap_coercivity, spectrum_report
from .evolution import compute_theta_field, decay_report, evolve, timestep_oracle

__version__ = "0.1.0"
