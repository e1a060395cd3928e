"""Spectral Wild-expansion solver for the Kac and radial Boltzmann equations
with Gevrey envelope certification."""
from .envelopes import (GevreyEnvelope, PsiFunction, build_envelope, certify_propagation,
                        check_subadditivity, far_field_constants, mid_band_constant,
                        small_xi_constants)
from .errors import (ConfigError, DomainError, EnvelopeError, NormalizationError,
                     ResolutionError, TruncationError, WildGevreyError)
from .initial_data import DatumSpec, DecayFit, fit_decay, realize
from .kernels import CutoffKernel, KernelSpec, build_cutoff, eval_kernel
from .modes import Mode
from .moments import MomentSet, conservation_report, extract_moments
from .spectral import SpectralGrid, SpectralState, interpolate, make_grid, weighted_sup
from .wild import (WildSeries, assemble, cutoff_sweep, solve_ode, solve_wild, wild_extend,
                   wild_init, wild_trajectory)

__version__ = "0.1.0"
