"""Phase space kernels: special functions, states, quadrature and densities"""
__version__ = "0.1.0"

from .densities import (
    GridSpec,
    SignedDensity,
    averaged_spectrogram,
    density_grid,
    husimi,
    mu_density,
    mu_density_via_laplacians,
    phase_space_mass,
    radial_profile,
    signed_density,
    spectrogram,
    wigner,
    wigner_closed_form,
    wigner_numerical,
)
from .quadrature import NodeSet, QuadratureKind, QuadratureSpec, inner_product_with_window, inner_products, overlap
from .specfun import (
    MultiIndex,
    binomial_identity_check,
    expansion_coefficients,
    hermite_function,
    laguerre,
    laplace_laguerre,
    multi_indices,
)
from .states import (
    GaussianPacket,
    HatState,
    HermiteState,
    PhasePoint,
    State,
    Superposition,
    heisenberg_weyl_shift,
    norm,
    state_from_descriptor,
)

__all__ = [
    'MultiIndex', 'binomial_identity_check', 'expansion_coefficients', 'laplace_laguerre', 'laguerre',
    'hermite_function', 'multi_indices',
    'PhasePoint', 'State', 'GaussianPacket', 'HermiteState', 'HatState', 'Superposition',
    'heisenberg_weyl_shift', 'norm', 'state_from_descriptor',
    'QuadratureKind', 'QuadratureSpec', 'NodeSet', 'inner_products', 'inner_product_with_window', 'overlap',
    'wigner', 'wigner_closed_form', 'wigner_numerical', 'spectrogram', 'husimi', 'averaged_spectrogram',
    'SignedDensity', 'signed_density', 'mu_density', 'mu_density_via_laplacians',
    'GridSpec', 'density_grid', 'radial_profile', 'phase_space_mass',
]
