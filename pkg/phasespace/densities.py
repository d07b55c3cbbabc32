"""
Phase Space Densities
Wigner functions, Husimi functions, Hermite spectrograms and the signed
spectrogram densities mu^N assembled from them
"""
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from phasespace.errors import DimensionMismatchError, GridError, UnsupportedStateError
from phasespace.quadrature import QuadratureSpec, box_rule, gauss_legendre_rule, inner_products
from phasespace.specfun import (
    MultiIndex,
    as_multi_index,
    expansion_coefficients,
    laguerre,
    laplace_laguerre,
    level_multiplicity,
    multi_indices,
)
from phasespace.states import GaussianPacket, HermiteState, PhasePoint, State

MAX_ORDER = 8
MAX_GRID_CELLS = 10 ** 7
# Half-width of the effective support box for mass integrals, in units of sqrt(eps)
MASS_BOX_WIDTH = 8.0
# Spectrogram values in [-NEGATIVE_ROUNDOFF, 0) are treated as zero
NEGATIVE_ROUNDOFF = 1e-12


def _points(z, d: int) -> Tuple[np.ndarray, bool]:
    """Coerce phase points to shape (m, 2d); report whether a single point was given"""
    if isinstance(z, PhasePoint):
        z = z.as_array()
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    if z.shape[-1] != 2 * d:
        raise DimensionMismatchError(f"phase points have {z.shape[-1]} coordinates, expected {2 * d}")
    return z.reshape(-1, 2 * d), single


def _unwrap(values: np.ndarray, single: bool):
    return float(values[0]) if single else values


def rho(z, eps: float) -> np.ndarray:
    """rho_j(q, p) = 2 (q_j^2 + p_j^2) / eps for z of shape (..., 2d)"""
    z = np.asarray(z, dtype=float)
    d = z.shape[-1] // 2
    return 2.0 * (z[..., :d] ** 2 + z[..., d:] ** 2) / eps


def _radial_squares(z: np.ndarray, center: PhasePoint) -> np.ndarray:
    """|z_j - w_j|^2 per axis, shape (m, d)"""
    d = center.dim
    dq = z[:, :d] - center.q
    dp = z[:, d:] - center.p
    return dq ** 2 + dp ** 2


# ---------------------------------------------------------------------------
# Wigner functions


def wigner_closed_form(s: State, z):
    """
    Wigner function of a Gaussian packet or Hermite state

    W_{phi_k}(z) = (pi eps)^{-d} exp(-|z|^2/eps) (-1)^{|k|} prod_j L_{k_j}(2|z_j|^2/eps);
    a Gaussian packet g_w is the k = 0 case recentered at w.
    """
    if isinstance(s, GaussianPacket):
        center, k = s.center, MultiIndex.zero(s.dim)
    elif isinstance(s, HermiteState):
        center, k = PhasePoint.origin(s.dim), s.k
    else:
        raise UnsupportedStateError(f"no closed-form Wigner function for {type(s).__name__}")
    pts, single = _points(z, s.dim)
    r2 = _radial_squares(pts, center)
    values = (math.pi * s.eps) ** (-s.dim) * np.exp(-np.sum(r2, axis=-1) / s.eps) * (-1) ** k.order()
    for j, kj in enumerate(k):
        values = values * laguerre(kj, 2.0 * r2[:, j] / s.eps)
    return _unwrap(values, single)


def wigner_numerical(s: State, z, quad: Optional[QuadratureSpec] = None, return_residual: bool = False):
    """
    W_psi(q, p) = (2 pi eps)^{-1} int exp(i p y / eps) psi(q - y/2) conj(psi(q + y/2)) dy

    One-dimensional only. The y-integral runs over the part of the support
    box where both factors live, cut at the kinks of the state, with enough
    Gauss-Legendre panels to resolve the oscillation.

    Args:
        s: State with d = 1
        z: Phase point(s) of shape (2,) or (m, 2)
        quad: gauss_legendre spec (nodes per panel, minimum panels)
        return_residual: Also return the relative imaginary residual

    Returns:
        Value(s), or (values, residuals) when return_residual is set
    """
    if s.dim != 1:
        raise DimensionMismatchError(f"numerical Wigner transform is implemented for d = 1, got d={s.dim}")
    quad = quad or QuadratureSpec.gauss_legendre(nodes=32, panels=8)
    pts, single = _points(z, 1)
    (a, b), = s.support_box()
    kinks = s.breakpoints()[0]
    p_scale = abs(float(s.phase_center().p[0]))
    values = np.empty(len(pts))
    residuals = np.empty(len(pts))
    for i, (q, p) in enumerate(pts):
        half = min(q - a, b - q)
        if half <= 0:
            values[i], residuals[i] = 0.0, 0.0
            continue
        y_max = 2.0 * half
        cuts = [2.0 * (q - c) for c in kinks] + [2.0 * (c - q) for c in kinks]
        waves = 2.0 * y_max * (abs(p) + p_scale) / (2.0 * math.pi * s.eps)
        panels = max(quad.panels, int(math.ceil(waves / 4.0)))
        rule = gauss_legendre_rule(quad.nodes, -y_max, y_max, cuts, panels)
        y = rule.points[:, 0]
        integrand = np.exp(1j * p * y / s.eps) * s.evaluate(q - 0.5 * y) * np.conj(s.evaluate(q + 0.5 * y))
        total = np.sum(rule.weights * integrand) / (2.0 * math.pi * s.eps)
        values[i] = total.real
        residuals[i] = abs(total.imag) / max(abs(total.real), 1e-300)
    if return_residual:
        return _unwrap(values, single), _unwrap(residuals, single)
    return _unwrap(values, single)


def wigner(s: State, z, quad: Optional[QuadratureSpec] = None):
    """Closed form when available, numerical transform otherwise"""
    if isinstance(s, (GaussianPacket, HermiteState)):
        return wigner_closed_form(s, z)
    return wigner_numerical(s, z, quad)


# ---------------------------------------------------------------------------
# Spectrograms


def _gaussian_type_spectrogram(center: PhasePoint, k: MultiIndex, eps: float, pts: np.ndarray) -> np.ndarray:
    """(2 pi eps)^{-d} exp(-|z-w|^2/(2 eps)) prod_j (|z_j-w_j|^2/(2 eps))^{k_j} / k_j!"""
    r2 = _radial_squares(pts, center) / (2.0 * eps)
    values = (2.0 * math.pi * eps) ** (-center.dim) * np.exp(-np.sum(r2, axis=-1))
    for j, kj in enumerate(k):
        values = values * r2[:, j] ** kj / math.factorial(kj)
    return values


def has_closed_form(s: State, k: MultiIndex) -> bool:
    return isinstance(s, GaussianPacket) or (isinstance(s, HermiteState) and k.order() == 0)


def spectrogram(
    s: State, k, z, quad: Optional[QuadratureSpec] = None, force_quadrature: bool = False, call_index: int = 0
):
    """
    Hermite spectrogram S_psi^{phi_k}(z) = (2 pi eps)^{-d} |<psi, T_z phi_k>|^2

    Closed forms are used for Gaussian packets (any window) and for the
    Husimi function of Hermite states unless force_quadrature is set.

    Args:
        s: State
        k: Window multi-index
        z: Phase point(s), shape (2d,) or (m, 2d)
        quad: Quadrature spec for the inner products
        force_quadrature: Skip the closed forms
        call_index: Monte Carlo stream offset

    Returns:
        Float for one point, array of shape (m,) otherwise
    """
    k = as_multi_index(k, s.dim)
    pts, single = _points(z, s.dim)
    if not force_quadrature and has_closed_form(s, k):
        if isinstance(s, GaussianPacket):
            values = _gaussian_type_spectrogram(s.center, k, s.eps, pts)
        else:
            values = _gaussian_type_spectrogram(PhasePoint.origin(s.dim), s.k, s.eps, pts)
    else:
        overlaps = inner_products(s, pts, k, quad, call_index)
        values = (2.0 * math.pi * s.eps) ** (-s.dim) * np.abs(overlaps) ** 2
    return _unwrap(values, single)


def husimi(s: State, z, quad: Optional[QuadratureSpec] = None, force_quadrature: bool = False):
    """Husimi function, the spectrogram with the Gaussian window g_0"""
    return spectrogram(s, MultiIndex.zero(s.dim), z, quad, force_quadrature)


def averaged_spectrogram(
    s: State, j: int, z, quad: Optional[QuadratureSpec] = None, force_quadrature: bool = False, call_index: int = 0
):
    """m_j^{-1} sum_{|k|=j} S_psi^{phi_k}(z) with m_j = binom(j+d-1, d-1)"""
    if j < 0:
        raise ValueError(f"spectrogram order must be nonnegative, got {j}")
    pts, single = _points(z, s.dim)
    indices = multi_indices(s.dim, j)
    total = sum(spectrogram(s, k, pts, quad, force_quadrature, call_index) for k in indices)
    return _unwrap(total / len(indices), single)


@dataclass(frozen=True)
class DensityComponent:
    """One order of mu^N: signed weight (-1)^j C_{N-1,j}, multiplicity m_j, order j"""

    order: int
    weight: Fraction
    multiplicity: int


@dataclass(frozen=True)
class SignedDensity:
    """mu^N as a signed combination of averaged spectrograms"""

    order: int
    dim: int
    eps: float
    components: Tuple[DensityComponent, ...]

    def total_mass(self) -> Fraction:
        return sum((c.weight * c.multiplicity for c in self.components), Fraction(0))

    def factors(self) -> np.ndarray:
        """Float factors weight_j * m_j applied to the averaged spectrogram of order j"""
        return np.array([float(c.weight * c.multiplicity) for c in self.components])

    def evaluate(self, s: State, z, quad: Optional[QuadratureSpec] = None, force_quadrature: bool = False):
        pts, single = _points(z, s.dim)
        total = np.zeros(len(pts))
        for c, factor in zip(self.components, self.factors()):
            total = total + factor * averaged_spectrogram(s, c.order, pts, quad, force_quadrature)
        return _unwrap(total, single)


def signed_density(d: int, N: int, eps: float) -> SignedDensity:
    """Weight and multiplicity table of mu^N"""
    if not 1 <= N <= MAX_ORDER:
        raise ValueError(f"order N must be in 1..{MAX_ORDER}, got {N}")
    coeffs = expansion_coefficients(d, N)
    components = tuple(
        DensityComponent(order=j, weight=w, multiplicity=level_multiplicity(d, j))
        for j, w in enumerate(coeffs.signed())
    )
    return SignedDensity(order=N, dim=d, eps=eps, components=components)


def mu_density(s: State, N: int, z, quad: Optional[QuadratureSpec] = None, force_quadrature: bool = False):
    """
    mu^N(z) = sum_{j<N} (-1)^j C_{N-1,j} sum_{|k|=j} S_psi^{phi_k}(z)

    Args:
        s: State
        N: Order, 1 <= N <= 8
        z: Phase point(s)
        quad: Quadrature for the inner products
        force_quadrature: Skip closed-form spectrograms

    Returns:
        Float for one point, array otherwise
    """
    return signed_density(s.dim, N, s.eps).evaluate(s, z, quad, force_quadrature)


def mu_density_via_laplacians(s: State, N: int, z):
    """
    mu^N(z) = sum_{m<N} (-eps/4)^m / m! Laplace^m S_psi^{g_0}(z) for a Gaussian packet

    The Husimi function of g_w is W_{g_0} at width 2 eps recentered at w, so
    the Laplace-Laguerre expansion applies with rho_j = |z_j - w_j|^2 / eps.
    """
    if not isinstance(s, GaussianPacket):
        raise UnsupportedStateError(f"Laplacian route needs a Gaussian packet, got {type(s).__name__}")
    if not 1 <= N <= MAX_ORDER:
        raise ValueError(f"order N must be in 1..{MAX_ORDER}, got {N}")
    pts, single = _points(z, s.dim)
    wide_rho = _radial_squares(pts, s.center) / s.eps
    base = _gaussian_type_spectrogram(s.center, MultiIndex.zero(s.dim), s.eps, pts)
    factor = np.zeros(len(pts))
    for m in range(N):
        # (-eps/4 Laplace)^m = 4^{-m} (-(2 eps)/2 Laplace)^m
        factor = factor + laplace_laguerre(s.dim, m).evaluate(wide_rho) / (4 ** m * math.factorial(m))
    return _unwrap(base * factor, single)


# ---------------------------------------------------------------------------
# Grids, profiles and masses


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (q, p) grid for d = 1"""

    q_min: float
    q_max: float
    p_min: float
    p_max: float
    nq: int
    np_: int

    def __post_init__(self):
        if self.nq < 1 or self.np_ < 1:
            raise GridError(f"grid needs at least one cell per axis, got {self.nq}x{self.np_}")
        if self.nq * self.np_ > MAX_GRID_CELLS:
            raise GridError(f"grid of {self.nq * self.np_} cells exceeds the limit of {MAX_GRID_CELLS}")
        if self.q_max < self.q_min or self.p_max < self.p_min:
            raise GridError("grid bounds are reversed")

    @classmethod
    def around(cls, center: PhasePoint, eps: float, half_width: float = 6.0, n: int = 101) -> "GridSpec":
        reach = half_width * math.sqrt(eps)
        q0, p0 = float(center.q[0]), float(center.p[0])
        return cls(q0 - reach, q0 + reach, p0 - reach, p0 + reach, n, n)

    def axes(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.linspace(self.q_min, self.q_max, self.nq), np.linspace(self.p_min, self.p_max, self.np_)

    def points(self) -> np.ndarray:
        """Row-major (q outer, p inner) points of shape (nq * np, 2)"""
        qs, ps = self.axes()
        Q, P = np.meshgrid(qs, ps, indexing="ij")
        return np.stack([Q.ravel(), P.ravel()], axis=-1)


DENSITY_KINDS = ("wigner", "husimi", "spectrogram", "mu")


def density_grid(
    s: State,
    which: str,
    grid: GridSpec,
    order: int = 1,
    k: Sequence[int] = (0,),
    quad: Optional[QuadratureSpec] = None,
    force_quadrature: bool = False,
) -> np.ndarray:
    """
    Evaluate a density on a rectangular grid (d = 1)

    Args:
        s: One-dimensional state
        which: One of wigner, husimi, spectrogram, mu
        grid: Grid specification
        order: N for mu
        k: Window for spectrogram

    Returns:
        Array of shape (nq * np, 3) with columns q, p, value
    """
    if s.dim != 1:
        raise DimensionMismatchError("density grids are two-dimensional phase portraits (d = 1)")
    pts = grid.points()
    if which == "wigner":
        values = wigner(s, pts, quad if quad and quad.kind == "gauss_legendre" else None)
    elif which == "husimi":
        values = husimi(s, pts, quad, force_quadrature)
    elif which == "spectrogram":
        values = spectrogram(s, k, pts, quad, force_quadrature)
    elif which == "mu":
        values = mu_density(s, order, pts, quad, force_quadrature)
    else:
        raise ValueError(f"unknown density {which!r}, expected one of {DENSITY_KINDS}")
    return np.column_stack([pts, np.atleast_1d(values)])


def radial_profile(eps: float, radii, orders: Sequence[int] = (1, 2, 3, 4)) -> Dict[str, np.ndarray]:
    """
    Wigner, Husimi and mu^N of a 1D Gaussian packet against |z - w|

    The profile does not depend on w; it is evaluated along the q axis.
    """
    radii = np.asarray(radii, dtype=float)
    s = GaussianPacket([0.0], [0.0], eps)
    pts = np.column_stack([radii, np.zeros_like(radii)])
    profile = {"radius": radii, "wigner": np.atleast_1d(wigner_closed_form(s, pts)), "husimi": np.atleast_1d(husimi(s, pts))}
    for N in orders:
        profile[f"mu{N}"] = np.atleast_1d(mu_density(s, N, pts))
    return profile


def effective_box(s: State, extra_order: int = 0) -> np.ndarray:
    """Phase space box center +- (8 + sqrt(2n+1)) sqrt(eps) per axis, shape (2d, 2)"""
    center = s.phase_center().as_array()
    state_order = s.k.order() if isinstance(s, HermiteState) else 0
    reach = (MASS_BOX_WIDTH + math.sqrt(2 * (state_order + extra_order) + 1)) * math.sqrt(s.eps)
    return np.stack([center - reach, center + reach], axis=-1)


def phase_space_mass(density, box: np.ndarray, nodes: int = 24, panels: int = 4) -> float:
    """
    Integral of a vectorized density over a phase space box

    Args:
        density: Callable mapping points (m, 2d) to values (m,)
        box: Array of shape (2d, 2)
        nodes: Gauss-Legendre nodes per panel
        panels: Panels per axis
    """
    rule = box_rule(np.asarray(box, dtype=float), None, nodes, panels)
    return float(np.sum(rule.weights * np.asarray(density(rule.points))))
