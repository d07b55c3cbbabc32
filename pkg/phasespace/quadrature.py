"""
Quadrature Backends
Gauss-Hermite, Gauss-Legendre, Sobol quasi-Monte Carlo and plain Monte Carlo
rules, and the windowed inner products <psi, T_z phi_k> built on them
"""
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import LinAlgError, eigh_tridiagonal
from scipy.special import ndtri
from scipy.stats import qmc

from observability.langfuse_config import log_run_event
from phasespace.errors import DimensionMismatchError, QuadratureAccuracyWarning, QuadratureError
from phasespace.specfun import MultiIndex, as_multi_index, hermite_function, hermite_polynomial_factors

MAX_GAUSS_HERMITE_NODES = 200
MAX_GAUSS_HERMITE_DIM = 3
MAX_SOBOL_DIM = 64
MAX_SOBOL_POINTS = 2 ** 31
MAX_DIM = 8
# Chunk size (points x nodes) for batched inner products
_BATCH_POINTS = 2 ** 21


class QuadratureKind(str, Enum):
    GAUSS_HERMITE = "gauss_hermite"
    QMC_SOBOL = "qmc_sobol"
    MONTE_CARLO = "monte_carlo"
    GAUSS_LEGENDRE = "gauss_legendre"


class QuadratureSpec(BaseModel):
    """
    Quadrature choice

    nodes is per axis for gauss_hermite and per panel for gauss_legendre,
    and the total point count for qmc_sobol and monte_carlo.
    """

    model_config = ConfigDict(frozen=True, extra="forbid", use_enum_values=False)

    kind: QuadratureKind = Field(QuadratureKind.GAUSS_HERMITE, description="Rule family")
    nodes: int = Field(40, ge=1, description="Node count")
    seed: int = Field(0, ge=0, lt=2 ** 64, description="Seed for monte_carlo")
    panels: int = Field(1, ge=1, description="Panels per interval for gauss_legendre")

    @classmethod
    def gauss_hermite(cls, nodes: int = 40) -> "QuadratureSpec":
        return cls(kind=QuadratureKind.GAUSS_HERMITE, nodes=nodes)

    @classmethod
    def sobol(cls, nodes: int = 1000) -> "QuadratureSpec":
        return cls(kind=QuadratureKind.QMC_SOBOL, nodes=nodes)

    @classmethod
    def monte_carlo(cls, nodes: int = 4096, seed: int = 0) -> "QuadratureSpec":
        return cls(kind=QuadratureKind.MONTE_CARLO, nodes=nodes, seed=seed)

    @classmethod
    def gauss_legendre(cls, nodes: int = 32, panels: int = 8) -> "QuadratureSpec":
        return cls(kind=QuadratureKind.GAUSS_LEGENDRE, nodes=nodes, panels=panels)


@dataclass(frozen=True)
class NodeSet:
    """Quadrature nodes of shape (n, d) with weights of shape (n,)"""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.points) != len(self.weights):
            raise QuadratureError(f"{len(self.points)} points but {len(self.weights)} weights")
        if not np.all(np.isfinite(self.weights)):
            raise QuadratureError("non-finite quadrature weights")

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def integrate(self, f) -> complex:
        """Apply the rule to a vectorized integrand f(points) -> (n,)"""
        return np.sum(self.weights * f(self.points))


def default_quadrature(smooth: bool, d: int) -> QuadratureSpec:
    """
    Default inner-product quadrature for a state

    Gauss-Hermite (40 per axis) for smooth states in d <= 2, 10^3 Sobol
    points for non-smooth states, Monte Carlo from d = 3 on.
    """
    if d >= 3:
        return QuadratureSpec.monte_carlo()
    if not smooth:
        return QuadratureSpec.sobol()
    return QuadratureSpec.gauss_hermite()


# ---------------------------------------------------------------------------
# Rules


@lru_cache(maxsize=64)
def _gauss_hermite_1d(n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Golub-Welsch nodes, weights and log-weights for the weight exp(-t^2)"""
    if not 1 <= n <= MAX_GAUSS_HERMITE_NODES:
        raise QuadratureError(f"Gauss-Hermite needs 1 <= n <= {MAX_GAUSS_HERMITE_NODES}, got {n}")
    if n == 1:
        return np.zeros(1), np.array([math.sqrt(math.pi)]), np.array([0.5 * math.log(math.pi)])
    off = np.sqrt(np.arange(1, n) / 2.0)
    try:
        nodes, vecs = eigh_tridiagonal(np.zeros(n), off)
    except LinAlgError as e:
        raise QuadratureError(f"tridiagonal eigensolver failed for n={n}: {e}") from e
    v0 = np.abs(vecs[0])
    log_w = 0.5 * math.log(math.pi) + 2.0 * np.log(v0)
    # symmetrize against roundoff
    nodes = 0.5 * (nodes - nodes[::-1])
    log_w = 0.5 * (log_w + log_w[::-1])
    for arr in (nodes, log_w):
        arr.setflags(write=False)
    return nodes, np.exp(log_w), log_w


def _tensor(axes: Sequence[Tuple[np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor product of 1D (nodes, weights) pairs; weights are multiplied"""
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([w.ravel() for w in wgrids], axis=-1), axis=-1)
    return points, weights


def _tensor_log(axes: Sequence[Tuple[np.ndarray, np.ndarray]]) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor product where the second entries are log-weights (added)"""
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    lgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    log_w = np.sum(np.stack([lw.ravel() for lw in lgrids], axis=-1), axis=-1)
    return points, log_w


def gauss_hermite_rule(n: int, eps: float = 1.0, center=None, d: int = 1) -> NodeSet:
    """
    Tensor Gauss-Hermite rule for the weight exp(-|x - center|^2 / eps)

    Args:
        n: Nodes per axis (1..200)
        eps: Width parameter; eps = 1 and center = 0 give the raw rule
        center: Point in R^d (default origin)
        d: Dimension

    Returns:
        NodeSet with n^d nodes
    """
    if d < 1 or d > MAX_DIM:
        raise QuadratureError(f"dimension {d} outside 1..{MAX_DIM}")
    t, w, _ = _gauss_hermite_1d(n)
    points, weights = _tensor([(t, w)] * d)
    center = np.zeros(d) if center is None else np.asarray(center, dtype=float).reshape(d)
    return NodeSet(points=center + math.sqrt(eps) * points, weights=eps ** (d / 2) * weights)


@lru_cache(maxsize=16)
def gauss_hermite_rule_mp(n: int, digits: int = 40) -> Tuple[tuple, tuple]:
    """
    Extended-precision 1D Gauss-Hermite rule (weight exp(-t^2)) as mpmath numbers

    Returns:
        (nodes, weights) tuples of mpf computed at the given decimal precision
    """
    with mpmath.workdps(digits):
        try:
            nodes, weights = mpmath.mp.gauss_quadrature(n, "hermite")
        except Exception as e:
            raise QuadratureError(f"extended-precision Gauss-Hermite failed for n={n}: {e}") from e
        return tuple(nodes), tuple(weights)


def sobol_nodes(n: int, d: int) -> NodeSet:
    """
    First n unscrambled Sobol points in [0,1)^d with uniform weights 1/n

    Joe-Kuo direction numbers (through scipy); the first point is the origin.
    """
    if d < 1 or d > MAX_SOBOL_DIM:
        raise QuadratureError(f"Sobol direction numbers cover 1..{MAX_SOBOL_DIM} dimensions, got {d}")
    if not 1 <= n <= MAX_SOBOL_POINTS:
        raise QuadratureError(f"Sobol point count must be in 1..2^31, got {n}")
    points = _sobol_points(n, d)
    return NodeSet(points=points, weights=np.full(n, 1.0 / n))


@lru_cache(maxsize=32)
def _sobol_points(n: int, d: int) -> np.ndarray:
    with warnings.catch_warnings():
        # balance warning for non powers of two
        warnings.simplefilter("ignore", category=UserWarning)
        points = qmc.Sobol(d=d, scramble=False).random(n)
    points.setflags(write=False)
    return points


def l2_star_discrepancy(points) -> float:
    """L2-star discrepancy of points in [0,1)^d"""
    return float(qmc.discrepancy(np.asarray(points, dtype=float), method="L2-star"))


def gauss_legendre_rule(n: int, a: float, b: float, breakpoints: Sequence[float] = (), panels: int = 1) -> NodeSet:
    """
    Composite Gauss-Legendre rule on [a, b]

    The interval is first cut at the breakpoints inside (a, b), then each
    piece is split into `panels` equal panels carrying n nodes each.
    """
    if b <= a:
        return NodeSet(points=np.zeros((0, 1)), weights=np.zeros(0))
    cuts = sorted({a, b, *[c for c in breakpoints if a < c < b]})
    t, w = leggauss(n)
    pts: List[np.ndarray] = []
    wts: List[np.ndarray] = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        edges = np.linspace(lo, hi, panels + 1)
        for plo, phi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (phi - plo)
            pts.append(plo + half * (t + 1.0))
            wts.append(half * w)
    return NodeSet(points=np.concatenate(pts)[:, None], weights=np.concatenate(wts))


def box_rule(box: np.ndarray, breakpoints: Sequence[Sequence[float]], n: int, panels: int) -> NodeSet:
    """Tensor composite Gauss-Legendre rule on a box of shape (d, 2)"""
    axes = []
    for j, (lo, hi) in enumerate(box):
        rule = gauss_legendre_rule(n, lo, hi, breakpoints[j] if breakpoints else (), panels)
        axes.append((rule.points[:, 0], rule.weights))
    points, weights = _tensor(axes)
    return NodeSet(points=points, weights=weights)


# ---------------------------------------------------------------------------
# Standardized window rules
#
# A window rule returns offsets t and log-weights such that
#   int f(q + sqrt(eps) t) exp(-|t|^2/2) dt  ~  sum_i exp(logw_i) f(q + sqrt(eps) t_i)
# i.e. the Gaussian factor of phi_k(x - q) is already folded into the weights.


def _window_rule(quad: QuadratureSpec, d: int, call_index: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    kind = QuadratureKind(quad.kind)
    if kind is QuadratureKind.GAUSS_HERMITE:
        if d > MAX_GAUSS_HERMITE_DIM:
            raise QuadratureError(f"gauss_hermite is limited to d <= {MAX_GAUSS_HERMITE_DIM}, got d={d}")
        t, _, log_w = _gauss_hermite_1d(quad.nodes)
        points, log_weights = _tensor_log([(t, log_w)] * d)
        # weight exp(-|t|^2) -> Lebesgue (+|t|^2) -> window Gaussian (-|t|^2/2)
        return points, log_weights + 0.5 * np.sum(points ** 2, axis=-1)
    if kind is QuadratureKind.QMC_SOBOL:
        # skip the origin, which the inverse CDF maps to -inf
        u = _sobol_points(quad.nodes + 1, d)[1:]
        points = ndtri(u) / math.sqrt(2.0)
    elif kind is QuadratureKind.MONTE_CARLO:
        points = _mc_generator(quad.seed, call_index).standard_normal((quad.nodes, d)) / math.sqrt(2.0)
    else:
        raise QuadratureError(f"{kind.value} has no standardized window rule")
    # sampling density pi^{-d/2} exp(-|t|^2) -> Lebesgue -> window Gaussian
    log_weights = 0.5 * d * math.log(math.pi) - math.log(quad.nodes) + 0.5 * np.sum(points ** 2, axis=-1)
    return points, log_weights


def _mc_generator(seed: int, call_index: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, call index)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(call_index)])))


def _warn_if_underresolved(k: MultiIndex, quad: QuadratureSpec) -> bool:
    kind = QuadratureKind(quad.kind)
    top = max(k.entries)
    if kind is QuadratureKind.GAUSS_HERMITE:
        flagged = 2 * top >= quad.nodes
    elif kind is QuadratureKind.GAUSS_LEGENDRE:
        flagged = 2 * top >= quad.nodes * quad.panels
    else:
        flagged = quad.nodes < 50 * (k.order() + 1)
    if flagged:
        warnings.warn(
            f"Hermite window {k} is large relative to {quad.nodes} {QuadratureKind(quad.kind).value} nodes",
            QuadratureAccuracyWarning,
            stacklevel=3,
        )
        log_run_event("quadrature_warning", "quadrature", {"k": list(k.entries), "kind": kind.value, "nodes": quad.nodes})
    return flagged


def _split_points(zs, d: int) -> Tuple[np.ndarray, np.ndarray]:
    zs = np.asarray(zs, dtype=float)
    if zs.ndim == 1:
        zs = zs[None, :]
    if zs.shape[-1] != 2 * d:
        raise DimensionMismatchError(f"phase points have {zs.shape[-1]} coordinates, expected {2 * d}")
    return zs[:, :d], zs[:, d:]


def inner_products(state, zs, k, quad: Optional[QuadratureSpec] = None, call_index: int = 0) -> np.ndarray:
    """
    Batched windowed inner products <psi, T_z phi_k> = int psi(x) conj(T_z phi_k(x)) dx

    Args:
        state: Wavefunction with evaluate(x), eps and dim
        zs: Phase points of shape (m, 2d) (or a single point of shape (2d,))
        k: Hermite window multi-index
        quad: Quadrature spec (defaults to the state's choice)
        call_index: Offset for the Monte Carlo stream of the first point

    Returns:
        Complex array of shape (m,)
    """
    d, eps = state.dim, state.eps
    k = as_multi_index(k, d)
    quad = quad or state.default_quadrature()
    qs, ps = _split_points(zs, d)
    _warn_if_underresolved(k, quad)
    kind = QuadratureKind(quad.kind)
    if kind is QuadratureKind.GAUSS_LEGENDRE:
        return np.array([_inner_product_legendre(state, q, p, k, quad) for q, p in zip(qs, ps)])
    if kind is QuadratureKind.MONTE_CARLO:
        out = np.empty(len(qs), dtype=complex)
        for i, (q, p) in enumerate(zip(qs, ps)):
            t, log_w = _window_rule(quad, d, call_index + i)
            out[i] = _window_sum(state, q[None], p[None], t, log_w, k)[0]
        return out
    t, log_w = _window_rule(quad, d)
    chunk = max(1, _BATCH_POINTS // len(t))
    return np.concatenate(
        [_window_sum(state, qs[s:s + chunk], ps[s:s + chunk], t, log_w, k) for s in range(0, len(qs), chunk)]
    )


def inner_product_with_window(state, z, k, quad: Optional[QuadratureSpec] = None, call_index: int = 0) -> complex:
    """Single-point <psi, T_z phi_k>; see inner_products"""
    return complex(inner_products(state, np.asarray(z, dtype=float).reshape(1, -1), k, quad, call_index)[0])


def _window_sum(state, qs, ps, t, log_w, k: MultiIndex) -> np.ndarray:
    eps, d = state.eps, state.dim
    root = math.sqrt(eps)
    weights = np.exp(log_w) * hermite_polynomial_factors(k, t)
    x = qs[:, None, :] + root * t[None, :, :]
    psi = state.evaluate(x)
    phase = np.exp(-1j * np.einsum("md,mnd->mn", ps, x - 0.5 * qs[:, None, :]) / eps)
    return eps ** (d / 4) * np.sum(psi * phase * weights[None, :], axis=-1)


def _window_box(q, k: MultiIndex, eps: float) -> np.ndarray:
    reach = (10.0 + np.sqrt(2.0 * np.asarray(k.entries) + 1.0)) * math.sqrt(eps)
    return np.stack([q - reach, q + reach], axis=-1)


def _inner_product_legendre(state, q, p, k: MultiIndex, quad: QuadratureSpec) -> complex:
    eps = state.eps
    box = _intersect(_window_box(q, k, eps), state.support_box())
    if box is None:
        return 0j
    rule = box_rule(box, state.breakpoints(), quad.nodes, quad.panels)
    x = rule.points
    window = np.exp(1j * (x - 0.5 * q) @ p / eps) * hermite_function(k, eps, x - q)
    return complex(np.sum(rule.weights * state.evaluate(x) * np.conj(window)))


def _intersect(a: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
    lo = np.maximum(a[:, 0], b[:, 0])
    hi = np.minimum(a[:, 1], b[:, 1])
    if np.any(hi <= lo):
        return None
    return np.stack([lo, hi], axis=-1)


# ---------------------------------------------------------------------------
# L^2 overlaps


def overlap(s1, s2, quad: Optional[QuadratureSpec] = None, call_index: int = 0) -> complex:
    """
    <psi_1, psi_2> = int psi_1(x) conj(psi_2(x)) dx

    Gauss-Hermite and (Q)MC rules are centered at the midpoint of the two
    position centers with the envelope exp(-|x - m|^2 / eps); Gauss-Legendre
    covers the hull of both support boxes.
    """
    if s1.dim != s2.dim:
        raise DimensionMismatchError(f"states of dimension {s1.dim} and {s2.dim}")
    if not math.isclose(s1.eps, s2.eps):
        raise ValueError(f"states with different eps {s1.eps} and {s2.eps}")
    d, eps = s1.dim, s1.eps
    quad = quad or QuadratureSpec.gauss_hermite()
    kind = QuadratureKind(quad.kind)
    if kind is QuadratureKind.GAUSS_LEGENDRE:
        b1, b2 = s1.support_box(), s2.support_box()
        box = np.stack([np.minimum(b1[:, 0], b2[:, 0]), np.maximum(b1[:, 1], b2[:, 1])], axis=-1)
        breaks = [sorted(set(a) | set(b)) for a, b in zip(s1.breakpoints(), s2.breakpoints())]
        rule = box_rule(box, breaks, quad.nodes, quad.panels)
        return complex(np.sum(rule.weights * s1.evaluate(rule.points) * np.conj(s2.evaluate(rule.points))))
    m = 0.5 * (s1.phase_center().q + s2.phase_center().q)
    t, log_w = _window_rule(quad, d, call_index)
    # undo the window Gaussian folded in by _window_rule
    weights = np.exp(log_w + 0.5 * np.sum(t ** 2, axis=-1))
    x = m + math.sqrt(eps) * t
    return complex(eps ** (d / 2) * np.sum(weights * s1.evaluate(x) * np.conj(s2.evaluate(x))))
