"""
Expectation Estimators
Signed spectrogram estimates of <psi, op(a) psi>, the deterministic
integration path, and exact Gaussian reference values
"""
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

import mpmath
import numpy as np

from phasespace.densities import MAX_ORDER, effective_box, mu_density
from phasespace.errors import DimensionMismatchError, QuadratureError
from phasespace.quadrature import QuadratureSpec, _gauss_hermite_1d, _tensor, box_rule, gauss_hermite_rule_mp
from phasespace.specfun import expansion_coefficients, level_multiplicity
from phasespace.states import GaussianPacket, PhasePoint, State
from estimators.observables import Func, Observable, Var, parse_observable
from estimators.sampler import ChainConfig, SampleSet, sample_orders

DEFAULT_BATCHES = 50
DEFAULT_DIGITS = 40
DEFAULT_MP_NODES = 48
# Largest tensor rule the deterministic path builds
MAX_TENSOR_POINTS = 2 ** 24


@dataclass
class ExpectationResult:
    """Estimate of <psi, op(a) psi> from the order-N spectrogram density"""

    estimate: float
    std_error: float
    per_order_means: List[float]
    n: int
    order: int
    method: str
    per_order_errors: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return asdict(self)


def as_observable(a: Union[str, Observable], d: int) -> Observable:
    if isinstance(a, Observable):
        if a.dim != d:
            raise DimensionMismatchError(f"observable is defined for d={a.dim}, state has d={d}")
        return a
    return parse_observable(a, d)


def order_factors(d: int, N: int) -> List[Fraction]:
    """(-1)^j C_{N-1,j} m_j for j = 0..N-1; they sum to 1"""
    if not 1 <= N <= MAX_ORDER:
        raise ValueError(f"order N must be in 1..{MAX_ORDER}, got {N}")
    return [w * level_multiplicity(d, j) for j, w in enumerate(expansion_coefficients(d, N).signed())]


def batch_means_error(values, n_batches: int = DEFAULT_BATCHES) -> float:
    """
    Standard error of a chain average by the method of batch means

    Falls back to the i.i.d. formula when there are fewer than two samples
    per batch.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n < 2:
        return 0.0
    if n < 2 * n_batches:
        return float(np.std(values, ddof=1) / math.sqrt(n))
    size = n // n_batches
    means = values[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(n_batches))


def estimate_from_samples(
    samples: Sequence[SampleSet], a: Union[str, Observable], n: Optional[int] = None, n_batches: int = DEFAULT_BATCHES
) -> ExpectationResult:
    """
    Combine per-order sample means into the signed estimate

    Args:
        samples: SampleSets for the orders 0..N-1
        a: Observable
        n: Use only the first n samples of every order
        n_batches: Batches for the standard error

    Returns:
        ExpectationResult with method "mcmc"
    """
    N = len(samples)
    orders = sorted(s.order for s in samples)
    if orders != list(range(N)):
        raise ValueError(f"sample sets must cover the orders 0..{N - 1}, got {orders}")
    samples = sorted(samples, key=lambda s: s.order)
    d = samples[0].dim
    a = as_observable(a, d)
    factors = [float(f) for f in order_factors(d, N)]
    means, errors = [], []
    for sample_set in samples:
        pts = sample_set.points if n is None else sample_set.points[:n]
        values = np.atleast_1d(a.evaluate(pts))
        means.append(float(np.mean(values)))
        errors.append(batch_means_error(values, n_batches))
    estimate = float(sum(f * m for f, m in zip(factors, means)))
    std_error = math.sqrt(sum((f * e) ** 2 for f, e in zip(factors, errors)))
    count = min(len(s.points) if n is None else min(n, len(s.points)) for s in samples)
    return ExpectationResult(estimate, std_error, means, count, N, "mcmc", errors)


def estimate_expectation(
    s: State, a: Union[str, Observable], N: int, cfg: ChainConfig, threads: int = 1
) -> ExpectationResult:
    """
    Monte Carlo estimate sum_j (-1)^j C_{N-1,j} m_j (1/n) sum_m a(z^j_m)

    Args:
        s: State
        a: Observable or its source text
        N: Order of the spectrogram density
        cfg: Chain configuration shared by all orders
        threads: Worker threads

    Returns:
        ExpectationResult
    """
    a = as_observable(a, s.dim)
    order_factors(s.dim, N)
    return estimate_from_samples(sample_orders(s, N, cfg, threads), a)


# ---------------------------------------------------------------------------
# Gaussian reference values


def _rising(x: Fraction, i: int) -> Fraction:
    out = Fraction(1)
    for m in range(i):
        out *= x + m
    return out


def _gaussian_moment(mu, sigma2, n: int):
    """E[(mu + sigma xi)^n] for xi ~ N(0, 1)"""
    total = 0 * mu
    for k in range(0, n + 1, 2):
        double_fact = math.prod(range(k - 1, 0, -2)) if k else 1
        total = total + math.comb(n, k) * mu ** (n - k) * sigma2 ** (k // 2) * double_fact
    return total


def _mp_or_float(digits: Optional[int]):
    return (lambda x: mpmath.mpf(x)) if digits else float


def _center_coords(w: PhasePoint) -> Dict:
    d = w.dim
    coords = {("q", i): float(w.q[i]) for i in range(d)}
    coords.update({("p", i): float(w.p[i]) for i in range(d)})
    return coords


def _gh_axes(n: int, digits: Optional[int]):
    if digits:
        return gauss_hermite_rule_mp(n, digits)
    t, w, _ = _gauss_hermite_1d(n)
    return t, w


def _tensor_sum(variables, center: Dict, a: Observable, eps, n: int, digits: Optional[int], radial=None):
    """
    pi^{-m/2} sum_i W_i a(center + sqrt(eps) t_i) g(|t_i|^2) over the m used variables

    radial maps |t|^2 to the polynomial weight g (None means g = 1).
    """
    m = len(variables)
    if n ** m > MAX_TENSOR_POINTS:
        raise QuadratureError(f"{n}^{m} tensor nodes exceed the limit of {MAX_TENSOR_POINTS}")
    t, w = _gh_axes(n, digits)
    if digits:
        root = mpmath.sqrt(eps)
        total = mpmath.mpf(0)
        for idx in np.ndindex(*([n] * m)):
            coords = dict(center)
            weight = mpmath.mpf(1)
            r2 = mpmath.mpf(0)
            for axis, var in enumerate(variables):
                ti = t[idx[axis]]
                coords[var] = center[var] + root * ti
                weight *= w[idx[axis]]
                r2 += ti * ti
            value = a.evaluate_with(coords, mpmath)
            total += weight * value * (radial(r2) if radial else 1)
        return total / mpmath.pi ** (mpmath.mpf(m) / 2)
    points, weights = _tensor([(t, w)] * m)
    d = a.dim
    z = np.tile(np.concatenate([[center[("q", i)] for i in range(d)], [center[("p", i)] for i in range(d)]]),
                (len(points), 1))
    for axis, (kind, i) in enumerate(variables):
        z[:, i + (d if kind == "p" else 0)] += math.sqrt(eps) * points[:, axis]
    values = np.atleast_1d(a.evaluate(z))
    if radial is not None:
        values = values * radial(np.sum(points ** 2, axis=-1))
    return float(np.sum(weights * values) / math.pi ** (m / 2))


def gaussian_weyl_oracle(w, a: Union[str, Observable], eps: float, digits: Optional[int] = None, nodes: Optional[int] = None):
    """
    Exact <g_w, op(a) g_w> = int a dN(w, (eps/2) Id)

    Polynomials use Gaussian moments; cos, sin and exp of a single variable
    use the characteristic function; anything else falls back to a tensor
    Gauss-Hermite rule over the variables the observable uses.

    Args:
        w: PhasePoint (or array (q, p))
        a: Observable or its source text
        eps: Semiclassical parameter
        digits: Work in mpmath at this precision and return an mpf
        nodes: Gauss-Hermite nodes per axis for the fallback path

    Returns:
        float, or mpmath.mpf when digits is given
    """
    w = w if isinstance(w, PhasePoint) else PhasePoint.from_array(w)
    a = as_observable(a, w.dim)
    if not digits:
        return _oracle(w, a, eps, None, nodes or 100)
    with mpmath.workdps(digits):
        return _oracle(w, a, eps, digits, nodes or DEFAULT_MP_NODES)


def _oracle(w: PhasePoint, a: Observable, eps, digits, nodes):
    num = _mp_or_float(digits)
    center = {key: num(v) for key, v in _center_coords(w).items()}
    sigma2 = num(eps) / 2
    poly = a.polynomial()
    if poly is not None:
        d = a.dim
        keys = [("q", i) for i in range(d)] + [("p", i) for i in range(d)]
        total = num(0)
        for exponents, coeff in poly.items():
            term = num(coeff)
            for key, e in zip(keys, exponents):
                if e:
                    term = term * _gaussian_moment(center[key], sigma2, e)
            total = total + term
        return total
    tree = a.tree
    if isinstance(tree, Func) and isinstance(tree.arg, Var):
        mu = center[(tree.arg.kind, tree.arg.axis)]
        lib = mpmath if digits else math
        if tree.name == "cos":
            return lib.cos(mu) * lib.exp(-sigma2 / 2)
        if tree.name == "sin":
            return lib.sin(mu) * lib.exp(-sigma2 / 2)
        return lib.exp(mu + sigma2 / 2)
    return _tensor_sum(a.variables(), center, a, num(eps), nodes, digits)


# ---------------------------------------------------------------------------
# Deterministic integration of a against mu^N


def _radial_coefficients(d: int, N: int, unused: int) -> List[Fraction]:
    """
    Coefficients of the polynomial g(R) with
    int a mu^N dz = pi^{-m/2} int a(w + sqrt(2 eps) t) g(|t|^2) e^{-|t|^2} dt

    over the m variables a uses; the 2d - m unused ones are integrated out
    exactly using E|s|^{2i} = (unused/2)_i.
    """
    signed = expansion_coefficients(d, N).signed()
    half = Fraction(unused, 2)
    coeffs = [Fraction(0)] * N
    for j, c in enumerate(signed):
        scale = c / math.factorial(j)
        for i in range(j + 1):
            coeffs[j - i] += scale * math.comb(j, i) * _rising(half, i)
    return coeffs


def integrate_gaussian(s: GaussianPacket, a: Observable, N: int, digits: Optional[int] = None, nodes: Optional[int] = None):
    """
    int a mu^N dz for a Gaussian packet from the closed-form spectrograms

    sum_{|k|=j} S^{phi_k}_{g_w} integrates against a as a Gaussian average
    with radial weight |t|^{2j} / j!, so the tensor rule only spans the
    variables a depends on.

    Returns:
        float, or mpmath.mpf when digits is given
    """
    order_factors(s.dim, N)
    variables = a.variables()
    coeffs = _radial_coefficients(s.dim, N, 2 * s.dim - len(variables))
    if nodes is None:
        degree = a.degree()
        nodes = (degree // 2 + N + 1) if degree is not None else (DEFAULT_MP_NODES if digits else 64)
    if not digits:
        return _integrate_gaussian(s, a, coeffs, variables, None, nodes)
    with mpmath.workdps(digits):
        return _integrate_gaussian(s, a, coeffs, variables, digits, nodes)


def _integrate_gaussian(s, a, coeffs, variables, digits, nodes):
    num = _mp_or_float(digits)
    weights = [num(c.numerator) / num(c.denominator) for c in coeffs]

    def radial(r2):
        total = 0 * r2
        for c in reversed(weights):
            total = total * r2 + c
        return total

    center = {key: num(v) for key, v in _center_coords(s.center).items()}
    if not variables:
        return num(a.evaluate_with(center, mpmath if digits else math)) * weights[0]
    # z = w + sqrt(2 eps) t
    return _tensor_sum(variables, center, a, 2 * num(s.eps), nodes, digits, radial)


def integrate_mu(
    s: State,
    a: Union[str, Observable],
    N: int,
    digits: Optional[int] = None,
    nodes: Optional[int] = None,
    quad: Optional[QuadratureSpec] = None,
) -> float:
    """
    Deterministic int a mu_psi^N dz

    Gaussian packets use the closed-form spectrograms with Gauss-Hermite
    quadrature (extended precision when digits is given). Other states
    integrate the quadrature-evaluated mu^N over the effective box with a
    composite Gauss-Legendre rule.

    Args:
        s: State
        a: Observable
        N: Order
        digits: mpmath precision for Gaussian packets
        nodes: Nodes per axis (Gauss-Hermite) or per panel (Gauss-Legendre)
        quad: Inner-product quadrature for non-Gaussian states

    Returns:
        Real value
    """
    a = as_observable(a, s.dim)
    if isinstance(s, GaussianPacket):
        return float(integrate_gaussian(s, a, N, digits, nodes))
    order_factors(s.dim, N)
    box = effective_box(s, N)
    rule = box_rule(box, None, nodes or 24, 4)
    values = mu_density(s, N, rule.points, quad)
    return float(np.sum(rule.weights * np.atleast_1d(values) * np.atleast_1d(a.evaluate(rule.points))))


def position_expectation(s: State, a: Union[str, Observable], nodes: int = 32, panels: int = 16) -> float:
    """
    <psi, a(x) psi> = int |psi(x)|^2 a(x) dx for observables of the positions only

    The Weyl quantization of a(q) is multiplication by a, so this is the
    exact reference for such observables.
    """
    a = as_observable(a, s.dim)
    if any(kind == "p" for kind, _ in a.variables()):
        raise ValueError(f"{a.to_source()} depends on momenta; position expectation needs a(q) only")
    rule = box_rule(s.support_box(), s.breakpoints(), nodes, panels)
    x = rule.points
    z = np.concatenate([x, np.zeros_like(x)], axis=-1)
    density = np.abs(s.evaluate(x)) ** 2
    return float(np.sum(rule.weights * density * np.atleast_1d(a.evaluate(z))))
