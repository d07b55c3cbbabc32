"""
Special Function Kernels
Laguerre and Hermite functions, multi-indices, and the exact rational
coefficient tables behind the Hermite spectrogram expansion
"""
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, Iterator, List, Tuple

import numpy as np

from phasespace.errors import DimensionMismatchError, HermiteOrderError

DEFAULT_HERMITE_CAP = 60


def hermite_order_cap() -> int:
    """Per-axis Hermite order cap, overridable with SPECTRO_HERMITE_CAP"""
    return int(os.getenv("SPECTRO_HERMITE_CAP", DEFAULT_HERMITE_CAP))


@dataclass(frozen=True)
class MultiIndex:
    """A multi-index k = (k_1, ..., k_d) of nonnegative integers"""

    entries: Tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        if not entries:
            raise ValueError("MultiIndex needs at least one entry")
        if any(e < 0 for e in entries):
            raise ValueError(f"MultiIndex entries must be nonnegative, got {entries}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def zero(cls, d: int) -> "MultiIndex":
        return cls((0,) * d)

    @classmethod
    def unit(cls, d: int, axis: int) -> "MultiIndex":
        return cls(tuple(1 if i == axis else 0 for i in range(d)))

    @property
    def dim(self) -> int:
        return len(self.entries)

    def order(self) -> int:
        return sum(self.entries)

    def factorial(self) -> int:
        return math.prod(math.factorial(e) for e in self.entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> int:
        return self.entries[i]

    def __str__(self) -> str:
        return "(" + ",".join(str(e) for e in self.entries) + ")"


def as_multi_index(k, d: int = None) -> MultiIndex:
    """Coerce an int, sequence or MultiIndex into a MultiIndex of dimension d"""
    if isinstance(k, MultiIndex):
        mi = k
    elif isinstance(k, (int, np.integer)):
        if d not in (None, 1):
            raise DimensionMismatchError(f"scalar order {k} is ambiguous for d={d}")
        mi = MultiIndex((int(k),))
    else:
        mi = MultiIndex(tuple(k))
    if d is not None and mi.dim != d:
        raise DimensionMismatchError(f"multi-index {mi} has dimension {mi.dim}, expected {d}")
    return mi


@dataclass(frozen=True)
class ExpansionCoefficients:
    """
    Weights of the Hermite spectrogram expansion of order N

    c[j] = C_{N-1,j}; the consumer applies the sign (-1)^j.
    """

    dim: int
    order: int
    c: Tuple[Fraction, ...]

    def signed(self) -> List[Fraction]:
        return [(-1) ** j * cj for j, cj in enumerate(self.c)]

    def multiplicities(self) -> List[int]:
        return [level_multiplicity(self.dim, j) for j in range(self.order)]

    def signed_mass(self) -> Fraction:
        return sum(w * m for w, m in zip(self.signed(), self.multiplicities()))

    def as_floats(self) -> np.ndarray:
        return np.array([float(w) for w in self.signed()])


@dataclass(frozen=True)
class LaplaceLaguerreExpansion:
    """
    Laguerre expansion of the iterated Laplacian (-eps/2 Laplace)^N of W_{g0}

    levels[n] is the coefficient of every product polynomial L_k(rho)
    with |k| = n.
    """

    dim: int
    power: int
    levels: Dict[int, int] = field(default_factory=dict)

    def coefficient(self, k: MultiIndex) -> int:
        return self.levels.get(k.order(), 0)

    def terms(self) -> Dict[MultiIndex, int]:
        return {k: c for n, c in self.levels.items() for k in multi_indices(self.dim, n)}

    def evaluate(self, rho) -> np.ndarray:
        """
        Evaluate the polynomial factor sum_k coeff(k) L_k(rho)

        Args:
            rho: Array of shape (..., d) with the variables rho_j

        Returns:
            Array of shape (...)
        """
        rho = np.asarray(rho, dtype=float)
        total = np.zeros(rho.shape[:-1])
        for k, coeff in self.terms().items():
            total = total + coeff * laguerre_product(k, rho)
        return total


def laguerre(n: int, x):
    """
    Laguerre polynomial L_n(x) via the three-term recurrence

    (n+1) L_{n+1} = (2n+1-x) L_n - n L_{n-1}

    Args:
        n: Degree, n >= 0
        x: Scalar or array

    Returns:
        L_n(x) with the shape of x (a float for scalar input)
    """
    if n < 0:
        raise ValueError(f"Laguerre degree must be nonnegative, got {n}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 - x
    for m in range(1, n):
        prev, cur = cur, ((2 * m + 1 - x) * cur - m * prev) / (m + 1)
    return cur if cur.ndim else float(cur)


def laguerre_explicit(n: int, x: float) -> float:
    """L_n(x) from the defining sum; used as an oracle for the recurrence"""
    return sum(math.comb(n, n - j) * (-x) ** j / math.factorial(j) for j in range(n + 1))


def laguerre_product(k: MultiIndex, rho) -> np.ndarray:
    """Product Laguerre polynomial prod_j L_{k_j}(rho_j) for rho of shape (..., d)"""
    rho = np.asarray(rho, dtype=float)
    if rho.shape[-1] != k.dim:
        raise DimensionMismatchError(f"rho has {rho.shape[-1]} components, multi-index {k} needs {k.dim}")
    out = np.ones(rho.shape[:-1])
    for j, kj in enumerate(k):
        out = out * laguerre(kj, rho[..., j])
    return out


def hermite_functions_1d(n_max: int, t) -> np.ndarray:
    """
    Normalized Hermite functions psi_0..psi_{n_max} at the points t

    psi_n(t) = (2^n n! sqrt(pi))^{-1/2} H_n(t) exp(-t^2/2), computed with the
    recurrence on the normalized functions so no factorial is formed.

    Returns:
        Array of shape (n_max + 1,) + t.shape
    """
    t = np.asarray(t, dtype=float)
    out = np.empty((n_max + 1,) + t.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * t * t)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * t * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * t * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def hermite_polynomial_factors(k: MultiIndex, t) -> np.ndarray:
    """
    Polynomial part of the normalized Hermite function

    Returns prod_j pi^{-1/4} (2^{k_j} k_j!)^{-1/2} H_{k_j}(t_j), i.e. psi_k(t)
    with the Gaussian factor exp(-|t|^2/2) removed. Used by quadrature
    rules that absorb the Gaussian into their weights.
    """
    t = np.asarray(t, dtype=float)
    _check_cap(k)
    out = np.ones(t.shape[:-1])
    for j, kj in enumerate(k):
        tj = t[..., j]
        prev = np.full(tj.shape, np.pi ** -0.25)
        if kj == 0:
            out = out * prev
            continue
        cur = np.sqrt(2.0) * tj * prev
        for n in range(1, kj):
            prev, cur = cur, np.sqrt(2.0 / (n + 1)) * tj * cur - np.sqrt(n / (n + 1)) * prev
        out = out * cur
    return out


def _check_cap(k: MultiIndex) -> None:
    cap = hermite_order_cap()
    if max(k.entries) > cap:
        raise HermiteOrderError(f"Hermite order {k} exceeds the per-axis cap {cap}")


def hermite_function(k, eps: float, x) -> np.ndarray:
    """
    Semiclassically scaled Hermite function phi_k(x)

    phi_k(x) = prod_j eps^{-1/4} psi_{k_j}(x_j / sqrt(eps)), so phi_0 = g_0.

    Args:
        k: Multi-index (or sequence of ints)
        eps: Semiclassical parameter
        x: Point(s) of shape (..., d)

    Returns:
        Real array of shape (...) (a float for a single point)
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1)
    k = as_multi_index(k, x.shape[-1])
    _check_cap(k)
    t = x / np.sqrt(eps)
    out = np.full(t.shape[:-1], eps ** (-0.25 * k.dim))
    for j, kj in enumerate(k):
        out = out * hermite_functions_1d(kj, t[..., j])[kj]
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def expansion_coefficients(d: int, N: int) -> ExpansionCoefficients:
    """
    Exact coefficients C_{N-1,j} = sum_{m=j}^{N-1} 2^{-m} binom(d-1+m, d-1+j)

    Args:
        d: Configuration space dimension
        N: Order of the density mu^N

    Returns:
        ExpansionCoefficients with N exact rationals
    """
    if d < 1 or N < 1:
        raise ValueError(f"need d >= 1 and N >= 1, got d={d}, N={N}")
    c = tuple(
        sum((Fraction(math.comb(d - 1 + m, d - 1 + j), 2 ** m) for m in range(j, N)), Fraction(0))
        for j in range(N)
    )
    return ExpansionCoefficients(dim=d, order=N, c=c)


def laplace_laguerre(d: int, N: int) -> LaplaceLaguerreExpansion:
    """
    Laguerre expansion of (-eps/2 Laplace)^N W_{g0}

    The coefficient of level n = |k| is N! binom(N+d-1, n+d-1).
    """
    if d < 1 or N < 0:
        raise ValueError(f"need d >= 1 and N >= 0, got d={d}, N={N}")
    levels = {n: math.factorial(N) * math.comb(N + d - 1, n + d - 1) for n in range(N + 1)}
    return LaplaceLaguerreExpansion(dim=d, power=N, levels=levels)


@lru_cache(maxsize=None)
def _compositions(d: int, j: int) -> Tuple[MultiIndex, ...]:
    found = [k for k in product(range(j + 1), repeat=d) if sum(k) == j]
    return tuple(MultiIndex(k) for k in sorted(found))


def multi_indices(d: int, j: int) -> List[MultiIndex]:
    """All k in N^d with |k| = j, in lexicographic order"""
    if d < 1 or j < 0:
        raise ValueError(f"need d >= 1 and j >= 0, got d={d}, j={j}")
    return list(_compositions(d, j))


def level_multiplicity(d: int, j: int) -> int:
    """Number of multi-indices with |k| = j, binom(j+d-1, d-1)"""
    return math.comb(j + d - 1, d - 1)


def binomial_identity_check(N: int, m: int, k: int) -> bool:
    """
    Exact check of sum_{j=0}^{N-m} binom(N-j, m) binom(k+j, j) = binom(N+k+1, N-m)
    """
    if not 0 <= m <= N or k < 0:
        raise ValueError(f"need 0 <= m <= N and k >= 0, got N={N}, m={m}, k={k}")
    lhs = sum(math.comb(N - j, m) * math.comb(k + j, j) for j in range(N - m + 1))
    return lhs == math.comb(N + k + 1, N - m)

