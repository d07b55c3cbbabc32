"""
Wavefunction Model
Gaussian wave packets, Hermite states, the semiclassical hat function and
normalized superpositions, with pointwise evaluation and the
Heisenberg-Weyl shift of Hermite windows
"""
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from phasespace.errors import DimensionMismatchError, UnsupportedStateError
from phasespace.quadrature import QuadratureSpec, default_quadrature, overlap
from phasespace.specfun import as_multi_index, hermite_function

# Effective support of Gaussian-type states, in units of sqrt(eps)
SUPPORT_WIDTH = 10.0


@dataclass(frozen=True)
class PhasePoint:
    """A phase space point z = (q, p) in R^{2d}"""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if q.shape != p.shape or q.ndim != 1:
            raise DimensionMismatchError(f"q and p must be vectors of equal length, got {q.shape} and {p.shape}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("phase point entries must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_array(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float).ravel()
        if z.size % 2:
            raise DimensionMismatchError(f"phase point needs an even number of entries, got {z.size}")
        d = z.size // 2
        return cls(z[:d], z[d:])

    @classmethod
    def origin(cls, d: int) -> "PhasePoint":
        return cls(np.zeros(d), np.zeros(d))

    @property
    def dim(self) -> int:
        return len(self.q)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    def __eq__(self, other) -> bool:
        return isinstance(other, PhasePoint) and np.array_equal(self.as_array(), other.as_array())

    def __hash__(self) -> int:
        return hash(tuple(self.as_array()))


def as_points(x, d: int) -> np.ndarray:
    """Coerce evaluation points to shape (..., d)"""
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise DimensionMismatchError(f"points have {x.shape[-1]} coordinates, state has d={d}")
    return x


class State(ABC):
    """An L^2-normalized wavefunction psi on R^d carrying its eps"""

    def __init__(self, dim: int, eps: float):
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.eps = float(eps)

    @abstractmethod
    def _evaluate(self, x: np.ndarray) -> np.ndarray:
        """psi at points of shape (..., d)"""

    @abstractmethod
    def phase_center(self) -> PhasePoint:
        """Nominal phase space center"""

    @abstractmethod
    def descriptor(self) -> Dict:
        """JSON descriptor (without the top-level eps)"""

    @property
    def smooth(self) -> bool:
        return True

    def evaluate(self, x) -> np.ndarray:
        """
        Evaluate psi pointwise

        Args:
            x: Point(s) of shape (..., d); scalars are accepted for d = 1

        Returns:
            Complex array of shape (...) (a complex number for one point)
        """
        pts = as_points(x, self.dim)
        out = np.asarray(self._evaluate(pts), dtype=complex)
        return out if out.ndim else complex(out)

    def support_box(self) -> np.ndarray:
        """Effective support per axis, shape (d, 2)"""
        q = self.phase_center().q
        reach = SUPPORT_WIDTH * math.sqrt(self.eps)
        return np.stack([q - reach, q + reach], axis=-1)

    def breakpoints(self) -> List[List[float]]:
        """Points of non-smoothness per axis"""
        return [[] for _ in range(self.dim)]

    def default_quadrature(self) -> QuadratureSpec:
        return default_quadrature(self.smooth, self.dim)

    def norm_quadrature(self) -> QuadratureSpec:
        if self.smooth:
            return QuadratureSpec.gauss_hermite(60)
        return QuadratureSpec.gauss_legendre(nodes=16, panels=4)

    def full_descriptor(self) -> Dict:
        return {**self.descriptor(), "eps": self.eps}


class GaussianPacket(State):
    """g_(q,p)(x) = (pi eps)^{-d/4} exp(-|x-q|^2/(2 eps) + i p.(x - q/2)/eps)"""

    def __init__(self, q, p, eps: float):
        center = PhasePoint(q, p)
        super().__init__(center.dim, eps)
        self.center = center

    def _evaluate(self, x):
        q, p, eps = self.center.q, self.center.p, self.eps
        diff = x - q
        exponent = -np.sum(diff ** 2, axis=-1) / (2 * eps) + 1j * ((x - 0.5 * q) @ p) / eps
        return (math.pi * eps) ** (-self.dim / 4) * np.exp(exponent)

    def phase_center(self) -> PhasePoint:
        return self.center

    def descriptor(self) -> Dict:
        return {"type": "gaussian", "q": self.center.q.tolist(), "p": self.center.p.tolist()}


class HermiteState(State):
    """The Hermite function phi_k centered at the origin"""

    def __init__(self, k, eps: float, dim: Optional[int] = None):
        k = as_multi_index(k, dim)
        super().__init__(k.dim, eps)
        self.k = k

    def _evaluate(self, x):
        return hermite_function(self.k, self.eps, x)

    def phase_center(self) -> PhasePoint:
        return PhasePoint.origin(self.dim)

    def support_box(self) -> np.ndarray:
        reach = (SUPPORT_WIDTH + np.sqrt(2.0 * np.asarray(self.k.entries) + 1.0)) * math.sqrt(self.eps)
        return np.stack([-reach, reach], axis=-1)

    def descriptor(self) -> Dict:
        return {"type": "hermite", "k": list(self.k.entries)}


class HatState(State):
    """
    Normalized semiclassical hat function in one dimension

    psi(x) = sqrt(3 / (2 sqrt(eps))) (1 - |x - q| / sqrt(eps)) on |x - q| < sqrt(eps)
    """

    def __init__(self, q: float, eps: float):
        super().__init__(1, eps)
        self.q = float(q)

    @property
    def smooth(self) -> bool:
        return False

    def _evaluate(self, x):
        root = math.sqrt(self.eps)
        r = np.abs(x[..., 0] - self.q) / root
        return np.where(r < 1.0, math.sqrt(1.5 / root) * (1.0 - r), 0.0)

    def phase_center(self) -> PhasePoint:
        return PhasePoint([self.q], [0.0])

    def support_box(self) -> np.ndarray:
        root = math.sqrt(self.eps)
        return np.array([[self.q - root, self.q + root]])

    def breakpoints(self) -> List[List[float]]:
        root = math.sqrt(self.eps)
        return [[self.q - root, self.q, self.q + root]]

    def descriptor(self) -> Dict:
        return {"type": "hat", "q": self.q}


class Superposition(State):
    """
    Normalized linear combination sum_i c_i psi_i

    The normalizing constant is computed once from the Gram matrix of the
    terms and cached.
    """

    def __init__(self, terms: Sequence[Tuple[complex, State]], quad: Optional[QuadratureSpec] = None):
        if not terms:
            raise ValueError("superposition needs at least one term")
        first = terms[0][1]
        for _, s in terms:
            if s.dim != first.dim:
                raise DimensionMismatchError(f"superposition terms of dimension {s.dim} and {first.dim}")
            if not math.isclose(s.eps, first.eps):
                raise ValueError(f"superposition terms with different eps {s.eps} and {first.eps}")
        super().__init__(first.dim, first.eps)
        self.terms: List[Tuple[complex, State]] = [(complex(c), s) for c, s in terms]
        self.scale = 1.0 / math.sqrt(self._raw_norm_squared(quad or self.norm_quadrature()))

    @property
    def smooth(self) -> bool:
        return all(s.smooth for _, s in self.terms)

    def _raw_norm_squared(self, quad: QuadratureSpec) -> float:
        coeffs = np.array([c for c, _ in self.terms])
        states = [s for _, s in self.terms]
        gram = np.array([[overlap(a, b, quad) for b in states] for a in states])
        value = float(np.real(coeffs @ gram @ np.conj(coeffs)))
        if value <= 0:
            raise ValueError("superposition has zero norm")
        return value

    def normalized_coefficients(self) -> List[complex]:
        return [self.scale * c for c, _ in self.terms]

    def _evaluate(self, x):
        total = np.zeros(x.shape[:-1], dtype=complex)
        for c, s in zip(self.normalized_coefficients(), (s for _, s in self.terms)):
            total = total + c * s._evaluate(x)
        return total

    def phase_center(self) -> PhasePoint:
        weights = [abs(c) for c, _ in self.terms]
        return self.terms[int(np.argmax(weights))][1].phase_center()

    def support_box(self) -> np.ndarray:
        boxes = np.stack([s.support_box() for _, s in self.terms])
        return np.stack([boxes[:, :, 0].min(axis=0), boxes[:, :, 1].max(axis=0)], axis=-1)

    def breakpoints(self) -> List[List[float]]:
        merged = [set() for _ in range(self.dim)]
        for _, s in self.terms:
            for axis, pts in enumerate(s.breakpoints()):
                merged[axis].update(pts)
        return [sorted(m) for m in merged]

    def descriptor(self) -> Dict:
        return {
            "type": "superposition",
            "terms": [{"coeff": [c.real, c.imag], "state": s.descriptor()} for c, s in self.terms],
        }


def heisenberg_weyl_shift(z, k, eps: float, x) -> np.ndarray:
    """
    (T_z phi_k)(x) = exp(i p.(x - q/2)/eps) phi_k(x - q)

    Args:
        z: PhasePoint or array (q, p)
        k: Window multi-index
        eps: Semiclassical parameter
        x: Point(s) of shape (..., d)

    Returns:
        Complex array of shape (...)
    """
    z = z if isinstance(z, PhasePoint) else PhasePoint.from_array(z)
    pts = as_points(x, z.dim)
    k = as_multi_index(k, z.dim)
    phase = np.exp(1j * ((pts - 0.5 * z.q) @ z.p) / eps)
    out = phase * hermite_function(k, eps, pts - z.q)
    return out if np.ndim(out) else complex(out)


def norm(s: State, quad: Optional[QuadratureSpec] = None) -> float:
    """L^2 norm of a state by quadrature"""
    quad = quad or s.norm_quadrature()
    if isinstance(s, Superposition):
        # term-pair overlaps keep every rule centered where its integrand lives
        return s.scale * math.sqrt(s._raw_norm_squared(quad))
    return math.sqrt(max(overlap(s, s, quad).real, 0.0))


def state_from_descriptor(desc: Dict, eps: Optional[float] = None) -> State:
    """
    Build a State from its JSON descriptor

    Args:
        desc: {"type": "gaussian"|"hermite"|"hat"|"superposition", ...}, optionally with "eps"
        eps: Semiclassical parameter when the descriptor carries none

    Returns:
        The constructed state
    """
    eps = desc.get("eps", eps)
    if eps is None:
        raise ValueError("state descriptor needs an eps")
    kind = desc.get("type")
    if kind == "gaussian":
        return GaussianPacket(desc["q"], desc["p"], eps)
    if kind == "hermite":
        return HermiteState(desc["k"], eps)
    if kind == "hat":
        q = desc.get("q", 0.0)
        if isinstance(q, (list, tuple)):
            if len(q) != 1:
                raise DimensionMismatchError("the hat state is one-dimensional")
            q = q[0]
        return HatState(q, eps)
    if kind == "superposition":
        terms = []
        for term in desc["terms"]:
            coeff = term.get("coeff", [1.0, 0.0])
            c = complex(coeff[0], coeff[1]) if isinstance(coeff, (list, tuple)) else complex(coeff)
            terms.append((c, state_from_descriptor(term["state"], eps)))
        return Superposition(terms)
    raise UnsupportedStateError(f"unknown state type {kind!r}")

