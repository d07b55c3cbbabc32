"""
Spectrogram Sampler
Metropolis-Hastings chains targeting averaged Hermite spectrograms of a
given order, and the sample sets they produce
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from observability.langfuse_config import log_run_event
from phasespace.densities import NEGATIVE_ROUNDOFF, averaged_spectrogram
from phasespace.errors import DimensionMismatchError, SamplerError
from phasespace.quadrature import QuadratureSpec
from phasespace.states import PhasePoint, State
from tools.output_tools import OutputTools

MAX_SEED_ATTEMPTS = 100


class ChainConfig(BaseModel):
    """Settings of a Metropolis-Hastings run for one spectrogram order"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_samples: int = Field(10000, ge=1, description="Samples kept after burn-in, summed over chains")
    burn_in: int = Field(1000, ge=0, description="Discarded steps per chain")
    seed: int = Field(0, ge=0, lt=2 ** 64, description="Master seed")
    proposal_scale: float = Field(1.0, gt=0, description="Proposal stdev in units of sqrt(eps)")
    quad: Optional[QuadratureSpec] = Field(None, description="Inner-product quadrature; state default when unset")
    initial: Union[Literal["auto"], List[float]] = Field("auto", description="Start point (q..., p...) or auto")
    n_chains: int = Field(1, ge=1, description="Independent chains, concatenated after burn-in")
    force_quadrature: bool = Field(False, description="Evaluate the target by quadrature even when closed forms exist")


@dataclass(frozen=True)
class SampleSet:
    """Samples z^j_1..z^j_n of the averaged spectrogram of order j"""

    order: int
    points: np.ndarray
    acceptance_rate: float
    seed: int
    target_hash: str
    burn_in: int = 0
    n_chains: int = 1

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1] // 2

    def mean(self, a) -> float:
        """Sample mean of an observable (or any vectorized callable on (n, 2d) points)"""
        return float(np.mean(a(self.points)))

    def columns(self) -> List[str]:
        d = self.dim
        return [f"q_{i + 1}" for i in range(d)] + [f"p_{i + 1}" for i in range(d)]

    def summary(self) -> Dict:
        return {
            "j": self.order,
            "n": self.n,
            "burn_in": self.burn_in,
            "n_chains": self.n_chains,
            "acceptance_rate": self.acceptance_rate,
            "seed": self.seed,
            "target_hash": self.target_hash,
        }

    def to_csv(self, path: str, meta: Optional[Dict] = None) -> str:
        """Write q_1..q_d,p_1..p_d rows plus a sidecar JSON with the chain summary"""
        meta = meta or OutputTools.metadata(self.seed, self.summary())
        OutputTools.write_json(OutputTools.sidecar_path(path), self.summary(), meta)
        return OutputTools.write_csv(path, self.columns(), self.points, meta)

    @classmethod
    def from_csv(cls, path: str) -> "SampleSet":
        _, _, rows = OutputTools.read_csv(path)
        info = OutputTools.read_json(OutputTools.sidecar_path(path))
        return cls(
            order=int(info["j"]),
            points=np.array(rows, dtype=float),
            acceptance_rate=float(info["acceptance_rate"]),
            seed=int(info["seed"]),
            target_hash=info["target_hash"],
            burn_in=int(info["burn_in"]),
            n_chains=int(info.get("n_chains", 1)),
        )


class SpectrogramTarget:
    """
    Target density z -> m_j^{-1} sum_{|k|=j} S_psi^{phi_k}(z)

    Callable as target(z, call_index); the call index keys the Monte Carlo
    quadrature stream so chains stay reproducible.
    """

    def __init__(self, s: State, j: int, quad: Optional[QuadratureSpec] = None, force_quadrature: bool = False):
        if j < 0:
            raise ValueError(f"spectrogram order must be nonnegative, got {j}")
        self.state = s
        self.order = j
        self.quad = quad
        self.force_quadrature = force_quadrature

    def __call__(self, z, call_index: int = 0) -> float:
        value = averaged_spectrogram(self.state, self.order, np.asarray(z, dtype=float), self.quad,
                                     self.force_quadrature, call_index)
        if not math.isfinite(value):
            raise SamplerError(f"target density is not finite at {z}")
        if value < -NEGATIVE_ROUNDOFF:
            raise SamplerError(f"target density is negative ({value:.3e}) at {z}")
        return max(value, 0.0)

    def describe(self) -> Dict:
        return {
            "state": self.state.full_descriptor(),
            "order": self.order,
            "quad": self.quad.model_dump(mode="json") if self.quad else None,
            "force_quadrature": self.force_quadrature,
        }

    def hash(self) -> str:
        return OutputTools.config_hash(self.describe())


def target_density(s: State, j: int, z, quad: Optional[QuadratureSpec] = None) -> float:
    """Averaged Hermite spectrogram of order j at one phase point"""
    if isinstance(z, PhasePoint):
        z = z.as_array()
    return SpectrogramTarget(s, j, quad)(z)


def _seed_point(target: SpectrogramTarget, rng: np.random.Generator, call_index: int = 0) -> Tuple[np.ndarray, float]:
    s = target.state
    center = s.phase_center().as_array()
    candidate = center
    for attempt in range(MAX_SEED_ATTEMPTS):
        value = target(candidate, call_index)
        if value > 0:
            return candidate, value
        log_run_event("seed_retry", "sampler", {"attempt": attempt + 1, "j": target.order})
        candidate = center + math.sqrt(s.eps) * rng.standard_normal(center.shape)
    raise SamplerError(f"no point of positive target density found after {MAX_SEED_ATTEMPTS} attempts")


def auto_seed(s: State, j: int = 0, quad: Optional[QuadratureSpec] = None, seed: int = 0) -> PhasePoint:
    """
    Starting point of positive target density

    The nominal phase space center of the state, perturbed by sqrt(eps) N(0, Id)
    until the target is positive.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, j]))
    point, _ = _seed_point(SpectrogramTarget(s, j, quad), rng)
    return PhasePoint.from_array(point)


def metropolis_walk(
    target: Callable[[np.ndarray, int], float],
    z0,
    t0: float,
    propose: Callable[[np.ndarray, np.random.Generator], np.ndarray],
    n_samples: int,
    burn_in: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, int]:
    """
    Symmetric-proposal Metropolis walk

    The target value of the current point is carried along, so every step
    evaluates the target once.

    Args:
        target: Unnormalized density, called as target(z, step)
        z0: Start point
        t0: target(z0) > 0
        propose: Symmetric proposal z -> z'
        n_samples: Points kept after burn-in
        burn_in: Steps discarded
        rng: Source of proposals and acceptance uniforms

    Returns:
        (points of shape (n_samples,) + z0.shape, accepted moves after burn-in)
    """
    z = np.asarray(z0, dtype=float)
    t = float(t0)
    if not t > 0:
        raise SamplerError("chain start has zero target density")
    points = np.empty((n_samples,) + z.shape)
    accepted = 0
    for step in range(burn_in + n_samples):
        proposal = propose(z, rng)
        value = target(proposal, step + 1)
        # accept iff u < value / t
        if rng.random() * t < value:
            z, t = proposal, value
            if step >= burn_in:
                accepted += 1
        if step >= burn_in:
            points[step - burn_in] = z
    return points, accepted


def _split(total: int, parts: int) -> List[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _run_chain(
    target: SpectrogramTarget,
    cfg: ChainConfig,
    stream: np.random.SeedSequence,
    n_samples: int,
    chain_index: int,
) -> Tuple[np.ndarray, int]:
    s = target.state
    rng = np.random.default_rng(stream)
    offset = chain_index * (cfg.burn_in + n_samples + 1)
    if cfg.initial == "auto":
        z0, t0 = _seed_point(target, rng, offset)
    else:
        z0 = np.asarray(cfg.initial, dtype=float)
        if z0.shape != (2 * s.dim,):
            raise DimensionMismatchError(f"initial point has {z0.size} entries, expected {2 * s.dim}")
        t0 = target(z0, offset)
        if not t0 > 0:
            raise SamplerError(f"initial point {z0.tolist()} has zero target density")
    step = cfg.proposal_scale * math.sqrt(s.eps)
    if n_samples == 0:
        return np.empty((0, 2 * s.dim)), 0
    return metropolis_walk(
        lambda z, i: target(z, offset + i),
        z0,
        t0,
        lambda z, g: z + step * g.standard_normal(z.shape),
        n_samples,
        cfg.burn_in,
        rng,
    )


def metropolis_chain(s: State, j: int, cfg: ChainConfig, threads: int = 1) -> SampleSet:
    """
    Sample the averaged spectrogram of order j

    Proposals are z + sigma sqrt(eps) zeta with zeta ~ N(0, Id_{2d}); a proposal
    is accepted iff a uniform draw is below target(z') / target(z). Chains
    are seeded from SeedSequence([seed, j]) so the result depends only on
    (state, j, cfg).

    Args:
        s: State
        j: Spectrogram order
        cfg: Chain configuration
        threads: Worker threads for independent chains

    Returns:
        SampleSet with cfg.n_samples points
    """
    target = SpectrogramTarget(s, j, cfg.quad, cfg.force_quadrature)
    root = np.random.SeedSequence([cfg.seed, j])
    streams = root.spawn(cfg.n_chains) if cfg.n_chains > 1 else [root]
    counts = _split(cfg.n_samples, cfg.n_chains)

    def run(c: int) -> Tuple[np.ndarray, int]:
        return _run_chain(target, cfg, streams[c], counts[c], c)

    if threads > 1 and cfg.n_chains > 1:
        with ThreadPoolExecutor(max_workers=min(threads, cfg.n_chains)) as pool:
            results = list(pool.map(run, range(cfg.n_chains)))
    else:
        results = [run(c) for c in range(cfg.n_chains)]

    points = np.concatenate([r[0] for r in results], axis=0)
    rate = sum(r[1] for r in results) / cfg.n_samples
    sample_set = SampleSet(
        order=j,
        points=points,
        acceptance_rate=rate,
        seed=cfg.seed,
        target_hash=target.hash(),
        burn_in=cfg.burn_in,
        n_chains=cfg.n_chains,
    )
    log_run_event("chain_completed", "sampler", {"j": j, "n": sample_set.n, "acceptance_rate": rate})
    return sample_set


def sample_orders(s: State, N: int, cfg: ChainConfig, threads: int = 1) -> List[SampleSet]:
    """SampleSets for the orders j = 0..N-1, run concurrently when threads > 1"""
    if N < 1:
        raise ValueError(f"order N must be positive, got {N}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, N)) as pool:
            return list(pool.map(lambda j: metropolis_chain(s, j, cfg), range(N)))
    return [metropolis_chain(s, j, cfg) for j in range(N)]
