"""
Experiments
epsilon-convergence tables, signed weighted histograms and Monte Carlo
sampling-error studies
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from observability.langfuse_config import log_run_event
from phasespace.errors import GridError
from phasespace.states import GaussianPacket, PhasePoint, State
from estimators.expectation import (
    DEFAULT_DIGITS,
    DEFAULT_MP_NODES,
    as_observable,
    estimate_from_samples,
    gaussian_weyl_oracle,
    integrate_gaussian,
    order_factors,
)
from estimators.observables import Observable
from estimators.sampler import ChainConfig, SampleSet, sample_orders

# Errors at or below this are treated as exact and left out of slope fits
ERROR_FLOOR = 1e-30


def fit_loglog_slope(xs: Sequence[float], ys: Sequence[float], floor: float = ERROR_FLOOR) -> float:
    """
    Least-squares slope of log(y) against log(x)

    Points with y <= floor are dropped; NaN when fewer than two remain.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (ys > floor) & (xs > 0) & np.isfinite(ys)
    if np.count_nonzero(keep) < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# epsilon convergence


@dataclass(frozen=True)
class ConvergenceRow:
    eps: float
    N: int
    observable: str
    estimate: float
    oracle: float
    error: float


@dataclass
class ConvergenceTable:
    rows: List[ConvergenceRow]
    slopes: Dict[Tuple[str, int], float] = field(default_factory=dict)

    header = ("eps", "N", "observable", "error", "slope_fit")

    def csv_rows(self) -> List[list]:
        return [[r.eps, r.N, r.observable, r.error, self.slopes.get((r.observable, r.N), float("nan"))]
                for r in self.rows]

    def errors(self, observable: str, N: int) -> List[float]:
        return [r.error for r in self.rows if r.observable == observable and r.N == N]

    def max_error(self, observable: str, N: int) -> float:
        return max(self.errors(observable, N))


def _convergence_cell(w: PhasePoint, a: Observable, eps: float, orders: Sequence[int], digits: Optional[int],
                      nodes: Optional[int]) -> List[ConvergenceRow]:
    s = GaussianPacket(w.q, w.p, eps)
    oracle = gaussian_weyl_oracle(w, a, eps, digits, nodes)
    rows = []
    for N in orders:
        estimate = integrate_gaussian(s, a, N, digits, nodes)
        if digits:
            with mpmath.workdps(digits):
                error = float(abs(estimate - oracle))
        else:
            error = abs(estimate - oracle)
        rows.append(ConvergenceRow(eps, N, a.source, float(estimate), float(oracle), error))
    log_run_event("experiment_cell_done", "experiments", {"observable": a.source, "eps": eps})
    return rows


def convergence_experiment(
    w,
    observables: Sequence[Union[str, Observable]],
    orders: Sequence[int] = (1, 2, 3, 4),
    eps_grid: Optional[Sequence[float]] = None,
    digits: Optional[int] = DEFAULT_DIGITS,
    nodes: Optional[int] = None,
    threads: int = 1,
) -> ConvergenceTable:
    """
    |int a mu^N - <g_w, op(a) g_w>| over a grid of eps for Gaussian packets

    Both sides are computed deterministically, in mpmath at `digits`
    precision unless digits is None. The mpmath context is process-wide,
    so extended-precision cells run in the calling thread.

    Args:
        w: Center of the packet (PhasePoint or array)
        observables: Observables or their source text
        orders: Values of N
        eps_grid: Semiclassical parameters (default 10^-3..10^-1, 9 points)
        digits: Working precision, None for double precision
        nodes: Gauss-Hermite nodes per axis for non-polynomial observables
        threads: Worker threads for double-precision cells

    Returns:
        ConvergenceTable with a log-log slope per (observable, N)
    """
    w = w if isinstance(w, PhasePoint) else PhasePoint.from_array(w)
    eps_grid = list(eps_grid) if eps_grid is not None else list(np.logspace(-3, -1, 9))
    obs = [as_observable(a, w.dim) for a in observables]
    for N in orders:
        order_factors(w.dim, N)
    if nodes is None and digits:
        nodes = DEFAULT_MP_NODES
    cells = [(a, eps) for a in obs for eps in eps_grid]

    def run(cell):
        return _convergence_cell(w, cell[0], cell[1], orders, digits, nodes)

    if threads > 1 and not digits:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(cell) for cell in cells]
    rows = [row for cell_rows in results for row in cell_rows]
    table = ConvergenceTable(rows)
    for a in obs:
        for N in orders:
            sel = [r for r in rows if r.observable == a.source and r.N == N]
            table.slopes[(a.source, N)] = fit_loglog_slope([r.eps for r in sel], [r.error for r in sel])
    return table


# ---------------------------------------------------------------------------
# Weighted histograms


@dataclass(frozen=True)
class HistogramSpec:
    """Rectangular (q, p) box with bin counts, d = 1"""

    q_range: Tuple[float, float]
    p_range: Tuple[float, float]
    bins: Tuple[int, int]

    def __post_init__(self):
        if min(self.bins) < 1:
            raise GridError(f"histogram needs at least one bin per axis, got {self.bins}")
        if self.q_range[1] <= self.q_range[0] or self.p_range[1] <= self.p_range[0]:
            raise GridError("histogram ranges must be increasing")

    @classmethod
    def around(cls, center: PhasePoint, eps: float, half_width: float = 6.0,
               bin_width: Optional[float] = None) -> "HistogramSpec":
        """center +- half_width sqrt(eps) with bins of sqrt(eps)/4 by default"""
        root = math.sqrt(eps)
        bin_width = bin_width or root / 4.0
        reach = half_width * root
        n = max(1, int(round(2 * reach / bin_width)))
        q0, p0 = float(center.q[0]), float(center.p[0])
        return cls((q0 - reach, q0 + reach), (p0 - reach, p0 + reach), (n, n))

    @property
    def bin_area(self) -> float:
        return ((self.q_range[1] - self.q_range[0]) / self.bins[0]) * ((self.p_range[1] - self.p_range[0]) / self.bins[1])


@dataclass
class HistogramGrid:
    q_edges: np.ndarray
    p_edges: np.ndarray
    values: np.ndarray  # shape (nq, np)

    header = ("q", "p", "signed_density")

    def centers(self) -> Tuple[np.ndarray, np.ndarray]:
        return 0.5 * (self.q_edges[1:] + self.q_edges[:-1]), 0.5 * (self.p_edges[1:] + self.p_edges[:-1])

    def signed_mass(self) -> float:
        area = np.outer(np.diff(self.q_edges), np.diff(self.p_edges))
        return float(np.sum(self.values * area))

    def negative_mask(self, tol: float = 0.0) -> np.ndarray:
        return self.values < -tol

    def rows(self) -> np.ndarray:
        """Row-major (q outer, p inner) bin centers with values"""
        qc, pc = self.centers()
        Q, P = np.meshgrid(qc, pc, indexing="ij")
        return np.column_stack([Q.ravel(), P.ravel(), self.values.ravel()])


def weighted_histogram(samples: Sequence[SampleSet], spec: HistogramSpec, N: Optional[int] = None) -> HistogramGrid:
    """
    Signed histogram estimate of mu^N

    sum_j (-1)^j C_{N-1,j} m_j count_j(bin) / (n_j bin_area)

    Args:
        samples: SampleSets for j = 0..N-1 (d = 1)
        spec: Box and bins
        N: Order; defaults to the number of sample sets

    Returns:
        HistogramGrid
    """
    N = N or len(samples)
    by_order = {s.order: s for s in samples}
    if sorted(by_order) != list(range(N)):
        raise GridError(f"histogram of order {N} needs sample sets for j = 0..{N - 1}, got {sorted(by_order)}")
    if any(s.dim != 1 for s in samples):
        raise GridError("weighted histograms are two-dimensional (d = 1)")
    factors = [float(f) for f in order_factors(1, N)]
    values = np.zeros(spec.bins)
    q_edges = p_edges = None
    for j, factor in enumerate(factors):
        pts = by_order[j].points
        counts, q_edges, p_edges = np.histogram2d(pts[:, 0], pts[:, 1], bins=spec.bins, range=[spec.q_range, spec.p_range])
        values += factor * counts / (len(pts) * spec.bin_area)
    return HistogramGrid(q_edges, p_edges, values)


# ---------------------------------------------------------------------------
# Sampling-error study


@dataclass
class SamplingErrorStudy:
    observable: str
    order: int
    reference: float
    n_list: List[int]
    mean_abs_errors: List[float]
    slope: float

    header = ("n", "mean_abs_error", "slope_fit")

    def csv_rows(self) -> List[list]:
        return [[n, e, self.slope] for n, e in zip(self.n_list, self.mean_abs_errors)]


def run_seeds(master_seed: int, runs: int) -> List[int]:
    """Independent 64-bit seeds spawned from a master seed"""
    children = np.random.SeedSequence(master_seed).spawn(runs)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def sampling_error_study(
    s: State,
    a: Union[str, Observable],
    N: int,
    n_list: Sequence[int],
    runs: int,
    reference: float,
    cfg: ChainConfig,
    threads: int = 1,
) -> SamplingErrorStudy:
    """
    Mean absolute error of the sampled estimate against a reference value

    Every run draws max(n_list) samples per order once and evaluates the
    estimator on nested prefixes.

    Args:
        s: State
        a: Observable
        N: Order
        n_list: Sample sizes per order
        runs: Independent runs (seeds spawned from cfg.seed)
        reference: Exact <psi, op(a) psi>
        cfg: Chain configuration; n_samples is replaced by max(n_list)
        threads: Runs executed concurrently

    Returns:
        SamplingErrorStudy with the fitted slope against n
    """
    a = as_observable(a, s.dim)
    n_list = sorted(int(n) for n in n_list)
    if not n_list or n_list[0] < 1 or runs < 1:
        raise ValueError("need positive sample sizes and at least one run")

    def one_run(seed: int) -> List[float]:
        run_cfg = cfg.model_copy(update={"seed": seed, "n_samples": n_list[-1]})
        samples = sample_orders(s, N, run_cfg)
        return [abs(estimate_from_samples(samples, a, n).estimate - reference) for n in n_list]

    seeds = run_seeds(cfg.seed, runs)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, runs)) as pool:
            errors = list(pool.map(one_run, seeds))
    else:
        errors = [one_run(seed) for seed in seeds]
    mean_errors = np.mean(np.array(errors), axis=0).tolist()
    log_run_event("experiment_cell_done", "experiments", {"observable": a.source, "N": N, "runs": runs})
    return SamplingErrorStudy(a.source, N, reference, n_list, mean_errors, fit_loglog_slope(n_list, mean_errors))
