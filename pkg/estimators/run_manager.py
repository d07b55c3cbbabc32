"""
Run Manager
Dispatches CLI commands to the kernels and estimators, writes their
outputs and reports each run to observability
"""
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from estimators.expectation import (
    as_observable,
    estimate_expectation,
    gaussian_weyl_oracle,
    integrate_mu,
    position_expectation,
)
from estimators.experiments import HistogramSpec, convergence_experiment, sampling_error_study, weighted_histogram
from estimators.sampler import metropolis_chain, sample_orders
from observability.langfuse_config import end_span, log_run_event, trace_run
from phasespace.densities import GridSpec, density_grid, radial_profile
from phasespace.errors import ConfigError
from phasespace.specfun import expansion_coefficients, level_multiplicity
from phasespace.states import GaussianPacket, PhasePoint
from tools.config_tools import ConfigTools, RunConfig
from tools.output_tools import OutputTools

COMMANDS = ("coeffs", "density", "sample", "expect", "converge", "histogram", "hat-study")


@dataclass
class RunResult:
    """Summary of a finished command and the files it wrote"""

    command: str
    summary: Dict
    outputs: List[str] = field(default_factory=list)


class RunManager:
    """Main run manager that orchestrates the commands"""

    def __init__(self, config: Optional[RunConfig] = None, seed: Optional[int] = None,
                 threads: Optional[int] = None, out: Optional[str] = None):
        """
        Initialize the run manager

        Args:
            config: Validated run configuration (not needed for coeffs)
            seed: Master seed override
            threads: Worker threads override
            out: Output path override
        """
        self.config = config or RunConfig()
        self.seed = seed if seed is not None else self.config.seed
        self.threads = ConfigTools.resolve_threads(threads, self.config)
        self.out = out
        self._handlers = {
            "density": self.density,
            "sample": self.sample,
            "expect": self.expect,
            "converge": self.converge,
            "histogram": self.histogram,
            "hat-study": self.hat_study,
        }

    def _meta(self, **extra) -> Dict:
        return OutputTools.metadata(self.seed, self.config.model_dump(mode="json"), **extra)

    def _out(self, default: str) -> str:
        return self.out or default

    def process(self, command: str) -> RunResult:
        """
        Run a configured command

        Args:
            command: One of density, sample, expect, converge, histogram, hat-study

        Returns:
            RunResult
        """
        if command not in self._handlers:
            raise ConfigError(f"unknown command {command!r}, expected one of {COMMANDS}")
        span = trace_run(command, {"seed": self.seed, "threads": self.threads,
                                   "config_hash": OutputTools.config_hash(self.config.model_dump(mode="json"))})
        log_run_event("run_started", "run_manager", {"command": command})
        try:
            result = self._handlers[command]()
        except Exception as e:
            log_run_event("run_failed", "run_manager", {"command": command, "error": str(e)})
            end_span(span, f"failed: {e}")
            raise
        log_run_event("run_completed", "run_manager", {"command": command, **_flat(result.summary)})
        end_span(span, str(result.summary))
        return result

    # ------------------------------------------------------------------
    # Commands

    @staticmethod
    def coeffs(dim: int, order: int) -> Dict:
        """Exact weights C_{N-1,j} with signs and multiplicities"""
        table = expansion_coefficients(dim, order)
        weights = [[str(c), (-1) ** j] for j, c in enumerate(table.c)]
        return {
            "dim": dim,
            "order": order,
            "weights": weights,
            "multiplicities": table.multiplicities(),
            "signed_mass": str(table.signed_mass()),
        }

    def density(self) -> RunResult:
        block = ConfigTools.require(self.config.density, "density")
        s = ConfigTools.build_state(self.config)
        path = self._out("density.csv")
        if block.which == "profile":
            radii = np.linspace(0.0, 6.0 * math.sqrt(s.eps), 121)
            profile = radial_profile(s.eps, radii)
            header = list(profile)
            rows = np.column_stack([profile[key] for key in header])
            OutputTools.write_csv(path, header, rows, self._meta(eps=s.eps))
            return RunResult("density", {"which": "profile", "points": len(radii)}, [path])
        grid = block.grid.to_grid() if block.grid else GridSpec.around(s.phase_center(), s.eps)
        table = density_grid(s, block.which, grid, block.order, block.k, self.config.quad, block.force_quadrature)
        OutputTools.write_csv(path, ["q", "p", "value"], table,
                              self._meta(state_hash=OutputTools.config_hash(s.full_descriptor()), N=block.order, eps=s.eps))
        values = table[:, 2]
        return RunResult("density", {"which": block.which, "cells": len(values), "min": float(values.min()),
                                     "max": float(values.max())}, [path])

    def sample(self) -> RunResult:
        block = ConfigTools.require(self.config.sample, "sample")
        s = ConfigTools.build_state(self.config)
        chain = ConfigTools.resolve_chain(block.chain, self.config, self.seed)
        root, _ = os.path.splitext(self._out("samples.csv"))
        sets = {j: metropolis_chain(s, j, chain, self.threads) for j in block.orders}
        outputs, rates = [], {}
        for j, sample_set in sets.items():
            path = f"{root}_j{j}.csv"
            sample_set.to_csv(path, OutputTools.metadata(chain.seed, self.config.model_dump(mode="json"), j=j))
            outputs += [path, OutputTools.sidecar_path(path)]
            rates[f"j{j}"] = sample_set.acceptance_rate
        return RunResult("sample", {"acceptance_rates": rates, "n": chain.n_samples}, outputs)

    def expect(self) -> RunResult:
        block = ConfigTools.require(self.config.expect, "expect")
        s = ConfigTools.build_state(self.config)
        a = as_observable(block.observable, s.dim)
        if block.method == "deterministic":
            payload = {"estimate": integrate_mu(s, a, block.order, quad=self.config.quad), "std_error": 0.0,
                       "order": block.order, "method": "deterministic"}
            seed = None
        else:
            chain = ConfigTools.resolve_chain(block.chain, self.config, self.seed)
            payload = estimate_expectation(s, a, block.order, chain, self.threads).to_dict()
            seed = chain.seed
        payload["observable"] = a.to_source()
        if isinstance(s, GaussianPacket):
            payload["oracle"] = float(gaussian_weyl_oracle(s.center, a, s.eps))
        path = self._out("expect.json")
        OutputTools.write_json(path, payload, OutputTools.metadata(seed, self.config.model_dump(mode="json")))
        return RunResult("expect", {k: payload[k] for k in ("estimate", "std_error") if k in payload}, [path])

    def converge(self) -> RunResult:
        block = ConfigTools.require(self.config.converge, "converge")
        table = convergence_experiment(
            PhasePoint.from_array(block.center),
            block.observables,
            block.orders,
            block.eps_grid,
            block.precision_digits,
            block.gh_nodes,
            self.threads,
        )
        path = self._out("converge.csv")
        OutputTools.write_csv(path, table.header, table.csv_rows(), self._meta())
        slopes = {f"{a} N={N}": slope for (a, N), slope in table.slopes.items()}
        return RunResult("converge", {"cells": len(table.rows), "slopes": slopes}, [path])

    def histogram(self) -> RunResult:
        block = ConfigTools.require(self.config.histogram, "histogram")
        s = ConfigTools.build_state(self.config)
        chain = ConfigTools.resolve_chain(block.chain, self.config, self.seed)
        samples = sample_orders(s, block.order, chain, self.threads)
        bin_width = 2.0 * block.half_width * math.sqrt(s.eps) / block.bins if block.bins else None
        spec = HistogramSpec.around(s.phase_center(), s.eps, block.half_width, bin_width)
        grid = weighted_histogram(samples, spec, block.order)
        path = self._out("histogram.csv")
        OutputTools.write_csv(path, grid.header, grid.rows(), self._meta(N=block.order, eps=s.eps))
        return RunResult("histogram", {"signed_mass": grid.signed_mass(), "min": float(grid.values.min())}, [path])

    def hat_study(self) -> RunResult:
        block = ConfigTools.require(self.config.hat_study, "hat_study")
        s = ConfigTools.build_state(self.config)
        chain = ConfigTools.resolve_chain(block.chain, self.config, self.seed)
        reference = block.reference if block.reference is not None else position_expectation(s, block.observable)
        study = sampling_error_study(s, block.observable, block.order, block.n_list, block.runs, reference, chain,
                                     self.threads)
        path = self._out("hat_study.csv")
        OutputTools.write_csv(path, study.header, study.csv_rows(), self._meta(N=block.order, reference=reference))
        return RunResult("hat-study", {"slope": study.slope, "reference": reference}, [path])


def _flat(summary: Dict) -> Dict:
    return {k: v for k, v in summary.items() if isinstance(v, (int, float, str))}
