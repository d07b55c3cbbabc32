"""Estimators module: observables, spectrogram sampling, expectations and experiments"""
from .observables import Observable, parse_observable
from .sampler import ChainConfig, SampleSet, metropolis_chain, sample_orders, target_density, auto_seed
from .expectation import ExpectationResult, estimate_expectation, gaussian_weyl_oracle, integrate_mu
from .experiments import convergence_experiment, fit_loglog_slope, sampling_error_study, weighted_histogram

__all__ = [
    'Observable', 'parse_observable',
    'ChainConfig', 'SampleSet', 'metropolis_chain', 'sample_orders', 'target_density', 'auto_seed',
    'ExpectationResult', 'estimate_expectation', 'gaussian_weyl_oracle', 'integrate_mu',
    'convergence_experiment', 'fit_loglog_slope', 'sampling_error_study', 'weighted_histogram',
]
