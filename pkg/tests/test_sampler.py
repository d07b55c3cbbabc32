import math

import numpy as np
import pytest

from estimators.observables import parse_observable
from estimators.sampler import (
    ChainConfig,
    SampleSet,
    SpectrogramTarget,
    auto_seed,
    metropolis_chain,
    metropolis_walk,
    sample_orders,
    target_density,
)
from phasespace.densities import averaged_spectrogram, effective_box, husimi, phase_space_mass
from phasespace.errors import DimensionMismatchError, SamplerError
from phasespace.states import GaussianPacket, HatState, HermiteState, PhasePoint


def test_walk_on_two_states_has_the_right_occupation():
    weights = {0: 1.0, 1: 2.0}
    rng = np.random.default_rng(5)
    points, accepted = metropolis_walk(
        lambda z, i: weights[int(z[0])],
        np.array([0.0]),
        1.0,
        lambda z, g: 1.0 - z,
        60000,
        100,
        rng,
    )
    assert np.mean(points[:, 0] == 0.0) == pytest.approx(1 / 3, abs=0.01)
    assert 0 < accepted < 60000


def test_walk_accepts_every_move_of_a_flat_target():
    rng = np.random.default_rng(1)
    points, accepted = metropolis_walk(
        lambda z, i: 1.0, np.zeros(2), 1.0, lambda z, g: z + g.standard_normal(2), 500, 10, rng
    )
    assert accepted == 500
    assert points.shape == (500, 2)
    assert len(np.unique(points[:, 0])) == 500


def test_walk_refuses_a_zero_start():
    with pytest.raises(SamplerError):
        metropolis_walk(lambda z, i: 1.0, np.zeros(2), 0.0, lambda z, g: z, 10, 0, np.random.default_rng(0))


def test_order_zero_target_is_the_husimi_function(rng):
    s = GaussianPacket([0.5], [-1.0], 0.01)
    for z in s.center.as_array() + 0.1 * rng.standard_normal((5, 2)):
        assert target_density(s, 0, z) == pytest.approx(husimi(s, z), rel=1e-12)
    assert target_density(s, 0, s.center) == pytest.approx(1 / (2 * math.pi * 0.01))


def test_first_order_target_is_a_probability_density():
    s = HermiteState((1,), 0.05)
    box = effective_box(s, 1)
    mass = phase_space_mass(lambda pts: averaged_spectrogram(s, 1, pts), box, 24, 4)
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_target_description_and_hash():
    s = GaussianPacket([0.5], [-1.0], 0.01)
    a, b = SpectrogramTarget(s, 2), SpectrogramTarget(s, 2)
    assert a.hash() == b.hash()
    assert a.hash() != SpectrogramTarget(s, 1).hash()
    assert a.describe()["state"]["type"] == "gaussian"
    with pytest.raises(ValueError):
        SpectrogramTarget(s, -1)


def test_auto_seed():
    g = GaussianPacket([0.5], [-1.0], 0.01)
    assert auto_seed(g) == PhasePoint([0.5], [-1.0])
    hat = HatState(0.2, 0.05)
    assert auto_seed(hat) == PhasePoint([0.2], [0.0])
    # the Husimi function of phi_1 vanishes at the origin
    phi1 = HermiteState((1,), 0.05)
    start = auto_seed(phi1, 0, seed=3)
    assert start != PhasePoint.origin(1)
    assert target_density(phi1, 0, start) > 0
    assert auto_seed(phi1, 0, seed=3) == start


def test_chains_are_reproducible():
    s = GaussianPacket([0.5], [-1.0], 0.01)
    cfg = ChainConfig(n_samples=500, burn_in=50, seed=11)
    first = metropolis_chain(s, 1, cfg)
    second = metropolis_chain(s, 1, cfg)
    np.testing.assert_array_equal(first.points, second.points)
    other = metropolis_chain(s, 1, cfg.model_copy(update={"seed": 12}))
    assert not np.array_equal(first.points, other.points)


def test_chains_do_not_depend_on_thread_count():
    s = GaussianPacket([0.0, 0.1], [0.2, 0.0], 0.05)
    cfg = ChainConfig(n_samples=401, burn_in=20, seed=7, n_chains=3)
    serial = metropolis_chain(s, 1, cfg, threads=1)
    threaded = metropolis_chain(s, 1, cfg, threads=3)
    np.testing.assert_array_equal(serial.points, threaded.points)
    assert serial.n == 401
    assert serial.n_chains == 3
    by_order = sample_orders(s, 2, cfg, threads=2)
    np.testing.assert_array_equal(by_order[1].points, serial.points)
    assert [ss.order for ss in by_order] == [0, 1]


def test_husimi_samples_have_the_packet_moments():
    eps = 0.01
    s = GaussianPacket([0.5], [-1.0], eps)
    samples = metropolis_chain(s, 0, ChainConfig(n_samples=20000, burn_in=1000, seed=2))
    mean = samples.points.mean(axis=0)
    var = samples.points.var(axis=0)
    np.testing.assert_allclose(mean, [0.5, -1.0], atol=0.02)
    np.testing.assert_allclose(var, [eps, eps], rtol=0.2)
    assert 0.2 < samples.acceptance_rate < 0.9
    assert samples.mean(parse_observable("q")) == pytest.approx(0.5, abs=0.02)


@pytest.mark.slow
def test_husimi_moments_over_many_seeds():
    eps = 0.01
    s = GaussianPacket([0.5], [-1.0], eps)
    means = []
    for seed in range(10):
        samples = metropolis_chain(s, 0, ChainConfig(n_samples=100000, burn_in=1000, seed=seed))
        means.append(samples.points.mean(axis=0))
        np.testing.assert_allclose(samples.points.var(axis=0), [eps, eps], rtol=0.05)
    np.testing.assert_allclose(np.mean(means, axis=0), [0.5, -1.0], atol=3e-3)


def test_sample_set_csv_round_trip(tmp_path):
    s = GaussianPacket([0.5, 0.0], [-1.0, 0.3], 0.05)
    samples = metropolis_chain(s, 1, ChainConfig(n_samples=50, burn_in=5, seed=4))
    assert samples.columns() == ["q_1", "q_2", "p_1", "p_2"]
    path = samples.to_csv(str(tmp_path / "samples_j1.csv"))
    assert (tmp_path / "samples_j1.json").exists()
    loaded = SampleSet.from_csv(path)
    np.testing.assert_array_equal(loaded.points, samples.points)
    assert loaded.summary() == samples.summary()


def test_chain_config_validation():
    with pytest.raises(ValueError):
        ChainConfig(n_samples=0)
    with pytest.raises(ValueError):
        ChainConfig(seed=-1)
    with pytest.raises(ValueError):
        ChainConfig(proposal_scale=0.0)
    with pytest.raises(ValueError):
        ChainConfig(thinning=2)
    assert ChainConfig(initial=[0.0, 1.0]).initial == [0.0, 1.0]


def test_bad_initial_points():
    s = GaussianPacket([0.5], [-1.0], 0.01)
    # S^{phi_1} vanishes at the packet center
    with pytest.raises(SamplerError):
        metropolis_chain(s, 1, ChainConfig(n_samples=10, initial=[0.5, -1.0]))
    with pytest.raises(DimensionMismatchError):
        metropolis_chain(s, 0, ChainConfig(n_samples=10, initial=[0.5, -1.0, 0.0]))


def test_hat_state_second_order_chain_runs():
    hat = HatState(0.0, 0.05)
    samples = metropolis_chain(hat, 2, ChainConfig(n_samples=200, burn_in=50, seed=9))
    assert samples.points.shape == (200, 2)
    assert np.all(np.isfinite(samples.points))
    assert samples.acceptance_rate > 0


def test_target_clips_only_roundoff(monkeypatch):
    import estimators.sampler as sampler

    target = SpectrogramTarget(GaussianPacket([0.0], [0.0], 0.1), 1)
    monkeypatch.setattr(sampler, "averaged_spectrogram", lambda *args: -1e-14)
    assert target(np.zeros(2)) == 0.0
    monkeypatch.setattr(sampler, "averaged_spectrogram", lambda *args: -1e-6)
    with pytest.raises(SamplerError):
        target(np.zeros(2))
