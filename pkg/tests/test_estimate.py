import math
import warnings

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mzmetro.estimate import (
    DegenerateLikelihoodWarning,
    ExperimentConfig,
    PhaseEstimator,
    ml_estimate,
    outcome_distribution,
    run_experiment,
    sample,
)
from mzmetro.fock import PureState, make_space
from mzmetro.optimal import noon_state


def single_photon(**kw):
    space = make_space(1)
    return ExperimentConfig(input_state=PureState.fock(space, 1, 0), **kw)


@pytest.mark.parametrize("theta", [0.0, 0.4, 1.3, 2.9])
def test_single_photon_fringe(theta):
    d = outcome_distribution(single_photon(theta_true=theta))
    assert d[(1, 0)] == pytest.approx(math.cos(theta / 2) ** 2, abs=1e-12)
    assert d[(0, 1)] == pytest.approx(math.sin(theta / 2) ** 2, abs=1e-12)
    assert d[(0, 0)] == pytest.approx(0, abs=1e-15)


def test_theta_zero_returns_input():
    space = make_space(2)
    cfg = ExperimentConfig(input_state=PureState.fock(space, 1, 1), theta_true=0.0)
    d = outcome_distribution(cfg)
    assert d[(1, 1)] == pytest.approx(1, abs=1e-12)


def test_vacuum_point_mass():
    cfg = ExperimentConfig(input_state=PureState.vacuum(make_space(2)))
    assert outcome_distribution(cfg)[(0, 0)] == pytest.approx(1, abs=1e-12)


def test_sample_shape_and_determinism():
    cfg = single_photon(shots=50, runs=4, seed=3)
    a, b = sample(cfg), sample(cfg)
    assert a.shape == (4, 50)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, sample(single_photon(shots=50, runs=4, seed=4)))


def test_sample_frequencies():
    cfg = single_photon(shots=100_000, runs=1, theta_true=1.1)
    p = math.sin(0.55) ** 2
    freq = np.mean(sample(cfg)[0] == cfg.input_state.space.index(0, 1))
    assert abs(freq - p) <= 5 * math.sqrt(p * (1 - p) / cfg.shots)


def test_ml_all_dark_port_hits_upper_edge():
    cfg = single_photon(shots=20)
    outcomes = [(0, 1)] * 20
    # the likelihood sin^{2M}(theta/2) increases up to pi, beyond the grid
    assert ml_estimate(outcomes, cfg) == pytest.approx(cfg.grid[1], abs=1e-6)


def test_ml_consistency():
    cfg = single_photon(shots=10_000, runs=1, seed=9)
    est = ml_estimate(sample(cfg)[0], cfg)
    assert abs(est - cfg.theta_true) <= 5 / math.sqrt(cfg.shots)


def test_ml_mirror_tie_picks_centre():
    # on a grid symmetric about 0 the fringe cannot tell theta from -theta
    cfg = single_photon(shots=1000, theta_true=0.0, grid=(-1.5, 1.5, 512))
    outcomes = [(1, 0)] * 800 + [(0, 1)] * 200
    est = PhaseEstimator(cfg.input_state, grid=cfg.grid).fit(outcomes)
    assert est.n_tied_ == 2
    want = 2 * math.asin(math.sqrt(0.2))
    assert abs(est.theta_) == pytest.approx(want, abs=1e-5)


def test_flat_likelihood_warns():
    cfg = ExperimentConfig(input_state=PureState.vacuum(make_space(1)), shots=10)
    with pytest.warns(DegenerateLikelihoodWarning):
        est = PhaseEstimator(cfg.input_state, grid=cfg.grid).fit([(0, 0)] * 10)
    assert est.theta_ == pytest.approx(sum(cfg.grid[:2]) / 2)


def test_bad_config():
    with pytest.raises(ValueError):
        single_photon(grid=(1.0, 1.0, 10))
    with pytest.raises(ValueError):
        single_photon(theta_true=3.0, grid=(0, 1, 10))
    with pytest.raises(ValueError):
        single_photon(shots=0)
    with pytest.raises(ValueError):
        PhaseEstimator(PureState.vacuum(make_space(1))).fit([])


def test_noon_bounds():
    space = make_space(2)
    cfg = ExperimentConfig(input_state=noon_state(space, 2), shots=500, runs=4)
    res = run_experiment(cfg)
    assert res.qfi == pytest.approx(4, abs=1e-10)
    assert res.crb_quantum == pytest.approx(1 / (4 * 500))
    assert res.crb_classical >= res.crb_quantum


def test_smoke_single_shot():
    res = run_experiment(single_photon(shots=1, runs=1))
    assert res.estimates.shape == (1,)
    assert math.isfinite(res.empirical_mse)


def test_mse_not_far_below_bound():
    R = 200
    res = run_experiment(single_photon(shots=1000, runs=R, seed=2))
    assert res.empirical_mse >= res.crb_classical * (1 - 3 / math.sqrt(R))


def test_reproducible_and_thread_invariant():
    cfg = single_photon(shots=200, runs=16, seed=5)
    a = run_experiment(cfg)
    b = run_experiment(cfg, n_jobs=4)
    np.testing.assert_array_equal(a.estimates, b.estimates)
    assert a.to_dict()["seed"] == 5


def test_mse_scales_as_inverse_shots():
    scaled = []
    for M in (1000, 10_000):
        res = run_experiment(single_photon(shots=M, runs=200, seed=1))
        scaled.append(M * res.empirical_mse)
    assert 1 / 1.5 <= scaled[0] / scaled[1] <= 1.5


def test_sklearn_api():
    psi = PureState.fock(make_space(1), 1, 0)
    est = PhaseEstimator(psi, grid=(0.0, 2.0, 256))
    params = est.get_params()
    assert params["grid"] == (0.0, 2.0, 256)
    twin = clone(est)
    assert twin.get_params()["refine_rounds"] == 3
    cfg = single_photon(shots=300, runs=3, grid=(0.0, 2.0, 256))
    X = sample(cfg)
    est.fit(X[0])
    preds = est.predict(X)
    assert preds.shape == (3,)
    assert preds[0] == pytest.approx(est.theta_)
    assert est.score(X[0]) <= 0


def test_predict_requires_fit():
    with pytest.raises(NotFittedError):
        PhaseEstimator(PureState.fock(make_space(1), 1, 0)).predict(np.zeros((1, 3), dtype=int))


def test_working_point_flag():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = run_experiment(single_photon(shots=10, runs=2, theta_true=0.0))
    assert res.working_point_flagged
    assert res.notes
