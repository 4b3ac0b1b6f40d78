import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings, strategies as st

from mzmetro.fock import PureState, make_space, schwinger
from mzmetro.interferometer import extract_generator
from mzmetro.metrology import qfi_pure
from mzmetro.optimal import (
    OneModeDistribution,
    SectorDistribution,
    fisher_fock_closed,
    fisher_on_state_closed,
    fisher_one_mode_closed,
    hill_climb_max_qfi,
    noon_state,
    on_state,
    one_mode_partial_sum,
    one_mode_state,
    optimize_max_qfi,
    symmetrize,
    variance_functional,
)


def test_fock_closed_values():
    assert fisher_fock_closed(2, 1) == 4
    assert fisher_fock_closed(5, 2) == 17
    for N in range(8):
        assert fisher_fock_closed(N, 0) == N


@pytest.mark.parametrize("N", range(6))
def test_fock_closed_matches_numeric(N):
    space = make_space(5)
    jx = schwinger(space)[0]
    for k in range(N + 1):
        assert fisher_fock_closed(N, k) == pytest.approx(qfi_pure(PureState.fock(space, k, N - k), jx), abs=1e-10)


def test_fock_closed_rejects_bad_k():
    with pytest.raises(ValueError):
        fisher_fock_closed(2, 3)


@pytest.mark.parametrize("seed", range(8))
def test_one_mode_closed_matches_numeric(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(1, 6))
    p = rng.random(K + 1)
    dist = OneModeDistribution(p / p.sum())
    alpha = complex(rng.normal(), rng.normal())
    space = make_space(K)
    psi = one_mode_state(space, dist, rng.uniform(0, 2 * np.pi, K + 1))
    want = qfi_pure(psi, extract_generator(space, alpha))
    assert fisher_one_mode_closed(dist, alpha) == pytest.approx(want, abs=1e-10)


def test_one_mode_partial_sum():
    rng = np.random.default_rng(3)
    for _ in range(50):
        K = int(rng.integers(1, 9))
        p = rng.random(K + 1)
        dist = OneModeDistribution(p / p.sum())
        total, terms = one_mode_partial_sum(dist)
        assert total == pytest.approx(fisher_one_mode_closed(dist), abs=1e-10)
        assert np.all(terms <= 0)
        # so the two-point (vacuum, K) support is optimal at fixed mean
        assert total <= fisher_on_state_closed(K, dist.mean) + 1e-10


@pytest.mark.parametrize("K,nbar,want", [(4, 2, 6.0), (6, 3, 12.0), (5, 0, 0.0), (3, 3, 3.0)])
def test_on_state(K, nbar, want):
    space = make_space(K)
    J = extract_generator(space)
    assert fisher_on_state_closed(K, nbar) == want
    for chi in (0.0, 0.9, 2.5):
        assert qfi_pure(on_state(space, K, nbar, chi), J) == pytest.approx(want, abs=1e-10)


def test_on_state_zero_mean_is_vacuum():
    space = make_space(3)
    npt.assert_allclose(on_state(space, 3, 0).amplitudes, PureState.vacuum(space).amplitudes)


def test_on_state_beats_mean_when_K_exceeds_nbar():
    for K in range(2, 8):
        for nbar in np.linspace(0.1, K - 0.1, 7):
            assert fisher_on_state_closed(K, nbar) > nbar


def test_on_state_rejects_mean_above_K():
    with pytest.raises(ValueError):
        on_state(make_space(3), 3, 4.0)
    with pytest.raises(ValueError):
        fisher_on_state_closed(3, 3.5)


def test_variance_functional_values():
    assert variance_functional(SectorDistribution(1, [0.5, 0, 0.5])) == pytest.approx(1)
    assert variance_functional(SectorDistribution(1.5, [0.5, 0, 0, 0.5])) == pytest.approx(2.25)
    assert variance_functional(SectorDistribution(2, [0, 0, 1, 0, 0])) == 0
    assert variance_functional(SectorDistribution(1, [1 / 3, 1 / 3, 1 / 3])) == pytest.approx(2 / 3)


def test_symmetrize_fixed_point():
    d = SectorDistribution(1, [0.25, 0.5, 0.25])
    npt.assert_array_equal(symmetrize(d).probs, d.probs)


@settings(max_examples=1000, deadline=None)
@given(twoj=st.integers(0, 8), seed=st.integers(0, 2**32 - 1))
def test_symmetrize_never_lowers_variance(twoj, seed):
    p = np.random.default_rng(seed).random(twoj + 1) + 1e-3
    d = SectorDistribution(twoj / 2, p / p.sum())
    s = symmetrize(d)
    assert variance_functional(s) >= variance_functional(d) - 1e-12
    assert abs(s.probs @ s.m) <= 1e-12
    assert variance_functional(d) <= float(d.j) ** 2 + 1e-12


def test_optimizer_cap_zero():
    space = make_space(3)
    opt = optimize_max_qfi(space, extract_generator(space), 0)
    assert opt.max_qfi == 0


@pytest.mark.parametrize("cap", [1, 2, 3, 4])
def test_optimizer_reaches_noon(cap):
    space = make_space(4)
    J = extract_generator(space)
    opt = optimize_max_qfi(space, J, cap)
    assert opt.max_qfi == pytest.approx(cap**2, abs=1e-9)
    assert qfi_pure(opt.optimizer_state, J) == pytest.approx(cap**2, abs=1e-9)
    assert qfi_pure(noon_state(space, cap), J) == pytest.approx(opt.max_qfi, abs=1e-9)
    # every listed extremal pair attains the optimum
    for i in range(len(opt.lowest)):
        for k in range(len(opt.highest)):
            assert qfi_pure(opt.superposition(i, k, 0.3), J) == pytest.approx(opt.max_qfi, abs=1e-9)


def test_optimizer_degeneracy_note():
    space = make_space(3)
    opt = optimize_max_qfi(space, extract_generator(space), 3)
    # lambda_min = 0 is shared by the vacuum and the lowest state of every sector
    assert len(opt.lowest) == 4
    assert len(opt.highest) == 1
    assert "multiplicity 4" in opt.degeneracy_note
    assert opt.eigen_spread == pytest.approx((0, 3), abs=1e-9)


def test_optimizer_deterministic():
    space = make_space(3)
    J = extract_generator(space)
    a = optimize_max_qfi(space, J, 3)
    b = optimize_max_qfi(space, J, 3)
    npt.assert_array_equal(a.optimizer_state.amplitudes, b.optimizer_state.amplitudes)


def test_random_states_never_exceed_optimum():
    space = make_space(3)
    J = extract_generator(space)
    bound = optimize_max_qfi(space, J, 3).max_qfi
    rng = np.random.default_rng(11)
    for _ in range(1000):
        psi = PureState.normalized(rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim), space)
        assert qfi_pure(psi, J) <= bound + 1e-9


def test_hill_climb_corroborates():
    space = make_space(3)
    J = extract_generator(space)
    bound = optimize_max_qfi(space, J, 3).max_qfi
    values = hill_climb_max_qfi(space, J, 3, restarts=100, steps=200, seed=0)
    assert values.shape == (100,)
    assert np.all(values <= bound + 1e-9)
    assert values.max() == pytest.approx(bound, abs=1e-6)


def test_noon_single_photon():
    space = make_space(2)
    psi = noon_state(space, 1)
    # (c^dag + d^dag)/sqrt2 puts the photon in one of the original modes
    w = np.abs(psi.amplitudes) ** 2
    assert max(w[space.index(1, 0)], w[space.index(0, 1)]) == pytest.approx(1, abs=1e-12)


def test_noon_two_photon_ab_amplitudes():
    space = make_space(2)
    psi = noon_state(space, 2)
    want = np.zeros(space.dim)
    want[space.index(2, 0)] = want[space.index(0, 2)] = 1 / math.sqrt(2)
    npt.assert_allclose(psi.amplitudes, want, atol=1e-12)
    # relative phase pi gives the Hong-Ou-Mandel state
    hom = noon_state(space, 2, chi=math.pi)
    assert abs(hom.amplitudes[space.index(1, 1)]) == pytest.approx(1, abs=1e-12)


def test_noon_cd_picture():
    space = make_space(3)
    psi = noon_state(space, 3, picture="cd")
    assert psi.amplitudes[space.index(3, 0)] == pytest.approx(1 / math.sqrt(2))
    assert psi.amplitudes[space.index(0, 3)] == pytest.approx(1 / math.sqrt(2))
