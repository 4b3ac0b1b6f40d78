import math

import numpy as np
import numpy.testing as npt
import pytest
from scipy.linalg import expm

from mzmetro.fock import PureState, ladder, make_space, number_ops, schwinger
from mzmetro.interferometer import (
    BeamSplitterParam,
    MzSetting,
    bs_unitary,
    extract_generator,
    mz_unitary,
    phase_unitary,
)

ALPHAS = [0.0, math.pi / 8, math.pi / 4, 0.6 + 0.3j, -1.1j]


def low_sectors(space):
    return space.capped(space.n_max - 1)


def test_bs_identity_at_zero():
    space = make_space(4)
    npt.assert_allclose(bs_unitary(space, 0).matrix, np.eye(space.dim), atol=1e-15)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_bs_unitary_and_inverse(alpha):
    space = make_space(4)
    u = bs_unitary(space, alpha).matrix
    npt.assert_allclose(u @ u.conj().T, np.eye(space.dim), atol=1e-10)
    npt.assert_allclose(u @ bs_unitary(space, -alpha).matrix, np.eye(space.dim), atol=1e-10)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_bs_conserves_photon_number(alpha):
    space = make_space(5)
    u = bs_unitary(space, alpha).matrix
    N = number_ops(space)[2].matrix
    npt.assert_allclose(u @ N - N @ u, 0, atol=1e-12)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_bogoliubov_rotation_of_modes(alpha):
    space = make_space(5)
    bs = BeamSplitterParam(alpha)
    u, ui = bs_unitary(space, bs).matrix, bs_unitary(space, bs.inverse()).matrix
    a = ladder(space, "a", "annihilate").matrix
    b = ladder(space, "b", "annihilate").matrix
    c, s, ph = math.cos(bs.angle), math.sin(bs.angle), bs.phase
    low = low_sectors(space)
    got_a = (u @ a @ ui)[:, low]
    got_b = (u @ b @ ui)[:, low]
    npt.assert_allclose(got_a, (a * c - b * np.exp(1j * ph) * s)[:, low], atol=1e-10)
    # b picks up +a e^{-i arg} sin; unitarity of the mode map fixes this sign
    npt.assert_allclose(got_b, (b * c + a * np.exp(-1j * ph) * s)[:, low], atol=1e-10)


def test_balanced_splitter_on_single_photon():
    space = make_space(3)
    out = bs_unitary(space, math.pi / 4) @ PureState.fock(space, 1, 0)
    want = math.cos(math.pi / 4) * space.basis_vector(1, 0) - math.sin(math.pi / 4) * space.basis_vector(0, 1)
    npt.assert_allclose(out, want, atol=1e-12)


def test_phase_unitary():
    space = make_space(4)
    npt.assert_allclose(phase_unitary(space, 0).matrix, np.eye(space.dim))
    npt.assert_allclose(phase_unitary(space, 2 * math.pi).matrix, np.eye(space.dim), atol=1e-12)
    phi = 0.37
    u = phase_unitary(space, phi).matrix
    for i, (k, m) in enumerate(space.basis):
        assert u[i, i] == pytest.approx(np.exp(1j * k * phi))


@pytest.mark.parametrize("alpha", ALPHAS)
def test_mz_identity_at_zero_phase(alpha):
    space = make_space(4)
    u = mz_unitary(space, MzSetting(BeamSplitterParam(alpha), 0.0)).matrix
    npt.assert_allclose(u, np.eye(space.dim), atol=1e-10)


@pytest.mark.parametrize("phi", [0.0, 0.4, 1.3, 3.0])
def test_single_photon_interference(phi):
    space = make_space(1)
    u = mz_unitary(space, MzSetting(BeamSplitterParam(math.pi / 4), phi))
    p = np.abs(u @ PureState.fock(space, 1, 0)) ** 2
    assert p[space.index(1, 0)] == pytest.approx(math.cos(phi / 2) ** 2, abs=1e-12)
    assert p[space.index(0, 1)] == pytest.approx(math.sin(phi / 2) ** 2, abs=1e-12)


def test_mz_equals_generator_exponential():
    space = make_space(6)
    J = extract_generator(space, math.pi / 4)
    u = mz_unitary(space, MzSetting(BeamSplitterParam(math.pi / 4), 0.3)).matrix
    npt.assert_allclose(u, expm(0.3j * J.matrix), atol=1e-9)


def test_generator_balanced_form():
    space = make_space(6)
    J = extract_generator(space, math.pi / 4)
    jx = schwinger(space)[0]
    N = number_ops(space)[2]
    assert np.max(np.abs(J.matrix - (N.matrix / 2 + jx.matrix))) <= 1e-10


def test_generator_no_splitting():
    space = make_space(4)
    npt.assert_allclose(extract_generator(space, 0).matrix, number_ops(space)[0].matrix, atol=1e-14)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_generator_closed_form(alpha):
    space = make_space(5)
    bs = BeamSplitterParam(alpha)
    c, s, ph = math.cos(bs.angle), math.sin(bs.angle), bs.phase
    na, nb, _ = (op.matrix for op in number_ops(space))
    adb = ladder(space, "a", "create").matrix @ ladder(space, "b", "annihilate").matrix
    want = c * c * na + s * s * nb + c * s * (np.exp(1j * ph) * adb + np.exp(-1j * ph) * adb.T)
    J = extract_generator(space, bs)
    assert J.hermitian and J.is_sector_diagonal(1e-12)
    npt.assert_allclose(J.matrix, want, atol=1e-12)


@pytest.mark.parametrize("N", range(7))
def test_generator_sector_spectrum(N):
    space = make_space(6)
    J = extract_generator(space, math.pi / 4)
    npt.assert_allclose(np.linalg.eigvalsh(J.block(N)), np.arange(N + 1), atol=1e-10)


def test_alpha_must_be_finite():
    with pytest.raises(ValueError):
        BeamSplitterParam(complex("nan"))
    assert BeamSplitterParam(0).phase == 0.0
