"""Beam-splitter and Mach-Zehnder unitaries on the truncated two-mode space."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ._validation import check_finite
from .fock import FockSpace, Operator, ladder, number_ops, sector_unitary

__all__ = [
    "BeamSplitterParam",
    "MzSetting",
    "BALANCED",
    "bs_unitary",
    "phase_unitary",
    "mz_unitary",
    "extract_generator",
]


@dataclass(frozen=True)
class BeamSplitterParam:
    """Complex splitter parameter: ``|alpha|`` is the mixing angle, ``arg(alpha)`` a phase."""

    alpha: complex = math.pi / 4

    def __post_init__(self):
        a = complex(self.alpha)
        if not cmath.isfinite(a):
            raise ValueError("alpha must be finite")
        object.__setattr__(self, "alpha", a)

    @property
    def angle(self) -> float:
        return abs(self.alpha)

    @property
    def phase(self) -> float:
        # arg(0) := 0
        return cmath.phase(self.alpha) if self.alpha != 0 else 0.0

    def inverse(self) -> "BeamSplitterParam":
        return BeamSplitterParam(-self.alpha)


BALANCED = BeamSplitterParam(math.pi / 4)


@dataclass(frozen=True)
class MzSetting:
    bs: BeamSplitterParam
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "phi", check_finite(self.phi, "phi"))


def _as_bs(bs) -> BeamSplitterParam:
    return bs if isinstance(bs, BeamSplitterParam) else BeamSplitterParam(bs)


def bs_unitary(space: FockSpace, bs) -> Operator:
    """``exp(alpha a^dag b - conj(alpha) a b^dag)``.

    The exponent is anti-Hermitian and sector diagonal, so it is exponentiated
    per sector as ``exp(i H)`` with ``H = -i * exponent``.
    """
    alpha = _as_bs(bs).alpha
    x = ladder(space, "a", "create").matrix @ ladder(space, "b", "annihilate").matrix
    exponent = alpha * x - np.conj(alpha) * x.T
    return sector_unitary(space, -1j * exponent)


def phase_unitary(space: FockSpace, phi: float) -> Operator:
    """``exp(i phi n_a)``, diagonal in the Fock basis."""
    phi = check_finite(phi, "phi")
    na, _ = space.occupations
    return Operator(np.diag(np.exp(1j * phi * na)), space)


def mz_unitary(space: FockSpace, setting: MzSetting) -> Operator:
    """``U_BS(-alpha) exp(i phi n_a) U_BS(alpha)``."""
    bs = setting.bs
    return bs_unitary(space, bs.inverse()) @ phase_unitary(space, setting.phi) @ bs_unitary(space, bs)


def extract_generator(space: FockSpace, bs=BALANCED) -> Operator:
    """Phase generator ``J = U_BS(-alpha) n_a U_BS(alpha)`` of the interferometer.

    Defined by conjugation, so ``mz_unitary == exp(i phi J)`` holds for every
    ``alpha``.  Explicitly
    ``J = cos^2 n_a + sin^2 n_b + cos sin (e^{i arg} a^dag b + e^{-i arg} a b^dag)``
    with ``cos = cos|alpha|``, ``sin = sin|alpha|``; at ``alpha = pi/4`` this is
    ``N/2 + Jx``.
    """
    bs = _as_bs(bs)
    n_a = number_ops(space)[0].matrix
    u = bs_unitary(space, bs).matrix
    return Operator.hermitized(u.conj().T @ n_a @ u, space)
