"""Quantum and classical Fisher information, fidelity and Cramer-Rao bounds.

Parameter families are unitary: ``rho_theta = exp(-i theta J) rho exp(i theta J)``
with a Hermitian generator ``J``.  All bounds here are per single measurement;
the ``1/M`` scaling for ``M`` repetitions is applied in :mod:`mzmetro.estimate`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import TOLERANCES, InvariantError, check_hermitian
from .fock import FockSpace, MixedState, Operator, PureState, as_density, sector_unitary

__all__ = [
    "Povm",
    "FisherReport",
    "qfi_pure",
    "qfi_variance",
    "qfi_sld",
    "fidelity",
    "bures_distance",
    "qfi_finite_difference",
    "cfi",
    "outcome_probabilities",
    "photon_counting_povm",
    "identity_povm",
    "fisher_report",
    "random_mixed_state",
]


def _require_hermitian(J: Operator) -> None:
    if not J.hermitian:
        try:
            check_hermitian(J.matrix)
        except InvariantError:
            raise ValueError("generator J must be Hermitian") from None


def _same(a, b):
    if a.space != b.space:
        raise ValueError(f"space mismatch: {a.space.tag} vs {b.space.tag}")


@dataclass(frozen=True, eq=False)
class Povm:
    """Labelled positive operators summing to the identity."""

    elements: tuple
    space: FockSpace

    def __post_init__(self):
        elements = tuple((label, op) for label, op in self.elements)
        if not elements:
            raise ValueError("a POVM needs at least one element")
        total = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for label, op in elements:
            _same(op, self)
            check_hermitian(op.matrix, what=f"POVM element {label!r}")
            lo = float(np.linalg.eigvalsh(op.matrix).min())
            if lo < -TOLERANCES["spectral"]:
                raise InvariantError("positivity", f"POVM element {label!r} has eigenvalue {lo:.3g}")
            total += op.matrix
        defect = float(np.max(np.abs(total - np.eye(self.space.dim))))
        if defect > TOLERANCES["spectral"]:
            raise InvariantError("completeness", f"POVM elements sum to identity only within {defect:.3g}")
        object.__setattr__(self, "elements", elements)

    @property
    def labels(self) -> list:
        return [label for label, _ in self.elements]

    def __len__(self):
        return len(self.elements)


@dataclass(frozen=True)
class FisherReport:
    """QFI (and optionally CFI) with the single-shot bound ``1/qfi``."""

    qfi: float
    generator_tag: str
    cfi: float | None = None
    bound: float = field(init=False)
    # 4 Var(J); differs from the SLD value for mixed states
    four_variance: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "bound", math.inf if self.qfi == 0 else 1.0 / self.qfi)
        if self.cfi is not None and self.cfi > self.qfi + 1e-8:
            raise InvariantError("cfi<=qfi", f"cfi={self.cfi} exceeds qfi={self.qfi}")

    def to_dict(self) -> dict:
        return {
            "qfi": self.qfi,
            "cfi": self.cfi,
            "bound": self.bound,
            "generator_tag": self.generator_tag,
            "four_variance": self.four_variance,
        }


def qfi_variance(state, J: Operator) -> float:
    """``4 (<J^2> - <J>^2)`` for pure or mixed states, clamped at zero."""
    _require_hermitian(J)
    _same(state, J)
    if isinstance(state, PureState):
        jv = J.matrix @ state.amplitudes
        mean = np.vdot(state.amplitudes, jv).real
        second = np.vdot(jv, jv).real
    else:
        rho = state.matrix
        mean = np.trace(rho @ J.matrix).real
        second = np.trace(rho @ J.matrix @ J.matrix).real
    return max(0.0, 4.0 * (second - mean**2))


def qfi_pure(state: PureState, J: Operator) -> float:
    """QFI of a pure state under the unitary family generated by ``J``."""
    if not isinstance(state, PureState):
        raise TypeError("qfi_pure expects a PureState; use qfi_sld for mixed states")
    return qfi_variance(state, J)


def qfi_sld(rho, J: Operator, kernel_tol: float = 1e-12) -> float:
    """QFI from the symmetric logarithmic derivative.

    With ``rho = sum_i p_i |i><i|`` the derivative ``-i[J, rho]`` has matrix
    elements ``-i (p_j - p_i) J_ij``, giving
    ``2 sum_{p_i + p_j > kernel_tol} (p_i - p_j)^2 / (p_i + p_j) |J_ij|^2``.
    """
    if kernel_tol <= 0:
        raise ValueError("kernel_tol must be positive")
    _require_hermitian(J)
    rho = as_density(rho)
    _same(rho, J)
    p, v = np.linalg.eigh(rho.matrix)
    p = np.clip(p, 0.0, None)
    jm = v.conj().T @ J.matrix @ v
    psum = p[:, None] + p[None, :]
    pdiff = p[:, None] - p[None, :]
    keep = psum > kernel_tol
    terms = np.zeros_like(psum)
    terms[keep] = pdiff[keep] ** 2 / psum[keep] * np.abs(jm[keep]) ** 2
    return float(2.0 * terms.sum())


def _sqrt_factor(m: np.ndarray, floor: float) -> np.ndarray:
    # rho = A A^dag with eigenvalues below ``floor`` dropped
    p, v = np.linalg.eigh(m)
    keep = p > floor
    return v[:, keep] * np.sqrt(p[keep])


def fidelity(rho, sigma, eig_floor: float = 1e-14) -> float:
    """Root fidelity ``tr sqrt(sqrt(rho) sigma sqrt(rho))``.

    Evaluated as the nuclear norm of ``A^dag B`` where ``rho = A A^dag`` and
    ``sigma = B B^dag``; dropping eigenvalues below ``eig_floor`` keeps round-off
    in rank-deficient states from leaking in through the square root.
    """
    rho, sigma = as_density(rho), as_density(sigma)
    _same(rho, sigma)
    a = _sqrt_factor(rho.matrix, eig_floor)
    b = _sqrt_factor(sigma.matrix, eig_floor)
    if a.shape[1] == 0 or b.shape[1] == 0:
        return 0.0
    return float(np.linalg.svd(a.conj().T @ b, compute_uv=False).sum())


def bures_distance(rho, sigma) -> float:
    return math.sqrt(max(0.0, 2.0 * (1.0 - fidelity(rho, sigma))))


def qfi_finite_difference(rho, J: Operator, dtheta: float = 1e-3) -> float:
    """QFI from the Bures distance between ``rho_{-dtheta/2}`` and ``rho_{+dtheta/2}``.

    Returns ``8 (1 - f) / dtheta^2``.  Independent of the SLD route and used as
    its oracle.
    """
    if not 0 < dtheta <= 1e-2:
        raise ValueError("dtheta must lie in (0, 1e-2]")
    _require_hermitian(J)
    rho = as_density(rho)
    _same(rho, J)
    u = sector_unitary if J.is_sector_diagonal(1e-12) else _dense_unitary
    plus = rho.evolve(u(rho.space, J, -dtheta / 2))
    minus = rho.evolve(u(rho.space, J, dtheta / 2))
    return 8.0 * (1.0 - fidelity(minus, plus)) / dtheta**2


def _dense_unitary(space: FockSpace, J: Operator, t: float) -> Operator:
    w, v = np.linalg.eigh(J.matrix)
    return Operator((v * np.exp(1j * t * w)) @ v.conj().T, space)


def photon_counting_povm(space: FockSpace) -> Povm:
    """Projectors onto every Fock state ``(n_a, n_b)``."""
    elements = []
    for i, pair in enumerate(space.basis):
        m = np.zeros((space.dim, space.dim))
        m[i, i] = 1.0
        elements.append((pair, Operator(m, space, hermitian=True)))
    return Povm(tuple(elements), space)


def identity_povm(space: FockSpace) -> Povm:
    return Povm((("all", Operator.identity(space)),), space)


def outcome_probabilities(rho, povm: Povm) -> np.ndarray:
    rho = as_density(rho)
    _same(rho, povm)
    return np.array([np.trace(rho.matrix @ e.matrix).real for _, e in povm.elements])


def cfi(
    state,
    J: Operator,
    povm: Povm,
    theta0: float = 0.0,
    method: str = "analytic",
    h: float = 1e-5,
    prob_floor: float = 1e-12,
) -> float:
    """Classical Fisher information of ``povm`` on the family ``exp(-i theta J)``.

    ``method='analytic'`` uses ``dp = tr(-i[J, rho_theta] E)``; ``'central'``
    differentiates the outcome probabilities with step ``h`` instead.
    Outcomes with probability at or below ``prob_floor`` are skipped.
    """
    _require_hermitian(J)
    rho = as_density(state)
    _same(rho, J)
    _same(rho, povm)
    u = sector_unitary if J.is_sector_diagonal(1e-12) else _dense_unitary

    def at(theta):
        return rho.evolve(u(rho.space, J, -theta)) if theta != 0 else rho

    rho0 = at(theta0)
    p = outcome_probabilities(rho0, povm)
    if method == "analytic":
        d = -1j * (J.matrix @ rho0.matrix - rho0.matrix @ J.matrix)
        dp = np.array([np.trace(d @ e.matrix).real for _, e in povm.elements])
    elif method == "central":
        dp = (outcome_probabilities(at(theta0 + h), povm) - outcome_probabilities(at(theta0 - h), povm)) / (2 * h)
    else:
        raise ValueError(f"unknown method {method!r}")
    keep = p > prob_floor
    return float(np.sum(dp[keep] ** 2 / p[keep]))


def fisher_report(state, J: Operator, povm: Povm | None = None, theta0: float = 0.0,
                  generator_tag: str = "J") -> FisherReport:
    """QFI (SLD form) plus, if a POVM is given, its CFI at ``theta0``."""
    if isinstance(state, PureState):
        q = qfi_pure(state, J)
        four_var = q
    else:
        q = qfi_sld(state, J)
        four_var = qfi_variance(state, J)
    c = cfi(state, J, povm, theta0) if povm is not None else None
    return FisherReport(qfi=q, cfi=c, generator_tag=generator_tag, four_variance=four_var)


def random_mixed_state(space: FockSpace, rng: np.random.Generator, rank: int | None = None) -> MixedState:
    """Ginibre-distributed density matrix of the given rank (full rank by default)."""
    rank = space.dim if rank is None else rank
    g = rng.normal(size=(space.dim, rank)) + 1j * rng.normal(size=(space.dim, rank))
    m = g @ g.conj().T
    m /= np.trace(m).real
    return MixedState((m + m.conj().T) / 2, space)
