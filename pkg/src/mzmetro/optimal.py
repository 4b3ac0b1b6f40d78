"""Closed-form Fisher values, Fock/ON/NOON builders and the maximum-QFI search.

The optimum over all pure states in a capped subspace is certified by the
eigen-spread of the generator: ``max 4 Var(J) = (lambda_max - lambda_min)^2``,
attained by the equal superposition of extremal eigenvectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._validation import check_int, check_finite
from .fock import FockSpace, Operator, PureState, _fix_phase, bogoliubov_cd
from .interferometer import BALANCED, BeamSplitterParam, _as_bs
from .metrology import _require_hermitian

__all__ = [
    "OneModeDistribution",
    "SectorDistribution",
    "Optimum",
    "fisher_fock_closed",
    "fisher_one_mode_closed",
    "fisher_on_state_closed",
    "one_mode_partial_sum",
    "one_mode_state",
    "on_state",
    "noon_state",
    "variance_functional",
    "symmetrize",
    "optimize_max_qfi",
    "hill_climb_max_qfi",
]


@dataclass(frozen=True, eq=False)
class OneModeDistribution:
    """Photon-number distribution ``p_k``, ``k = 0..K``, of a state with all bosons in mode a."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty 1-d array")
        if np.any(p < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum():.15g}, expected 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def K(self) -> int:
        return self.probs.size - 1

    @property
    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    @property
    def variance(self) -> float:
        k = np.arange(self.probs.size)
        return float(max(0.0, (k**2) @ self.probs - self.mean**2))


@dataclass(frozen=True, eq=False)
class SectorDistribution:
    """Distribution ``p_m`` over ``m = -j..j`` inside a fixed angular-momentum sector."""

    j: Fraction
    probs: np.ndarray

    def __post_init__(self):
        j = Fraction(self.j).limit_denominator(2)
        if j < 0 or (2 * j).denominator != 1:
            raise ValueError("j must be a non-negative half-integer")
        p = np.array(self.probs, dtype=float)
        if p.shape != (int(2 * j) + 1,):
            raise ValueError(f"expected {int(2 * j) + 1} probabilities for j={j}")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")
        p.setflags(write=False)
        object.__setattr__(self, "j", j)
        object.__setattr__(self, "probs", p)

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.probs.size) - float(self.j)


@dataclass(frozen=True, eq=False)
class Optimum:
    max_qfi: float
    optimizer_state: PureState
    eigen_spread: tuple[float, float]
    degeneracy_note: str
    lowest: tuple = field(default=(), repr=False)
    highest: tuple = field(default=(), repr=False)

    def superposition(self, i: int = 0, k: int = 0, chi: float = 0.0) -> PureState:
        """Equal superposition of the ``i``-th lowest and ``k``-th highest extremal vectors."""
        v = self.lowest[i].amplitudes + np.exp(1j * chi) * self.highest[k].amplitudes
        return PureState.normalized(v, self.optimizer_state.space)


def fisher_fock_closed(N: int, k: int) -> float:
    """QFI of ``|k, N-k>`` under ``Jx``: ``N (2k + 1) - 2 k^2``."""
    N = check_int(N, "N", low=0)
    k = check_int(k, "k", low=0, high=N)
    return float(N * (2 * k + 1) - 2 * k * k)


def fisher_one_mode_closed(dist: OneModeDistribution, alpha=BALANCED) -> float:
    """``4 [cos^4 Var(k) + cos^2 sin^2 Nbar]`` with ``cos = cos|alpha|``."""
    a = _as_bs(alpha).angle
    c2, s2 = math.cos(a) ** 2, math.sin(a) ** 2
    return 4.0 * (c2 * c2 * dist.variance + c2 * s2 * dist.mean)


def fisher_on_state_closed(K: int, nbar: float) -> float:
    """Balanced-splitter QFI of the vacuum/``|K,0>`` superposition: ``nbar (K - nbar + 1)``."""
    K = check_int(K, "K", low=0)
    if not 0 <= nbar <= K:
        raise ValueError(f"on_state requires 0 <= nbar <= K, got nbar={nbar}, K={K}")
    return float(nbar * (K - nbar + 1))


def one_mode_partial_sum(dist: OneModeDistribution) -> tuple[float, np.ndarray]:
    """Balanced-splitter QFI split as ``Nbar (1 + K - Nbar) + sum_k p_k k (k - K)``.

    Returns the total and the individual (non-positive) terms for ``k = 1..K-1``.
    """
    K, nbar = dist.K, dist.mean
    k = np.arange(1, K)
    terms = dist.probs[1:K] * k * (k - K)
    return float(nbar * (1 + K - nbar) + terms.sum()), terms


def one_mode_state(space: FockSpace, dist: OneModeDistribution, phases=None) -> PureState:
    """``sum_k sqrt(p_k) e^{i phase_k} |k, 0>``."""
    if dist.K > space.n_max:
        raise ValueError(f"K={dist.K} exceeds n_max={space.n_max}")
    phases = np.zeros(dist.probs.size) if phases is None else np.asarray(phases, dtype=float)
    v = np.zeros(space.dim, dtype=complex)
    for k, (p, ph) in enumerate(zip(dist.probs, phases)):
        v[space.index(k, 0)] = math.sqrt(p) * np.exp(1j * ph)
    return PureState.normalized(v, space)


def on_state(space: FockSpace, K: int, nbar: float, chi: float = 0.0) -> PureState:
    """``sqrt(1 - nbar/K) |0,0> + e^{i chi} sqrt(nbar/K) |K,0>``."""
    K = check_int(K, "K", low=0, high=space.n_max)
    nbar = check_finite(nbar, "nbar")
    if not 0 <= nbar <= K:
        raise ValueError(f"on_state requires 0 <= nbar <= K, got nbar={nbar}, K={K}")
    if K == 0:
        return PureState.vacuum(space)
    v = np.zeros(space.dim, dtype=complex)
    v[space.index(0, 0)] += math.sqrt(1 - nbar / K)
    v[space.index(K, 0)] += np.exp(1j * chi) * math.sqrt(nbar / K)
    return PureState(v, space)


def noon_state(space: FockSpace, N: int, chi: float = 0.0, picture: str = "ab") -> PureState:
    """``((c^dag)^N + e^{i chi} (d^dag)^N)|vac> / sqrt2`` with ``c, d = (a +- b)/sqrt2``.

    In the ``'cd'`` picture the coefficients are over c/d occupations, i.e.
    ``(|N,0> + e^{i chi}|0,N>)/sqrt2``; in ``'ab'`` they are the a/b expansion.
    """
    N = check_int(N, "N", low=0, high=space.n_max)
    if picture not in ("ab", "cd"):
        raise ValueError(f"picture must be 'ab' or 'cd', got {picture!r}")
    v = np.zeros(space.dim, dtype=complex)
    if N == 0:
        v[0] = 1.0
    else:
        v[space.index(N, 0)] = 1 / math.sqrt(2)
        v[space.index(0, N)] = np.exp(1j * chi) / math.sqrt(2)
    state = PureState(v, space)
    return state if picture == "cd" else bogoliubov_cd(state, "cd_to_ab")


def variance_functional(dist: SectorDistribution) -> float:
    """``sum p_m m^2 - (sum p_m m)^2``."""
    m, p = dist.m, dist.probs
    return float(max(0.0, p @ m**2 - (p @ m) ** 2))


def symmetrize(dist: SectorDistribution) -> SectorDistribution:
    """``p_m -> (p_m + p_{-m}) / 2``; never lowers the variance."""
    return SectorDistribution(dist.j, (dist.probs + dist.probs[::-1]) / 2)


def _canonical_basis(vecs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Deterministic orthonormal basis of span(vecs).

    Row-reduce so each vector owns the lowest available basis index, then
    Gram-Schmidt in pivot order and fix phases.
    """
    rows = vecs.T.copy()
    pivots = []
    r = 0
    for col in range(rows.shape[1]):
        if r == rows.shape[0]:
            break
        piv = r + int(np.argmax(np.abs(rows[r:, col])))
        if abs(rows[piv, col]) < tol:
            continue
        rows[[r, piv]] = rows[[piv, r]]
        rows[r] /= rows[r, col]
        for i in range(rows.shape[0]):
            if i != r:
                rows[i] -= rows[i, col] * rows[r]
        pivots.append(col)
        r += 1
    q, _ = np.linalg.qr(rows[:r].T)
    return np.stack([_fix_phase(q[:, i]) for i in range(r)], axis=1)


def optimize_max_qfi(space: FockSpace, J: Operator, n_photon_cap: int, degeneracy_tol: float = 1e-9) -> Optimum:
    """Maximum pure-state QFI of ``J`` over states with at most ``n_photon_cap`` photons.

    ``J`` is restricted to sectors ``0..cap`` and diagonalized.  Degenerate
    extremal eigenspaces get a canonical basis (lowest basis index first); the
    returned optimizer uses the first vector of each and all alternatives are
    kept in ``lowest`` / ``highest``.
    """
    _require_hermitian(J)
    cap = check_int(n_photon_cap, "n_photon_cap", low=0, high=space.n_max)
    sl = space.capped(cap)
    w, v = np.linalg.eigh(J.matrix[sl, sl])
    lo, hi = float(w[0]), float(w[-1])
    spread = hi - lo

    def extremal(value):
        sel = np.abs(w - value) <= degeneracy_tol * max(1.0, abs(value))
        basis = _canonical_basis(v[:, sel])
        out = []
        for i in range(basis.shape[1]):
            full = np.zeros(space.dim, dtype=complex)
            full[sl] = basis[:, i]
            out.append(PureState.normalized(full, space))
        return tuple(out)

    lowest = extremal(lo)
    highest = lowest if spread <= degeneracy_tol else extremal(hi)
    if spread <= degeneracy_tol:
        best = lowest[0]
        note = f"J is a multiple of the identity on the capped subspace (eigenvalue {lo:.12g}); every state is optimal"
    else:
        best = PureState.normalized(lowest[0].amplitudes + highest[0].amplitudes, space)
        note = (
            f"lambda_min={lo:.12g} has multiplicity {len(lowest)}, "
            f"lambda_max={hi:.12g} has multiplicity {len(highest)}; "
            f"{len(lowest) * len(highest)} extremal pairs, each with any relative phase, attain the maximum"
        )
        if len(lowest) > 1 or len(highest) > 1:
            labels_lo = ", ".join(_describe(s) for s in lowest)
            labels_hi = ", ".join(_describe(s) for s in highest)
            note += f". lowest: [{labels_lo}]; highest: [{labels_hi}]"
    return Optimum(
        max_qfi=spread**2,
        optimizer_state=best,
        eigen_spread=(lo, hi),
        degeneracy_note=note,
        lowest=lowest,
        highest=highest,
    )


def _describe(state: PureState) -> str:
    w = state.sector_weights()
    sectors = [N for N in range(w.size) if w[N] > 1e-12]
    return "sector " + "+".join(str(N) for N in sectors)


def hill_climb_max_qfi(
    space: FockSpace,
    J: Operator,
    n_photon_cap: int,
    restarts: int = 500,
    steps: int = 200,
    seed: int = 0,
) -> np.ndarray:
    """Random-restart ascent of ``4 Var(J)`` over unit vectors in the capped subspace.

    Only corroborates :func:`optimize_max_qfi`.  Each restart draws its start
    from its own child of ``SeedSequence(seed)`` and accepts a step only if the
    variance increases.  Returns the best QFI reached by every restart.
    """
    _require_hermitian(J)
    cap = check_int(n_photon_cap, "n_photon_cap", low=0, high=space.n_max)
    sl = space.capped(cap)
    j = J.matrix[sl, sl]
    dim = j.shape[0]
    children = np.random.SeedSequence(seed).spawn(restarts)
    psi = np.empty((dim, restarts), dtype=complex)
    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        psi[:, r] = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi, axis=0)

    def qfi(x):
        jx = j @ x
        mean = np.einsum("ir,ir->r", x.conj(), jx).real
        second = np.einsum("ir,ir->r", jx.conj(), jx).real
        return 4 * (second - mean**2), jx, mean

    value, jx, mean = qfi(psi)
    step = np.full(restarts, 0.5 / max(1.0, float(np.max(np.abs(np.linalg.eigvalsh(j)), initial=1.0))))
    for _ in range(steps):
        # gradient of <J^2> - <J>^2 with respect to conj(psi)
        grad = j @ jx - 2 * mean * jx
        grad -= psi * np.einsum("ir,ir->r", psi.conj(), grad)
        trial = psi + step * grad
        trial /= np.linalg.norm(trial, axis=0)
        tval, tjx, tmean = qfi(trial)
        better = tval > value
        psi = np.where(better, trial, psi)
        jx = np.where(better, tjx, jx)
        mean = np.where(better, tmean, mean)
        value = np.where(better, tval, value)
        step = np.where(better, step * 1.2, step * 0.5)
    return value
