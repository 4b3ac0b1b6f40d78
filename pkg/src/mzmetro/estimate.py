"""Monte Carlo phase estimation behind a Mach-Zehnder interferometer.

Photon counts at the two output ports are sampled from
``|<n_a, n_b| U_MZ(alpha, theta) |psi>|^2``, the phase is recovered by maximum
likelihood, and the empirical mean squared error is compared with the
Cramer-Rao bounds ``1/(M QFI)`` and ``1/(M CFI)``.

Random streams: run ``r`` draws from
``Generator(Philox(SeedSequence(seed).spawn(runs)[r]))``, so results do not
depend on how runs are scheduled.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_finite, check_int
from .fock import PureState
from .interferometer import BALANCED, BeamSplitterParam, _as_bs, extract_generator
from .metrology import cfi, photon_counting_povm, qfi_pure

__all__ = [
    "DegenerateLikelihoodWarning",
    "ExperimentConfig",
    "EstimationRun",
    "PhaseEstimator",
    "outcome_distribution",
    "sample",
    "ml_estimate",
    "run_experiment",
]

GRID_POINTS = 512
PROB_FLOOR = 1e-12


class DegenerateLikelihoodWarning(UserWarning):
    """The log-likelihood is flat on the grid; the grid midpoint was returned."""


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    input_state: PureState
    bs: BeamSplitterParam = BALANCED
    theta_true: float = 0.7
    shots: int = 1000
    runs: int = 100
    seed: int = 0
    grid: tuple | None = None

    def __post_init__(self):
        if not isinstance(self.input_state, PureState):
            raise TypeError("input_state must be a PureState")
        object.__setattr__(self, "bs", _as_bs(self.bs))
        theta = check_finite(self.theta_true, "theta_true")
        object.__setattr__(self, "theta_true", theta)
        check_int(self.shots, "shots", low=1)
        check_int(self.runs, "runs", low=1)
        check_int(self.seed, "seed", low=0, high=2**64 - 1)
        grid = self.grid
        if grid is None:
            grid = (theta - math.pi / 2, theta + math.pi / 2, GRID_POINTS)
        lo, hi, pts = float(grid[0]), float(grid[1]), grid[2]
        check_int(pts, "grid points", low=3)
        if not lo < hi:
            raise ValueError(f"empty grid interval [{lo}, {hi}]")
        if not lo <= theta <= hi:
            raise ValueError(f"theta_true={theta} lies outside the grid [{lo}, {hi}]")
        object.__setattr__(self, "grid", (lo, hi, int(pts)))


@dataclass(frozen=True, eq=False)
class EstimationRun:
    estimates: np.ndarray
    empirical_mse: float
    crb_quantum: float
    crb_classical: float
    bias: float
    qfi: float
    cfi: float
    shots: int
    runs: int
    seed: int
    degenerate_runs: int = 0
    working_point_flagged: bool = False
    notes: tuple = field(default=())

    def __post_init__(self):
        if self.crb_classical < self.crb_quantum - 1e-12:
            raise ValueError("classical bound below quantum bound")

    def to_dict(self) -> dict:
        return {
            "empirical_mse": self.empirical_mse,
            "crb_quantum": self.crb_quantum,
            "crb_classical": self.crb_classical,
            "bias": self.bias,
            "qfi": self.qfi,
            "cfi": self.cfi,
            "shots": self.shots,
            "runs": self.runs,
            "seed": self.seed,
            "degenerate_runs": self.degenerate_runs,
            "working_point_flagged": self.working_point_flagged,
            "notes": list(self.notes),
            "estimates": self.estimates.tolist(),
        }


class _MzModel:
    """Outcome probabilities ``p(theta)`` via the eigendecomposition of ``J``."""

    def __init__(self, state: PureState, bs: BeamSplitterParam):
        self.space = state.space
        J = extract_generator(self.space, bs)
        self.generator = J
        w, v = np.linalg.eigh(J.matrix)
        self.eigvals = w
        self.eigvecs = v
        self.coeffs = v.conj().T @ state.amplitudes

    def probabilities(self, thetas) -> np.ndarray:
        """Shape ``(len(thetas), dim)``; rows sum to one."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        phases = np.exp(1j * np.outer(thetas, self.eigvals))
        amps = (phases * self.coeffs) @ self.eigvecs.T
        return np.abs(amps) ** 2


def outcome_distribution(config: ExperimentConfig, theta: float | None = None) -> dict:
    """``{(n_a, n_b): probability}`` at ``theta`` (default: ``config.theta_true``)."""
    theta = config.theta_true if theta is None else theta
    p = _MzModel(config.input_state, config.bs).probabilities([theta])[0]
    return {label: float(p[i]) for i, label in enumerate(config.input_state.space.basis)}


def _run_rng(seed: int, runs: int, r: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed).spawn(runs)[r]))


def _sample_run(p: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    return rng.choice(p.size, size=shots, p=p / p.sum())


def sample(config: ExperimentConfig, model: _MzModel | None = None) -> np.ndarray:
    """Outcome indices of shape ``(runs, shots)``; index ``i`` is ``space.basis[i]``."""
    model = model or _MzModel(config.input_state, config.bs)
    p = model.probabilities([config.theta_true])[0]
    return np.stack([_sample_run(p, config.shots, _run_rng(config.seed, config.runs, r)) for r in range(config.runs)])


def _golden_max(f, lo: float, hi: float, xtol: float) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > xtol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    return (lo + hi) / 2


class PhaseEstimator(BaseEstimator):
    """Maximum-likelihood phase estimator for photon counting after a Mach-Zehnder.

    ``fit`` takes the outcomes of one run (basis indices or ``(n_a, n_b)``
    labels) and stores ``theta_``.  The log-likelihood is scanned on the grid;
    every local maximum is refined with ``refine_rounds`` golden-section
    searches.  Refined maxima within ``tie_tol`` (relative) of the best are
    treated as tied, which happens for the mirror images produced by the
    ``theta -> -theta`` symmetry of interference fringes, and the one
    closest to the grid centre wins.

    Parameters
    ----------
    input_state : PureState
    alpha : complex
        Beam-splitter parameter.
    grid : tuple (lo, hi, points)
    refine_rounds : int
    xtol : float
        Golden-section bracket width at termination.
    tie_tol : float
    """

    def __init__(self, input_state=None, alpha=math.pi / 4, grid=(-math.pi / 2, math.pi / 2, GRID_POINTS),
                 refine_rounds=3, xtol=1e-6, tie_tol=1e-9):
        self.input_state = input_state
        self.alpha = alpha
        self.grid = grid
        self.refine_rounds = refine_rounds
        self.xtol = xtol
        self.tie_tol = tie_tol

    def _model(self) -> _MzModel:
        key = (id(self.input_state), complex(self.alpha))
        cached = getattr(self, "_model_cache", None)
        if cached is None or cached[0] != key:
            if self.input_state is None:
                raise ValueError("input_state is required")
            cached = (key, _MzModel(self.input_state, BeamSplitterParam(self.alpha)))
            self._model_cache = cached
        return cached[1]

    def _counts(self, X, dim: int) -> np.ndarray:
        X = list(X) if not isinstance(X, np.ndarray) else X
        if len(X) == 0:
            raise ValueError("no outcomes to estimate from")
        if isinstance(X, np.ndarray) and X.dtype.kind in "iu":
            idx = X.ravel()
        else:
            space = self.input_state.space
            idx = np.array([space.index(*o) if isinstance(o, (tuple, list)) else int(o) for o in X])
        if idx.min() < 0 or idx.max() >= dim:
            raise ValueError("outcome index out of range")
        return np.bincount(idx, minlength=dim)

    def fit(self, X, y=None):
        model = self._model()
        lo, hi, pts = self.grid
        if not lo < hi:
            raise ValueError(f"empty grid interval [{lo}, {hi}]")
        counts = self._counts(X, model.space.dim)
        seen = np.nonzero(counts)[0]
        n_seen = counts[seen]

        def loglik(thetas):
            p = model.probabilities(thetas)[:, seen]
            with np.errstate(divide="ignore"):
                return np.log(p) @ n_seen

        grid = np.linspace(lo, hi, int(pts))
        values = loglik(grid)
        finite = values[np.isfinite(values)]
        self.degenerate_ = bool(finite.size == 0 or finite.max() - finite.min() <= 1e-14)
        if self.degenerate_:
            warnings.warn("flat log-likelihood on the grid; returning the grid midpoint", DegenerateLikelihoodWarning)
            self.theta_ = (lo + hi) / 2
            self.log_likelihood_ = float(values[0]) if values.size else -math.inf
            return self

        left = np.concatenate(([-np.inf], values[:-1]))
        right = np.concatenate((values[1:], [-np.inf]))
        peaks = np.nonzero((values >= left) & (values >= right) & np.isfinite(values))[0]
        step = grid[1] - grid[0]
        f = lambda t: float(loglik([t])[0])  # noqa: E731
        refined = []
        for i in peaks:
            best_t, best_v = grid[i], values[i]
            half = step
            for _ in range(self.refine_rounds):
                a, b = max(lo, best_t - half), min(hi, best_t + half)
                t = _golden_max(f, a, b, self.xtol)
                v = f(t)
                if v > best_v:
                    best_t, best_v = t, v
                half /= 4
            refined.append((best_v, best_t))
        top = max(v for v, _ in refined)
        tol = self.tie_tol * max(1.0, abs(top))
        centre = (lo + hi) / 2
        tied = [t for v, t in refined if v >= top - tol]
        self.theta_ = float(min(tied, key=lambda t: abs(t - centre)))
        self.log_likelihood_ = f(self.theta_)
        self.n_tied_ = len(tied)
        return self

    def predict(self, X) -> np.ndarray:
        """Estimate for each row of a ``(runs, shots)`` array of outcomes."""
        check_is_fitted(self, "theta_")
        est = []
        for row in np.atleast_2d(X):
            est.append(clone_fit(self, row).theta_)
        return np.array(est)

    def score(self, X, y=None) -> float:
        """Mean log-likelihood per shot at the fitted phase."""
        check_is_fitted(self, "theta_")
        model = self._model()
        counts = self._counts(X, model.space.dim)
        p = model.probabilities([self.theta_])[0]
        with np.errstate(divide="ignore"):
            return float(np.log(p[counts > 0]) @ counts[counts > 0] / counts.sum())


def clone_fit(est: PhaseEstimator, X) -> PhaseEstimator:
    fresh = PhaseEstimator(**est.get_params())
    fresh._model_cache = getattr(est, "_model_cache", None)
    return fresh.fit(X)


def _estimator(config: ExperimentConfig, model: _MzModel | None = None) -> PhaseEstimator:
    est = PhaseEstimator(input_state=config.input_state, alpha=config.bs.alpha, grid=config.grid)
    if model is not None:
        est._model_cache = ((id(config.input_state), complex(config.bs.alpha)), model)
    return est


def ml_estimate(outcomes, config: ExperimentConfig) -> float:
    """Maximum-likelihood phase from one run of outcomes."""
    return _estimator(config).fit(outcomes).theta_


def run_experiment(config: ExperimentConfig, n_jobs: int = 1) -> EstimationRun:
    """``runs`` independent runs of ``shots`` shots each.

    The MSE is taken about ``theta_true`` without the ``d<theta_est>/dtheta``
    normalization; the bias is reported alongside.
    """
    model = _MzModel(config.input_state, config.bs)
    p0 = model.probabilities([config.theta_true])[0]

    def one(r):
        try:
            outcomes = _sample_run(p0, config.shots, _run_rng(config.seed, config.runs, r))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateLikelihoodWarning)
                est = _estimator(config, model).fit(outcomes)
            return est.theta_, est.degenerate_
        except Exception as exc:
            raise RuntimeError(f"run {r} failed: {exc}") from exc

    if n_jobs == 1:
        results = [one(r) for r in range(config.runs)]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(one, range(config.runs)))
    estimates = np.array([t for t, _ in results])
    degenerate = sum(d for _, d in results)

    J = model.generator
    q = qfi_pure(config.input_state, J)
    # MZ evolution is exp(+i theta J), i.e. the exp(-i theta J') family with J' = -J
    c = cfi(config.input_state, -J, photon_counting_povm(config.input_state.space), config.theta_true,
            prob_floor=PROB_FLOOR)
    lo, hi, pts = config.grid
    reachable = model.probabilities(np.linspace(lo, hi, pts)).max(axis=0) > PROB_FLOOR
    flagged = bool(np.any(p0[reachable] <= PROB_FLOOR))
    notes = []
    if flagged:
        notes.append("some reachable outcome has zero probability at theta_true; CFI may be ill-defined")
    m = config.shots
    return EstimationRun(
        estimates=estimates,
        empirical_mse=float(np.mean((estimates - config.theta_true) ** 2)),
        crb_quantum=math.inf if q == 0 else 1.0 / (m * q),
        crb_classical=math.inf if c == 0 else 1.0 / (m * c),
        bias=float(estimates.mean() - config.theta_true),
        qfi=q,
        cfi=c,
        shots=config.shots,
        runs=config.runs,
        seed=config.seed,
        degenerate_runs=int(degenerate),
        working_point_flagged=flagged,
        notes=tuple(notes),
    )
