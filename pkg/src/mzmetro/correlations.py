"""Mode-relative separability diagnostics.

An observable is local to one mode if it is a polynomial in that mode's ladder
operators.  For a pure state, a non-zero connected correlator
``<AB> - <A><B>`` between observables of the two commuting algebras certifies
entanglement relative to that mode pair.  Vanishing correlators on a sample
are evidence only.

Mode pairs: ``'ab'`` uses the original modes, ``'cd'`` the balanced pair
``c, d = (a +- b)/sqrt2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_int
from .fock import (
    FockSpace,
    MixedState,
    Operator,
    PureState,
    _cd_matrix,
    embed,
    ladder,
    make_space,
)

__all__ = [
    "LocalObservable",
    "WitnessReport",
    "realize",
    "connected_correlator",
    "random_local_observable",
    "separability_witness_report",
]

_LETTERS = {"+": "create", "-": "annihilate", "create": "create", "annihilate": "annihilate"}


def _parse_word(word) -> tuple[str, ...]:
    if isinstance(word, str):
        parts = word.split("*") if "*" in word else list(word)
    else:
        parts = list(word)
    try:
        return tuple(_LETTERS[p.strip()] for p in parts if p.strip())
    except KeyError as exc:
        raise ValueError(f"unknown ladder letter {exc.args[0]!r}; use '+'/'create' or '-'/'annihilate'") from None


@dataclass(frozen=True)
class LocalObservable:
    """Polynomial in the ladder operators of a single mode.

    ``mode`` is ``'A'`` (first algebra) or ``'B'`` (second).  ``polynomial`` is
    a sequence of ``(coefficient, word)``; a word is read left to right as an
    operator product, e.g. ``"+-"`` is ``a^dag a`` and ``""`` the identity.
    """

    mode: str
    polynomial: tuple
    hermitized: bool = True

    def __post_init__(self):
        if self.mode not in ("A", "B"):
            raise ValueError(f"mode must be 'A' or 'B', got {self.mode!r}")
        poly = tuple((complex(c), _parse_word(w)) for c, w in self.polynomial)
        if not poly:
            raise ValueError("polynomial must have at least one term")
        object.__setattr__(self, "polynomial", poly)

    @property
    def degree(self) -> int:
        return max(len(w) for _, w in self.polynomial)


def realize(space: FockSpace, obs: LocalObservable, pair: str = "ab") -> Operator:
    """Matrix of ``obs`` on ``space`` for the chosen mode pair.

    Words of degree ``d`` are exact on sectors ``N <= n_max - d``.
    """
    mode = "a" if obs.mode == "A" else "b"
    letters = {k: ladder(space, mode, k).matrix for k in ("create", "annihilate")}
    m = np.zeros((space.dim, space.dim), dtype=complex)
    for coeff, word in obs.polynomial:
        term = np.eye(space.dim, dtype=complex)
        for letter in word:
            term = term @ letters[letter]
        m += coeff * term
    if pair == "cd":
        t = _cd_matrix(space.n_max)
        m = t @ m @ t.conj().T
    elif pair != "ab":
        raise ValueError(f"pair must be 'ab' or 'cd', got {pair!r}")
    if obs.hermitized:
        return Operator((m + m.conj().T) / 2, space, hermitian=True)
    return Operator(m, space)


def connected_correlator(state, A: LocalObservable, B: LocalObservable, pair: str = "ab") -> complex:
    """``<AB> - <A><B>`` in ``state``.

    The caller is responsible for choosing ``n_max`` large enough that the
    words do not touch the truncation; :func:`separability_witness_report`
    does this automatically.
    """
    space = state.space
    a = realize(space, A, pair)
    b = realize(space, B, pair)
    return (a @ b).expect(state) - a.expect(state) * b.expect(state)


def random_local_observable(mode: str, degree_cap: int, rng: np.random.Generator, terms: int = 3) -> LocalObservable:
    poly = []
    for _ in range(terms):
        length = int(rng.integers(1, degree_cap + 1))
        word = "".join(rng.choice(["+", "-"], size=length))
        coeff = complex(rng.normal(), rng.normal())
        poly.append((coeff, word))
    return LocalObservable(mode, tuple(poly), hermitized=True)


@dataclass(frozen=True)
class WitnessReport:
    max_correlator: float
    factorizing: bool
    trials: int
    seed: int
    degree_cap: int
    pair: str

    @property
    def flag(self) -> str:
        return "factorizing on sample" if self.factorizing else "correlated"

    def to_dict(self) -> dict:
        return {
            "max_correlator": self.max_correlator,
            "flag": self.flag,
            "trials": self.trials,
            "seed": self.seed,
            "degree_cap": self.degree_cap,
            "pair": self.pair,
        }


def separability_witness_report(
    state,
    trials: int = 50,
    degree_cap: int = 2,
    seed: int = 0,
    pair: str = "ab",
    threshold: float = 1e-8,
) -> WitnessReport:
    """Largest connected correlator over random Hermitian local observable pairs.

    The state is first embedded in a space with ``2 * degree_cap`` spare
    sectors above its support, so no sampled word touches the truncation.
    Each trial draws from its own child of ``SeedSequence(seed)``.
    """
    trials = check_int(trials, "trials", low=1)
    degree_cap = check_int(degree_cap, "degree_cap", low=1)
    if not isinstance(state, (PureState, MixedState)):
        raise TypeError("state must be a PureState or MixedState")
    top = state.max_photon_number()
    # the c/d transform is sector diagonal, so the same guard serves both pairs
    big = make_space(max(state.space.n_max, top + 2 * degree_cap))
    state = embed(state, big) if big != state.space else state
    best = 0.0
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        A = random_local_observable("A", degree_cap, rng)
        B = random_local_observable("B", degree_cap, rng)
        best = max(best, abs(connected_correlator(state, A, B, pair)))
    return WitnessReport(
        max_correlator=best,
        factorizing=best < threshold,
        trials=trials,
        seed=seed,
        degree_cap=degree_cap,
        pair=pair,
    )
