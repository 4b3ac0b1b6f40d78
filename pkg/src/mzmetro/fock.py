"""Truncated two-mode Fock space, ladder and Schwinger operators.

The basis holds every occupation pair ``(n_a, n_b)`` with ``n_a + n_b <= n_max``,
graded by total photon number: sector ``N`` ascending and, inside a sector,
``n_a`` descending from ``N`` to ``0``.  Sector blocks are therefore contiguous.

Truncation convention: creation operators send the top sector
(``n_a + n_b == n_max``) to zero.  Anything built only from sector-preserving
products such as ``a^dag b`` is exact on the whole space; anything involving
``a a^dag`` or ``b b^dag`` is exact only on sectors below the top.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from ._validation import (
    TOLERANCES,
    InvariantError,
    as_square_matrix,
    as_vector,
    check_density,
    check_hermitian,
    check_int,
    check_unit_norm,
    hermiticity_defect,
)

__all__ = [
    "FockSpace",
    "Operator",
    "PureState",
    "MixedState",
    "make_space",
    "ladder",
    "number_ops",
    "schwinger",
    "sector_angular_basis",
    "bogoliubov_cd",
    "sector_unitary",
    "embed",
    "to_json_obj",
    "from_json_obj",
]


@dataclass(frozen=True)
class FockSpace:
    """Two-mode Fock basis truncated at total photon number ``n_max``."""

    n_max: int
    basis: tuple = field(init=False, repr=False, compare=False)
    sector_offsets: tuple = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n_max = check_int(self.n_max, "n_max", low=0)
        basis = tuple((na, N - na) for N in range(n_max + 1) for na in range(N, -1, -1))
        offsets = tuple(N * (N + 1) // 2 for N in range(n_max + 2))
        object.__setattr__(self, "n_max", n_max)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "sector_offsets", offsets)
        object.__setattr__(self, "_index", {pair: i for i, pair in enumerate(basis)})

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def tag(self) -> str:
        return f"fock2(n_max={self.n_max})"

    def index(self, n_a: int, n_b: int) -> int:
        try:
            return self._index[(n_a, n_b)]
        except KeyError:
            raise ValueError(f"({n_a}, {n_b}) is outside the space with n_max={self.n_max}") from None

    def lookup(self, i: int) -> tuple[int, int]:
        return self.basis[i]

    def sector(self, N: int) -> slice:
        check_int(N, "N", low=0, high=self.n_max)
        return slice(self.sector_offsets[N], self.sector_offsets[N + 1])

    def sector_of(self, i: int) -> int:
        n_a, n_b = self.basis[i]
        return n_a + n_b

    def capped(self, N: int) -> slice:
        """Indices of all sectors ``0..N``."""
        check_int(N, "N", low=0, high=self.n_max)
        return slice(0, self.sector_offsets[N + 1])

    @functools.cached_property
    def occupations(self) -> tuple[np.ndarray, np.ndarray]:
        na = np.array([p[0] for p in self.basis], dtype=float)
        nb = np.array([p[1] for p in self.basis], dtype=float)
        return na, nb

    @functools.cached_property
    def total_number(self) -> np.ndarray:
        na, nb = self.occupations
        return na + nb

    def basis_vector(self, n_a: int, n_b: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(n_a, n_b)] = 1.0
        return v

    def is_sector_diagonal(self, matrix: np.ndarray, tol: float = 0.0) -> bool:
        mask = self.total_number[:, None] != self.total_number[None, :]
        return bool(np.all(np.abs(matrix[mask]) <= tol))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _same_space(x, y):
    if x.space != y.space:
        raise ValueError(f"space mismatch: {x.space.tag} vs {y.space.tag}")


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on a :class:`FockSpace`.

    When ``hermitian`` is set the matrix is checked against its adjoint on
    construction.
    """

    matrix: np.ndarray
    space: FockSpace
    hermitian: bool = False

    def __post_init__(self):
        m = as_square_matrix(self.matrix, self.space.dim)
        if self.hermitian:
            check_hermitian(m)
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def space_tag(self) -> str:
        return self.space.tag

    @classmethod
    def hermitized(cls, matrix, space: FockSpace, tol: float | None = None) -> "Operator":
        """Symmetrize a numerically computed matrix that should be Hermitian.

        Rejects matrices whose defect exceeds ``tol`` (default: the spectral
        tolerance scaled by the matrix norm).
        """
        m = as_square_matrix(matrix, space.dim)
        if tol is None:
            tol = TOLERANCES["spectral"] * max(1.0, float(np.max(np.abs(m), initial=0.0)))
        defect = hermiticity_defect(m)
        if defect > tol:
            raise InvariantError("hermiticity", f"defect {defect:.3g} exceeds {tol:.3g}")
        return cls((m + m.conj().T) / 2, space, hermitian=True)

    @classmethod
    def identity(cls, space: FockSpace) -> "Operator":
        return cls(np.eye(space.dim), space, hermitian=True)

    @property
    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.space, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _same_space(self, other)
            return Operator(self.matrix @ other.matrix, self.space)
        if isinstance(other, PureState):
            _same_space(self, other)
            return self.matrix @ other.amplitudes
        return NotImplemented

    def __add__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        _same_space(self, other)
        return Operator(self.matrix + other.matrix, self.space, self.hermitian and other.hermitian)

    def __sub__(self, other):
        if not isinstance(other, Operator):
            return NotImplemented
        _same_space(self, other)
        return Operator(self.matrix - other.matrix, self.space, self.hermitian and other.hermitian)

    def __neg__(self):
        return Operator(-self.matrix, self.space, self.hermitian)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        keeps = self.hermitian and np.isreal(scalar)
        return Operator(self.matrix * scalar, self.space, bool(keeps))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def commutator(self, other: "Operator") -> "Operator":
        _same_space(self, other)
        return Operator(self.matrix @ other.matrix - other.matrix @ self.matrix, self.space)

    def expect(self, state) -> complex:
        _same_space(self, state)
        if isinstance(state, PureState):
            v = state.amplitudes
            return complex(np.vdot(v, self.matrix @ v))
        return complex(np.trace(state.matrix @ self.matrix))

    def block(self, N: int) -> np.ndarray:
        s = self.space.sector(N)
        return self.matrix[s, s]

    def is_sector_diagonal(self, tol: float = 0.0) -> bool:
        return self.space.is_sector_diagonal(self.matrix, tol)


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector on a :class:`FockSpace`."""

    amplitudes: np.ndarray
    space: FockSpace

    def __post_init__(self):
        v = as_vector(self.amplitudes, self.space.dim)
        check_unit_norm(v)
        object.__setattr__(self, "amplitudes", _frozen(v))

    @property
    def space_tag(self) -> str:
        return self.space.tag

    @classmethod
    def normalized(cls, amplitudes, space: FockSpace) -> "PureState":
        v = as_vector(amplitudes, space.dim)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(v / norm, space)

    @classmethod
    def fock(cls, space: FockSpace, n_a: int, n_b: int) -> "PureState":
        return cls(space.basis_vector(n_a, n_b), space)

    @classmethod
    def vacuum(cls, space: FockSpace) -> "PureState":
        return cls.fock(space, 0, 0)

    def density(self) -> "MixedState":
        v = self.amplitudes
        return MixedState(np.outer(v, v.conj()), self.space)

    def overlap(self, other: "PureState") -> complex:
        _same_space(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def evolve(self, unitary: Operator) -> "PureState":
        return PureState.normalized(unitary @ self, self.space)

    def sector_weights(self) -> np.ndarray:
        p = np.abs(self.amplitudes) ** 2
        return np.array([p[self.space.sector(N)].sum() for N in range(self.space.n_max + 1)])

    def max_photon_number(self, tol: float = 1e-14) -> int:
        w = np.nonzero(self.sector_weights() > tol)[0]
        return int(w.max()) if w.size else 0


@dataclass(frozen=True, eq=False)
class MixedState:
    """Density matrix on a :class:`FockSpace`: Hermitian, positive, unit trace."""

    matrix: np.ndarray
    space: FockSpace

    def __post_init__(self):
        m = as_square_matrix(self.matrix, self.space.dim)
        check_density(m)
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def space_tag(self) -> str:
        return self.space.tag

    @classmethod
    def mixture(cls, weights, states) -> "MixedState":
        weights = np.asarray(weights, dtype=float)
        if np.any(weights < 0) or abs(weights.sum() - 1) > TOLERANCES["spectral"]:
            raise ValueError("mixture weights must be non-negative and sum to 1")
        space = states[0].space
        m = np.zeros((space.dim, space.dim), dtype=complex)
        for w, s in zip(weights, states):
            if s.space != space:
                raise ValueError("all mixture components must share a space")
            m += w * (s.density().matrix if isinstance(s, PureState) else s.matrix)
        return cls((m + m.conj().T) / 2, space)

    def evolve(self, unitary: Operator) -> "MixedState":
        _same_space(self, unitary)
        u = unitary.matrix
        m = u @ self.matrix @ u.conj().T
        return MixedState((m + m.conj().T) / 2, self.space)

    def max_photon_number(self, tol: float = 1e-14) -> int:
        diag = np.diag(self.matrix).real
        w = [diag[self.space.sector(N)].sum() for N in range(self.space.n_max + 1)]
        idx = np.nonzero(np.array(w) > tol)[0]
        return int(idx.max()) if idx.size else 0


def as_density(state) -> MixedState:
    return state.density() if isinstance(state, PureState) else state


def make_space(n_max: int) -> FockSpace:
    """Build the truncated space; rejects negative ``n_max``."""
    return FockSpace(n_max)


@functools.lru_cache(maxsize=64)
def _ladder_matrix(n_max: int, mode: str, kind: str) -> np.ndarray:
    space = FockSpace(n_max)
    m = np.zeros((space.dim, space.dim))
    for j, (na, nb) in enumerate(space.basis):
        occ = na if mode == "a" else nb
        if kind == "annihilate":
            if occ == 0:
                continue
            target = (na - 1, nb) if mode == "a" else (na, nb - 1)
            m[space.index(*target), j] = np.sqrt(occ)
        else:
            if na + nb == n_max:
                continue
            target = (na + 1, nb) if mode == "a" else (na, nb + 1)
            m[space.index(*target), j] = np.sqrt(occ + 1)
    m.setflags(write=False)
    return m


def ladder(space: FockSpace, mode: str, kind: str) -> Operator:
    """Annihilation or creation operator of mode ``'a'`` or ``'b'``."""
    if mode not in ("a", "b"):
        raise ValueError(f"mode must be 'a' or 'b', got {mode!r}")
    if kind not in ("create", "annihilate"):
        raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")
    return Operator(_ladder_matrix(space.n_max, mode, kind), space)


def number_ops(space: FockSpace) -> tuple[Operator, Operator, Operator]:
    """``(n_a, n_b, N)``, all diagonal in the Fock basis."""
    na, nb = space.occupations
    return (
        Operator(np.diag(na), space, hermitian=True),
        Operator(np.diag(nb), space, hermitian=True),
        Operator(np.diag(na + nb), space, hermitian=True),
    )


def schwinger(space: FockSpace) -> tuple[Operator, Operator, Operator]:
    """Pseudo angular momentum ``(Jx, Jy, Jz)`` of the two modes.

    ``a^dag b`` never creates out of the top sector, so all three are exact on
    the whole truncated space and block diagonal over sectors.
    """
    ad = ladder(space, "a", "create").matrix
    a = ladder(space, "a", "annihilate").matrix
    bd = ladder(space, "b", "create").matrix
    b = ladder(space, "b", "annihilate").matrix
    adb = ad @ b
    abd = bd @ a  # equals a b^dag, ordered so the top sector stays exact
    na, nb = space.occupations
    jx = Operator((adb + abd) / 2, space, hermitian=True)
    jy = Operator((adb - abd) / 2j, space, hermitian=True)
    jz = Operator(np.diag((na - nb) / 2), space, hermitian=True)
    return jx, jy, jz


def sector_unitary(space: FockSpace, generator, t: float = 1.0) -> Operator:
    """``exp(i t H)`` for a Hermitian, sector-diagonal ``H``.

    Computed block by block from the eigendecomposition of each sector, so the
    result is unitary to machine precision.
    """
    h = generator.matrix if isinstance(generator, Operator) else as_square_matrix(generator, space.dim)
    scale = max(1.0, float(np.max(np.abs(h), initial=0.0)))
    if not space.is_sector_diagonal(h, tol=TOLERANCES["construction"] * scale):
        raise InvariantError("sector-diagonal", "generator mixes photon-number sectors")
    check_hermitian(h, TOLERANCES["construction"] * scale, what="generator")
    u = np.zeros((space.dim, space.dim), dtype=complex)
    for N in range(space.n_max + 1):
        s = space.sector(N)
        w, v = np.linalg.eigh(h[s, s])
        u[s, s] = (v * np.exp(1j * t * w)) @ v.conj().T
    return Operator(u, space)


def _fix_phase(v: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Rotate the global phase so the first non-negligible amplitude is real positive."""
    big = np.nonzero(np.abs(v) > tol * max(np.max(np.abs(v)), 1e-300))[0]
    if big.size == 0:
        return v
    z = v[big[0]]
    return v * (abs(z) / z)


def sector_angular_basis(space: FockSpace, axis: str, N: int) -> list[PureState]:
    """Eigenvectors of ``J_axis`` in sector ``N``, ordered by ``m = -N/2 .. N/2``.

    Each vector has its first non-negligible amplitude made real positive.
    """
    check_int(N, "N", low=0, high=space.n_max)
    jx, jy, jz = schwinger(space)
    op = {"x": jx, "y": jy, "z": jz}.get(axis)
    if op is None:
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")
    s = space.sector(N)
    w, v = np.linalg.eigh(op.block(N))
    expected = np.arange(N + 1) - N / 2
    if np.max(np.abs(w - expected)) > TOLERANCES["spectral"]:
        raise InvariantError("spectrum", f"sector {N} eigenvalues {w} differ from m = -N/2..N/2")
    out = []
    for k in range(N + 1):
        full = np.zeros(space.dim, dtype=complex)
        full[s] = _fix_phase(v[:, k])
        out.append(PureState.normalized(full, space))
    return out


@functools.lru_cache(maxsize=64)
def _cd_matrix(n_max: int) -> np.ndarray:
    # T maps |n, m> read as c/d occupations onto its a/b expansion, with
    # c^dag = (a^dag + b^dag)/sqrt2, d^dag = (a^dag - b^dag)/sqrt2.
    # As a mode map this is a pi/4 rotation times the b-parity, T = T^dag = T^-1.
    space = FockSpace(n_max)
    x = _ladder_matrix(n_max, "a", "create") @ _ladder_matrix(n_max, "b", "annihilate")
    # exp(theta (a^dag b - a b^dag)) at theta = -pi/4, written as exp(i H)
    exponent = -(np.pi / 4) * (x - x.T)
    rot = sector_unitary(space, -1j * exponent).matrix
    parity = np.diag((-1.0) ** space.occupations[1])
    t = (rot @ parity).real
    t.setflags(write=False)
    return t


def bogoliubov_cd(obj, direction: str = "ab_to_cd"):
    """Re-express a state or operator in the balanced ``c, d`` mode pair.

    ``ab_to_cd`` turns a/b Fock coefficients into c/d Fock coefficients,
    ``cd_to_ab`` goes back.  The underlying unitary squares to the identity,
    so both directions coincide and the map is involutive.
    """
    if direction not in ("ab_to_cd", "cd_to_ab"):
        raise ValueError(f"direction must be 'ab_to_cd' or 'cd_to_ab', got {direction!r}")
    t = _cd_matrix(obj.space.n_max)
    if direction == "ab_to_cd":
        t = t.conj().T
    if isinstance(obj, PureState):
        return PureState.normalized(t @ obj.amplitudes, obj.space)
    if isinstance(obj, MixedState):
        m = t @ obj.matrix @ t.conj().T
        return MixedState((m + m.conj().T) / 2, obj.space)
    if isinstance(obj, Operator):
        m = t @ obj.matrix @ t.conj().T
        if obj.hermitian:
            return Operator((m + m.conj().T) / 2, obj.space, hermitian=True)
        return Operator(m, obj.space)
    raise TypeError(f"cannot transform {type(obj).__name__}")


def embed(obj, space: FockSpace):
    """Copy a state or operator into a larger (or equal) truncated space."""
    src = obj.space
    if space.n_max < src.n_max:
        raise ValueError("target space must not be smaller than the source space")
    idx = np.array([space.index(*pair) for pair in src.basis])
    if isinstance(obj, PureState):
        v = np.zeros(space.dim, dtype=complex)
        v[idx] = obj.amplitudes
        return PureState(v, space)
    m = np.zeros((space.dim, space.dim), dtype=complex)
    m[np.ix_(idx, idx)] = obj.matrix
    if isinstance(obj, MixedState):
        return MixedState(m, space)
    return Operator(m, space, obj.hermitian)


# --- JSON (de)serialization -------------------------------------------------

def _pairs(a: np.ndarray) -> list:
    return np.stack([a.real, a.imag], axis=-1).tolist()


def to_json_obj(obj) -> dict:
    """``{n_max, kind, entries}`` with entries as ``[re, im]`` in basis order."""
    if isinstance(obj, PureState):
        return {"n_max": obj.space.n_max, "kind": "pure", "entries": _pairs(obj.amplitudes)}
    if isinstance(obj, MixedState):
        return {"n_max": obj.space.n_max, "kind": "mixed", "entries": _pairs(obj.matrix)}
    if isinstance(obj, Operator):
        return {
            "n_max": obj.space.n_max,
            "kind": "operator",
            "hermitian": obj.hermitian,
            "entries": _pairs(obj.matrix),
        }
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _complex_array(entries) -> np.ndarray:
    a = np.asarray(entries, dtype=float)
    if a.shape[-1:] != (2,):
        raise ValueError("entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def from_json_obj(doc: dict):
    """Inverse of :func:`to_json_obj`."""
    space = make_space(doc["n_max"])
    kind = doc["kind"]
    arr = _complex_array(doc["entries"])
    if kind == "pure":
        return PureState(arr, space)
    if kind == "mixed":
        return MixedState(arr, space)
    if kind == "operator":
        return Operator(arr, space, bool(doc.get("hermitian", False)))
    raise ValueError(f"unknown kind {kind!r}")
