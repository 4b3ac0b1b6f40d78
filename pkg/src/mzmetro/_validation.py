"""Input validation helpers shared by every module.

Modelled on ``sklearn.utils.validation``: small functions that either return
a cleaned-up array or raise.  Violations of a numerical invariant raise
:class:`InvariantError`, bad arguments raise plain :class:`ValueError`.
"""
from __future__ import annotations

import contextlib
import numbers

import numpy as np

# Construction checks (hermiticity, norms) and spectral checks (eigenvalues,
# traces).  Mutated only through ``tolerances``.
TOLERANCES = {"construction": 1e-12, "spectral": 1e-10}


class InvariantError(ValueError):
    """A constructed object violates one of its numerical invariants.

    ``invariant`` names the violated property so callers (the CLI) can
    report it without parsing the message.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


@contextlib.contextmanager
def tolerances(construction: float | None = None, spectral: float | None = None):
    """Temporarily override the default tolerances."""
    saved = dict(TOLERANCES)
    if construction is not None:
        TOLERANCES["construction"] = float(construction)
    if spectral is not None:
        TOLERANCES["spectral"] = float(spectral)
    try:
        yield TOLERANCES
    finally:
        TOLERANCES.update(saved)


def as_square_matrix(matrix, dim: int | None = None) -> np.ndarray:
    m = np.array(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise ValueError(f"matrix dimension {m.shape[0]} does not match space dimension {dim}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def as_vector(vector, dim: int | None = None) -> np.ndarray:
    v = np.array(vector, dtype=complex)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"vector length {v.shape[0]} does not match space dimension {dim}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def check_hermitian(m: np.ndarray, tol: float | None = None, what: str = "operator") -> None:
    tol = TOLERANCES["construction"] if tol is None else tol
    defect = hermiticity_defect(m)
    if defect > tol:
        raise InvariantError("hermiticity", f"{what} deviates from its adjoint by {defect:.3g} > {tol:.3g}")


def check_unit_norm(v: np.ndarray, tol: float | None = None) -> None:
    tol = TOLERANCES["construction"] if tol is None else tol
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise InvariantError("normalization", f"state norm is {norm:.15g}, expected 1 within {tol:.3g}")


def check_density(m: np.ndarray, herm_tol: float | None = None, spec_tol: float | None = None) -> None:
    """Hermitian, positive semidefinite and unit trace."""
    spec_tol = TOLERANCES["spectral"] if spec_tol is None else spec_tol
    check_hermitian(m, herm_tol, what="density matrix")
    tr = np.trace(m).real
    if abs(tr - 1.0) > spec_tol:
        raise InvariantError("unit-trace", f"trace is {tr:.15g}")
    lo = float(np.linalg.eigvalsh(m).min())
    if lo < -spec_tol:
        raise InvariantError("positivity", f"smallest eigenvalue {lo:.3g} < -{spec_tol:.3g}")


def check_int(value, name: str, low: int | None = None, high: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if low is not None and value < low:
        raise ValueError(f"{name} must be >= {low}, got {value}")
    if high is not None and value > high:
        raise ValueError(f"{name} must be <= {high}, got {value}")
    return value


def check_finite(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value):
        raise ValueError(f"{name} must be finite")
    return value
