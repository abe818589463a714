"""Small dense complex linear algebra and state-validity primitives.

Internal (gyroscope) dimensions are tiny -- the interesting cases are 1 and 2,
anything up to ~8 is comfortable -- so everything here is dense and written
for clarity.  All functions are pure; arrays are never mutated in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (
    DimensionMismatchError,
    NegativeEigenvalueError,
    NonFiniteError,
    NonHermitianError,
    TraceDeviationError,
)

__all__ = [
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "BlochVector",
    "PAULI",
    "SIGMA1",
    "SIGMA2",
    "SIGMA3",
    "as_complex_matrix",
    "hermitize",
    "herm_deviation",
    "max_norm",
    "diagnose_density",
    "validate_density",
    "bloch_to_density",
    "density_to_bloch",
    "bloch_convert",
    "superop_matrix",
    "matrix_exp_apply",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances for density-matrix validity.

    Defaults: Hermiticity 1e-10 (max-entry norm), trace 1e-10,
    eigenvalue floor -1e-8.
    """

    herm: float = 1e-10
    trace: float = 1e-10
    psd: float = 1e-8


DEFAULT_TOLERANCES = Tolerances()

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = (SIGMA1, SIGMA2, SIGMA3)


@dataclass(frozen=True)
class BlochVector:
    """Real Bloch-ball coordinates of a qubit state, rho = (1 + Q.sigma)/2."""

    q1: float
    q2: float
    q3: float

    def norm(self) -> float:
        return float(np.sqrt(self.q1**2 + self.q2**2 + self.q3**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.q3])


def as_complex_matrix(mat) -> np.ndarray:
    """Coerce to a square complex ndarray, rejecting non-finite entries."""
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.view(float))):
        raise NonFiniteError("matrix contains NaN or Inf entries")
    return arr


def max_norm(mat) -> float:
    """Largest entry magnitude (the norm used by all residual checks)."""
    return float(np.max(np.abs(mat))) if np.asarray(mat).size else 0.0


def hermitize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


def herm_deviation(mat: np.ndarray) -> float:
    return max_norm(mat - mat.conj().T)


def diagnose_density(mat, tol: Tolerances = DEFAULT_TOLERANCES) -> list[tuple[str, float]]:
    """Check density-matrix invariants and return the violated ones.

    Returns a list of ``(name, measured deviation)`` pairs; empty means valid.
    Eigenvalues are taken from the Hermitized matrix (rho + rho^dag)/2, which
    is robust to round-off asymmetry.
    """
    arr = as_complex_matrix(mat)
    violations = []
    dev = herm_deviation(arr)
    if dev > tol.herm:
        violations.append(("non_hermitian", dev))
    tr_dev = abs(np.trace(arr).real - 1.0) + abs(np.trace(arr).imag)
    if tr_dev > tol.trace:
        violations.append(("trace_deviation", float(tr_dev)))
    eigs = np.linalg.eigvalsh(hermitize(arr))
    if eigs[0] < -tol.psd:
        violations.append(("negative_eigenvalue", float(eigs[0])))
    return violations


def validate_density(mat, tol: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """Return the matrix unchanged if it is a valid density matrix.

    Raises ``NonHermitianError``, ``TraceDeviationError`` or
    ``NegativeEigenvalueError`` with the measured deviation otherwise.
    """
    arr = as_complex_matrix(mat)
    for name, value in diagnose_density(arr, tol):
        if name == "non_hermitian":
            raise NonHermitianError(value, tol.herm)
        if name == "trace_deviation":
            raise TraceDeviationError(value, tol.trace)
        raise NegativeEigenvalueError(value, tol.psd)
    return arr


def bloch_to_density(q: BlochVector | np.ndarray) -> np.ndarray:
    """Map Bloch coordinates to the qubit density matrix (1 + Q.sigma)/2."""
    vec = q.as_array() if isinstance(q, BlochVector) else np.asarray(q, dtype=float)
    if vec.shape != (3,):
        raise DimensionMismatchError(f"Bloch vector must have 3 components, got {vec.shape}")
    rho = 0.5 * (np.eye(2, dtype=complex) + vec[0] * SIGMA1 + vec[1] * SIGMA2 + vec[2] * SIGMA3)
    return rho


def density_to_bloch(rho) -> BlochVector:
    """Extract Bloch coordinates Q_i = Tr(rho sigma_i) of a qubit state."""
    arr = as_complex_matrix(rho)
    if arr.shape != (2, 2):
        raise DimensionMismatchError(f"Bloch conversion needs a 2x2 matrix, got {arr.shape}")
    comps = [float(np.trace(arr @ s).real) for s in PAULI]
    return BlochVector(*comps)


def bloch_convert(x):
    """Convert between the Bloch-ball and density-matrix representations."""
    if isinstance(x, BlochVector):
        return bloch_to_density(x)
    arr = np.asarray(x)
    if arr.shape == (3,) and not np.iscomplexobj(arr):
        return bloch_to_density(arr)
    return density_to_bloch(arr)


def superop_matrix(generator, dim: int) -> np.ndarray:
    """Matrix of a linear map on dim x dim matrices, acting on vectorized input.

    ``generator`` may already be a dim^2 x dim^2 array (returned unchanged) or
    a callable matrix -> matrix, probed column by column on the standard basis.
    """
    if callable(generator):
        mat = np.zeros((dim * dim, dim * dim), dtype=complex)
        basis = np.zeros((dim, dim), dtype=complex)
        for j in range(dim * dim):
            basis.flat[j] = 1.0
            mat[:, j] = np.asarray(generator(basis), dtype=complex).reshape(-1)
            basis.flat[j] = 0.0
        return mat
    arr = np.asarray(generator, dtype=complex)
    if arr.shape != (dim * dim, dim * dim):
        raise DimensionMismatchError(
            f"superoperator matrix must be {dim * dim}x{dim * dim}, got {arr.shape}"
        )
    return arr


def matrix_exp_apply(generator, t: float, v) -> np.ndarray:
    """Apply exp(t * generator) to the matrix ``v``.

    The generator is a linear map on dim x dim matrices; the exponential is
    computed by scaling-and-squaring on its dim^2 x dim^2 matrix
    representation.
    """
    if t < 0:
        raise ValueError("propagation time must be nonnegative")
    arr = as_complex_matrix(v)
    dim = arr.shape[0]
    gen = superop_matrix(generator, dim)
    if not np.all(np.isfinite(gen.view(float))):
        raise NonFiniteError("generator contains NaN or Inf entries")
    out = (expm(t * gen) @ arr.reshape(-1)).reshape(dim, dim)
    if not np.all(np.isfinite(out.view(float))):
        raise NonFiniteError("matrix exponential overflowed")
    return out
