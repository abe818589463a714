"""Continuum moduli -> discrete transition pairs, and the tilt-direction map.

The discrete walk converges to a continuum process when the transition
matrices admit the square-root-of-time expansion

    B_pm = (1/sqrt(2)) [ 1 +- sqrt(eps) N - eps (iH +- M + N^dag N / 2) + ... ]

with H Hermitian, arbitrary N, M and time step eps = delta^2.  ``truncated``
mode returns exactly that polynomial (completeness defect O(eps^{3/2}), or
O(eps^2) when M = 0); ``unitarized`` mode right-multiplies by the inverse
square root of the completeness sum so the defect is at working precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discrete import TiltAngles, TransitionPair
from .errors import (
    DegenerateDirectionError,
    NonHermitianError,
    SingularNormalizationError,
)
from .linalg import as_complex_matrix, herm_deviation, hermitize

__all__ = ["ModelParams", "build_transition_pair", "tilt_v"]

_HERM_TOL = 1e-12
_DELTA_TOL = 1e-15


@dataclass(frozen=True)
class ModelParams:
    """Continuum moduli plus discretization parameters.

    H is the internal Hamiltonian (Hermitian, units 1/time), N the
    measurement coupling (units 1/sqrt(time)), M a discrete-only correction
    that drops out of the continuum limit (kept to test that independence),
    ``nbar`` the probe thermal occupation and ``epsilon`` the time step.
    The lattice spacing is tied to it by delta = sqrt(epsilon).
    """

    h: np.ndarray
    n: np.ndarray
    m: np.ndarray | None = None
    nbar: float = 0.0
    epsilon: float = 1e-4
    delta: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        h = as_complex_matrix(self.h)
        n = as_complex_matrix(self.n)
        m = np.zeros_like(h) if self.m is None else as_complex_matrix(self.m)
        dev = herm_deviation(h)
        if dev > _HERM_TOL:
            raise NonHermitianError(dev, _HERM_TOL)
        if h.shape != n.shape or h.shape != m.shape:
            from .errors import DimensionMismatchError

            raise DimensionMismatchError("H, N, M must share the internal dimension")
        if self.nbar < 0:
            raise ValueError("thermal occupation nbar must be nonnegative")
        if self.epsilon <= 0:
            raise ValueError("time step epsilon must be positive")
        delta = self.delta
        if delta is None:
            delta = float(np.sqrt(self.epsilon))
        elif abs(delta**2 - self.epsilon) > _DELTA_TOL:
            raise ValueError(
                f"delta^2 = {delta**2:.3e} must equal epsilon = {self.epsilon:.3e}"
            )
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "delta", float(delta))

    @property
    def dim(self) -> int:
        return self.h.shape[0]


def build_transition_pair(params: ModelParams, mode: str = "unitarized") -> TransitionPair:
    """Transition pair realizing the continuum moduli at time step epsilon.

    ``truncated`` returns the bare expansion and records its completeness
    defect; ``unitarized`` right-multiplies both matrices by S^{-1/2} with
    S = B+^dag B+ + B-^dag B-, computed through the Hermitian
    eigen-decomposition of S (Hermitian positive definite near 1).
    """
    if mode not in ("truncated", "unitarized"):
        raise ValueError(f"unknown mode {mode!r}")
    eps = params.epsilon
    root = np.sqrt(eps)
    eye = np.eye(params.dim, dtype=complex)
    quad = 1j * params.h + 0.5 * params.n.conj().T @ params.n
    bp = (eye + root * params.n - eps * (quad + params.m)) / np.sqrt(2.0)
    bm = (eye - root * params.n - eps * (quad - params.m)) / np.sqrt(2.0)
    pair = TransitionPair.from_matrices(bp, bm)
    if mode == "truncated":
        return pair

    s = hermitize(bp.conj().T @ bp + bm.conj().T @ bm)
    evals, evecs = np.linalg.eigh(s)
    if evals[0] <= 1e3 * np.finfo(float).eps:
        raise SingularNormalizationError(
            f"completeness sum has eigenvalue {evals[0]:.3e}; epsilon too large"
        )
    s_inv_half = (evecs * (evals**-0.5)) @ evecs.conj().T
    return TransitionPair.from_matrices(bp @ s_inv_half, bm @ s_inv_half)


def tilt_v(u: TiltAngles) -> complex:
    """Unimodular tilt parameter of a probe measurement direction.

    v = (cos(theta) + i sin(theta) sin(phi)) / sqrt(1 - sin(theta)^2 cos(phi)^2);
    requires the denominator to stay away from zero, i.e. both zeroth-order
    outcome probabilities (1 +- sin(theta) cos(phi)) / 2 nonvanishing.
    """
    degeneracy = u.degeneracy()
    if degeneracy >= 1.0 - 1e-12:
        raise DegenerateDirectionError(
            f"sin(theta)^2 cos(phi)^2 = {degeneracy:.15f} leaves one outcome impossible"
        )
    num = np.cos(u.theta) + 1j * np.sin(u.theta) * np.sin(u.phi)
    return complex(num / np.sqrt(1.0 - degeneracy))
