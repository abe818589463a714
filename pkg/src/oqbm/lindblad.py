"""Deterministic propagation of the probe-averaged dynamical map.

Two complementary representations:

* momentum pairs (p, q), which decouple exactly when the coefficients are
  position-independent -- each pair evolves under a small linear generator
  that is exponentiated exactly;
* the position-diagonal field rho(x), advanced by an explicit
  finite-difference scheme (central diffusion, upwind drift) for
  position-dependent coefficients.

A comparison helper bins trajectory ensembles onto a field grid so the two
routes (stochastic average vs deterministic map) can be checked against each
other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CFLViolationError, DimensionMismatchError
from .linalg import as_complex_matrix, matrix_exp_apply
from .trajectories import _comm_drift, thermal_coupling, thermal_dissipator

__all__ = [
    "lindblad_rhs",
    "momentum_pair_rhs",
    "momentum_pair_propagate",
    "PositionDiagonalField",
    "diagonal_pde_step",
    "field_from_momentum",
    "CompareReport",
    "bin_ensemble",
    "trajectory_average_check",
]


def lindblad_rhs(rho, h, n, nbar: float = 0.0):
    """Internal-space generator -i[H, rho] + (1+nbar) L_N + nbar L_{N^dag}."""
    return _comm_drift(rho, h) + thermal_dissipator(rho, n, nbar)


def momentum_pair_rhs(rho, p: float, q: float, h, n, nbar: float = 0.0):
    """Generator of one momentum pair of the probe-averaged map.

    -i[H,.] - (kappa/2)(p-q)^2 - i(p-q)(N' . + . N'^dag) + dissipator,
    with N' and kappa = 1 + 2 nbar the thermal replacements.  The trace of
    the output vanishes on the diagonal p = q.
    """
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    h = as_complex_matrix(h)
    n = as_complex_matrix(n)
    rho = np.asarray(rho, dtype=complex)
    nprime, kappa = thermal_coupling(n, nbar)
    dk = p - q
    out = (
        _comm_drift(rho, h)
        - 0.5 * kappa * dk**2 * rho
        - 1j * dk * (nprime @ rho + rho @ nprime.conj().T)
        + thermal_dissipator(rho, n, nbar)
    )
    return out


def momentum_pair_propagate(p: float, q: float, rho0, h, n, t: float, nbar: float = 0.0):
    """Exact propagation of one momentum pair by the matrix exponential."""
    rho0 = as_complex_matrix(rho0)
    return matrix_exp_apply(lambda m: momentum_pair_rhs(m, p, q, h, n, nbar), t, rho0)


# ---------------------------------------------------------------------------
# Position-space field and the explicit scheme
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PositionDiagonalField:
    """Internal matrices rho(x_i) on a uniform grid; mass = dx sum Tr rho."""

    grid: np.ndarray
    values: np.ndarray

    MASS_TOL = 1e-8

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def trace_profile(self) -> np.ndarray:
        return np.einsum("xaa->x", self.values).real

    def mass(self) -> float:
        return float(self.dx * self.trace_profile().sum())

    def mean_position(self) -> float:
        prof = self.trace_profile()
        return float(np.sum(self.grid * prof) / prof.sum())

    def variance(self) -> float:
        prof = self.trace_profile()
        mu = np.sum(self.grid * prof) / prof.sum()
        return float(np.sum((self.grid - mu) ** 2 * prof) / prof.sum())

    @classmethod
    def gaussian(cls, grid, sigma: float, rho_internal, center: float = 0.0):
        grid = np.asarray(grid, dtype=float)
        rho = as_complex_matrix(rho_internal)
        prof = np.exp(-0.5 * ((grid - center) / sigma) ** 2)
        prof /= prof.sum() * (grid[1] - grid[0]) * np.trace(rho).real
        return cls(grid, prof[:, None, None] * rho)


def _coefficient_arrays(field: PositionDiagonalField, h_of_x, n_of_x):
    """Evaluate possibly-callable coefficients on the grid."""

    def expand(coeff):
        if callable(coeff):
            return np.stack([as_complex_matrix(coeff(x)) for x in field.grid])
        mat = as_complex_matrix(coeff)
        return np.broadcast_to(mat, (len(field.grid),) + mat.shape)

    return expand(h_of_x), expand(n_of_x)


_VELOCITY_FLOOR = 1e-300


def diagonal_pde_step(
    field: PositionDiagonalField, h_of_x, n_of_x, dt: float, kappa: float = 1.0
) -> PositionDiagonalField:
    """One explicit step of the position-diagonal field equation.

    d rho(x)/dt = -i[H(x), rho] + (kappa/2) rho'' - d/dx (N' rho + rho N'^dag)
                  + thermal dissipator,

    with kappa = 1 + 2 nbar >= 1 fixing the probe occupation.  Diffusion uses
    second-order central differences, the drift a first-order interface
    upwinding by the sign of the local trace velocity, both in flux form with
    no-flux boundaries, so mass is conserved to round-off per step.  Requires
    dt <= 0.4 dx^2 / kappa.
    """
    if kappa < 1.0:
        raise ValueError("kappa must be >= 1 (kappa = 1 + 2 nbar)")
    dx = field.dx
    bound = 0.4 * dx * dx / kappa
    if dt > bound:
        raise CFLViolationError(dt, bound)
    nbar = 0.5 * (kappa - 1.0)
    h_arr, n_arr = _coefficient_arrays(field, h_of_x, n_of_x)
    vals = field.values

    nprime = np.stack([thermal_coupling(nk, nbar)[0] for nk in n_arr])
    local = np.stack(
        [
            _comm_drift(vals[i], h_arr[i]) + thermal_dissipator(vals[i], n_arr[i], nbar)
            for i in range(len(field.grid))
        ]
    )

    # diffusive interface fluxes (kappa/2) d(rho)/dx, zero at the walls
    flux_diff = (0.5 * kappa / dx) * (vals[1:] - vals[:-1])

    # advective matrix flux N' rho + rho N'^dag, upwinded by trace velocity
    adv = np.matmul(nprime, vals) + np.matmul(vals, np.conj(np.swapaxes(nprime, -1, -2)))
    tr_rho = np.einsum("xaa->x", vals).real
    vel = np.einsum("xaa->x", adv).real / np.maximum(tr_rho, _VELOCITY_FLOOR)
    vel_iface = 0.5 * (vel[1:] + vel[:-1])
    take_left = (vel_iface >= 0.0)[:, None, None]
    flux_adv = np.where(take_left, adv[:-1], adv[1:])

    flux = np.zeros((len(field.grid) + 1,) + vals.shape[1:], dtype=complex)
    flux[1:-1] = flux_diff - flux_adv
    new_vals = vals + dt * ((flux[1:] - flux[:-1]) / dx + local)
    return PositionDiagonalField(field.grid, new_vals)


def field_from_momentum(
    rho0,
    h,
    n,
    t: float,
    grid,
    x0: float = 0.0,
    nbar: float = 0.0,
    k_max: float = None,
    n_k: int = 501,
) -> PositionDiagonalField:
    """Exact homogeneous solution at time t for a point mass rho0 at x0.

    Fourier route: each wavenumber K evolves under the (p - q = K) pair
    generator; the position field is recovered by quadrature over
    K in [-k_max, k_max].  Suitable k_max makes the truncation error
    negligible because modes decay like exp(-kappa K^2 t / 2).
    """
    rho0 = as_complex_matrix(rho0)
    grid = np.asarray(grid, dtype=float)
    if k_max is None:
        kappa = 1.0 + 2.0 * nbar
        k_max = max(6.0, np.sqrt(80.0 / (kappa * max(t, 1e-6))))
    ks = np.linspace(-k_max, k_max, n_k)
    dk = ks[1] - ks[0]
    modes = np.stack(
        [
            momentum_pair_propagate(k, 0.0, rho0, h, n, t, nbar) * np.exp(-1j * k * x0)
            for k in ks
        ]
    )
    phases = np.exp(1j * np.outer(grid, ks))
    vals = np.einsum("xk,kab->xab", phases, modes) * (dk / (2.0 * np.pi))
    vals = 0.5 * (vals + np.conj(np.swapaxes(vals, -1, -2)))
    return PositionDiagonalField(grid, vals)


# ---------------------------------------------------------------------------
# Trajectory-average cross validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompareReport:
    """Binned-ensemble vs deterministic-field distances."""

    sup_trace_distance: float
    max_matrix_distance: float
    n_paths: int
    n_bins: int


def bin_ensemble(xs, rhos, grid) -> np.ndarray:
    """Ensemble of (X, rho) samples binned as a density on ``grid``.

    Bin i is centered at grid[i] with width dx; the result has the same
    normalization as a PositionDiagonalField (dx sum Tr = 1 up to samples
    leaving the grid).
    """
    grid = np.asarray(grid, dtype=float)
    xs = np.asarray(xs, dtype=float)
    rhos = np.asarray(rhos, dtype=complex)
    if rhos.shape[0] != xs.shape[0]:
        raise DimensionMismatchError("one internal matrix per position sample required")
    dx = grid[1] - grid[0]
    edges = np.concatenate([grid - 0.5 * dx, [grid[-1] + 0.5 * dx]])
    idx = np.digitize(xs, edges) - 1
    keep = (idx >= 0) & (idx < len(grid))
    out = np.zeros((len(grid),) + rhos.shape[1:], dtype=complex)
    np.add.at(out, idx[keep], rhos[keep])
    return out / (len(xs) * dx)


def trajectory_average_check(xs, rhos, field: PositionDiagonalField) -> CompareReport:
    """Distance between a binned trajectory ensemble and a reference field."""
    binned = bin_ensemble(xs, rhos, field.grid)
    diff = binned - field.values
    sup_trace = float(np.max(np.abs(np.einsum("xaa->x", diff).real)))
    max_entry = float(np.max(np.abs(diff)))
    return CompareReport(sup_trace, max_entry, len(np.asarray(xs)), len(field.grid))
