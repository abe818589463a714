"""Fixed-step integrators for the continuum quantum-trajectory equations.

The internal state rho (dim-M density matrix) and the walker position X are
driven by one shared Brownian increment per step:

    d rho = (-i[H, rho] + L_N(rho)) dt + D_N(rho) dB
    d X   = U_N(rho) dt + dB

with L_N the Lindblad dissipator of N, U_N(rho) = Tr(N rho + rho N^dag) the
state-dependent drift, and D_N(rho) = N rho + rho N^dag - rho U_N(rho).
Variants: position-dependent coefficients, several spatial dimensions with a
constant metric, thermally occupied probes, and the tilted measurement
record, whose natural state is the momentum kernel rho(p, q).

All steps use Euler-Maruyama with a fixed dt followed by a state projection
(hermitize, clip eigenvalues at zero, renormalize the trace); the continuum
equations preserve positivity only exactly, not per finite step.  The core
update rules accept arbitrary leading batch axes so ensembles can run
vectorized; the public single-state functions are thin wrappers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    DimensionMismatchError,
    NonSPDMetricError,
    ProjectionOverflowError,
    QuadratureDriftError,
)
from .linalg import as_complex_matrix

__all__ = [
    "lindblad_terms",
    "thermal_coupling",
    "thermal_dissipator",
    "project_density",
    "SimpleTrajState",
    "simple_step",
    "thermal_step",
    "inhomogeneous_step",
    "DdimTrajState",
    "sample_metric_noise",
    "ddim_step",
    "MomentumKernelCont",
    "tilted_momentum_terms",
    "tilted_momentum_step",
    "SimpleEnsemble",
    "simulate_simple_ensemble",
    "TiltedEnsemble",
    "simulate_tilted_ensemble",
]

PROJECTION_TRACE_GUARD = 0.1


# ---------------------------------------------------------------------------
# Algebraic building blocks (batched over arbitrary leading axes)
# ---------------------------------------------------------------------------


def _lind_pair(rho, a, b):
    """A rho B^dag - (B^dag A rho + rho B^dag A) / 2."""
    bda = b.conj().T @ a
    return a @ rho @ b.conj().T - 0.5 * (bda @ rho + rho @ bda)


def _comm_drift(rho, h):
    """-i [H, rho]."""
    return -1j * (h @ rho - rho @ h)


def _u_drift(rho, n):
    """Tr(N rho + rho N^dag), always real for Hermitian rho."""
    return 2.0 * np.einsum("ab,...ba->...", n, rho).real


def _diffusion(rho, n, u):
    """N rho + rho N^dag - rho U."""
    u = np.asarray(u)
    return n @ rho + rho @ n.conj().T - rho * u[..., None, None]


def lindblad_terms(rho, n):
    """Dissipator, diffusion coefficient and drift (L_N, D_N, U_N) at rho.

    Tr L_N(rho) = Tr D_N(rho) = 0 identically; U_N is real.
    """
    rho = np.asarray(rho, dtype=complex)
    n = as_complex_matrix(n)
    u = _u_drift(rho, n)
    return _lind_pair(rho, n, n), _diffusion(rho, n, u), u


def thermal_coupling(n, nbar: float):
    """Effective coupling N' = (1 + nbar) N - nbar N^dag and kappa = 1 + 2 nbar."""
    n = as_complex_matrix(n)
    if nbar == 0.0:
        return n, 1.0
    return (1.0 + nbar) * n - nbar * n.conj().T, 1.0 + 2.0 * nbar


def thermal_dissipator(rho, n, nbar: float = 0.0):
    """(1 + nbar) L_N(rho) + nbar L_{N^dag}(rho); plain L_N at nbar = 0."""
    if nbar == 0.0:
        return _lind_pair(rho, n, n)
    ndag = n.conj().T
    return (1.0 + nbar) * _lind_pair(rho, n, n) + nbar * _lind_pair(rho, ndag, ndag)


# ---------------------------------------------------------------------------
# State projection
# ---------------------------------------------------------------------------


def _min_eigenvalues(rho):
    """Smallest eigenvalue per state; closed form for 2x2, eigvalsh otherwise."""
    d = rho.shape[-1]
    if d == 1:
        return rho[..., 0, 0].real
    if d == 2:
        half_tr = 0.5 * (rho[..., 0, 0].real + rho[..., 1, 1].real)
        det = (rho[..., 0, 0] * rho[..., 1, 1] - rho[..., 0, 1] * rho[..., 1, 0]).real
        gap = np.sqrt(np.maximum(half_tr**2 - det, 0.0))
        return half_tr - gap
    return np.linalg.eigvalsh(rho)[..., 0]


def project_density(rho, trace_guard: float = PROJECTION_TRACE_GUARD):
    """Hermitize, clip negative eigenvalues at zero, renormalize the trace.

    Raises ``ProjectionOverflowError`` when the pre-projection trace has
    drifted by more than ``trace_guard`` (the step size is too coarse).
    Accepts any leading batch shape.
    """
    rho = np.asarray(rho, dtype=complex)
    trace = np.einsum("...aa->...", rho).real
    if np.any(np.abs(trace - 1.0) > trace_guard):
        worst = float(np.max(np.abs(trace - 1.0)))
        raise ProjectionOverflowError(
            f"pre-projection trace deviates by {worst:.3e} (> {trace_guard}); reduce dt"
        )
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    min_eig = _min_eigenvalues(rho)
    bad = min_eig < 0.0
    if np.any(bad):
        flat = rho.reshape(-1, rho.shape[-2], rho.shape[-1])
        idx = np.nonzero(bad.reshape(-1))[0]
        evals, evecs = np.linalg.eigh(flat[idx])
        evals = np.maximum(evals, 0.0)
        flat[idx] = evecs @ (evals[..., None] * np.conj(np.swapaxes(evecs, -1, -2)))
        rho = flat.reshape(rho.shape)
    trace = np.einsum("...aa->...", rho).real
    return rho / trace[..., None, None]


# ---------------------------------------------------------------------------
# Position-diagonal trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimpleTrajState:
    """Internal density matrix, walker position and elapsed time."""

    rho: np.ndarray
    x: float
    t: float = 0.0


def _thermal_update(rho, x, h, n, nbar, dt, db):
    """Shared Euler-Maruyama core; ``rho`` may carry leading batch axes."""
    nprime, kappa = thermal_coupling(n, nbar)
    lind = thermal_dissipator(rho, n, nbar)
    u = _u_drift(rho, nprime)
    diff = _diffusion(rho, nprime, u) / kappa
    drift = _comm_drift(rho, h) + lind
    scaled_db = np.sqrt(kappa) * np.asarray(db)
    rho_new = rho + dt * drift + diff * scaled_db[..., None, None]
    x_new = x + u * dt + scaled_db
    return project_density(rho_new), x_new


def thermal_step(
    state: SimpleTrajState, h, n, nbar: float, dt: float, db: float
) -> SimpleTrajState:
    """One step with thermally occupied probes.

    The coupling is replaced by N' = (1 + nbar) N - nbar N^dag, the
    dissipator by (1 + nbar) L_N + nbar L_{N^dag}, and the shared noise is
    scaled by sqrt(kappa) with kappa = 1 + 2 nbar.  ``nbar = 0`` reproduces
    ``simple_step`` bit for bit.
    """
    if nbar < 0:
        raise ValueError("nbar must be nonnegative")
    if dt <= 0:
        raise ValueError("dt must be positive")
    rho, x = _thermal_update(state.rho, state.x, as_complex_matrix(h), as_complex_matrix(n), nbar, dt, db)
    return SimpleTrajState(rho, float(x), state.t + dt)


def simple_step(state: SimpleTrajState, h, n, dt: float, db: float) -> SimpleTrajState:
    """One zero-temperature step; the same dB drives both rho and X."""
    return thermal_step(state, h, n, 0.0, dt, db)


def inhomogeneous_step(state: SimpleTrajState, h_of_x, n_of_x, dt: float, db: float) -> SimpleTrajState:
    """One step with position-dependent coefficients.

    Coefficients are frozen at the pre-step position (Ito convention); with
    constant callables this is bitwise identical to ``simple_step``.
    """
    h = as_complex_matrix(h_of_x(state.x))
    n = as_complex_matrix(n_of_x(state.x))
    rho, x = _thermal_update(state.rho, state.x, h, n, 0.0, dt, db)
    return SimpleTrajState(rho, float(x), state.t + dt)


# ---------------------------------------------------------------------------
# Several spatial dimensions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DdimTrajState:
    """Internal state with a d-dimensional walker position."""

    rho: np.ndarray
    x: np.ndarray
    t: float = 0.0


def _check_metric(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise NonSPDMetricError(f"metric must be square, got shape {g.shape}")
    if np.max(np.abs(g - g.T)) > 1e-12:
        raise NonSPDMetricError("metric is not symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise NonSPDMetricError("metric is not positive definite") from exc
    return g


def sample_metric_noise(g, dt: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Gaussian increments with exact step covariance G dt (via Cholesky)."""
    g = _check_metric(g)
    chol = np.linalg.cholesky(g)
    shape = (g.shape[0],) if size is None else (size, g.shape[0])
    z = rng.standard_normal(shape)
    return np.sqrt(dt) * (z @ chol.T)


def ddim_step(state: DdimTrajState, h, n_ops, g, dt: float, db) -> DdimTrajState:
    """One step in d spatial dimensions with noise metric G.

    Couplings ``n_ops[mu]`` drive direction mu; the dissipator contracts
    pairs with the inverse metric and the diffusion matrices solve
    G^{mu nu} D_nu = N^mu rho + rho N^mu^dag - rho U^mu.  With d = 1 and
    G = [[1]] this is bitwise identical to ``simple_step``.
    """
    h = as_complex_matrix(h)
    n_ops = [as_complex_matrix(nk) for nk in n_ops]
    g = _check_metric(g)
    dv = g.shape[0]
    if len(n_ops) != dv:
        raise DimensionMismatchError("one coupling matrix per spatial direction required")
    db = np.asarray(db, dtype=float)
    if db.shape != (dv,):
        raise DimensionMismatchError(f"noise increment must have shape ({dv},)")
    g_lower = np.linalg.inv(g)

    rho = state.rho
    lind = np.zeros_like(rho)
    for mu in range(dv):
        for nu in range(dv):
            if g_lower[nu, mu] != 0.0:
                lind = lind + g_lower[nu, mu] * _lind_pair(rho, n_ops[mu], n_ops[nu])
    u = np.array([_u_drift(rho, nk) for nk in n_ops])
    a = [_diffusion(rho, n_ops[mu], u[mu]) for mu in range(dv)]
    noise = np.zeros_like(rho)
    for nu in range(dv):
        d_nu = np.zeros_like(rho)
        for mu in range(dv):
            if g_lower[nu, mu] != 0.0:
                d_nu = d_nu + g_lower[nu, mu] * a[mu]
        noise = noise + d_nu * db[nu]
    drift = _comm_drift(rho, h) + lind
    rho_new = project_density(rho + dt * drift + noise)
    x_new = state.x + u * dt + db
    return DdimTrajState(rho_new, x_new, state.t + dt)


# ---------------------------------------------------------------------------
# Tilted measurement record: momentum-kernel trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentumKernelCont:
    """Momentum-representation state rho(p, q) plus the measurement record Y.

    ``kernel[i, j]`` is the internal matrix at momenta (grid[i], grid[j]);
    the diagonal integrates to unit trace with the stored quadrature
    weights.  ``band_width`` optionally confines the evolution to
    |p - q| <= band_width: far off-diagonal coherences decay at rate
    (p - q)^2 / 2 and can be dropped.  Full-kernel mode (None) is the
    default and the reference for correctness tests.
    """

    grid: np.ndarray
    weights: np.ndarray
    kernel: np.ndarray
    y: float = 0.0
    band_width: float | None = None

    NORM_TOL = 1e-6

    @classmethod
    def pure(cls, grid, weights, momentum_amplitudes, rho_internal, band_width=None):
        f = np.asarray(momentum_amplitudes, dtype=complex)
        rho = as_complex_matrix(rho_internal)
        w = np.asarray(weights, dtype=float)
        norm = float(np.sum(w * np.abs(f) ** 2) * np.trace(rho).real)
        kern = np.einsum("p,q,ab->pqab", f, f.conj(), rho) / norm
        return cls(np.asarray(grid, dtype=float), w, kern, 0.0, band_width)

    def diagonal_density(self) -> np.ndarray:
        return np.einsum("ppaa->p", self.kernel).real

    def total_trace(self) -> float:
        return float(np.sum(self.weights * self.diagonal_density()))

    def mean_momentum(self) -> float:
        return float(np.sum(self.weights * self.grid * self.diagonal_density()))


def _tilted_terms(kernel, grid, weights, h, n, v):
    """Drift, diffusion and record drift for kernels with leading batch axes.

    ``kernel``: (..., G, G, d, d).  Returns (drift, diffusion, u) where u has
    the batch shape.
    """
    p = grid[:, None]
    q = grid[None, :]
    decay = -0.5 * (p - q) ** 2
    vbar = np.conj(v)
    diag = np.einsum("...ppab->...pab", kernel)
    tr_n_diag = np.einsum("ab,...pba->...p", n, diag)
    n_diag = np.einsum("...paa->...p", diag).real
    u = np.sum(
        weights
        * (vbar * tr_n_diag + v * np.conj(tr_n_diag) + 1j * grid * (v - vbar) * n_diag).real,
        axis=-1,
    )

    n_k = np.matmul(n, kernel)
    k_nd = np.matmul(kernel, n.conj().T)
    drift = (
        decay[..., None, None] * kernel
        + (-1j * (p - q))[..., None, None] * (n_k + k_nd)
        + _comm_drift(kernel, h)
        + _lind_pair(kernel, n, n)
    )
    diffusion = (
        vbar * n_k
        + v * k_nd
        + (1j * (v * q - vbar * p))[..., None, None] * kernel
        - kernel * np.asarray(u)[..., None, None, None, None]
    )
    return drift, diffusion, u


def tilted_momentum_terms(state: MomentumKernelCont, h, n, v):
    """Public drift/diffusion/record-drift evaluation at the current state."""
    h = as_complex_matrix(h)
    n = as_complex_matrix(n)
    return _tilted_terms(state.kernel, state.grid, state.weights, h, n, complex(v))


def _apply_band(kernel, grid, band_width):
    if band_width is None:
        return kernel
    mask = np.abs(grid[:, None] - grid[None, :]) <= band_width
    return kernel * mask[..., None, None]


def tilted_momentum_step(
    state: MomentumKernelCont, h, n, v, dt: float, db: float
) -> MomentumKernelCont:
    """One Euler-Maruyama step of the momentum-kernel trajectory.

    Every grid pair is updated with the shared scalar ``db``; the record
    accumulates dY = U dt + dB; the kernel is renormalized by its quadrature
    trace, with drift beyond 1e-6 reported as a too-coarse grid.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    h = as_complex_matrix(h)
    n = as_complex_matrix(n)
    v = complex(v)
    drift, diffusion, u = _tilted_terms(state.kernel, state.grid, state.weights, h, n, v)
    kern = state.kernel + dt * drift + db * diffusion
    kern = _apply_band(kern, state.grid, state.band_width)
    total = float(np.sum(state.weights * np.einsum("ppaa->p", kern).real))
    if abs(total - 1.0) > MomentumKernelCont.NORM_TOL:
        raise QuadratureDriftError(
            f"kernel normalization drifted to {total:.8f}; grid too coarse or dt too large"
        )
    kern = kern / total
    return replace(state, kernel=kern, y=state.y + float(u) * dt + db)


# ---------------------------------------------------------------------------
# Vectorized ensembles (path i consumes stream stream_offset + i)
# ---------------------------------------------------------------------------

_NOISE_BLOCK = 1024

_PAULI_STACK = np.array(
    [
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, -1.0j], [1.0j, 0.0]],
        [[1.0, 0.0], [0.0, -1.0]],
    ],
    dtype=complex,
)


def _record_steps(record_times, dt, n_steps):
    if record_times is None:
        return np.array([n_steps], dtype=int), np.array([n_steps * dt])
    steps = np.unique(np.clip(np.round(np.asarray(record_times) / dt).astype(int), 1, n_steps))
    return steps, steps * dt


@dataclass
class SimpleEnsemble:
    """Moment sums of a position-diagonal trajectory ensemble.

    Sums (not means) are stored so that chunks merge exactly; divide by
    ``n_paths`` for averages.
    """

    times: np.ndarray
    n_paths: int
    sum_x: np.ndarray
    sum_x2: np.ndarray
    sum_bloch: np.ndarray | None
    sum_sqrt_det: np.ndarray | None
    final_x: np.ndarray
    final_rho: np.ndarray

    def merge(self, other: "SimpleEnsemble") -> "SimpleEnsemble":
        if not np.array_equal(self.times, other.times):
            raise ValueError("cannot merge ensembles with different record times")
        return SimpleEnsemble(
            self.times,
            self.n_paths + other.n_paths,
            self.sum_x + other.sum_x,
            self.sum_x2 + other.sum_x2,
            None if self.sum_bloch is None else self.sum_bloch + other.sum_bloch,
            None if self.sum_sqrt_det is None else self.sum_sqrt_det + other.sum_sqrt_det,
            np.concatenate([self.final_x, other.final_x]),
            np.concatenate([self.final_rho, other.final_rho]),
        )

    def mean_x(self):
        return self.sum_x / self.n_paths

    def var_x(self):
        return self.sum_x2 / self.n_paths - (self.sum_x / self.n_paths) ** 2

    def mean_bloch(self):
        return None if self.sum_bloch is None else self.sum_bloch / self.n_paths

    def mean_sqrt_det(self):
        return None if self.sum_sqrt_det is None else self.sum_sqrt_det / self.n_paths


def _sqrt_det_2x2(rho):
    det = (rho[..., 0, 0] * rho[..., 1, 1] - rho[..., 0, 1] * rho[..., 1, 0]).real
    return np.sqrt(np.maximum(det, 0.0))


def simulate_simple_ensemble(
    h,
    n,
    rho0,
    x0: float,
    t_max: float,
    dt: float,
    n_paths: int,
    master_seed: int,
    nbar: float = 0.0,
    stream_offset: int = 0,
    record_times=None,
) -> SimpleEnsemble:
    """Euler-Maruyama ensemble of position-diagonal trajectories.

    Returns moment sums at the requested record times plus the final
    per-path states.  Results are bit-reproducible for a given
    (master_seed, stream_offset) regardless of batching.
    """
    from .rngstreams import stream_generator

    h = as_complex_matrix(h)
    n = as_complex_matrix(n)
    rho0 = as_complex_matrix(rho0)
    dim = rho0.shape[0]
    n_steps = int(round(t_max / dt))
    rec_steps, rec_times = _record_steps(record_times, dt, n_steps)
    n_rec = len(rec_steps)

    rho = np.broadcast_to(rho0, (n_paths, dim, dim)).copy()
    x = np.full(n_paths, float(x0))
    gens = [stream_generator(master_seed, stream_offset + i) for i in range(n_paths)]

    is_qubit = dim == 2
    sum_x = np.zeros(n_rec)
    sum_x2 = np.zeros(n_rec)
    sum_bloch = np.zeros((n_rec, 3)) if is_qubit else None
    sum_sqrt_det = np.zeros(n_rec) if is_qubit else None

    root_dt = np.sqrt(dt)
    rec_idx = 0
    step = 0
    while step < n_steps:
        block = min(_NOISE_BLOCK, n_steps - step)
        z = np.stack([g.standard_normal(block) for g in gens], axis=0)
        for j in range(block):
            rho, x = _thermal_update(rho, x, h, n, nbar, dt, root_dt * z[:, j])
            done = step + j + 1
            while rec_idx < n_rec and rec_steps[rec_idx] == done:
                sum_x[rec_idx] = x.sum()
                sum_x2[rec_idx] = (x * x).sum()
                if is_qubit:
                    sum_bloch[rec_idx] = np.einsum("kab,nba->k", _PAULI_STACK, rho).real
                    sum_sqrt_det[rec_idx] = _sqrt_det_2x2(rho).sum()
                rec_idx += 1
        step += block

    return SimpleEnsemble(
        rec_times, n_paths, sum_x, sum_x2, sum_bloch, sum_sqrt_det, x, rho
    )


@dataclass
class TiltedEnsemble:
    """Kernel sums of a momentum-kernel trajectory ensemble."""

    times: np.ndarray
    n_paths: int
    grid: np.ndarray
    weights: np.ndarray
    sum_kernels: np.ndarray  # (n_rec, G, G, d, d)
    final_diag: np.ndarray  # (n_paths, G) diagonal trace densities
    final_y: np.ndarray

    def merge(self, other: "TiltedEnsemble") -> "TiltedEnsemble":
        if not np.array_equal(self.times, other.times):
            raise ValueError("cannot merge ensembles with different record times")
        return TiltedEnsemble(
            self.times,
            self.n_paths + other.n_paths,
            self.grid,
            self.weights,
            self.sum_kernels + other.sum_kernels,
            np.concatenate([self.final_diag, other.final_diag]),
            np.concatenate([self.final_y, other.final_y]),
        )

    def mean_kernels(self):
        return self.sum_kernels / self.n_paths

    def mean_diagonal_density(self):
        return np.einsum("tppaa->tp", self.sum_kernels).real / self.n_paths

    def peak_locations(self):
        """Grid index of the final diagonal-density peak, per path."""
        return np.argmax(self.final_diag, axis=1)


def simulate_tilted_ensemble(
    h,
    n,
    v,
    grid,
    weights,
    momentum_amplitudes,
    rho0,
    t_max: float,
    dt: float,
    n_paths: int,
    master_seed: int,
    stream_offset: int = 0,
    record_times=None,
    chunk: int = 64,
) -> TiltedEnsemble:
    """Ensemble of momentum-kernel trajectories from one pure product state.

    Paths run in vectorized chunks; each path renormalizes by its quadrature
    trace every step and contributes to kernel sums at the record times.
    """
    from .rngstreams import stream_generator

    h = as_complex_matrix(h)
    n = as_complex_matrix(n)
    v = complex(v)
    grid = np.asarray(grid, dtype=float)
    weights = np.asarray(weights, dtype=float)
    f0 = np.asarray(momentum_amplitudes, dtype=complex)
    rho0 = as_complex_matrix(rho0)
    dim = rho0.shape[0]
    g_pts = len(grid)
    norm = float(np.sum(weights * np.abs(f0) ** 2) * np.trace(rho0).real)
    kern0 = np.einsum("p,q,ab->pqab", f0, f0.conj(), rho0) / norm

    n_steps = int(round(t_max / dt))
    rec_steps, rec_times = _record_steps(record_times, dt, n_steps)
    n_rec = len(rec_steps)
    sum_kernels = np.zeros((n_rec, g_pts, g_pts, dim, dim), dtype=complex)
    final_diag = np.empty((n_paths, g_pts))
    final_y = np.empty(n_paths)

    root_dt = np.sqrt(dt)
    for start in range(0, n_paths, chunk):
        size = min(chunk, n_paths - start)
        kern = np.broadcast_to(kern0, (size, g_pts, g_pts, dim, dim)).copy()
        y = np.zeros(size)
        gens = [stream_generator(master_seed, stream_offset + start + i) for i in range(size)]
        rec_idx = 0
        step = 0
        while step < n_steps:
            block = min(_NOISE_BLOCK, n_steps - step)
            z = np.stack([g.standard_normal(block) for g in gens], axis=0)
            for j in range(block):
                drift, diffusion, u = _tilted_terms(kern, grid, weights, h, n, v)
                db = root_dt * z[:, j]
                kern = kern + dt * drift + db[:, None, None, None, None] * diffusion
                total = np.sum(
                    weights * np.einsum("cppaa->cp", kern).real, axis=1
                )
                if np.any(np.abs(total - 1.0) > MomentumKernelCont.NORM_TOL):
                    worst = float(np.max(np.abs(total - 1.0)))
                    raise QuadratureDriftError(
                        f"kernel normalization drifted by {worst:.3e} in ensemble"
                    )
                kern = kern / total[:, None, None, None, None]
                y = y + u * dt + db
                done = step + j + 1
                while rec_idx < n_rec and rec_steps[rec_idx] == done:
                    sum_kernels[rec_idx] += kern.sum(axis=0)
                    rec_idx += 1
            step += block
        final_diag[start : start + size] = np.einsum("cppaa->cp", kern).real
        final_y[start : start + size] = y

    return TiltedEnsemble(
        rec_times, n_paths, grid, weights, sum_kernels, final_diag, final_y
    )
