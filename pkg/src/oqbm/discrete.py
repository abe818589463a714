"""Exact discrete-time engines.

Three families live here:

* quantum-parallelism enumeration of all length-n walk amplitudes,
* tilted random walks on the N-site circle, whose momentum distribution
  collapses under repeated tilted probe measurements, and
* open quantum random walks: the probe-averaged map and the measured
  trajectories (simple, and tilted in momentum representation).

Step functions are pure given an explicit RNG; independent walks can run on
independent workers with per-walk streams.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    BudgetExceededError,
    DegenerateDirectionError,
    QuadratureDriftError,
    ZeroProbabilityBranchError,
)
from .linalg import as_complex_matrix, max_norm

__all__ = [
    "TiltAngles",
    "probe_overlaps",
    "TransitionPair",
    "PathAmplitude",
    "enumerate_parallel_state",
    "TiltedWalkState",
    "tilted_walk_probs",
    "tilted_walk_branches",
    "tilted_walk_step",
    "position_wavefunction",
    "gaussian_mixture_momentum",
    "run_collapse_ensemble",
    "PositionBlock",
    "qrw_map_step",
    "OqrwDiagonalState",
    "simple_trajectory_branches",
    "simple_trajectory_step",
    "uniform_momentum_grid",
    "MomentumKernelDiscrete",
    "tilted_step_operators",
    "tilted_trajectory_branches",
    "tilted_trajectory_step",
]

_PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class TiltAngles:
    """Direction of the measured probe spin, angles (theta, phi) on the sphere.

    The degenerate family sin(theta)^2 cos(phi)^2 = 1 makes one outcome
    probability vanish and is rejected by the operations that need it.
    """

    theta: float
    phi: float

    def degeneracy(self) -> float:
        """sin(theta)^2 cos(phi)^2; equal to 1 on the degenerate family."""
        return float((np.sin(self.theta) * np.cos(self.phi)) ** 2)


def probe_overlaps(u: TiltAngles) -> np.ndarray:
    """Overlap matrix O[s, b] = <s^u | b> of tilted onto computational states.

    Rows are the measurement outcomes (+, -), columns the probe basis (+, -).
    The matrix is unitary.
    """
    c, s = np.cos(u.theta / 2.0), np.sin(u.theta / 2.0)
    ep = np.exp(1j * u.phi / 2.0)
    return np.array(
        [
            [np.conj(ep) * c, ep * s],
            [-np.conj(ep) * s, ep * c],
        ],
        dtype=complex,
    )


@dataclass(frozen=True)
class TransitionPair:
    """Left/right transition matrices with their recorded completeness defect.

    ``unitarity_residual`` is ||B+^dag B+ + B-^dag B- - 1||_max; "exact" pairs
    have residual <= 1e-12 and are required wherever probabilities must sum
    to one at working precision.
    """

    bplus: np.ndarray
    bminus: np.ndarray
    unitarity_residual: float

    EXACT_TOL = 1e-12

    @classmethod
    def from_matrices(cls, bplus, bminus) -> "TransitionPair":
        bp = as_complex_matrix(bplus)
        bm = as_complex_matrix(bminus)
        if bp.shape != bm.shape:
            from .errors import DimensionMismatchError

            raise DimensionMismatchError("transition matrices must share one dimension")
        res = max_norm(bp.conj().T @ bp + bm.conj().T @ bm - np.eye(bp.shape[0]))
        return cls(bp, bm, res)

    @property
    def dim(self) -> int:
        return self.bplus.shape[0]

    @property
    def is_exact(self) -> bool:
        return self.unitarity_residual <= self.EXACT_TOL


@dataclass(frozen=True)
class PathAmplitude:
    """One walk history: its outcome string, amplitude matrix and endpoint."""

    outcomes: tuple[int, ...]
    amplitude: np.ndarray
    endpoint: int


def enumerate_parallel_state(
    pair: TransitionPair, x0: int, n: int, max_steps: int = 20
) -> list[PathAmplitude]:
    """All 2^n walk amplitudes after n steps from x0.

    Path ``(e_1, ..., e_n)`` carries the ordered product B_{e_n} ... B_{e_1}
    and ends at ``x0 + sum(e_j)``.  For any initial internal state the path
    weights Tr(B rho B^dag) sum to one when the pair is exact.
    """
    if n < 0:
        raise ValueError("step count must be nonnegative")
    if n > max_steps:
        raise BudgetExceededError(f"n={n} exceeds enumeration budget of {max_steps} steps")
    mats = {1: pair.bplus, -1: pair.bminus}
    out = []
    for path in itertools.product((1, -1), repeat=n):
        amp = np.eye(pair.dim, dtype=complex)
        for step in path:
            amp = mats[step] @ amp
        out.append(PathAmplitude(path, amp, x0 + sum(path)))
    return out


# ---------------------------------------------------------------------------
# Tilted random walks on the circle (no internal degree of freedom)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TiltedWalkState:
    """Walker wave function in momentum representation on Z_N.

    ``phi[k]`` are the momentum amplitudes; sum |phi_k|^2 = 1.  The momentum
    representation is used because the measurement update is diagonal there,
    costing O(N) per step.
    """

    n_sites: int
    phi: np.ndarray

    NORM_TOL = 1e-10

    @classmethod
    def from_amplitudes(cls, phi) -> "TiltedWalkState":
        arr = np.asarray(phi, dtype=complex)
        norm = np.linalg.norm(arr)
        if abs(norm - 1.0) > cls.NORM_TOL:
            raise ValueError(f"momentum amplitudes have norm {norm:.12f}, expected 1")
        return cls(len(arr), arr)

    def momentum_density(self) -> np.ndarray:
        return np.abs(self.phi) ** 2


def _momentum_cosines(n_sites: int, phi_angle: float) -> np.ndarray:
    k = np.arange(n_sites)
    return np.cos(4.0 * np.pi * k / n_sites + phi_angle)


def _momentum_multipliers(u: TiltAngles, n_sites: int) -> np.ndarray:
    """Per-outcome multiplicative momentum updates m[s, k] (before renorm)."""
    ov = probe_overlaps(u)
    k = np.arange(n_sites)
    shift = np.exp(-2j * np.pi * k / n_sites)
    return np.stack([ov[s, 0] * shift + ov[s, 1] * np.conj(shift) for s in range(2)])


def tilted_walk_probs(state: TiltedWalkState, u: TiltAngles) -> tuple[float, float]:
    """Outcome probabilities (p_plus, p_minus) for one tilted measurement."""
    c = _momentum_cosines(state.n_sites, u.phi)
    bias = float(np.sin(u.theta) * np.dot(c, state.momentum_density()))
    p_plus = 0.5 * (1.0 + bias)
    return p_plus, 1.0 - p_plus


def tilted_walk_branches(
    state: TiltedWalkState, u: TiltAngles
) -> list[tuple[TiltedWalkState, float]]:
    """Both posterior states with their probabilities, exactly normalized."""
    p_plus, p_minus = tilted_walk_probs(state, u)
    mult = _momentum_multipliers(u, state.n_sites)
    out = []
    for s, p in ((0, p_plus), (1, p_minus)):
        if p < _PROB_FLOOR:
            raise DegenerateDirectionError(
                f"outcome probability {p:.3e} below {_PROB_FLOOR:.0e}; "
                "measurement direction is degenerate for this state"
            )
        phi_new = mult[s] * state.phi / np.sqrt(2.0 * p)
        out.append((TiltedWalkState(state.n_sites, phi_new), p))
    return out


def tilted_walk_step(
    state: TiltedWalkState, u: TiltAngles, rng: np.random.Generator
) -> tuple[TiltedWalkState, int, float]:
    """One measured step; draws the outcome with a single uniform variate.

    Returns ``(new_state, outcome, p_plus)`` with outcome +-1.
    """
    (state_p, p_plus), (state_m, _) = tilted_walk_branches(state, u)
    if rng.random() < p_plus:
        return state_p, 1, p_plus
    return state_m, -1, p_plus


def position_wavefunction(state: TiltedWalkState) -> np.ndarray:
    """Position amplitudes psi_x = N^{-1/2} sum_k phi_k e^{2 pi i k x / N}."""
    return np.sqrt(state.n_sites) * np.fft.ifft(state.phi)


def gaussian_mixture_momentum(
    n_sites: int,
    centers,
    widths,
    support: tuple[int, int],
    weights=None,
) -> np.ndarray:
    """Momentum probability profile: Gaussian bumps truncated to ``support``.

    The profile is exactly zero outside ``[support[0], support[1])``; modes
    that start at zero stay zero under the walk, which is what pins the
    collapse target to a single peak when the support is shorter than N/2.
    """
    lo, hi = support
    if not (0 <= lo < hi <= n_sites):
        raise ValueError("support must satisfy 0 <= lo < hi <= n_sites")
    k = np.arange(n_sites, dtype=float)
    centers = np.atleast_1d(np.asarray(centers, dtype=float))
    widths = np.broadcast_to(np.asarray(widths, dtype=float), centers.shape)
    weights = (
        np.full(centers.shape, 1.0 / len(centers))
        if weights is None
        else np.asarray(weights, dtype=float)
    )
    prof = np.zeros(n_sites)
    for c, w, a in zip(centers, widths, weights):
        prof += a * np.exp(-0.5 * ((k - c) / w) ** 2)
    mask = (k >= lo) & (k < hi)
    prof = np.where(mask, prof, 0.0)
    total = prof.sum()
    if total <= 0:
        raise ValueError("profile vanishes on the requested support")
    return prof / total


def _reject_degenerate_collapse_angles(u: TiltAngles) -> None:
    if abs(abs(np.sin(u.theta)) - 1.0) < 1e-9 and abs(np.cos(u.phi)) > 1 - 1e-9:
        raise DegenerateDirectionError("direction with sin^2(theta)cos^2(phi)=1 rejected")
    # Rational multiples of pi/2 break the uniqueness of the collapse target.
    frac = u.phi / (np.pi / 2.0)
    if abs(frac - round(frac)) < 1e-9:
        raise DegenerateDirectionError(
            "phi is a multiple of pi/2; collapse experiments need a generic angle"
        )


def run_collapse_ensemble(
    n_sites: int,
    u: TiltAngles,
    initial_density,
    n_runs: int,
    max_steps: int,
    master_seed: int,
    mass_threshold: float = 0.99,
    draw_block: int = 512,
    stream_offset: int = 0,
):
    """Ensemble of tilted-walk collapses; returns peak locations and metadata.

    Simulates the momentum probability masses directly (phases never enter
    the outcome law), retiring a run once its largest mass exceeds
    ``mass_threshold``; retired runs keep evolving nothing and their peak is
    frozen at the argmax.  Run ``i`` consumes only stream ``i`` of
    ``master_seed``, so results do not depend on batching.

    Requires initial support shorter than ``n_sites / 2`` and a generic
    measurement direction.
    """
    from .rngstreams import stream_generator

    m0 = np.asarray(initial_density, dtype=float)
    if m0.shape != (n_sites,):
        raise ValueError("initial density must have one entry per site")
    support = np.nonzero(m0 > 0)[0]
    if support.size and (support.max() - support.min() + 1) >= n_sites / 2:
        raise ValueError("initial momentum support must be shorter than n_sites / 2")
    _reject_degenerate_collapse_angles(u)

    c = _momentum_cosines(n_sites, u.phi)
    s_theta = float(np.sin(u.theta))
    masses = np.tile(m0, (n_runs, 1))
    gens = [stream_generator(master_seed, stream_offset + i) for i in range(n_runs)]
    active = np.arange(n_runs)
    k_inf = np.full(n_runs, -1, dtype=int)
    steps_to_collapse = np.full(n_runs, max_steps, dtype=int)

    step = 0
    while step < max_steps and active.size:
        block = min(draw_block, max_steps - step)
        uniforms = np.stack([gens[i].random(block) for i in active])
        for j in range(block):
            bias = s_theta * (masses[active] @ c)
            p_plus = 0.5 * (1.0 + bias)
            plus = uniforms[:, j] < p_plus
            factor = np.where(
                plus[:, None], 1.0 + s_theta * c[None, :], 1.0 - s_theta * c[None, :]
            )
            denom = np.where(plus, 2.0 * p_plus, 2.0 * (1.0 - p_plus))
            masses[active] = masses[active] * factor / denom[:, None]
        masses[active] /= masses[active].sum(axis=1, keepdims=True)
        step += block

        peak_mass = masses[active].max(axis=1)
        done = peak_mass >= mass_threshold
        if np.any(done):
            finished = active[done]
            k_inf[finished] = np.argmax(masses[finished], axis=1)
            steps_to_collapse[finished] = step
            active = active[~done]
            uniforms = None

    if active.size:
        k_inf[active] = np.argmax(masses[active], axis=1)
    collapsed = int(np.sum(steps_to_collapse < max_steps))
    return k_inf, steps_to_collapse, collapsed


# ---------------------------------------------------------------------------
# Open quantum random walks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PositionBlock:
    """Position-diagonal system state: internal matrices on a lattice window.

    ``values[j]`` is the (unnormalized) internal matrix at site
    ``offset + j``; physical positions are ``(offset + j) * delta``.
    """

    offset: int
    values: np.ndarray
    delta: float

    def positions(self) -> np.ndarray:
        return (self.offset + np.arange(self.values.shape[0])) * self.delta

    def total_trace(self) -> float:
        return float(np.einsum("xaa->", self.values).real)

    def trace_profile(self) -> np.ndarray:
        return np.einsum("xaa->x", self.values).real


def qrw_map_step(block: PositionBlock, pair: TransitionPair) -> PositionBlock:
    """One probe-averaged step of the open walk map.

    New weight at x is B+ rho(x - delta) B+^dag + B- rho(x + delta) B-^dag;
    position-diagonal states stay diagonal by construction and the total
    trace is preserved to the pair's unitarity residual.
    """
    vals = block.values
    length, dim = vals.shape[0], vals.shape[1]
    padded = np.zeros((length + 4, dim, dim), dtype=complex)
    padded[2:-2] = vals
    shift_r = padded[1:-3]  # rho(x - delta) on the widened window
    shift_l = padded[3:-1]  # rho(x + delta)
    bp, bm = pair.bplus, pair.bminus
    new_vals = np.einsum("ab,xbc,dc->xad", bp, shift_r, bp.conj()) + np.einsum(
        "ab,xbc,dc->xad", bm, shift_l, bm.conj()
    )
    return PositionBlock(block.offset - 1, new_vals, block.delta)


@dataclass(frozen=True)
class OqrwDiagonalState:
    """Quantum-trajectory state when the system stays position-diagonal."""

    rho: np.ndarray
    x: float


def simple_trajectory_branches(
    state: OqrwDiagonalState, pair: TransitionPair, delta: float
) -> list[tuple[OqrwDiagonalState, float]]:
    """Both measured branches with their probabilities."""
    out = []
    for mat, sign in ((pair.bplus, +1), (pair.bminus, -1)):
        unnorm = mat @ state.rho @ mat.conj().T
        p = float(np.trace(unnorm).real)
        rho_new = unnorm / p if p > 0 else unnorm
        out.append((OqrwDiagonalState(rho_new, state.x + sign * delta), p))
    return out


def simple_trajectory_step(
    state: OqrwDiagonalState,
    pair: TransitionPair,
    delta: float,
    rng: np.random.Generator,
) -> tuple[OqrwDiagonalState, int]:
    """One measured step of the position-diagonal open walk."""
    (st_p, p_plus), (st_m, p_minus) = simple_trajectory_branches(state, pair, delta)
    if rng.random() < p_plus:
        if p_plus < 1e-300:
            raise ZeroProbabilityBranchError("drew a branch with vanishing probability")
        return st_p, 1
    if p_minus < 1e-300:
        raise ZeroProbabilityBranchError("drew a branch with vanishing probability")
    return st_m, -1


# ---------------------------------------------------------------------------
# Tilted trajectories in momentum representation
# ---------------------------------------------------------------------------


def uniform_momentum_grid(p_min: float, p_max: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform grid with trapezoid quadrature weights."""
    grid = np.linspace(p_min, p_max, n)
    dp = grid[1] - grid[0]
    weights = np.full(n, dp)
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return grid, weights


@dataclass(frozen=True)
class MomentumKernelDiscrete:
    """System state in momentum representation on a quadrature grid.

    ``kernel[i, j]`` is the internal matrix at momenta (p_i, p_j); the state
    obeys kernel(p, q) = kernel(q, p)^dag and its diagonal integrates (with
    the stored quadrature weights) to unit trace.
    """

    grid: np.ndarray
    weights: np.ndarray
    kernel: np.ndarray

    NORM_TOL = 1e-8
    DRIFT_TOL = 1e-6

    @classmethod
    def pure(cls, grid, weights, momentum_amplitudes, rho_internal) -> "MomentumKernelDiscrete":
        """Product state f(p) f(q)* rho, normalized on the grid."""
        f = np.asarray(momentum_amplitudes, dtype=complex)
        rho = as_complex_matrix(rho_internal)
        w = np.asarray(weights, dtype=float)
        norm = float(np.sum(w * np.abs(f) ** 2) * np.trace(rho).real)
        kern = np.einsum("p,q,ab->pqab", f, f.conj(), rho) / norm
        return cls(np.asarray(grid, dtype=float), w, kern)

    def diagonal_density(self) -> np.ndarray:
        """Trace of the momentum diagonal (the measurable momentum density)."""
        return np.einsum("ppaa->p", self.kernel).real

    def total_trace(self) -> float:
        return float(np.sum(self.weights * self.diagonal_density()))

    def hermitian_defect(self) -> float:
        return max_norm(self.kernel - np.conj(np.swapaxes(self.kernel, 0, 1)).swapaxes(2, 3))


def tilted_step_operators(
    pair: TransitionPair, u: TiltAngles, delta: float, grid: np.ndarray
) -> np.ndarray:
    """Per-momentum branch operators U[s, i] for outcome s at grid point i."""
    ov = probe_overlaps(u)
    phase = np.exp(-1j * delta * np.asarray(grid))
    ops = np.empty((2, len(grid), pair.dim, pair.dim), dtype=complex)
    for s in range(2):
        ops[s] = (
            phase[:, None, None] * ov[s, 0] * pair.bplus
            + np.conj(phase)[:, None, None] * ov[s, 1] * pair.bminus
        )
    return ops


def _povm_defect(ops: np.ndarray) -> float:
    dim = ops.shape[-1]
    comp = np.einsum("spba,spbc->pac", ops.conj(), ops)
    return max_norm(comp - np.eye(dim))


def tilted_trajectory_branches(
    state: MomentumKernelDiscrete, pair: TransitionPair, u: TiltAngles, delta: float
) -> list[tuple[MomentumKernelDiscrete, float]]:
    """Both measured branches of the momentum-kernel trajectory."""
    if delta * float(np.max(np.abs(state.grid))) > 0.5:
        raise ValueError("delta * p_max must stay below 0.5 on the momentum grid")
    ops = tilted_step_operators(pair, u, delta, state.grid)
    if _povm_defect(ops) > pair.unitarity_residual + 1e-12:
        raise QuadratureDriftError("branch operators violate completeness beyond the pair defect")
    diag = np.einsum("ppab->pab", state.kernel)
    probs = []
    for s in range(2):
        eff = np.einsum("pba,pbc->pac", ops[s].conj(), ops[s])
        probs.append(float(np.sum(state.weights * np.einsum("pab,pba->p", diag, eff).real)))
    out = []
    for s, p in enumerate(probs):
        if p < _PROB_FLOOR:
            raise DegenerateDirectionError(f"branch probability {p:.3e} vanished")
        kern = np.einsum("pab,pqbc,qdc->pqad", ops[s], state.kernel, ops[s].conj()) / p
        new = MomentumKernelDiscrete(state.grid, state.weights, kern)
        drift = abs(new.total_trace() - 1.0)
        if drift > MomentumKernelDiscrete.DRIFT_TOL:
            raise QuadratureDriftError(
                f"kernel normalization drifted by {drift:.3e}; momentum grid too coarse"
            )
        if drift > 0:
            new = replace(new, kernel=kern / new.total_trace())
        out.append((new, p))
    return out


def tilted_trajectory_step(
    state: MomentumKernelDiscrete,
    pair: TransitionPair,
    u: TiltAngles,
    delta: float,
    rng: np.random.Generator,
) -> tuple[MomentumKernelDiscrete, int]:
    """One tilted-measurement step; one uniform variate per call."""
    branches = tilted_trajectory_branches(state, pair, u, delta)
    if rng.random() < branches[0][1]:
        return branches[0][0], 1
    return branches[1][0], -1


@dataclass
class OqrwEnsemble:
    """Moment sums of a discrete simple-trajectory ensemble."""

    step_counts: np.ndarray
    n_paths: int
    sum_x: np.ndarray
    sum_x2: np.ndarray
    sum_bloch: np.ndarray | None
    final_x: np.ndarray
    final_rho: np.ndarray
    sample_paths: np.ndarray | None  # (n_sample, n_records, 4): x, q1, q2, q3

    def merge(self, other: "OqrwEnsemble") -> "OqrwEnsemble":
        if not np.array_equal(self.step_counts, other.step_counts):
            raise ValueError("cannot merge ensembles with different record steps")
        return OqrwEnsemble(
            self.step_counts,
            self.n_paths + other.n_paths,
            self.sum_x + other.sum_x,
            self.sum_x2 + other.sum_x2,
            None if self.sum_bloch is None else self.sum_bloch + other.sum_bloch,
            np.concatenate([self.final_x, other.final_x]),
            np.concatenate([self.final_rho, other.final_rho]),
            self.sample_paths,
        )


def run_oqrw_ensemble(
    pair: TransitionPair,
    rho0,
    delta: float,
    n_steps: int,
    n_paths: int,
    master_seed: int,
    stream_offset: int = 0,
    record_every: int = 1,
    n_sample_paths: int = 0,
) -> OqrwEnsemble:
    """Vectorized ensemble of measured discrete walks.

    Path i consumes stream ``stream_offset + i``; one uniform per step.
    ``record_every`` thins the moment records; the first ``n_sample_paths``
    paths are stored fully (thinned) for plotting.
    """
    from .rngstreams import stream_generator

    rho0 = as_complex_matrix(rho0)
    dim = rho0.shape[0]
    bp, bm = pair.bplus, pair.bminus
    bp_d, bm_d = bp.conj().T, bm.conj().T

    rho = np.broadcast_to(rho0, (n_paths, dim, dim)).copy()
    x = np.zeros(n_paths)
    gens = [stream_generator(master_seed, stream_offset + i) for i in range(n_paths)]

    rec_steps = np.arange(record_every, n_steps + 1, record_every)
    if rec_steps.size == 0 or rec_steps[-1] != n_steps:
        rec_steps = np.append(rec_steps, n_steps)
    n_rec = len(rec_steps)
    sum_x = np.zeros(n_rec)
    sum_x2 = np.zeros(n_rec)
    is_qubit = dim == 2
    sum_bloch = np.zeros((n_rec, 3)) if is_qubit else None
    n_sample = min(n_sample_paths, n_paths)
    samples = np.zeros((n_sample, n_rec, 4)) if n_sample else None

    pauli = np.array(
        [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
    )

    rec_idx = 0
    block_size = 1024
    step = 0
    while step < n_steps:
        block = min(block_size, n_steps - step)
        us = np.stack([g.random(block) for g in gens], axis=0)
        for j in range(block):
            up = np.einsum("ab,nbc,cd->nad", bp, rho, bp_d)
            dn = np.einsum("ab,nbc,cd->nad", bm, rho, bm_d)
            p_plus = np.einsum("naa->n", up).real
            plus = us[:, j] < p_plus
            prob = np.where(plus, p_plus, 1.0 - p_plus)
            rho = np.where(plus[:, None, None], up, dn) / prob[:, None, None]
            x = x + np.where(plus, delta, -delta)
            done = step + j + 1
            if rec_idx < n_rec and rec_steps[rec_idx] == done:
                sum_x[rec_idx] = x.sum()
                sum_x2[rec_idx] = (x * x).sum()
                if is_qubit:
                    sum_bloch[rec_idx] = np.einsum("kab,nba->k", pauli, rho).real
                if n_sample:
                    samples[:, rec_idx, 0] = x[:n_sample]
                    if is_qubit:
                        samples[:, rec_idx, 1:] = np.einsum(
                            "kab,nba->nk", pauli, rho[:n_sample]
                        ).real
                rec_idx += 1
        step += block

    return OqrwEnsemble(rec_steps, n_paths, sum_x, sum_x2, sum_bloch, x, rho, samples)
