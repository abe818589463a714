"""Two-level gyroscope: Bloch/angle dynamics, jump statistics, diffusion law.

With Hamiltonian -omega0 sigma^2 and coupling a sigma^3 the real Bloch
components (Q1, Q3) close under the trajectory equations

    dQ3 = 2 omega0 Q1 dt + 2a (1 - Q3^2) dB
    dQ1 = -2 (omega0 Q3 + a^2 Q1) dt - 2a Q1 Q3 dB

and, once the state is pure (Q1 = sin theta, Q3 = cos theta),

    d theta = -2 (omega0 + a^2 sin theta cos theta) dt - 2a sin theta dB,
    d X     = 2a cos theta dt + dB       (same Brownian increment).

The angle drifts monotonically through the gates theta = k pi where the
noise vanishes; in the strong-coupling regime a^2 > 2 omega0 the motion is
a see-saw with exponentially distributed waiting times, while at long times
the walker is always diffusive with an enhanced constant 1 + 4 a^4/omega0^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.stats import kstest

from .errors import (
    InsufficientJumpsError,
    InsufficientTimeWarning,
    QuadratureNonConvergenceError,
    RootTrackingAmbiguityError,
    WindowViolationError,
)
from .rngstreams import stream_generator

__all__ = [
    "SpinHalfParams",
    "bloch_sde_step",
    "theta_sde_step",
    "recommended_dt",
    "potential_w",
    "drift_extrema",
    "invariant_density",
    "potential_and_invariant",
    "stationary_expectation",
    "exit_probability",
    "mean_wait_time",
    "ThetaEnsemble",
    "run_theta_ensemble",
    "run_passage_ensemble",
    "JumpStatistics",
    "jump_statistics",
    "CubicRoots",
    "deff_from_cubic",
    "moment_ode_integrate",
    "deff_monte_carlo",
]


@dataclass(frozen=True)
class SpinHalfParams:
    """Measurement strength a (1/sqrt(time)) and precession rate omega0 (1/time)."""

    a: float
    omega0: float

    def __post_init__(self):
        if self.a <= 0 or self.omega0 <= 0:
            raise ValueError("a and omega0 must be positive")

    @property
    def regime(self) -> str:
        """'ballistic' when a^2 > 2 omega0 (double-well angle potential)."""
        return "ballistic" if self.a**2 > 2.0 * self.omega0 else "oscillatory"

    @property
    def tau_oscill(self) -> float:
        return 1.0 / self.omega0

    @property
    def tau_collapse(self) -> float:
        return 1.0 / self.a**2

    @property
    def tau_wait(self) -> float:
        """Leading-order mean waiting time a^2 / omega0^2."""
        return self.a**2 / self.omega0**2


def recommended_dt(params: SpinHalfParams) -> float:
    """Step small enough to resolve the strong drift near the gates."""
    return min(1e-3, 0.01 / params.a**2)


def bloch_sde_step(q1, q3, params: SpinHalfParams, dt: float, db):
    """One Euler-Maruyama step of the planar Bloch components.

    Accepts scalars or arrays.  If the update leaves the unit disk by more
    than 1e-8 the vector is pulled back onto it.
    """
    a, w0 = params.a, params.omega0
    q1_new = q1 - 2.0 * (w0 * q3 + a**2 * q1) * dt - 2.0 * a * q1 * q3 * db
    q3_new = q3 + 2.0 * w0 * q1 * dt + 2.0 * a * (1.0 - q3**2) * db
    norm = np.sqrt(q1_new**2 + q3_new**2)
    scale = np.where(norm > 1.0 + 1e-8, 1.0 / np.maximum(norm, 1e-300), 1.0)
    return q1_new * scale, q3_new * scale


def theta_sde_step(theta, params: SpinHalfParams, dt: float, db):
    """One step of the unwrapped angle (no modular reduction)."""
    a, w0 = params.a, params.omega0
    s = np.sin(theta)
    return theta - 2.0 * (w0 + a**2 * s * np.cos(theta)) * dt - 2.0 * a * s * db


# ---------------------------------------------------------------------------
# Potential, invariant density, exit probabilities
# ---------------------------------------------------------------------------


def potential_w(theta, params: SpinHalfParams):
    """W(theta) with 2W = log|sin theta| - (omega0/a^2) cot theta (pi-periodic)."""
    theta = np.asarray(theta, dtype=float)
    r = params.omega0 / params.a**2
    s = np.sin(theta)
    return 0.5 * (np.log(np.abs(s)) - r * np.cos(theta) / s)


def drift_extrema(params: SpinHalfParams, tol: float = 1e-12) -> list[tuple[float, str]]:
    """Extrema of W on (0, pi): zeros of sin(2 theta) = -2 omega0 / a^2.

    Empty below the critical coupling a^2 = 2 omega0, a single degenerate
    point at 3 pi / 4 on it, and a (max, min) pair above it; the minimum
    sits near pi - omega0/a^2 for strong coupling.
    """
    s = 2.0 * params.omega0 / params.a**2
    if s > 1.0 + tol:
        return []
    if abs(s - 1.0) <= tol:
        return [(0.75 * np.pi, "degenerate")]
    half = 0.5 * float(np.arcsin(s))
    return [(0.5 * np.pi + half, "max"), (np.pi - half, "min")]


def _log_e2w(theta, params: SpinHalfParams):
    """log of e^{2W}; safe for theta in (0, pi)."""
    r = params.omega0 / params.a**2
    s = np.sin(theta)
    return np.log(s) - r * np.cos(theta) / s


def invariant_density(params: SpinHalfParams, n_grid: int = 40001):
    """Unnormalized stationary density of the circulating angle on (0, pi).

    The angle has a nonzero rotation number (it passes every gate), so the
    stationary Fokker-Planck solution carries a constant probability flux J:

        rho(theta) = g(theta)^{-2} e^{-2W(theta)} * integral_0^theta e^{2W},

    up to the factor 2J.  The zero-flux shape e^{-2W} g^{-2} alone is not
    normalizable here (it diverges at the gates); the flux term tames it to
    a bounded profile, constant near the gates.

    Under t = cot(theta) the inner integral becomes
    int_t^inf e^{-r s} (1 + s^2)^{-3/2} ds with r = omega0 / a^2, which a
    uniform t-grid resolves even inside the gate boundary layers; the
    density is assembled in log space and interpolated in t.
    """
    r = params.omega0 / params.a**2
    t_max = max(60.0 / r, 60.0)
    t = np.linspace(-t_max, t_max, n_grid)
    log_f = -r * t - 1.5 * np.log1p(t * t)
    # segments of the trapezoid rule for int e^{log_f} dt, accumulated from the
    # top and seeded with the analytic tail G(t_max) ~ e^{-r t}(1+t^2)^{-3/2}/r
    pair_max = np.maximum(log_f[1:], log_f[:-1])
    seg = pair_max + np.log(
        0.5 * (np.exp(log_f[1:] - pair_max) + np.exp(log_f[:-1] - pair_max)) * np.diff(t)
    )
    log_seed = -r * t_max - 1.5 * np.log1p(t_max * t_max) - np.log(r) + np.log1p(
        -3.0 / (r * t_max)
    )
    log_tail = np.empty(n_grid)
    log_tail[-1] = log_seed
    log_tail[:-1] = np.logaddexp(np.logaddexp.accumulate(seg[::-1])[::-1], log_seed)
    # rho(theta(t)) = e^{r t} (1 + t^2)^{3/2} / (4 a^2) * G(t)
    log_rho_t = r * t + 1.5 * np.log1p(t * t) - np.log(4.0 * params.a**2) + log_tail

    def density(theta):
        theta = np.mod(np.asarray(theta, dtype=float), np.pi)
        theta = np.clip(theta, 1e-12, np.pi - 1e-12)
        tt = np.clip(np.cos(theta) / np.sin(theta), -t_max, t_max)
        return np.exp(np.interp(tt, t, log_rho_t))

    return density


def potential_and_invariant(params: SpinHalfParams):
    """(W evaluator, unnormalized stationary density, extrema list)."""

    def w(theta):
        return potential_w(theta, params)

    return w, invariant_density(params), drift_extrema(params)


def stationary_expectation(params: SpinHalfParams, f, n_grid: int = 20001) -> float:
    """Expectation of f(theta) under the stationary angle distribution."""
    density = invariant_density(params)
    grid = np.linspace(1e-5, np.pi - 1e-5, n_grid)
    rho = density(grid)
    return float(np.trapezoid(f(grid) * rho, grid) / np.trapezoid(rho, grid))


def _log_gauss_panels(lo: float, hi: float, params: SpinHalfParams, n_panels: int, order: int):
    """log integral of e^{2W} over [lo, hi] by graded composite Gauss-Legendre."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    # geometric grading toward both endpoints resolves the steep growth near pi
    frac = np.concatenate(
        [
            np.geomspace(1e-10, 0.5, n_panels // 2 + 1)[:-1],
            [0.5],
            1.0 - np.geomspace(1e-10, 0.5, n_panels // 2 + 1)[:-1][::-1],
        ]
    )
    edges = lo + (hi - lo) * frac
    logs = []
    for a_, b_ in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a_ + b_)
        half = 0.5 * (b_ - a_)
        theta = mid + half * nodes
        vals = _log_e2w(theta, params) + np.log(weights * half)
        m = vals.max()
        logs.append(m + np.log(np.exp(vals - m).sum()))
    m = max(logs)
    return m + np.log(sum(np.exp(v - m) for v in logs))


def exit_probability(
    theta_minus: float, theta: float, theta_plus: float, params: SpinHalfParams
) -> float:
    """Probability of leaving [theta_minus, theta_plus] through the bottom.

    Closed form: int_theta^theta_plus e^{2W} / int_theta_minus^theta_plus
    e^{2W}, valid on windows contained in one gate period,
    k pi <= theta_minus < theta <= theta_plus < (k+1) pi.
    """
    k = np.floor(theta_minus / np.pi)
    lo = theta_minus - k * np.pi
    mid = theta - k * np.pi
    hi = theta_plus - k * np.pi
    tol = 1e-12
    if not (-tol <= lo < mid <= hi < np.pi - tol) or not (theta_minus < theta <= theta_plus):
        raise WindowViolationError(
            "window must satisfy k*pi <= theta_minus < theta <= theta_plus < (k+1)*pi"
        )
    lo = max(lo, 1e-14)
    if mid >= hi:
        return 0.0
    log_num = _log_gauss_panels(mid, hi, params, n_panels=40, order=20)
    log_den = np.logaddexp(
        _log_gauss_panels(lo, mid, params, n_panels=40, order=20), log_num
    )
    return float(np.exp(log_num - log_den))


def _wait_inner(u: float, r: float) -> float:
    """Adaptive angular integral of sqrt((u sin t - r cos t)^2 + r^2 sin^2 t).

    The integrand dips sharply near t = arctan(r/u), so that point is flagged
    to the adaptive rule.
    """
    from scipy.integrate import quad

    def integrand(theta):
        lin = u * np.sin(theta) - r * np.cos(theta)
        return np.sqrt(lin**2 + r**2 * np.sin(theta) ** 2)

    dip = float(np.arctan2(r, max(u, 1e-300)))
    val, _ = quad(integrand, 0.0, np.pi, points=[dip], limit=200, epsabs=1e-12, epsrel=1e-11)
    return val


def _wait_quadrature(params: SpinHalfParams, n_u: int | None = None) -> float:
    """Regularized double integral for the mean gate-to-gate passage time.

    tau = (a^2 / 2 omega0^2) int_0^inf du e^{-u} int_0^pi dtheta
          sqrt(u^2 sin^2 theta - (omega0/a^2) u sin 2 theta + omega0^2/a^4).
    ``n_u`` selects a Gauss-Laguerre outer rule (used as a cross-check);
    ``None`` integrates the exponentially weighted outer integral adaptively.
    """
    from scipy.integrate import quad

    r = params.omega0 / params.a**2
    prefactor = 0.5 * params.a**2 / params.omega0**2
    if n_u is None:
        val, _ = quad(
            lambda u: np.exp(-u) * _wait_inner(u, r),
            0.0,
            np.inf,
            limit=300,
            epsabs=1e-11,
            epsrel=1e-10,
        )
        return prefactor * val
    u_nodes, u_weights = np.polynomial.laguerre.laggauss(n_u)
    total = sum(
        w * _wait_inner(u, r) for u, w in zip(u_nodes, u_weights) if w > 1e-300
    )
    return prefactor * total


def mean_wait_time(
    params: SpinHalfParams,
    method: str = "quadrature",
    n_passages: int = 2000,
    master_seed: int = 0,
    dt: float | None = None,
) -> float:
    """Mean time between gate passages, by one of three routes.

    ``asymptotic`` returns a^2/omega0^2; ``quadrature`` evaluates the
    regularized double integral; ``montecarlo`` measures the mean passage
    time from pi to 0 over a seeded ensemble.  The quadrature is checked at
    two resolutions and raises if they disagree.  Outside the ballistic
    regime the notion is ill-separated from plain diffusion, so a warning is
    emitted.
    """
    if params.regime != "ballistic":
        warnings.warn("waiting times are only sharply defined for a^2 > 2 omega0", stacklevel=2)
    if method == "asymptotic":
        return params.tau_wait
    if method == "quadrature":
        adaptive = _wait_quadrature(params)
        laguerre = _wait_quadrature(params, 100)
        if abs(adaptive - laguerre) > 5e-5 * max(1.0, abs(adaptive)):
            raise QuadratureNonConvergenceError(
                f"adaptive/Laguerre disagreement {abs(adaptive - laguerre):.3e}"
            )
        return adaptive
    if method == "montecarlo":
        waits = run_passage_ensemble(params, n_passages, master_seed, dt=dt)
        return float(waits.mean())
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Vectorized angle ensembles
# ---------------------------------------------------------------------------

_NOISE_BLOCK = 2048


@dataclass
class ThetaEnsemble:
    """Result bundle of a vectorized angle-ensemble run."""

    params: SpinHalfParams
    dt: float
    n_paths: int
    t_max: float
    crossing_times: list[np.ndarray]
    record_times: np.ndarray | None = None
    theta_records: np.ndarray | None = None
    x_records: np.ndarray | None = None
    final_theta: np.ndarray | None = None
    final_x: np.ndarray | None = None
    mean_abs_cos: float | None = None
    gate_violations: int = 0

    def waits(self) -> list[np.ndarray]:
        """Per-path waiting times between successive gate passages."""
        out = []
        for times in self.crossing_times:
            if times.size:
                out.append(np.diff(np.concatenate([[0.0], times])))
            else:
                out.append(np.empty(0))
        return out

    def merge(self, other: "ThetaEnsemble") -> "ThetaEnsemble":
        if self.dt != other.dt or self.t_max != other.t_max:
            raise ValueError("cannot merge ensembles with different step layout")

        def cat(a, b, axis=0):
            if a is None or b is None:
                return None
            return np.concatenate([a, b], axis=axis)

        total = self.n_paths + other.n_paths
        if self.mean_abs_cos is None or other.mean_abs_cos is None:
            mean_cos = None
        else:
            mean_cos = (
                self.mean_abs_cos * self.n_paths + other.mean_abs_cos * other.n_paths
            ) / total
        return ThetaEnsemble(
            params=self.params,
            dt=self.dt,
            n_paths=total,
            t_max=self.t_max,
            crossing_times=self.crossing_times + other.crossing_times,
            record_times=self.record_times,
            theta_records=cat(self.theta_records, other.theta_records),
            x_records=cat(self.x_records, other.x_records),
            final_theta=cat(self.final_theta, other.final_theta),
            final_x=cat(self.final_x, other.final_x),
            mean_abs_cos=mean_cos,
            gate_violations=self.gate_violations + other.gate_violations,
        )


def run_theta_ensemble(
    params: SpinHalfParams,
    n_paths: int,
    t_max: float,
    master_seed: int,
    dt: float | None = None,
    theta0: float = 0.0,
    stream_offset: int = 0,
    record_every: int | None = None,
    track_x: bool = False,
    track_gate: bool = False,
    abs_cos_burnin: float | None = None,
) -> ThetaEnsemble:
    """Simulate ``n_paths`` unwrapped angles, tracking gate crossings.

    Path ``i`` consumes stream ``stream_offset + i`` of ``master_seed`` and
    the walker position is driven by the same increments as the angle.
    Crossing ``k`` is the first time theta drops below theta0 - (k+1) pi.
    ``record_every`` stores every so-many-th step for plotting;
    ``abs_cos_burnin`` accumulates the time average of |cos theta| after the
    given burn-in time; ``track_gate`` counts violations of the one-way gate
    (a later excursion above a crossed gate by more than 10 sqrt(dt)).
    """
    if dt is None:
        dt = recommended_dt(params)
    n_steps = int(round(t_max / dt))
    theta = np.full(n_paths, float(theta0))
    x = np.zeros(n_paths) if track_x else None
    gens = [stream_generator(master_seed, stream_offset + i) for i in range(n_paths)]
    next_gate = np.full(n_paths, float(theta0) - np.pi)
    crossed_floor = np.full(n_paths, np.inf)  # lowest gate already crossed
    gate_margin = 10.0 * np.sqrt(dt)
    gate_violations = 0
    crossings: list[list[float]] = [[] for _ in range(n_paths)]

    records_t, records_theta, records_x = [], [], []
    abs_cos_sum = 0.0
    abs_cos_count = 0
    a, w0 = params.a, params.omega0
    root_dt = np.sqrt(dt)

    step = 0
    while step < n_steps:
        block = min(_NOISE_BLOCK, n_steps - step)
        z = np.stack([g.standard_normal(block) for g in gens], axis=0)
        for j in range(block):
            t_now = (step + j + 1) * dt
            s = np.sin(theta)
            c = np.cos(theta)
            db = root_dt * z[:, j]
            theta = theta - 2.0 * (w0 + a * a * s * c) * dt - 2.0 * a * s * db
            if track_x:
                x = x + 2.0 * a * c * dt + db
            hit = theta < next_gate
            if np.any(hit):
                for i in np.nonzero(hit)[0]:
                    crossings[i].append(t_now)
                crossed_floor[hit] = next_gate[hit]
                next_gate[hit] -= np.pi
            if track_gate:
                gate_violations += int(np.sum(theta > crossed_floor + gate_margin))
            if record_every and (step + j + 1) % record_every == 0:
                records_t.append(t_now)
                records_theta.append(theta.copy())
                if track_x:
                    records_x.append(x.copy())
            if abs_cos_burnin is not None and t_now > abs_cos_burnin:
                abs_cos_sum += float(np.abs(c).sum())
                abs_cos_count += n_paths
        step += block

    return ThetaEnsemble(
        params=params,
        dt=dt,
        n_paths=n_paths,
        t_max=t_max,
        crossing_times=[np.asarray(c) for c in crossings],
        record_times=np.asarray(records_t) if record_every else None,
        theta_records=np.stack(records_theta, axis=1) if records_theta else None,
        x_records=np.stack(records_x, axis=1) if records_x else None,
        final_theta=theta,
        final_x=x if track_x else None,
        mean_abs_cos=(abs_cos_sum / abs_cos_count) if abs_cos_count else None,
        gate_violations=gate_violations,
    )


def run_passage_ensemble(
    params: SpinHalfParams,
    n_passages: int,
    master_seed: int,
    dt: float | None = None,
    batch: int = 1024,
    max_time_factor: float = 200.0,
) -> np.ndarray:
    """First-passage times from pi to 0, restarting each path on arrival.

    Returns the first ``n_passages`` recorded passage times (in completion
    order within the deterministic batch scan).
    """
    if dt is None:
        dt = recommended_dt(params)
    a, w0 = params.a, params.omega0
    root_dt = np.sqrt(dt)
    theta = np.full(batch, np.pi)
    clock = np.zeros(batch)
    gens = [stream_generator(master_seed, i) for i in range(batch)]
    waits: list[float] = []
    hard_stop = max_time_factor * max(params.tau_wait, 1.0)
    elapsed = 0.0
    while len(waits) < n_passages:
        z = np.stack([g.standard_normal(_NOISE_BLOCK) for g in gens], axis=0)
        for j in range(_NOISE_BLOCK):
            s = np.sin(theta)
            theta = theta - 2.0 * (w0 + a * a * s * np.cos(theta)) * dt - 2.0 * a * s * (
                root_dt * z[:, j]
            )
            clock += dt
            done = theta <= 0.0
            if np.any(done):
                waits.extend(clock[done].tolist())
                theta[done] = np.pi
                clock[done] = 0.0
            if len(waits) >= n_passages:
                break
        elapsed += _NOISE_BLOCK * dt
        if elapsed > hard_stop:
            raise RuntimeError("passage ensemble failed to accumulate samples in time budget")
    return np.asarray(waits[:n_passages])


# ---------------------------------------------------------------------------
# Jump statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class JumpStatistics:
    """Waiting-time sample with its exponential-law diagnostics."""

    waits: np.ndarray
    mean_wait: float
    fitted_rate: float
    ks_distance: float
    lag1_autocorr: float

    @property
    def n_samples(self) -> int:
        return int(self.waits.size)


def jump_statistics(waits_per_path: list[np.ndarray], params: SpinHalfParams) -> JumpStatistics:
    """Pool per-path waiting times and test them against Exp(omega0).

    Requires at least 100 samples.  The lag-1 autocorrelation is computed
    over consecutive pairs within each path (a renewal process gives zero).
    """
    if params.a**2 < 8.0 * params.omega0:
        warnings.warn(
            "exponential waiting-time law needs a^2 >~ 8 omega0 to apply", stacklevel=2
        )
    pooled = np.concatenate([w for w in waits_per_path if w.size]) if waits_per_path else np.empty(0)
    if pooled.size < 100:
        raise InsufficientJumpsError(f"only {pooled.size} waiting times; need at least 100")
    mean = float(pooled.mean())
    ks = float(kstest(pooled, "expon", args=(0.0, 1.0 / params.omega0)).statistic)
    firsts, seconds = [], []
    for w in waits_per_path:
        if w.size >= 2:
            firsts.append(w[:-1])
            seconds.append(w[1:])
    if firsts:
        f = np.concatenate(firsts)
        s = np.concatenate(seconds)
        lag1 = float(np.corrcoef(f, s)[0, 1]) if f.size >= 2 else 0.0
    else:
        lag1 = 0.0
    return JumpStatistics(pooled, mean, 1.0 / mean, ks, lag1)


# ---------------------------------------------------------------------------
# Long-time diffusion constant
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CubicRoots:
    """Decay-rate roots at wavenumber k and the diffusion constants they give."""

    gamma0: complex
    gamma_plus: complex
    gamma_minus: complex
    d_eff_formula: float
    d_eff_perturbative: float
    real_branch_regime: bool


def deff_from_cubic(params: SpinHalfParams, k: float) -> CubicRoots:
    """Solve gamma^3 + 2a^2 gamma^2 + (4k^2a^2 + 4w0^2) gamma + 8k^2a^4 = 0.

    Roots come from the companion-matrix eigenvalues; gamma0 is the branch
    continuous from 0 at k = 0 and yields the diffusion constant
    D = 1 - 2 gamma0(k)/k^2, which tends to the closed form
    1 + 4 a^4 / omega0^2.  Raises when k is too large for the branches to be
    separated.
    """
    a, w0 = params.a, params.omega0
    coeffs = [1.0, 2.0 * a**2, 4.0 * k**2 * a**2 + 4.0 * w0**2, 8.0 * k**2 * a**4]
    roots = np.roots(coeffs)
    disc = a**4 - 4.0 * w0**2
    real_regime = disc > 0
    gp0 = -(a**2) + np.sqrt(complex(disc))
    gm0 = -(a**2) - np.sqrt(complex(disc))
    order = np.argsort(np.abs(roots))
    gamma0 = roots[order[0]]
    rest = roots[order[1:]]
    sep = min(abs(gp0), abs(gm0))
    if abs(gamma0) > 0.5 * sep:
        raise RootTrackingAmbiguityError(
            f"|gamma0(k)| = {abs(gamma0):.3e} not separated from the fast branches"
        )
    if abs(rest[0] - gp0) + abs(rest[1] - gm0) <= abs(rest[0] - gm0) + abs(rest[1] - gp0):
        gamma_plus, gamma_minus = rest[0], rest[1]
    else:
        gamma_plus, gamma_minus = rest[1], rest[0]
    d_formula = 1.0 + 4.0 * a**4 / w0**2
    d_pert = float((1.0 - 2.0 * gamma0 / k**2).real) if k != 0.0 else d_formula
    return CubicRoots(gamma0, gamma_plus, gamma_minus, d_formula, d_pert, real_regime)


def moment_ode_integrate(
    params: SpinHalfParams, k: float, t: float, q3_0: float = 1.0, q1_0: float = 0.0
):
    """Exact characteristic-function moments (E, R, S) at time t.

    E = <e^{ikX}>, R = <Q3 e^{ikX}>, S = <Q1 e^{ikX}> satisfy a closed linear
    system; the 3x3 matrix exponential propagates the initial condition
    (1, Q3(0), Q1(0)).
    """
    a, w0 = params.a, params.omega0
    half_k2 = 0.5 * k**2
    m = np.array(
        [
            [-half_k2, 2j * k * a, 0.0],
            [2j * k * a, -half_k2, 2.0 * w0],
            [0.0, -2.0 * w0, -(2.0 * a**2 + half_k2)],
        ],
        dtype=complex,
    )
    e, r, s = expm(t * m) @ np.array([1.0, q3_0, q1_0], dtype=complex)
    return e, r, s


def deff_monte_carlo(
    params: SpinHalfParams,
    t: float,
    n_paths: int,
    master_seed: int,
    dt: float | None = None,
    n_blocks: int = 50,
) -> tuple[float, float]:
    """Var(X_t)/t with a delete-one-block jackknife standard error.

    Warns when t is below the diffusive window 50 tau_wait.
    """
    if t < 50.0 * params.tau_wait:
        warnings.warn(
            f"t = {t} is below the diffusive window 50 tau_wait = {50 * params.tau_wait}",
            InsufficientTimeWarning,
            stacklevel=2,
        )
    res = run_theta_ensemble(
        params, n_paths, t, master_seed, dt=dt, theta0=0.0, track_x=True
    )
    x = res.final_x
    estimate = float(np.var(x) / t)
    blocks = np.array_split(np.arange(n_paths), n_blocks)
    loo = np.array(
        [np.var(np.delete(x, idx)) / t for idx in blocks if idx.size]
    )
    b = len(loo)
    stderr = float(np.sqrt((b - 1) / b * np.sum((loo - loo.mean()) ** 2)))
    return estimate, stderr
