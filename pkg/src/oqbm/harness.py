"""Reproducible experiment driver: configs, seeded ensembles, artifacts.

A run is fully described by a ``RunConfig`` (versioned, JSON-serializable);
``run_ensemble`` executes it on a deterministic worker layout and writes
plot-ready artifacts plus a ``summary.json``.  Trajectory ``i`` always draws
from stream ``(seed, i)``, and partial results are merged in fixed chunk
order, so every emitted number is identical for any thread count.

File formats are documented column-by-column in FORMATS.md at the repo root.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from . import __version__
from .errors import ConfigInvalidError
from .linalg import SIGMA2, SIGMA3

CHUNK = 256
ExperimentKind = Literal[
    "discrete-walk",
    "discrete-oqrw",
    "trajectory",
    "tilted-trajectory",
    "lindblad",
    "ito-verify",
    "spin-half",
    "collapse-stats",
]

Matrix = list[list[list[float]]]  # rows of [re, im] pairs


def mat_to_json(mat: np.ndarray) -> Matrix:
    arr = np.asarray(mat, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def mat_from_json(data: Matrix) -> np.ndarray:
    return np.array([[complex(c[0], c[1]) for c in row] for row in data])


class _Base(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelConfig(_Base):
    """Continuum moduli H, N (and optional M) plus probe occupation."""

    h: Matrix
    n: Matrix
    m: Optional[Matrix] = None
    nbar: float = 0.0
    epsilon: float = 1e-4


class SpinConfig(_Base):
    a: float
    omega0: float = 1.0


class GridConfig(_Base):
    """Momentum (or position) grid window for kernel and field runs."""

    lo: float = -4.0
    hi: float = 4.0
    n_points: int = 48
    sigma: float = 1.0  # width of the initial wave packet / field profile


class WalkConfig(_Base):
    """Circle walk: sites, tilt angles and the initial momentum profile."""

    n_sites: int = 64
    theta: float = 0.6
    phi: float = 0.6
    centers: list[float] = Field(default_factory=lambda: [14.0, 19.0, 24.0, 29.0])
    widths: list[float] = Field(default_factory=lambda: [1.5, 1.5, 1.5, 1.5])
    support: tuple[int, int] = (8, 36)
    steps: int = 20000


class TiltConfig(_Base):
    """Continuum tilt parameter, given directly or through probe angles."""

    v: Optional[tuple[float, float]] = None  # (re, im), |v| = 1
    theta: Optional[float] = None
    phi: Optional[float] = None

    def value(self) -> complex:
        if self.v is not None:
            return complex(self.v[0], self.v[1])
        if self.theta is None:
            return 1.0 + 0.0j
        from .discrete import TiltAngles
        from .scaling import tilt_v

        return tilt_v(TiltAngles(self.theta, self.phi or 0.0))


class ItoConfig(_Base):
    dims: list[int] = Field(default_factory=lambda: [2, 4, 8, 16])
    nbars: list[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 10.0])
    seeds: int = 100
    threshold: float = 1e-8


class RunConfig(_Base):
    """One reproducible experiment; the JSON schema is versioned."""

    schema_version: int = 1
    kind: ExperimentKind
    seed: int = 0
    threads: int = 1
    out_dir: Optional[str] = None
    ensemble: int = 1
    dt: float = 1e-3
    horizon: float = 1.0
    emit_points: int = 20
    x0: float = 0.0
    rho0: Optional[Matrix] = None
    model: Optional[ModelConfig] = None
    spin: Optional[SpinConfig] = None
    grid: Optional[GridConfig] = None
    walk: Optional[WalkConfig] = None
    tilt: Optional[TiltConfig] = None
    ito: Optional[ItoConfig] = None

    @model_validator(mode="after")
    def _check(self):
        if self.schema_version != 1:
            raise ValueError(f"unsupported schema_version {self.schema_version}")
        for name in ("ensemble", "emit_points", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.dt <= 0 or self.horizon <= 0:
            raise ValueError("dt and horizon must be positive")
        needs_model = {"trajectory", "tilted-trajectory", "lindblad", "discrete-oqrw"}
        if self.kind in needs_model and self.model is None:
            raise ValueError(f"kind {self.kind!r} requires a model block")
        if self.kind == "spin-half" and self.spin is None:
            raise ValueError("kind 'spin-half' requires a spin block")
        if self.kind in {"discrete-walk", "collapse-stats"} and self.walk is None:
            raise ValueError(f"kind {self.kind!r} requires a walk block")
        return self

    def config_hash(self) -> str:
        payload = self.model_dump(exclude={"out_dir", "threads"})
        return hashlib.sha256(
            json.dumps(payload, sort_keys=True).encode()
        ).hexdigest()[:16]


class Histogram(_Base):
    name: str
    edges: list[float]
    counts: list[int]


class WaitingReport(_Base):
    n_samples: int
    mean_wait: float
    fitted_rate: float
    ks_distance: float
    lag1_autocorr: float


class Manifest(_Base):
    config_hash: str
    master_seed: int
    package_version: str
    created_utc: str
    threads: int


class EnsembleSummary(_Base):
    """Aggregates of one run; the JSON artifact mirrors this model."""

    kind: str
    n_paths: int
    times: list[float] = Field(default_factory=list)
    mean_x: list[float] = Field(default_factory=list)
    var_x: list[float] = Field(default_factory=list)
    mean_bloch: Optional[list[list[float]]] = None
    mean_sqrt_det: Optional[list[float]] = None
    histograms: list[Histogram] = Field(default_factory=list)
    waiting: Optional[WaitingReport] = None
    extra: dict[str, Any] = Field(default_factory=dict)
    manifest: Manifest
    artifacts: list[str] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------


def _manifest(config: RunConfig) -> Manifest:
    return Manifest(
        config_hash=config.config_hash(),
        master_seed=config.seed,
        package_version=__version__,
        created_utc=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        threads=config.threads,
    )


def _chunks(n: int) -> list[tuple[int, int]]:
    return [(start, min(CHUNK, n - start)) for start in range(0, n, CHUNK)]


def _pool_map(config: RunConfig, worker, n: int):
    """Run ``worker(config, start, count)`` over fixed chunks, merging in order.

    The chunk layout never depends on the thread count, and every chunk draws
    only from its own streams, so the merged result is bit-identical for any
    ``threads`` value.
    """
    ranges = _chunks(n)
    if config.threads > 1 and len(ranges) > 1:
        payload = config.model_dump_json()
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            futures = [pool.submit(worker, payload, s, c) for s, c in ranges]
            parts = [f.result() for f in futures]
    else:
        payload = config.model_dump_json()
        parts = [worker(payload, s, c) for s, c in ranges]
    merged = parts[0]
    for part in parts[1:]:
        merged = merged.merge(part)
    return merged


def _out_dir(config: RunConfig) -> Path | None:
    if config.out_dir is None:
        return None
    path = Path(config.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_summary(out: Path | None, summary: EnsembleSummary) -> EnsembleSummary:
    if out is None:
        return summary
    artifacts = sorted(set(summary.artifacts) | {"summary.json", "manifest.json"})
    summary = summary.model_copy(update={"artifacts": artifacts})
    with open(out / "manifest.json", "w") as fh:
        json.dump(summary.manifest.model_dump(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    with open(out / "summary.json", "w") as fh:
        json.dump(summary.model_dump(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return summary


def _histogram(name: str, values, edges) -> Histogram:
    counts, _ = np.histogram(np.asarray(values), bins=np.asarray(edges))
    return Histogram(
        name=name, edges=[float(e) for e in edges], counts=[int(c) for c in counts]
    )


def _default_rho0(config: RunConfig, dim: int) -> np.ndarray:
    if config.rho0 is not None:
        return mat_from_json(config.rho0)
    return np.eye(dim, dtype=complex) / dim


def _model_matrices(config: RunConfig):
    mc = config.model
    h = mat_from_json(mc.h)
    n = mat_from_json(mc.n)
    m = mat_from_json(mc.m) if mc.m is not None else None
    return h, n, m


# ---------------------------------------------------------------------------
# Experiment runners
# ---------------------------------------------------------------------------


def _trajectory_chunk(payload: str, start: int, count: int):
    from .trajectories import simulate_simple_ensemble

    config = RunConfig.model_validate_json(payload)
    h, n, _ = _model_matrices(config)
    rho0 = _default_rho0(config, h.shape[0])
    record = np.linspace(
        config.horizon / config.emit_points, config.horizon, config.emit_points
    )
    return simulate_simple_ensemble(
        h,
        n,
        rho0,
        config.x0,
        config.horizon,
        config.dt,
        count,
        config.seed,
        nbar=config.model.nbar,
        stream_offset=start,
        record_times=record,
    )


def _run_trajectory(config: RunConfig) -> EnsembleSummary:
    ens = _pool_map(config, _trajectory_chunk, config.ensemble)
    out = _out_dir(config)
    artifacts = []
    times = [float(t) for t in ens.times]
    mean_bloch = ens.mean_bloch()
    summary = EnsembleSummary(
        kind=config.kind,
        n_paths=ens.n_paths,
        times=times,
        mean_x=[float(v) for v in ens.mean_x()],
        var_x=[float(v) for v in ens.var_x()],
        mean_bloch=None if mean_bloch is None else [[float(c) for c in row] for row in mean_bloch],
        mean_sqrt_det=(
            None
            if ens.mean_sqrt_det() is None
            else [float(v) for v in ens.mean_sqrt_det()]
        ),
        manifest=_manifest(config),
    )
    span = max(1.0, float(np.std(ens.final_x) * 4))
    edges = np.linspace(np.mean(ens.final_x) - span, np.mean(ens.final_x) + span, 41)
    summary.histograms.append(_histogram("x_final", ens.final_x, edges))
    if out is not None:
        header = ["t", "mean_x", "var_x"]
        cols = [times, summary.mean_x, summary.var_x]
        if summary.mean_bloch is not None:
            header += ["q1", "q2", "q3", "mean_sqrt_det"]
            cols += [
                [row[0] for row in summary.mean_bloch],
                [row[1] for row in summary.mean_bloch],
                [row[2] for row in summary.mean_bloch],
                summary.mean_sqrt_det,
            ]
        _write_csv(out / "timeseries.csv", header, zip(*cols))
        artifacts.append("timeseries.csv")
        with open(out / "histograms.jsonl", "w") as fh:
            for hist in summary.histograms:
                fh.write(json.dumps(hist.model_dump(), sort_keys=True) + "\n")
        artifacts.append("histograms.jsonl")
    summary.artifacts = artifacts
    return _write_summary(out, summary)


def _tilted_chunk(payload: str, start: int, count: int):
    from .trajectories import simulate_tilted_ensemble

    config = RunConfig.model_validate_json(payload)
    h, n, _ = _model_matrices(config)
    rho0 = _default_rho0(config, h.shape[0])
    gc = config.grid or GridConfig()
    from .discrete import uniform_momentum_grid

    grid, weights = uniform_momentum_grid(gc.lo, gc.hi, gc.n_points)
    f0 = np.exp(-(grid**2) / (4.0 * gc.sigma**2)).astype(complex)
    v = (config.tilt or TiltConfig()).value()
    record = np.linspace(
        config.horizon / config.emit_points, config.horizon, config.emit_points
    )
    return simulate_tilted_ensemble(
        h,
        n,
        v,
        grid,
        weights,
        f0,
        rho0,
        config.horizon,
        config.dt,
        count,
        config.seed,
        stream_offset=start,
        record_times=record,
    )


def _run_tilted(config: RunConfig) -> EnsembleSummary:
    ens = _pool_map(config, _tilted_chunk, config.ensemble)
    out = _out_dir(config)
    artifacts = []
    dens = ens.mean_diagonal_density()
    peaks = ens.grid[ens.peak_locations()]
    summary = EnsembleSummary(
        kind=config.kind,
        n_paths=ens.n_paths,
        times=[float(t) for t in ens.times],
        extra={
            "mean_y_final": float(np.mean(ens.final_y)),
            "var_y_final": float(np.var(ens.final_y)),
        },
        manifest=_manifest(config),
    )
    dgrid = ens.grid[1] - ens.grid[0]
    edges = np.concatenate([ens.grid - 0.5 * dgrid, [ens.grid[-1] + 0.5 * dgrid]])
    summary.histograms.append(_histogram("final_peak_momentum", peaks, edges))
    if out is not None:
        rows = []
        for ti, t in enumerate(ens.times):
            for gi, p in enumerate(ens.grid):
                rows.append([float(t), float(p), float(dens[ti, gi])])
        _write_csv(out / "momentum_density.csv", ["t", "p", "density"], rows)
        artifacts.append("momentum_density.csv")
        with open(out / "histograms.jsonl", "w") as fh:
            for hist in summary.histograms:
                fh.write(json.dumps(hist.model_dump(), sort_keys=True) + "\n")
        artifacts.append("histograms.jsonl")
    summary.artifacts = artifacts
    return _write_summary(out, summary)


def _oqrw_chunk(payload: str, start: int, count: int):
    from .discrete import run_oqrw_ensemble
    from .scaling import ModelParams, build_transition_pair

    config = RunConfig.model_validate_json(payload)
    h, n, m = _model_matrices(config)
    params = ModelParams(h=h, n=n, m=m, epsilon=config.model.epsilon)
    pair = build_transition_pair(params)
    rho0 = _default_rho0(config, h.shape[0])
    n_steps = int(round(config.horizon / params.epsilon))
    record_every = max(1, n_steps // config.emit_points)
    return run_oqrw_ensemble(
        pair,
        rho0,
        params.delta,
        n_steps,
        count,
        config.seed,
        stream_offset=start,
        record_every=record_every,
        n_sample_paths=5 if start == 0 else 0,
    )


def _run_oqrw(config: RunConfig) -> EnsembleSummary:
    ens = _pool_map(config, _oqrw_chunk, config.ensemble)
    out = _out_dir(config)
    artifacts = []
    eps = config.model.epsilon
    times = [float(s * eps) for s in ens.step_counts]
    summary = EnsembleSummary(
        kind=config.kind,
        n_paths=ens.n_paths,
        times=times,
        mean_x=[float(v) for v in ens.sum_x / ens.n_paths],
        var_x=[float(v) for v in ens.sum_x2 / ens.n_paths - (ens.sum_x / ens.n_paths) ** 2],
        mean_bloch=(
            None
            if ens.sum_bloch is None
            else [[float(c) for c in row] for row in ens.sum_bloch / ens.n_paths]
        ),
        manifest=_manifest(config),
    )
    if out is not None:
        _write_csv(
            out / "timeseries.csv",
            ["t", "mean_x", "var_x"],
            zip(times, summary.mean_x, summary.var_x),
        )
        artifacts.append("timeseries.csv")
        if ens.sample_paths is not None:
            rows = []
            for pi in range(ens.sample_paths.shape[0]):
                for ri, s in enumerate(ens.step_counts):
                    rec = ens.sample_paths[pi, ri]
                    rows.append(
                        [pi, float(s * eps)] + [float(v) for v in rec]
                    )
            _write_csv(
                out / "walker_paths.csv",
                ["path", "t", "x", "q1", "q2", "q3"],
                rows,
            )
            artifacts.append("walker_paths.csv")
    summary.artifacts = artifacts
    return _write_summary(out, summary)


def _run_discrete_walk(config: RunConfig) -> EnsembleSummary:
    from .discrete import (
        TiltAngles,
        TiltedWalkState,
        gaussian_mixture_momentum,
        tilted_walk_step,
    )
    from .rngstreams import stream_generator

    wc = config.walk
    u = TiltAngles(wc.theta, wc.phi)
    density0 = gaussian_mixture_momentum(wc.n_sites, wc.centers, wc.widths, wc.support)
    state = TiltedWalkState.from_amplitudes(np.sqrt(density0).astype(complex))
    rng = stream_generator(config.seed, 0)
    record_every = max(1, wc.steps // config.emit_points)
    snapshots = [(0, state.momentum_density())]
    for step in range(1, wc.steps + 1):
        state, _, _ = tilted_walk_step(state, u, rng)
        if step % record_every == 0 or step == wc.steps:
            snapshots.append((step, state.momentum_density()))
    out = _out_dir(config)
    artifacts = []
    final = state.momentum_density()
    summary = EnsembleSummary(
        kind=config.kind,
        n_paths=1,
        extra={
            "peak_site": int(np.argmax(final)),
            "peak_mass": float(np.max(final)),
            "n_steps": wc.steps,
        },
        manifest=_manifest(config),
    )
    if out is not None:
        rows = []
        for step, dens in snapshots:
            for k, val in enumerate(dens):
                rows.append([step, k, float(val)])
        _write_csv(out / "momentum_profile.csv", ["step", "k", "prob"], rows)
        artifacts.append("momentum_profile.csv")
    summary.artifacts = artifacts
    return _write_summary(out, summary)


class _CollapsePart:
    def __init__(self, k_inf, steps, collapsed):
        self.k_inf = k_inf
        self.steps = steps
        self.collapsed = collapsed

    def merge(self, other):
        return _CollapsePart(
            np.concatenate([self.k_inf, other.k_inf]),
            np.concatenate([self.steps, other.steps]),
            self.collapsed + other.collapsed,
        )


def _collapse_chunk(payload: str, start: int, count: int):
    from .discrete import TiltAngles, gaussian_mixture_momentum, run_collapse_ensemble

    config = RunConfig.model_validate_json(payload)
    wc = config.walk
    density0 = gaussian_mixture_momentum(wc.n_sites, wc.centers, wc.widths, wc.support)
    k_inf, steps, collapsed = run_collapse_ensemble(
        wc.n_sites,
        TiltAngles(wc.theta, wc.phi),
        density0,
        count,
        wc.steps,
        config.seed,
        stream_offset=start,
    )
    return _CollapsePart(k_inf, steps, collapsed)


def _run_collapse(config: RunConfig) -> EnsembleSummary:
    from .discrete import gaussian_mixture_momentum

    wc = config.walk
    part = _pool_map(config, _collapse_chunk, config.ensemble)
    density0 = gaussian_mixture_momentum(wc.n_sites, wc.centers, wc.widths, wc.support)
    counts = np.bincount(part.k_inf, minlength=wc.n_sites)
    empirical = counts / counts.sum()
    tv = 0.5 * float(np.sum(np.abs(empirical - density0)))
    out = _out_dir(config)
    artifacts = []
    summary = EnsembleSummary(
        kind=config.kind,
        n_paths=config.ensemble,
        extra={
            "tv_distance": tv,
            "collapsed_fraction": part.collapsed / config.ensemble,
            "median_steps_to_collapse": float(np.median(part.steps)),
        },
        manifest=_manifest(config),
    )
    edges = np.arange(wc.n_sites + 1) - 0.5
    summary.histograms.append(_histogram("k_infinity", part.k_inf, edges))
    if out is not None:
        _write_csv(
            out / "collapse_law.csv",
            ["k", "initial_prob", "empirical_prob"],
            [
                [k, float(density0[k]), float(empirical[k])]
                for k in range(wc.n_sites)
            ],
        )
        artifacts.append("collapse_law.csv")
        with open(out / "histograms.jsonl", "w") as fh:
            for hist in summary.histograms:
                fh.write(json.dumps(hist.model_dump(), sort_keys=True) + "\n")
        artifacts.append("histograms.jsonl")
    summary.artifacts = artifacts
    return _write_summary(out, summary)


def _run_lindblad(config: RunConfig) -> EnsembleSummary:
    from .lindblad import PositionDiagonalField, diagonal_pde_step

    h, n, _ = _model_matrices(config)
    rho0 = _default_rho0(config, h.shape[0])
    gc = config.grid or GridConfig(lo=-8.0, hi=8.0, n_points=401)
    grid = np.linspace(gc.lo, gc.hi, gc.n_points)
    field = PositionDiagonalField.gaussian(grid, gc.sigma, rho0, center=config.x0)
    kappa = 1.0 + 2.0 * config.model.nbar
    dx = grid[1] - grid[0]
    dt = min(config.dt, 0.39 * dx * dx / kappa)
    n_steps = int(round(config.horizon / dt))
    record_every = max(1, n_steps // config.emit_points)
    snapshots = [(0.0, field)]
    for step in range(1, n_steps + 1):
        field = diagonal_pde_step(field, h, n, dt, kappa)
        if step % record_every == 0 or step == n_steps:
            snapshots.append((step * dt, field))
    out = _out_dir(config)
    artifacts = []
    summary = EnsembleSummary(
        kind=config.kind,
        n_paths=1,
        times=[float(t) for t, _ in snapshots],
        extra={
            "mass_initial": snapshots[0][1].mass(),
            "mass_final": snapshots[-1][1].mass(),
            "variance_final": snapshots[-1][1].variance(),
            "dt_used": dt,
        },
        manifest=_manifest(config),
    )
    if out is not None:
        is_qubit = h.shape[0] == 2
        header = ["t", "x", "trace"] + (["q1", "q2", "q3"] if is_qubit else [])
        rows = []
        pauli = np.array(
            [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
        )
        for t, snap in snapshots:
            prof = snap.trace_profile()
            if is_qubit:
                bloch = np.einsum("kab,xba->xk", pauli, snap.values).real
            for i, x in enumerate(grid):
                row = [float(t), float(x), float(prof[i])]
                if is_qubit:
                    row += [float(c) for c in bloch[i]]
                rows.append(row)
        _write_csv(out / "field.csv", header, rows)
        artifacts.append("field.csv")
    summary.artifacts = artifacts
    return _write_summary(out, summary)


def _run_ito(config: RunConfig) -> EnsembleSummary:
    from .ito import residual_table

    ic = config.ito or ItoConfig()
    rows = residual_table(ic.dims, ic.nbars, ic.seeds, config.seed)
    worst = max(max(r["leibniz"], r["duality"], r["unitarity"], r["noise_fit"]) for r in rows)
    out = _out_dir(config)
    artifacts = []
    summary = EnsembleSummary(
        kind=config.kind,
        n_paths=ic.seeds,
        extra={
            "rows": rows,
            "max_residual": worst,
            "threshold": ic.threshold,
            "passed": bool(worst <= ic.threshold),
        },
        manifest=_manifest(config),
    )
    if out is not None:
        _write_csv(
            out / "residuals.csv",
            ["dim", "nbar", "leibniz", "duality", "unitarity", "noise_fit"],
            [
                [r["dim"], r["nbar"], r["leibniz"], r["duality"], r["unitarity"], r["noise_fit"]]
                for r in rows
            ],
        )
        artifacts.append("residuals.csv")
    summary.artifacts = artifacts
    return _write_summary(out, summary)


def _spin_chunk(payload: str, start: int, count: int):
    from .spinhalf import SpinHalfParams, run_theta_ensemble

    config = RunConfig.model_validate_json(payload)
    sc = config.spin
    params = SpinHalfParams(sc.a, sc.omega0)
    n_steps = int(round(config.horizon / config.dt))
    record_every = max(1, n_steps // config.emit_points)
    return run_theta_ensemble(
        params,
        count,
        config.horizon,
        config.seed,
        dt=config.dt,
        stream_offset=start,
        record_every=record_every if start == 0 else None,
        track_x=True,
    )


def spin_half_report(
    a: float,
    omega0: float,
    master_seed: int = 0,
    mc_paths: int = 256,
    mc_passages: int = 300,
) -> dict:
    """Regime analytics: extrema, waiting times and D_eff by every route.

    The Monte Carlo entries use a deliberately coarse step and modest
    ensembles (this is a survey report, not the acceptance-grade estimate);
    run a dedicated ensemble for publication-quality numbers.
    """
    from .spinhalf import (
        SpinHalfParams,
        deff_from_cubic,
        deff_monte_carlo,
        drift_extrema,
        mean_wait_time,
    )
    import warnings

    params = SpinHalfParams(a, omega0)
    mc_dt = min(2e-3, 0.05 / a**2)
    report: dict[str, Any] = {
        "a": a,
        "omega0": omega0,
        "regime": params.regime,
        "tau_oscill": params.tau_oscill,
        "tau_collapse": params.tau_collapse,
        "extrema": [{"theta": float(t), "kind": k} for t, k in drift_extrema(params)],
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report["tau_wait"] = {
            "asymptotic": mean_wait_time(params, "asymptotic"),
            "quadrature": mean_wait_time(params, "quadrature"),
            "montecarlo": mean_wait_time(
                params, "montecarlo", n_passages=mc_passages, master_seed=master_seed, dt=mc_dt
            ),
        }
        cubic = deff_from_cubic(params, 1e-3)
        mc_t = max(50.0 * params.tau_wait, 20.0)
        d_mc, d_err = deff_monte_carlo(params, mc_t, mc_paths, master_seed + 1, dt=mc_dt)
    report["d_eff"] = {
        "formula": cubic.d_eff_formula,
        "cubic_small_k": cubic.d_eff_perturbative,
        "montecarlo": d_mc,
        "montecarlo_stderr": d_err,
    }
    return report


def _run_spin_half(config: RunConfig) -> EnsembleSummary:
    from .spinhalf import SpinHalfParams, invariant_density, jump_statistics, potential_w

    sc = config.spin
    params = SpinHalfParams(sc.a, sc.omega0)
    ens = _pool_map(config, _spin_chunk, config.ensemble)
    out = _out_dir(config)
    artifacts = []
    waits = ens.waits()
    summary = EnsembleSummary(
        kind=config.kind,
        n_paths=config.ensemble,
        extra={"report": spin_half_report(sc.a, sc.omega0, config.seed)},
        manifest=_manifest(config),
    )
    pooled = np.concatenate([w for w in waits if w.size]) if waits else np.empty(0)
    if pooled.size >= 100:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            stats = jump_statistics(waits, params)
        summary.waiting = WaitingReport(
            n_samples=stats.n_samples,
            mean_wait=stats.mean_wait,
            fitted_rate=stats.fitted_rate,
            ks_distance=stats.ks_distance,
            lag1_autocorr=stats.lag1_autocorr,
        )
        edges = np.linspace(0.0, float(np.quantile(pooled, 0.99)) + 1e-9, 41)
        summary.histograms.append(_histogram("waiting_times", pooled, edges))
    if out is not None:
        if ens.theta_records is not None:
            rows = []
            n_sample = min(5, ens.theta_records.shape[0])
            for pi in range(n_sample):
                for ti, t in enumerate(ens.record_times):
                    th = ens.theta_records[pi, ti]
                    x = ens.x_records[pi, ti] if ens.x_records is not None else 0.0
                    rows.append(
                        [pi, float(t), float(th), float(np.sin(th)), float(np.cos(th)), float(x)]
                    )
            _write_csv(
                out / "theta_paths.csv", ["path", "t", "theta", "q1", "q3", "x"], rows
            )
            artifacts.append("theta_paths.csv")
        rows = [
            [pi, wi, float(w)]
            for pi, ws in enumerate(waits)
            for wi, w in enumerate(ws)
        ]
        _write_csv(out / "waiting_times.csv", ["path", "index", "wait"], rows)
        artifacts.append("waiting_times.csv")
        dens = invariant_density(params)
        thetas = np.linspace(1e-3, np.pi - 1e-3, 400)
        _write_csv(
            out / "potential.csv",
            ["theta", "w", "invariant_density"],
            [
                [float(t), float(potential_w(t, params)), float(dens(t))]
                for t in thetas
            ],
        )
        artifacts.append("potential.csv")
    summary.artifacts = artifacts
    return _write_summary(out, summary)


_RUNNERS = {
    "trajectory": _run_trajectory,
    "tilted-trajectory": _run_tilted,
    "discrete-oqrw": _run_oqrw,
    "discrete-walk": _run_discrete_walk,
    "collapse-stats": _run_collapse,
    "lindblad": _run_lindblad,
    "ito-verify": _run_ito,
    "spin-half": _run_spin_half,
}


def run_ensemble(config: RunConfig) -> EnsembleSummary:
    """Execute one configured experiment and write its artifacts."""
    try:
        return _RUNNERS[config.kind](config)
    except KeyError as exc:
        raise ConfigInvalidError(f"unknown experiment kind {config.kind!r}") from exc


# ---------------------------------------------------------------------------
# Trajectory-average vs deterministic-map comparison
# ---------------------------------------------------------------------------


class CompareConfig(_Base):
    """Config of the stochastic-average vs Lindblad cross-check."""

    model: ModelConfig
    horizon: float = 1.0
    dt: float = 1e-3
    ensemble: int = 10000
    seed: int = 0
    threads: int = 1
    out_dir: Optional[str] = None
    grid: GridConfig = Field(default_factory=lambda: GridConfig(lo=-4.0, hi=4.0, n_points=33))


class CompareResult(_Base):
    sup_trace_distance: float
    max_matrix_distance: float
    n_paths: int
    n_bins: int
    tolerance: float
    passed: bool


def run_compare(config: CompareConfig, tolerance: float = 5e-2) -> CompareResult:
    """Bin a simple-trajectory ensemble against the exact averaged field."""
    from .lindblad import field_from_momentum, trajectory_average_check

    run_cfg = RunConfig(
        kind="trajectory",
        model=config.model,
        horizon=config.horizon,
        dt=config.dt,
        ensemble=config.ensemble,
        seed=config.seed,
        threads=config.threads,
        emit_points=1,
    )
    ens = _pool_map(run_cfg, _trajectory_chunk, config.ensemble)
    h, n, _ = _model_matrices(run_cfg)
    rho0 = _default_rho0(run_cfg, h.shape[0])
    grid = np.linspace(config.grid.lo, config.grid.hi, config.grid.n_points)
    field = field_from_momentum(
        rho0, h, n, config.horizon, grid, x0=0.0, nbar=config.model.nbar
    )
    report = trajectory_average_check(ens.final_x, ens.final_rho, field)
    result = CompareResult(
        sup_trace_distance=report.sup_trace_distance,
        max_matrix_distance=report.max_matrix_distance,
        n_paths=report.n_paths,
        n_bins=report.n_bins,
        tolerance=tolerance,
        passed=bool(report.sup_trace_distance <= tolerance),
    )
    if config.out_dir is not None:
        out = Path(config.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "compare_report.json", "w") as fh:
            json.dump(result.model_dump(), fh, sort_keys=True, indent=2)
            fh.write("\n")
    return result


def default_threads() -> int:
    """Thread count from OQBM_THREADS, defaulting to 1."""
    try:
        return max(1, int(os.environ.get("OQBM_THREADS", "1")))
    except ValueError:
        return 1
