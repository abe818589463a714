"""Numeric verification of the noise-algebra identities behind the dilation.

The identities are purely algebraic -- they hold for arbitrary operators --
so they are checked on random finite matrices standing in for the unbounded
originals.  With script operators

    P_s = P + i N,    H_s = H + (P N + N^dag P) / 2,

the dual generator at occupation nbar is

    L*(A) = i[H_s, A] + nbar (P_s A P_s^dag - {P_s P_s^dag, A}/2)
          + (1 + nbar) (P_s^dag A P_s - {P_s^dag P_s, A}/2),

its predual L acts on states with the adjoints swapped, and the deformed
product rule reads

    L*(AB) - L*(A) B - A L*(B)
        = -[P_s, A] nbar [P_s^dag, B] - [P_s^dag, A] (1 + nbar) [P_s, B].

Each residual function returns the max norm of the corresponding defect;
values at round-off level certify the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, IllConditionedFitError
from .linalg import as_complex_matrix, herm_deviation, hermitize, max_norm

__all__ = [
    "DilationData",
    "random_dilation_data",
    "dual_generator",
    "state_generator",
    "leibniz_residual",
    "duality_residual",
    "unitarity_drift_residual",
    "NoiseFit",
    "derive_noise_coefficients",
    "residual_table",
]

_HERM_TOL = 1e-12


@dataclass(frozen=True)
class DilationData:
    """Finite stand-ins (P, N, H) defining one generator instance.

    H must be Hermitian; P and N are arbitrary (the identities do not need
    more, and arbitrary stand-ins exercise them harder).  The script
    operators are derived on construction.
    """

    p: np.ndarray
    n: np.ndarray
    h: np.ndarray
    nbar: float = 0.0
    script_p: np.ndarray = field(init=False, repr=False)
    script_h: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        p = as_complex_matrix(self.p)
        n = as_complex_matrix(self.n)
        h = as_complex_matrix(self.h)
        if not (p.shape == n.shape == h.shape):
            raise DimensionMismatchError("P, N, H must share one dimension")
        dev = herm_deviation(h)
        if dev > _HERM_TOL:
            from .errors import NonHermitianError

            raise NonHermitianError(dev, _HERM_TOL)
        if self.nbar < 0:
            raise ValueError("nbar must be nonnegative")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "script_p", p + 1j * n)
        object.__setattr__(self, "script_h", h + 0.5 * (p @ n + n.conj().T @ p))

    @property
    def dim(self) -> int:
        return self.p.shape[0]


def random_dilation_data(dim: int, nbar: float, rng: np.random.Generator) -> DilationData:
    """Stand-ins with independent standard complex Gaussian entries.

    P and N are left arbitrary; H is Hermitized.
    """

    def gauss():
        return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)

    return DilationData(gauss(), gauss(), hermitize(gauss()), nbar)


def _dissipator(a, op):
    opd = op.conj().T
    return opd @ a @ op - 0.5 * (opd @ op @ a + a @ opd @ op)


def dual_generator(data: DilationData, a) -> np.ndarray:
    """Heisenberg-picture generator L*(A)."""
    a = as_complex_matrix(a)
    sp = data.script_p
    out = 1j * (data.script_h @ a - a @ data.script_h)
    out = out + (1.0 + data.nbar) * _dissipator(a, sp)
    if data.nbar != 0.0:
        out = out + data.nbar * _dissipator(a, sp.conj().T)
    return out


def state_generator(data: DilationData, rho) -> np.ndarray:
    """Schroedinger-picture generator L(rho), the predual of L*."""
    rho = as_complex_matrix(rho)
    sp = data.script_p
    spd = sp.conj().T
    out = -1j * (data.script_h @ rho - rho @ data.script_h)
    out = out + (1.0 + data.nbar) * (sp @ rho @ spd - 0.5 * (spd @ sp @ rho + rho @ spd @ sp))
    if data.nbar != 0.0:
        out = out + data.nbar * (spd @ rho @ sp - 0.5 * (sp @ spd @ rho + rho @ sp @ spd))
    return out


def _comm(x, y):
    return x @ y - y @ x


def noise_defect(data: DilationData, a, b) -> np.ndarray:
    """L*(AB) - L*(A) B - A L*(B), the bilinear noise fingerprint."""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    if a.shape != b.shape or a.shape != data.p.shape:
        raise DimensionMismatchError("operands must match the stand-in dimension")
    return dual_generator(data, a @ b) - dual_generator(data, a) @ b - a @ dual_generator(data, b)


def leibniz_residual(data: DilationData, a, b) -> float:
    """Defect of the deformed product rule; zero certifies the noise algebra."""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    sp = data.script_p
    spd = sp.conj().T
    expected = -data.nbar * _comm(sp, a) @ _comm(spd, b) - (1.0 + data.nbar) * _comm(
        spd, a
    ) @ _comm(sp, b)
    return max_norm(noise_defect(data, a, b) - expected)


def duality_residual(data: DilationData, a, rho) -> float:
    """|Tr(L*(A) rho) - Tr(A L(rho))|."""
    a = as_complex_matrix(a)
    rho = as_complex_matrix(rho)
    lhs = np.trace(dual_generator(data, a) @ rho)
    rhs = np.trace(a @ state_generator(data, rho))
    return float(abs(lhs - rhs))


def unitarity_drift_residual(data: DilationData) -> float:
    """Drift-unitarity defect of the noise flow.

    With drift G = -(i H_s + (nbar P_s P_s^dag + (1 + nbar) P_s^dag P_s)/2),
    the dt-coefficient of d(U^dag U) including the noise cross terms is
    G^dag + G + nbar P_s P_s^dag + (1 + nbar) P_s^dag P_s, which reduces to
    i(H_s^dag - H_s).  The Hermitian part of the derived H_s enters the
    drift (H_s itself need not be Hermitian for arbitrary P stand-ins), so
    the residual at round-off level certifies the cancellation between the
    drift and the noise cross terms.
    """
    sp = data.script_p
    spd = sp.conj().T
    cross = data.nbar * (sp @ spd) + (1.0 + data.nbar) * (spd @ sp)
    h_eff = hermitize(data.script_h)
    g = -(1j * h_eff + 0.5 * cross)
    return max_norm(g.conj().T + g + cross)


@dataclass(frozen=True)
class NoiseFit:
    """Least-squares identification of the noise structure from the defect."""

    nbar_fit: float
    max_residual: float
    n_samples: int
    derivative_form: str = "Q(A) = i[P_s, A]"


def derive_noise_coefficients(
    data: DilationData, samples: int, rng: np.random.Generator
) -> NoiseFit:
    """Fit the occupation number from the bilinear defect.

    Draws ``samples`` random operand pairs, stacks the defects and solves the
    one-parameter least-squares problem for nbar in the ansatz
    -[P_s,A] nbar [P_s^dag,B] - [P_s^dag,A](1+nbar)[P_s,B].  Degenerate
    defects (e.g. scalar P_s) raise ``IllConditionedFitError``.
    """
    if samples < 10:
        raise ValueError("at least 10 sample pairs are required")
    sp = data.script_p
    spd = sp.conj().T
    dim = data.dim

    def gauss():
        return (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)

    numer = 0.0
    denom = 0.0
    defects = []
    xs = []
    ys = []
    for _ in range(samples):
        a, b = gauss(), gauss()
        defect = noise_defect(data, a, b)
        x = _comm(sp, a) @ _comm(spd, b)
        y = _comm(spd, a) @ _comm(sp, b)
        # residual(nbar) = defect + nbar x + (1 + nbar) y = (defect + y) + nbar (x + y)
        base = defect + y
        slope = x + y
        numer -= np.vdot(slope, base).real
        denom += np.vdot(slope, slope).real
        defects.append(defect)
        xs.append(x)
        ys.append(y)
    if denom < 1e-24:
        raise IllConditionedFitError("noise defect is numerically zero; cannot identify nbar")
    nbar_fit = numer / denom
    max_res = max(
        max_norm(d + nbar_fit * x + (1.0 + nbar_fit) * y) for d, x, y in zip(defects, xs, ys)
    )
    return NoiseFit(float(nbar_fit), float(max_res), samples)


def residual_table(dims, nbars, n_seeds: int, master_seed: int = 0) -> list[dict]:
    """Max residuals per (dim, nbar, identity) over seeded random stand-ins.

    Returns one row per (dim, nbar) with the four residual maxima; used by
    the verification command, which fails on any value above 1e-8.
    """
    from .rngstreams import stream_generator

    rows = []
    stream = 0
    for dim in dims:
        for nbar in nbars:
            worst = {"leibniz": 0.0, "duality": 0.0, "unitarity": 0.0, "noise_fit": 0.0}
            for _ in range(n_seeds):
                rng = stream_generator(master_seed, stream)
                stream += 1
                data = random_dilation_data(dim, nbar, rng)

                def gauss():
                    return (
                        rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
                    ) / np.sqrt(2)

                worst["leibniz"] = max(worst["leibniz"], leibniz_residual(data, gauss(), gauss()))
                worst["duality"] = max(worst["duality"], duality_residual(data, gauss(), gauss()))
                worst["unitarity"] = max(worst["unitarity"], unitarity_drift_residual(data))
                fit = derive_noise_coefficients(data, 10, rng)
                worst["noise_fit"] = max(
                    worst["noise_fit"], fit.max_residual, abs(fit.nbar_fit - nbar)
                )
            rows.append({"dim": dim, "nbar": nbar, **worst})
    return rows
