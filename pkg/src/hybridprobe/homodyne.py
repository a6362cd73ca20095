"""Homodyne statistics of the cavity field and their classical Fisher information.

The rotated quadrature is ``x_phi = (a e^{-i phi} + a' e^{i phi}) / sqrt(2)``
(vacuum variance 1/2), so ``<x_phi|n> = e^{-i n phi} psi_n(x)`` with
``psi_n`` the normalised Hermite functions. A density matrix then gives

    p(x | phi) = sum_k e^{-i k phi} S_k(x),   S_k(x) = sum_n rho[n+k, n] psi_{n+k}(x) psi_n(x)

and the harmonics ``S_k`` are tabulated once per state so that scanning
the LO phase is cheap.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar

from .estimation import StencilConfig, scalar_bound, stencil_gradient

P_FLOOR = 1e-12


class GridError(ValueError):
    """The quadrature grid does not capture the distribution."""


@dataclass(frozen=True)
class QuadratureGrid:
    x_min: float = -12.0
    x_max: float = 12.0
    n_points: int = 2401

    def __post_init__(self):
        if self.n_points < 3 or not self.x_max > self.x_min:
            raise ValueError("grid needs x_max > x_min and at least 3 points")
        if not np.isclose(self.x_min, -self.x_max):
            raise ValueError("quadrature grid must be symmetric about 0")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def refined(self) -> "QuadratureGrid":
        return QuadratureGrid(self.x_min, self.x_max, 2 * self.n_points - 1)


def hermite_functions(n_max: int, x: np.ndarray) -> np.ndarray:
    """``psi_n(x)`` for ``n = 0..n_max`` as rows, by the normalised recurrence."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * x * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def quadrature_wavefunction(n: int, x):
    if n < 0:
        raise ValueError("n must be non-negative")
    return hermite_functions(n, x)[n]


def harmonics(rho: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """``S_k(x)`` for ``k = 0..N-1``; row k multiplies ``e^{-i k phi}``."""
    N = rho.shape[0]
    S = np.empty((N, psi.shape[1]), dtype=complex)
    for k in range(N):
        idx = np.arange(N - k)
        S[k] = (rho[idx + k, idx][:, None] * psi[idx + k] * psi[idx]).sum(axis=0)
    return S


def pdf_from_harmonics(S: np.ndarray, phi: float) -> np.ndarray:
    k = np.arange(S.shape[0])
    ph = np.exp(-1j * k * phi)
    # negative harmonics are the conjugates of the positive ones
    return S[0].real + 2 * np.real(ph[1:] @ S[1:])


def homodyne_pdf(rho_light: np.ndarray, phi: float, grid: QuadratureGrid = QuadratureGrid()) -> np.ndarray:
    """Quadrature distribution ``<x_phi|rho|x_phi>`` on ``grid.x``."""
    rho_light = np.asarray(rho_light)
    x = grid.x
    p = pdf_from_harmonics(harmonics(rho_light, hermite_functions(rho_light.shape[0] - 1, x)), phi)
    norm = trapezoid(p, x)
    if abs(norm - 1) > 1e-4:
        raise GridError(f"homodyne distribution integrates to {norm:.6f} on [{grid.x_min}, {grid.x_max}]")
    return p


def cfi_matrix(p: np.ndarray, *dp: np.ndarray, grid: QuadratureGrid = QuadratureGrid(),
               p_floor: float = P_FLOOR) -> np.ndarray:
    """``F_ij = int (d_i p)(d_j p) / p dx`` by the trapezoid rule, with ``p >= p_floor``."""
    x = grid.x
    denom = np.maximum(p, p_floor)
    P = len(dp)
    F = np.empty((P, P))
    for i in range(P):
        for j in range(i, P):
            F[i, j] = F[j, i] = trapezoid(dp[i] * dp[j] / denom, x)
    return F


@dataclass
class HomodyneScan:
    phases: np.ndarray
    F: np.ndarray
    scalar: np.ndarray
    best_phase: float
    best_scalar: float
    best_F: np.ndarray = field(default_factory=lambda: np.full((2, 2), np.nan))


class _Objective:
    """Per-phase CFI of a stencil family of cavity states."""

    def __init__(self, rho: np.ndarray, drho: list[np.ndarray], grid: QuadratureGrid, p_floor: float):
        self.grid = grid
        self.p_floor = p_floor
        psi = hermite_functions(rho.shape[0] - 1, grid.x)
        self.S = harmonics(rho, psi)
        self.dS = [harmonics(d, psi) for d in drho]

    def fisher(self, phi: float) -> np.ndarray:
        p = pdf_from_harmonics(self.S, phi)
        dp = [pdf_from_harmonics(d, phi) for d in self.dS]
        return cfi_matrix(p, *dp, grid=self.grid, p_floor=self.p_floor)

    def __call__(self, phi: float) -> float:
        return scalar_bound(self.fisher(phi))


def optimize_lo_phase(states: np.ndarray, s: StencilConfig = StencilConfig(),
                      grid: QuadratureGrid = QuadratureGrid(), phase_count: int = 120,
                      xtol: float = 1e-4, p_floor: float = P_FLOOR) -> HomodyneScan:
    """Minimise ``Tr[F^-1]`` over the LO phase.

    ``states`` are the nine stencil-shifted cavity density matrices. A coarse
    scan over ``phase_count`` phases in ``[-pi, pi)`` is refined by a bounded
    scalar search within one coarse step of the best phase.
    """
    states = np.asarray(states)
    obj = _Objective(states[0], stencil_gradient(states, s), grid, p_floor)
    norm = trapezoid(pdf_from_harmonics(obj.S, 0.0), grid.x)
    if abs(norm - 1) > 1e-4:
        raise GridError(f"homodyne distribution integrates to {norm:.6f}")
    phases = -np.pi + 2 * np.pi * np.arange(phase_count) / phase_count
    F = np.stack([obj.fisher(ph) for ph in phases])
    scalar = np.array([scalar_bound(f) for f in F])
    if not np.any(np.isfinite(scalar)):
        return HomodyneScan(phases, F, scalar, float("nan"), float("inf"))
    k = int(np.argmin(scalar))
    best_phase, best_scalar, best_F = float(phases[k]), float(scalar[k]), F[k]
    step = 2 * np.pi / phase_count
    res = minimize_scalar(obj, bounds=(phases[k] - step, phases[k] + step), method="bounded",
                          options={"xatol": xtol})
    if res.fun < best_scalar:
        best_phase = float((res.x + np.pi) % (2 * np.pi) - np.pi)
        best_scalar = float(res.fun)
        best_F = obj.fisher(res.x)
    return HomodyneScan(phases, F, scalar, best_phase, best_scalar, best_F)
