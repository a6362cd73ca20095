"""Closed and open evolution.

Closed dynamics diagonalises the Hamiltonian once and reuses the spectral
decomposition for every time. Open dynamics integrates the Born-Markov master
equation with fixed-step RK4 in the frame rotating at the cavity frequency,
acting on the density matrix directly through ladder-operator index shifts
(no superoperator is ever built).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .hilbert import HilbertDims
from .model import SystemParams, frame_generator

log = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Propagator:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    dims: HilbertDims | None = None

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def unitary(self, t: float) -> np.ndarray:
        V = self.eigenvectors
        return (V * np.exp(-1j * self.eigenvalues * t)) @ V.conj().T


@dataclass(frozen=True)
class DecoherenceRates:
    kappa: float = 0.01
    Gamma: float = 1e-5
    gamma: float = 0.01
    Nbar: float = 100.0

    def __post_init__(self):
        for name in ("kappa", "Gamma", "gamma", "Nbar"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @classmethod
    def zero(cls) -> "DecoherenceRates":
        return cls(0.0, 0.0, 0.0, 0.0)

    def scaled(self, factor: float) -> "DecoherenceRates":
        return DecoherenceRates(self.kappa * factor, self.Gamma * factor, self.gamma * factor, self.Nbar)


@dataclass(frozen=True)
class TimeGrid:
    t_values: np.ndarray = field(default_factory=lambda: TimeGrid.uniform().t_values)

    def __post_init__(self):
        t = np.asarray(self.t_values, dtype=float)
        if t.ndim != 1 or len(t) == 0:
            raise ValueError("time grid must be a non-empty 1-d array")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be non-negative and strictly increasing")
        object.__setattr__(self, "t_values", t)

    @classmethod
    def uniform(cls, t_max: float = 6 * np.pi, n: int = 300) -> "TimeGrid":
        """``n`` equispaced points in ``(0, t_max]``."""
        return cls(np.linspace(t_max / n, t_max, n))

    def __len__(self):
        return len(self.t_values)


def diagonalize(H: np.ndarray, sectors: np.ndarray | None = None, atol: float = 1e-10) -> Propagator:
    """Spectral decomposition of a Hermitian matrix.

    With ``sectors`` (an integer label per basis state of a conserved
    quantity) each block is diagonalised separately. Every block is shifted by
    its mean diagonal before ``eigh`` so large carrier frequencies do not eat
    into the precision of the small couplings.
    """
    H = np.asarray(H)
    scale = max(1.0, float(np.abs(H).max()))
    if H.ndim != 2 or H.shape[0] != H.shape[1] or not np.allclose(H, H.conj().T, rtol=0, atol=atol * scale):
        raise ValueError("diagonalize needs a square Hermitian matrix")
    d = H.shape[0]
    if sectors is None:
        sectors = np.zeros(d, dtype=int)
    sectors = np.asarray(sectors)
    mask = sectors[:, None] != sectors[None, :]
    if np.any(np.abs(H[mask]) > atol * scale):
        raise ValueError("Hamiltonian couples different sectors")
    evals = np.empty(d)
    V = np.zeros((d, d), dtype=complex)
    for label in np.unique(sectors):
        idx = np.flatnonzero(sectors == label)
        block = H[np.ix_(idx, idx)]
        shift = float(np.mean(np.diag(block).real))
        w, v = np.linalg.eigh(block - shift * np.eye(len(idx)))
        evals[idx] = w + shift
        V[np.ix_(idx, idx)] = v
    return Propagator(evals, V)


def evolve_pure(prop: Propagator, psi0: np.ndarray, t: float) -> np.ndarray:
    return evolve_pure_many(prop, psi0, [t])[0]


def evolve_pure_many(prop: Propagator, psi0: np.ndarray, times: Sequence[float]) -> np.ndarray:
    """States at every time, shape ``(len(times), d)``."""
    psi0 = np.asarray(psi0)
    if psi0.shape != (prop.dim,):
        raise ValueError(f"state of shape {psi0.shape} does not match propagator dim {prop.dim}")
    V = prop.eigenvectors
    coeff = V.conj().T @ psi0
    phases = np.exp(-1j * np.outer(prop.eigenvalues, np.asarray(times, dtype=float)))
    return (V @ (coeff[:, None] * phases)).T


def mixture_components(rho: np.ndarray, cutoff: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Weights and orthonormal vectors ``(r, d)`` with ``rho = sum_k w_k |v_k><v_k|``."""
    w, v = np.linalg.eigh(rho)
    keep = w > cutoff
    return w[keep], v[:, keep].T


def evolve_mixed_many(prop: Propagator, rho0: np.ndarray, times: Sequence[float]):
    """Yield ``rho(t)`` for each time by propagating the eigen-mixture of ``rho0``."""
    weights, vecs = mixture_components(rho0)
    paths = np.stack([evolve_pure_many(prop, v, times) for v in vecs])
    for k in range(len(times)):
        psi = paths[:, k, :]
        yield (psi.T * weights) @ psi.conj()


# ----------------------------------------------------------------------------
# open dynamics


@njit(cache=True, fastmath=True, error_model="numpy")
def _rhs_kernel(rho, out, dvec, g1, g2, jc_idx, jc_cf, up_idx, up_cf, dn_idx, dn_cf,
                a_idx, a_cf, b_idx, b_cf, bd_idx, bd_cf, sz, ca, cb, cbd, cz):
    # rho must be Hermitian: rho H_eff' is read off as conj((H_eff rho)[j, i])
    B, d, _ = rho.shape
    for s in range(B):
        G1 = g1[s]
        G2 = g2[s]
        for i in range(d):
            di = dvec[i]
            ki = jc_idx[i]
            ui = up_idx[i]
            wi = dn_idx[i]
            ai = a_idx[i]
            bi = b_idx[i]
            ei = bd_idx[i]
            for j in range(i, d):
                r = rho[s, i, j]
                acc = (di - np.conj(dvec[j])) * r
                if ki >= 0:
                    acc += G1 * jc_cf[i] * rho[s, ki, j]
                kj = jc_idx[j]
                if kj >= 0:
                    acc -= G1 * jc_cf[j] * rho[s, i, kj]
                if ui >= 0:
                    acc += G2 * up_cf[i] * rho[s, ui, j]
                if wi >= 0:
                    acc += G2 * dn_cf[i] * rho[s, wi, j]
                uj = up_idx[j]
                if uj >= 0:
                    acc -= G2 * up_cf[j] * rho[s, i, uj]
                wj = dn_idx[j]
                if wj >= 0:
                    acc -= G2 * dn_cf[j] * rho[s, i, wj]
                val = -1j * acc + cz * sz[i] * sz[j] * r
                aj = a_idx[j]
                if ai >= 0 and aj >= 0:
                    val += ca * a_cf[i] * a_cf[j] * rho[s, ai, aj]
                bj = b_idx[j]
                if bi >= 0 and bj >= 0:
                    val += cb * b_cf[i] * b_cf[j] * rho[s, bi, bj]
                ej = bd_idx[j]
                if ei >= 0 and ej >= 0:
                    val += cbd * bd_cf[i] * bd_cf[j] * rho[s, ei, ej]
                out[s, i, j] = val
                out[s, j, i] = np.conj(val)


@njit(cache=True, fastmath=True)
def _stage(rho, k, acc, tmp, weight, h):
    # acc += weight * k ; tmp = rho + h * k
    flat_r = rho.ravel()
    flat_k = k.ravel()
    flat_a = acc.ravel()
    flat_t = tmp.ravel()
    for n in range(flat_r.size):
        kv = flat_k[n]
        flat_a[n] = flat_a[n] + weight * kv if weight != 1.0 else kv
        flat_t[n] = flat_r[n] + h * kv


@njit(cache=True, fastmath=True)
def _finish(rho, k, acc, h):
    flat_r = rho.ravel()
    flat_k = k.ravel()
    flat_a = acc.ravel()
    for n in range(flat_r.size):
        flat_r[n] += h / 6.0 * (flat_a[n] + flat_k[n])


class Lindbladian:
    """Master-equation generator for a batch of parameter sets in the rotating frame.

    Dissipators use ``D[O] = 2 O rho O' - rho O'O - O'O rho`` with prefactors
    kappa/2 (cavity), Gamma/2 (1 + Nbar) and Gamma/2 Nbar (mechanics) and
    gamma/4 (qubit dephasing). All parameter sets must share their
    frequencies; only the couplings may differ. Acts on Hermitian
    ``(B, d, d)`` arrays.
    """

    def __init__(self, params: Sequence[SystemParams], rates: DecoherenceRates, dims: HilbertDims):
        first = params[0]
        for p in params:
            if (p.omega_c, p.omega_q, p.omega_m) != (first.omega_c, first.omega_q, first.omega_m):
                raise ValueError("batched parameters may differ in couplings only")
        self.dims = dims
        self.batch = len(params)
        self.g1 = np.array([p.g1 for p in params], dtype=float)
        self.g2 = np.array([p.g2 for p in params], dtype=float)
        r = rates
        nc, nm = dims.cavity_dim, dims.mech_dim
        q, n, m = (x.ravel() for x in np.meshgrid(np.arange(2), np.arange(nc), np.arange(nm), indexing="ij"))
        index = lambda qq, nn, mm: (qq * nc + nn) * nm + mm
        sz = np.where(q == 0, -1.0, 1.0)
        bbd = np.where(m < nm - 1, m + 1.0, 0.0)  # truncated b b'
        decay = 0.5 * r.kappa * n + 0.5 * r.Gamma * (1 + r.Nbar) * m + 0.5 * r.Gamma * r.Nbar * bbd + 0.25 * r.gamma
        herm = first.omega_m * m + 0.5 * (first.omega_q - first.omega_c) * sz
        self.dvec = (herm - 1j * decay).astype(complex)
        none = -np.ones_like(q)
        # s+ a couples |e,n> with |g,n+1>, amplitude sqrt(n+1)
        jc_idx = np.where((q == 1) & (n + 1 < nc), index(0, n + 1, m), none)
        jc_idx = np.where((q == 0) & (n >= 1), index(1, n - 1, m), jc_idx)
        jc_cf = np.where(q == 1, np.sqrt(n + 1.0), np.sqrt(n))
        up_idx = np.where(m + 1 < nm, index(q, n, m + 1), none)
        dn_idx = np.where(m >= 1, index(q, n, m - 1), none)
        a_idx = np.where(n + 1 < nc, index(q, n + 1, m), none)
        self._tables = (
            jc_idx, jc_cf,
            up_idx, -n * np.sqrt(m + 1.0),
            dn_idx, -n * np.sqrt(m.astype(float)),
            a_idx, np.sqrt(n + 1.0),
            up_idx, np.sqrt(m + 1.0),
            dn_idx, np.sqrt(m.astype(float)),
            sz,
            float(r.kappa), float(r.Gamma * (1 + r.Nbar)), float(r.Gamma * r.Nbar), 0.5 * float(r.gamma),
        )

    def __call__(self, rho: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        rho = np.ascontiguousarray(rho, dtype=complex)
        if out is None:
            out = np.empty_like(rho)
        _rhs_kernel(rho, out, self.dvec, self.g1, self.g2, *self._tables)
        return out

    def rk4(self, rho: np.ndarray, h: float, steps: int) -> np.ndarray:
        """Advance ``rho`` (modified in place) by ``steps`` RK4 steps of size ``h``."""
        k = np.empty_like(rho)
        acc = np.empty_like(rho)
        tmp = np.empty_like(rho)
        for _ in range(steps):
            self(rho, k)
            _stage(rho, k, acc, tmp, 1.0, 0.5 * h)
            self(tmp, k)
            _stage(rho, k, acc, tmp, 2.0, 0.5 * h)
            self(tmp, k)
            _stage(rho, k, acc, tmp, 2.0, h)
            self(tmp, k)
            _finish(rho, k, acc, h)
        return rho


def to_lab_frame(rho_rot: np.ndarray, omega_c: float, t: float, dims: HilbertDims) -> np.ndarray:
    """Undo the rotation ``exp(-i wc (a'a + sz/2) t)`` on a density matrix (or batch)."""
    phase = np.exp(-1j * omega_c * frame_generator(dims) * t)
    return phase[:, None] * rho_rot * phase.conj()[None, :]


def iter_open(
    params: Sequence[SystemParams],
    rates: DecoherenceRates,
    rho0: np.ndarray,
    grid: TimeGrid,
    dims: HilbertDims,
    dt: float = 5e-3,
    frame: str = "lab",
    drift_per_time: float = 1e-8,
):
    """Stream ``(t, rhos)`` for several parameter sets sharing ``rho0``.

    ``rhos`` has shape ``(len(params), d, d)``. Each grid interval is split
    into equal steps no longer than ``dt``. The trace is monitored at every
    grid time: drift above 1e-6 raises IntegrationError, drift above
    ``drift_per_time`` per unit time is logged. Positivity of the first
    parameter set is checked at the final time.
    """
    if frame not in ("lab", "rotating"):
        raise ValueError("frame must be 'lab' or 'rotating'")
    rho0 = np.asarray(rho0, dtype=complex)
    d = dims.total
    if rho0.shape != (d, d):
        raise ValueError(f"rho0 of shape {rho0.shape} does not match dims {dims.shape}")
    if dt > 0.01:
        log.warning("dt=%g exceeds the 0.01 resolution guideline", dt)
    gen = Lindbladian(params, rates, dims)
    B = len(params)
    rho = np.repeat(0.5 * (rho0 + rho0.conj().T)[None], B, axis=0)
    tr0 = np.trace(rho0).real
    t_prev = 0.0
    times = grid.t_values
    for i, t in enumerate(times):
        span = t - t_prev
        if span > 0:
            steps = int(np.ceil(span / dt - 1e-9))
            gen.rk4(rho, span / steps, steps)
        t_prev = t
        drift = float(np.max(np.abs(np.einsum("bii->b", rho).real - tr0)))
        if not drift <= 1e-6:  # also catches a blown-up (nan) state
            raise IntegrationError(f"trace drift {drift:.3e} at t={t:.4g} (index {i}) with dt={dt}")
        if t > 0 and drift > drift_per_time * max(t, 1.0):
            log.warning("trace drift %.3e at t=%.4g exceeds %.1e per unit time", drift, t, drift_per_time)
        flat = rho.copy()
        if i == len(times) - 1:
            lo = float(np.linalg.eigvalsh(flat[0]).min())
            if lo < -1e-6:
                raise IntegrationError(f"density matrix lost positivity: min eigenvalue {lo:.3e} at t={t:.4g}")
        yield t, (to_lab_frame(flat, params[0].omega_c, t, dims) if frame == "lab" else flat)


def evolve_open(
    p: SystemParams,
    r: DecoherenceRates,
    rho0: np.ndarray,
    grid: TimeGrid,
    dims: HilbertDims,
    dt: float = 5e-3,
    frame: str = "lab",
    max_halvings: int = 4,
) -> list[np.ndarray]:
    """Density matrices at each grid time for one parameter set.

    The step is halved (up to ``max_halvings`` times) until the final trace
    drift is below 1e-8 per unit time.
    """
    for _ in range(max_halvings + 1):
        out = [rhos[0] for _, rhos in iter_open([p], r, rho0, grid, dims, dt=dt, frame=frame)]
        drift = abs(np.trace(out[-1]).real - np.trace(rho0).real)
        if drift <= 1e-8 * max(grid.t_values[-1], 1.0):
            return out
        dt /= 2
    raise IntegrationError(f"trace drift {drift:.3e} did not settle (last dt={dt})")
