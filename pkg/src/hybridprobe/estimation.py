"""Quantum Fisher information for the couplings (g1, g2).

Parameter derivatives of states come from a five-point stencil over exactly
re-diagonalised Hamiltonians: the centre plus ``lambda +- Delta, +- 2 Delta``
for each coupling, nine states in all. Stencil members are always stacked in
``STENCIL_ORDER``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .dynamics import DecoherenceRates, TimeGrid, diagonalize, evolve_pure_many, iter_open
from .hilbert import SUBSYSTEMS, HilbertDims, partial_trace, reduce_pure
from .model import InitialState, SystemParams, _pieces, excitation_sectors

log = logging.getLogger(__name__)

STEPS = (-2, -1, 1, 2)
WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
# centre, then g1 at STEPS, then g2 at STEPS
STENCIL_ORDER = (("g1", 0),) + tuple(("g1", k) for k in STEPS) + tuple(("g2", k) for k in STEPS)
PARAMS = ("g1", "g2")
LABELS = ("global",) + SUBSYSTEMS
SINGULAR_REL = 1e-12  # det / (Q11 Q22) = 1 - r^2 below this counts as singular
EPS_REL = 1e-10


@dataclass(frozen=True)
class StencilConfig:
    delta_g1: float = 1e-4
    delta_g2: float = 1e-4

    def __post_init__(self):
        if not (self.delta_g1 > 0 and self.delta_g2 > 0):
            raise ValueError("stencil increments must be positive")

    def delta(self, name: str) -> float:
        return self.delta_g1 if name == "g1" else self.delta_g2

    def points(self, p: SystemParams) -> list[SystemParams]:
        return [p.shifted(**{name: k * self.delta(name)}) for name, k in STENCIL_ORDER]


def stencil_derivative(values: Sequence[np.ndarray], delta: float) -> np.ndarray:
    """Five-point first derivative from samples at ``lambda + (-2, -1, 0, 1, 2) delta``.

    The centre sample is not used.
    """
    if len(values) != 5:
        raise ValueError("stencil needs exactly five samples")
    v = [np.asarray(x) for x in values]
    if any(x.shape != v[0].shape for x in v):
        raise ValueError("stencil samples differ in shape")
    return (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * delta)


def stencil_gradient(stack: np.ndarray, s: StencilConfig) -> list[np.ndarray]:
    """``[d/dg1, d/dg2]`` of a quantity stacked along axis 0 in ``STENCIL_ORDER``."""
    out = []
    for i, name in enumerate(PARAMS):
        block = stack[1 + 4 * i: 5 + 4 * i]
        out.append(np.tensordot(WEIGHTS, block, axes=1) / s.delta(name))
    return out


def qfi_pure(psi: np.ndarray, *dpsi: np.ndarray) -> np.ndarray:
    """``4 Re[<di|dj> - <di|psi><psi|dj>]`` for a normalised pure state."""
    D = np.stack(dpsi)
    overlaps = D.conj() @ psi
    G = D.conj() @ D.T
    Q = 4 * np.real(G - np.outer(overlaps, overlaps.conj()))
    return 0.5 * (Q + Q.T)


def qfi_mixture(weights: np.ndarray, psis: np.ndarray, *dpsis: np.ndarray, eps: float | None = None) -> np.ndarray:
    """QFI of ``rho = sum_k w_k |psi_k><psi_k|`` from its orthonormal components.

    ``psis`` is ``(r, d)`` and each derivative ``(r, d)``; the spectrum of rho is
    ``weights`` (plus zeros), so no d x d matrix is formed. Pairs with
    ``w_k + w_l <= eps`` are dropped.
    """
    w = np.asarray(weights, dtype=float)
    eps = EPS_REL * 2 * w.max() if eps is None else eps
    G = [psis.conj() @ d.T for d in dpsis]  # G[l, k] = <psi_l | d psi_k>
    # <psi_l| d rho |psi_k> = w_k G[l,k] + w_l conj(G[k,l])
    A = [g * w[None, :] + (g.conj().T) * w[:, None] for g in G]
    S = w[:, None] + w[None, :]
    mask = S > eps
    inv = np.where(mask, 1.0 / np.where(mask, S, 1.0), 0.0)
    P = len(dpsis)
    Q = np.empty((P, P))
    for i in range(P):
        for j in range(i, P):
            inner = 2 * np.sum(np.real(A[i] * A[j].T) * inv)
            # components of d psi_k outside the support
            cross = np.einsum("kd,kd->k", dpsis[i].conj(), dpsis[j]) - np.einsum("lk,lk->k", G[i].conj(), G[j])
            outer = 4 * np.sum(np.where(w > eps, w, 0.0) * np.real(cross))
            Q[i, j] = Q[j, i] = inner + outer
    return Q


def _eig(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    return p, V


def _check_hermitian(drho: np.ndarray, tol: float = 1e-8):
    scale = max(1.0, float(np.abs(drho).max()))
    if not np.allclose(drho, drho.conj().T, rtol=0, atol=tol * scale):
        raise ValueError("derivative of a density matrix must be Hermitian")


def _default_eps(p: np.ndarray) -> float:
    return EPS_REL * 2 * max(float(p.max()), 0.0)


def sld(rho: np.ndarray, drho: np.ndarray, eps: float | None = None) -> np.ndarray:
    """Symmetric logarithmic derivative solving ``drho = (L rho + rho L)/2``.

    Eigenvalue pairs with ``p_k + p_l <= eps`` (default ``1e-10 * 2 p_max``)
    are left at zero.
    """
    _check_hermitian(drho)
    p, V = _eig(rho)
    eps = _default_eps(p) if eps is None else eps
    D = V.conj().T @ drho @ V
    S = p[:, None] + p[None, :]
    mask = S > eps
    L = np.where(mask, 2 * D / np.where(mask, S, 1.0), 0.0)
    L = V @ L @ V.conj().T
    return 0.5 * (L + L.conj().T)


class RouteMismatch(ArithmeticError):
    pass


def qfi_mixed(rho: np.ndarray, *drho: np.ndarray, eps: float | None = None, check: bool = True) -> np.ndarray:
    """QFI matrix of a density matrix from its parameter derivatives.

    Computed in the eigenbasis of rho as
    ``2 sum Re[<k|di rho|l><l|dj rho|k>] / (p_k + p_l)``; with ``check`` the
    SLD route ``Tr[rho (Li Lj + Lj Li)/2]`` is evaluated too and the two
    must agree to 1e-8 (relative to the largest entry).
    """
    for d in drho:
        _check_hermitian(d)
    p, V = _eig(rho)
    eps = _default_eps(p) if eps is None else eps
    D = [V.conj().T @ d @ V for d in drho]
    S = p[:, None] + p[None, :]
    mask = S > eps
    inv = np.where(mask, 1.0 / np.where(mask, S, 1.0), 0.0)
    P = len(drho)
    Q = np.empty((P, P))
    for i in range(P):
        for j in range(i, P):
            Q[i, j] = Q[j, i] = 2 * np.sum(np.real(D[i] * D[j].T) * inv)
    if check:
        # SLD route, still in the eigenbasis: L_kl = 2 D_kl / (p_k + p_l)
        Ls = [2 * d * inv for d in D]
        Q2 = np.empty((P, P))
        for i in range(P):
            for j in range(i, P):
                # Tr[rho Li Lj] = sum_kl p_k Li_kl Lj_lk
                val = np.sum(p[:, None] * np.real(Ls[i] * Ls[j].T))
                Q2[i, j] = Q2[j, i] = val
        scale = max(1.0, float(np.abs(Q).max()))
        if np.abs(Q - Q2).max() > 1e-8 * scale:
            raise RouteMismatch(f"eigenbasis and SLD routes disagree by {np.abs(Q - Q2).max():.3e}")
    return Q


def nuisance_diag(Q: np.ndarray) -> tuple[float, float]:
    """Diagonal of the inverse of a 2x2 Fisher matrix; infinities when singular."""
    Q = np.asarray(Q, dtype=float)
    if not np.isfinite(Q).all():
        return np.inf, np.inf
    scale = Q[0, 0] * Q[1, 1]
    # exact rationals: near-singular matrices would otherwise lose every digit of ad - bc
    a, b, c, d = (Fraction(float(x)) for x in Q.ravel())
    det = a * d - b * c
    if not (scale > 0 and det > SINGULAR_REL * Fraction(scale)):
        return np.inf, np.inf
    return _ratio(d, det), _ratio(a, det)


def _ratio(num: Fraction, den: Fraction) -> float:
    try:
        return float(num / den)
    except OverflowError:
        return np.inf


def scalar_bound(Q: np.ndarray) -> float:
    """``Tr[Q^-1]`` of a 2x2 Fisher matrix; infinity when singular."""
    a, b = nuisance_diag(Q)
    return a + b


def inverse_diag(Q: np.ndarray) -> tuple[float, float]:
    """``(1/Q11, 1/Q22)``: the single-parameter bounds."""
    with np.errstate(over="ignore"):
        return tuple(1.0 / q if q > 0 else np.inf for q in np.diag(Q))


@dataclass
class FisherRecord:
    t: float
    Q: dict[str, np.ndarray]
    single: dict[str, tuple[float, float]] = field(default_factory=dict)
    nuisance: dict[str, tuple[float, float]] = field(default_factory=dict)
    scalar: dict[str, float] = field(default_factory=dict)
    singular: dict[str, bool] = field(default_factory=dict)

    @classmethod
    def from_matrices(cls, t: float, Q: dict[str, np.ndarray]) -> "FisherRecord":
        rec = cls(t=float(t), Q=Q)
        for label, q in Q.items():
            rec.single[label] = inverse_diag(q)
            rec.nuisance[label] = nuisance_diag(q)
            rec.scalar[label] = scalar_bound(q)
            rec.singular[label] = not np.isfinite(rec.scalar[label])
        return rec


@dataclass
class StencilFamily:
    """The nine stencil-shifted states at one time.

    Either ``psis`` of shape ``(9, r, d)`` with mixture ``weights`` (pure
    states have ``r = 1``), or full density matrices ``rhos`` ``(9, d, d)``.
    """

    t: float
    dims: HilbertDims
    weights: np.ndarray | None = None
    psis: np.ndarray | None = None
    rhos: np.ndarray | None = None

    def reduced(self, label: str) -> np.ndarray:
        """Reduced states ``(9, k, k)`` of one subsystem."""
        if self.rhos is not None:
            return np.stack([partial_trace(r, self.dims, label) for r in self.rhos])
        red = reduce_pure(self.psis, self.dims, label)  # (9, r, k, k)
        return np.tensordot(self.weights, red, axes=(0, 1))

    def global_qfi(self, s: StencilConfig, eps: float | None = None) -> np.ndarray:
        if self.rhos is not None:
            return qfi_mixed(self.rhos[0], *stencil_gradient(self.rhos, s), eps=eps)
        d1, d2 = stencil_gradient(self.psis, s)
        if len(self.weights) == 1:
            return qfi_pure(self.psis[0, 0], d1[0], d2[0])
        return qfi_mixture(self.weights, self.psis[0], d1, d2, eps=eps)


def hamiltonian_family(points: Sequence[SystemParams], d: HilbertDims) -> list[np.ndarray]:
    """Lab-frame Hamiltonians for several couplings sharing frequencies."""
    ops, jc, om = _pieces(d)
    out = []
    for p in points:
        H = p.omega_c * ops.n_a + p.omega_m * ops.n_b + 0.5 * p.omega_q * ops.sz + p.g1 * jc + p.g2 * om
        out.append(0.5 * (H + H.conj().T))
    return out


def iter_stencil(
    p: SystemParams,
    d: HilbertDims,
    s: StencilConfig,
    grid: TimeGrid,
    mode: str = "closed",
    rates: DecoherenceRates | None = None,
    initial: InitialState = InitialState(),
    dt: float = 5e-3,
    tol: float = 1e-6,
) -> Iterator[StencilFamily]:
    """Yield the stencil family at every grid time.

    Closed mode propagates each mixture component exactly. Open mode
    integrates the master equation for all nine couplings at once in the
    rotating frame; the frame change is a product of local unitaries that
    do not depend on the couplings, so every Fisher quantity is unchanged.
    """
    points = s.points(p)
    if mode == "closed":
        weights, comps = initial.mixture(d, tol)
        sectors = excitation_sectors(d)
        props = [diagonalize(H, sectors) for H in hamiltonian_family(points, d)]
        times = grid.t_values
        # bound the (9, r, chunk, d) buffer to roughly 200 MB
        chunk = max(1, int(2e8 // (16 * len(points) * len(comps) * d.total)))
        for start in range(0, len(times), chunk):
            part = times[start:start + chunk]
            paths = np.stack([np.stack([evolve_pure_many(prop, v, part) for v in comps]) for prop in props])
            for k, t in enumerate(part):
                yield StencilFamily(t=float(t), dims=d, weights=weights, psis=paths[:, :, k, :])
    elif mode == "open":
        if rates is None:
            raise ValueError("open mode needs decoherence rates")
        rho0 = initial.density(d, tol)
        for t, rhos in iter_open(points, rates, rho0, grid, d, dt=dt, frame="rotating"):
            yield StencilFamily(t=float(t), dims=d, rhos=rhos)
    else:
        raise ValueError("mode must be 'closed' or 'open'")


def family_qfi(fam: StencilFamily, s: StencilConfig, eps: float | None = None,
               labels: Sequence[str] = LABELS) -> dict[str, np.ndarray]:
    out = {}
    for label in labels:
        if label == "global":
            out[label] = fam.global_qfi(s, eps)
        else:
            red = fam.reduced(label)
            out[label] = qfi_mixed(red[0], *stencil_gradient(red, s), eps=eps)
    return out


def fisher_scan(
    p: SystemParams,
    d: HilbertDims,
    s: StencilConfig = StencilConfig(),
    grid: TimeGrid | None = None,
    mode: str = "closed",
    rates: DecoherenceRates | None = None,
    initial: InitialState = InitialState(),
    dt: float = 5e-3,
    eps: float | None = None,
    tol: float = 1e-6,
    labels: Sequence[str] = LABELS,
) -> list[FisherRecord]:
    """Fisher records (global and every subsystem) at each grid time."""
    grid = grid if grid is not None else TimeGrid.uniform()
    records = []
    for fam in iter_stencil(p, d, s, grid, mode, rates, initial, dt, tol):
        rec = FisherRecord.from_matrices(fam.t, family_qfi(fam, s, eps, labels))
        flagged = [k for k, v in rec.singular.items() if v]
        if flagged:
            log.debug("singular Fisher matrix at t=%.4g for %s", fam.t, flagged)
        records.append(rec)
    return records
