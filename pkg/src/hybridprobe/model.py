"""Tripartite qubit-cavity-mechanics Hamiltonian and initial states.

Units: the mechanical frequency sets the scale, ``omega_m = 1``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .hilbert import (
    HilbertDims,
    annihilation,
    coherent_state,
    number,
    pauli,
    tensor,
    thermal_state,
)

COUPLING_WINDOW = (0.0, 0.2)


@dataclass(frozen=True)
class SystemParams:
    g1: float = 0.1
    g2: float = 0.1
    omega_c: float = 100.0
    omega_q: float = 100.0
    omega_m: float = 1.0

    def __post_init__(self):
        for name in ("omega_c", "omega_q", "omega_m"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        lo, hi = COUPLING_WINDOW
        for name in ("g1", "g2"):
            value = getattr(self, name)
            if not lo <= value <= hi:
                warnings.warn(
                    f"{name}={value} outside the validated coupling window [{lo}, {hi}]",
                    stacklevel=3,
                )

    @property
    def resonant(self) -> bool:
        return self.omega_q == self.omega_c

    def shifted(self, **deltas: float) -> "SystemParams":
        """Copy with couplings shifted by the given amounts, without range warnings."""
        values = {k: getattr(self, k) + v for k, v in deltas.items()}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return replace(self, **values)


class Operators:
    """Full-space ladder and Pauli operators for a given truncation."""

    def __init__(self, dims: HilbertDims):
        self.dims = dims
        nc, nm = dims.cavity_dim, dims.mech_dim
        iq, ic, im = np.eye(2), np.eye(nc), np.eye(nm)
        self.a = tensor(iq, annihilation(nc), im)
        self.b = tensor(iq, ic, annihilation(nm))
        self.n_a = tensor(iq, number(nc), im)
        self.n_b = tensor(iq, ic, number(nm))
        self.sz = tensor(pauli("z"), ic, im)
        self.sp = tensor(pauli("plus"), ic, im)
        self.sm = tensor(pauli("minus"), ic, im)


def _pieces(dims: HilbertDims):
    ops = Operators(dims)
    jc = ops.sp @ ops.a + ops.sm @ ops.a.conj().T
    om = -ops.n_a @ (ops.b + ops.b.conj().T)
    return ops, jc, om


def build_hamiltonian(p: SystemParams, d: HilbertDims) -> np.ndarray:
    """Lab-frame Hamiltonian ``wc a'a + wm b'b + wq/2 sz + g1 JC - g2 a'a (b + b')``."""
    ops, jc, om = _pieces(d)
    H = p.omega_c * ops.n_a + p.omega_m * ops.n_b + 0.5 * p.omega_q * ops.sz + p.g1 * jc + p.g2 * om
    return 0.5 * (H + H.conj().T)


def frame_generator(d: HilbertDims) -> np.ndarray:
    """Diagonal of ``a'a + sz/2``, the generator removed by the rotating frame."""
    nc, nm = d.cavity_dim, d.mech_dim
    q = np.array([-0.5, 0.5])
    n = np.arange(nc, dtype=float)
    return (q[:, None, None] + n[None, :, None] + np.zeros(nm)[None, None, :]).ravel()


def build_rotating_frame_hamiltonian(p: SystemParams, d: HilbertDims) -> np.ndarray:
    """Hamiltonian in the frame rotating at ``omega_c (a'a + sz/2)``.

    ``exp(-iHt) = exp(-i wc (a'a + sz/2) t) exp(-iH't)`` exactly, since the
    frame generator commutes with every term of H'.
    """
    ops, jc, om = _pieces(d)
    H = p.omega_m * ops.n_b + p.g1 * jc + p.g2 * om
    if not p.resonant:
        H = H + 0.5 * (p.omega_q - p.omega_c) * ops.sz
    return 0.5 * (H + H.conj().T)


def excitation_sectors(d: HilbertDims) -> np.ndarray:
    """Eigenvalue of ``a'a + s+s-`` for every basis state.

    Both coupling terms conserve this number, so any Hamiltonian built here is
    block diagonal in these labels.
    """
    q = np.array([0, 1])
    n = np.arange(d.cavity_dim)
    return (q[:, None, None] + n[None, :, None] + np.zeros(d.mech_dim, dtype=int)[None, None, :]).ravel()


def initial_state_pure(alpha: complex, beta: complex, d: HilbertDims, tol: float = 1e-6) -> np.ndarray:
    """``|g> x |alpha> x |beta>``."""
    g = np.array([1.0, 0.0], dtype=complex)
    return tensor(g, coherent_state(alpha, d.cavity_dim, tol), coherent_state(beta, d.mech_dim, tol))


def initial_state_thermal(alpha: complex = 2.0, nbar: float = 1.0, d: HilbertDims = HilbertDims(),
                          tol: float = 1e-6) -> np.ndarray:
    """``|g><g| x |alpha><alpha| x thermal(nbar)`` as a full density matrix."""
    g = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    c = coherent_state(alpha, d.cavity_dim, tol)
    return tensor(g, np.outer(c, c.conj()), thermal_state(nbar, d.mech_dim, tol))


@dataclass(frozen=True)
class InitialState:
    """Qubit in |g>, cavity in |alpha>; mechanics in |beta> or, when ``nbar`` is set, thermal."""

    alpha: complex = 2.0
    beta: complex = 2.0
    nbar: float | None = None

    @property
    def pure(self) -> bool:
        return self.nbar is None

    def vector(self, d: HilbertDims, tol: float = 1e-6) -> np.ndarray:
        if not self.pure:
            raise ValueError("thermal initial state has no state vector")
        return initial_state_pure(self.alpha, self.beta, d, tol)

    def density(self, d: HilbertDims, tol: float = 1e-6) -> np.ndarray:
        if self.pure:
            psi = self.vector(d, tol)
            return np.outer(psi, psi.conj())
        return initial_state_thermal(self.alpha, self.nbar, d, tol)

    def mixture(self, d: HilbertDims, tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
        """Weights ``(r,)`` and orthonormal vectors ``(r, d)`` making up the state."""
        if self.pure:
            return np.ones(1), self.vector(d, tol)[None, :]
        g = np.array([1.0, 0.0], dtype=complex)
        c = coherent_state(self.alpha, d.cavity_dim, tol)
        p = np.real(np.diag(thermal_state(self.nbar, d.mech_dim, tol)))
        keep = np.flatnonzero(p > 1e-14)
        eye = np.eye(d.mech_dim, dtype=complex)
        vecs = np.stack([tensor(g, c, eye[m]) for m in keep])
        return p[keep], vecs
