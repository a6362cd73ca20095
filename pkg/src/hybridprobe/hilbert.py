"""Truncated Fock-space primitives for the qubit-cavity-mechanics system.

Everything is dense numpy. Operators are ``(d, d)`` complex arrays, pure
states are ``(d,)`` vectors and density matrices are ``(d, d)`` arrays. The
tensor ordering is always qubit x cavity x mechanics, and the qubit basis is
``{|g>, |e>}`` with ``sigma_z |g> = -|g>``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

SUBSYSTEMS = ("qubit", "cavity", "mechanics")

# default truncation of both bosonic modes
DEFAULT_CUTOFF = 25


class TruncationError(ValueError):
    """Raised when a Fock cutoff is too small for the requested state."""

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message)
        self.required_dim = required_dim


@dataclass(frozen=True)
class HilbertDims:
    cavity_dim: int = DEFAULT_CUTOFF
    mech_dim: int = DEFAULT_CUTOFF
    qubit_dim: int = 2

    def __post_init__(self):
        if self.qubit_dim != 2:
            raise ValueError("qubit_dim must be 2")
        for name in ("cavity_dim", "mech_dim"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.qubit_dim, self.cavity_dim, self.mech_dim)

    @property
    def total(self) -> int:
        return self.qubit_dim * self.cavity_dim * self.mech_dim

    def sub_dim(self, label: str) -> int:
        return self.shape[_site(label)]

    def embed(self, op: np.ndarray, label: str) -> np.ndarray:
        """Lift a single-site operator to the full space."""
        factors = [np.eye(n, dtype=complex) for n in self.shape]
        factors[_site(label)] = np.asarray(op, dtype=complex)
        return tensor(factors)

    def scaled(self, factor: float) -> "HilbertDims":
        return HilbertDims(int(round(self.cavity_dim * factor)), int(round(self.mech_dim * factor)))


def _site(label: str) -> int:
    try:
        return SUBSYSTEMS.index(label)
    except ValueError:
        raise ValueError(f"unknown subsystem {label!r}; expected one of {SUBSYSTEMS}") from None


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 1:
        raise ValueError(f"invalid dimension {dim!r}")
    return int(dim)


def annihilation(dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).conj().T


def number(dim: int) -> np.ndarray:
    return np.diag(np.arange(_check_dim(dim), dtype=float)).astype(complex)


_PAULI = {
    "x": [[0, 1], [1, 0]],
    "y": [[0, 1j], [-1j, 0]],
    # |g> = index 0 is the -1 eigenvector
    "z": [[-1, 0], [0, 1]],
    "plus": [[0, 0], [1, 0]],
    "minus": [[0, 1], [0, 0]],
}


def pauli(which: str) -> np.ndarray:
    """Pauli matrix in the ``{|g>, |e>}`` basis; ``plus`` is ``|e><g|``."""
    try:
        return np.array(_PAULI[which], dtype=complex)
    except KeyError:
        raise ValueError(f"unknown Pauli operator {which!r}") from None


def tensor(*factors) -> np.ndarray:
    """Kronecker product of operators or vectors, left factor outermost.

    Accepts either ``tensor(a, b, c)`` or ``tensor([a, b, c])``.
    """
    if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
        factors = tuple(factors[0])
    if not factors:
        raise ValueError("tensor needs at least one factor")
    return reduce(np.kron, (np.asarray(f) for f in factors))


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Unnormalised Fock amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` for n < dim."""
    dim = _check_dim(dim)
    c = np.empty(dim, dtype=complex)
    c[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / np.sqrt(n)
    return c


def coherent_deficit(alpha: complex, dim: int) -> float:
    return float(max(0.0, 1.0 - np.sum(np.abs(coherent_amplitudes(alpha, dim)) ** 2)))


def _min_coherent_dim(alpha: complex, tol: float) -> int:
    dim = 1
    while coherent_deficit(alpha, dim) >= tol:
        dim += 1
    return dim


def coherent_state(alpha: complex, dim: int, tol: float = 1e-6) -> np.ndarray:
    """Coherent state truncated to ``dim`` levels and renormalised.

    Raises TruncationError when the discarded population exceeds ``tol``.
    """
    c = coherent_amplitudes(alpha, dim)
    deficit = 1.0 - float(np.vdot(c, c).real)
    if deficit >= tol:
        need = _min_coherent_dim(alpha, tol)
        raise TruncationError(
            f"cutoff {dim} loses {deficit:.2e} of |alpha={alpha}|; need dim >= {need}",
            required_dim=need,
        )
    return c / np.linalg.norm(c)


def thermal_populations(nbar: float, dim: int) -> np.ndarray:
    dim = _check_dim(dim)
    if nbar < 0:
        raise ValueError(f"nbar must be non-negative, got {nbar}")
    n = np.arange(dim)
    if nbar == 0:
        return (n == 0).astype(float)
    return nbar**n / (1.0 + nbar) ** (n + 1)


def thermal_state(nbar: float, dim: int, tol: float = 1e-6) -> np.ndarray:
    p = thermal_populations(nbar, dim)
    deficit = 1.0 - p.sum()
    if deficit >= tol:
        # tail of the geometric distribution is (nbar/(1+nbar))**dim
        need = int(np.ceil(np.log(tol) / np.log(nbar / (1.0 + nbar))))
        raise TruncationError(
            f"cutoff {dim} loses {deficit:.2e} of thermal nbar={nbar}; need dim >= {need}",
            required_dim=need,
        )
    return np.diag(p / p.sum()).astype(complex)


def ket2dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """Fidelity between two states; pure inputs are vectors, mixed are matrices.

    For two density matrices this is the Uhlmann fidelity (squared convention).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim == 1 and b.ndim == 1:
        return float(abs(np.vdot(a, b)) ** 2)
    if a.ndim == 1:
        return float(np.vdot(a, b @ a).real)
    if b.ndim == 1:
        return float(np.vdot(b, a @ b).real)
    w, v = np.linalg.eigh(a)
    sqrt_a = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    inner = np.linalg.eigvalsh(sqrt_a @ b @ sqrt_a)
    return float(np.sum(np.sqrt(np.clip(inner, 0, None))) ** 2)


def _keep_sites(keep: str | Sequence[str]) -> list[int]:
    labels = [keep] if isinstance(keep, str) else list(keep)
    sites = sorted({_site(label) for label in labels})
    if not sites:
        raise ValueError("keep must name at least one subsystem")
    return sites


def _einsum_specs(sites: list[int]) -> tuple[str, str, str]:
    letters = "abc"
    ket = letters
    bra = "".join(letters[i].upper() if i in sites else letters[i] for i in range(3))
    out = "".join(letters[i] for i in sites) + "".join(letters[i].upper() for i in sites)
    return ket, bra, out


def partial_trace(state: np.ndarray, dims: HilbertDims, keep: str | Sequence[str]) -> np.ndarray:
    """Reduced density matrix of the subsystem(s) in ``keep``.

    ``state`` is either a pure vector of length ``dims.total`` or a full
    density matrix.
    """
    state = np.asarray(state)
    if state.shape == (dims.total,):
        return reduce_pure(state, dims, keep)
    if state.shape != (dims.total, dims.total):
        raise ValueError(f"state of shape {state.shape} does not match dims {dims.shape}")
    sites = _keep_sites(keep)
    kept = int(np.prod([dims.shape[s] for s in sites]))
    ket, bra, out = _einsum_specs(sites)
    rho = state.reshape(dims.shape + dims.shape)
    return np.einsum(f"{ket}{bra}->{out}", rho).reshape(kept, kept)


def reduce_pure(psi: np.ndarray, dims: HilbertDims, keep: str | Sequence[str]) -> np.ndarray:
    """Batched partial trace of pure states ``(..., d) -> (..., k, k)``."""
    psi = np.asarray(psi)
    if psi.shape[-1] != dims.total:
        raise ValueError(f"state of length {psi.shape[-1]} does not match dims {dims.shape}")
    sites = _keep_sites(keep)
    kept = int(np.prod([dims.shape[s] for s in sites]))
    ket, bra, out = _einsum_specs(sites)
    lead = psi.shape[:-1]
    psi = psi.reshape(lead + dims.shape)
    rho = np.einsum(f"...{ket},...{bra}->...{out}", psi, psi.conj())
    return rho.reshape(lead + (kept, kept))


def is_hermitian(op: np.ndarray, atol: float = 1e-12) -> bool:
    op = np.asarray(op)
    return op.ndim == 2 and op.shape[0] == op.shape[1] and np.allclose(op, op.conj().T, rtol=0, atol=atol)


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-10, trace_tol: float = 1e-8, pos_tol: float = 1e-8):
    """Raise ValueError unless ``rho`` is a valid density matrix."""
    rho = np.asarray(rho)
    if not is_hermitian(rho, herm_tol):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > trace_tol:
        raise ValueError(f"density matrix trace is {tr!r}")
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -pos_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
