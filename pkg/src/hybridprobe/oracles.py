"""Closed-form states and spectra used to check the numerics.

* ``jc_state``: Jaynes-Cummings evolution of ``|g, alpha>`` (no mechanics).
* ``optomech_state``: exact radiation-pressure evolution of ``|alpha, beta>``
  (no qubit coupling).
* polariton / polaron helpers: the dressed-state picture in which each
  qubit-light doublet couples to its own displaced phonon mode. This is an
  approximate solution (rotating-wave per doublet, static shift dropped).

All states use the qubit x cavity x mechanics ordering of ``hilbert``.
``frame="lab"`` keeps the ``exp(-i n wc t)`` carrier phases;
``frame="rotating"`` drops them, matching ``build_rotating_frame_hamiltonian``
up to a global phase.
"""
from __future__ import annotations

import warnings

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from .hilbert import HilbertDims, coherent_amplitudes, coherent_deficit, tensor, TruncationError
from .model import SystemParams

_FRAMES = ("lab", "rotating")


def _check_frame(frame: str):
    if frame not in _FRAMES:
        raise ValueError(f"frame must be one of {_FRAMES}")


def _cavity_weights(alpha: complex, dim: int, tol: float) -> np.ndarray:
    deficit = coherent_deficit(alpha, dim)
    if deficit >= tol:
        raise TruncationError(f"cavity cutoff {dim} loses {deficit:.2e} of |alpha={alpha}|")
    return coherent_amplitudes(alpha, dim)


def jc_state(alpha: complex, g1: float, omega_c: float, t: float, cavity_dim: int,
             frame: str = "lab", tol: float = 1e-6) -> np.ndarray:
    """Jaynes-Cummings state on qubit x cavity evolved from ``|g, alpha>`` (resonant)."""
    _check_frame(frame)
    c = _cavity_weights(alpha, cavity_dim, tol)
    n = np.arange(cavity_dim)
    if frame == "lab":
        c = c * np.exp(-1j * n * omega_c * t)
    rabi = np.sqrt(n) * g1 * t
    psi = np.zeros((2, cavity_dim), dtype=complex)
    psi[0] = c * np.cos(rabi)
    # |e, n-1> picks up the sine part of sector n
    psi[1, :-1] = -1j * (c * np.sin(rabi))[1:]
    psi = psi.ravel()
    return psi / np.linalg.norm(psi)


def jc_qfi_g1(alpha: complex, t: float) -> float:
    """QFI for g1 of the Jaynes-Cummings state: ``4 |alpha|^2 t^2``.

    Every sector is a rotation by angle ``sqrt(n) g1 t`` whose derivative is
    orthogonal to the state, so the QFI is ``4 t^2 <n>``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    return 4.0 * abs(alpha) ** 2 * t**2


def optomech_state(alpha: complex, beta: complex, g2: float, omega_m: float, t: float,
                   dims: HilbertDims, omega_c: float = 100.0, frame: str = "lab",
                   tol: float = 1e-6) -> np.ndarray:
    """Cavity x mechanics state evolved from ``|alpha, beta>`` under ``-g2 a'a (b + b')``.

    Photon sector n drives the mechanics to the coherent state
    ``phi_n = beta e^{-i wm t} + k n (1 - e^{-i wm t})`` with ``k = g2/wm`` and
    picks up the phase ``k^2 n^2 (wm t - sin wm t) + k n Im(beta - beta e^{-i wm t})``.
    The second term vanishes for real beta at multiples of ``pi/wm``.
    """
    _check_frame(frame)
    c = _cavity_weights(alpha, dims.cavity_dim, tol)
    n = np.arange(dims.cavity_dim)
    k = g2 / omega_m
    rot = np.exp(-1j * omega_m * t)
    phase = k**2 * n**2 * (omega_m * t - np.sin(omega_m * t)) + k * n * np.imag(beta - beta * rot)
    c = c * np.exp(1j * phase)
    if frame == "lab":
        c = c * np.exp(-1j * n * omega_c * t)
    mech = np.stack([coherent_amplitudes(beta * rot + k * nn * (1 - rot), dims.mech_dim) for nn in n])
    psi = (c[:, None] * mech).ravel()
    norm = np.linalg.norm(psi)
    if 1 - norm**2 >= tol:
        raise TruncationError(f"optomechanical state loses {1 - norm**2:.2e} at cutoffs {dims.shape[1:]}")
    return psi / norm


def optomech_inv_qfi_g2(alpha: complex, g2: float, k: int) -> float:
    """Inverse QFI for g2 at ``wm t = 2 k pi`` (units ``wm = 1``).

    At these times the mechanics returns to ``|beta>`` and the only imprint is
    the Kerr-like phase ``g2^2 n^2 2 k pi``; its generator variance for a
    Poissonian photon number gives the closed form below.
    """
    a = abs(alpha)
    if g2 == 0 or a == 0 or k < 1:
        raise ZeroDivisionError("need g2 > 0, |alpha| > 0 and k >= 1")
    return (a * g2 * k * np.pi) ** -2 / (64.0 * (1 + 6 * a**2 + 4 * a**4))


def polariton_states(n: int, cavity_dim: int | None = None) -> tuple[np.ndarray, ...]:
    """Dressed qubit-light doublet ``(|+>, |->)`` of sector n on qubit x cavity.

    ``n = 0`` returns the singlet ``(|g,0>,)``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    dim = cavity_dim if cavity_dim is not None else n + 1
    if dim < n + 1:
        raise ValueError(f"cavity_dim {dim} cannot hold sector {n}")
    g = np.zeros((2, dim), dtype=complex)
    g[0, n] = 1.0
    if n == 0:
        return (g.ravel(),)
    e = np.zeros((2, dim), dtype=complex)
    e[1, n - 1] = 1.0
    s = 1 / np.sqrt(2)
    return ((g + e).ravel() * s, (g - e).ravel() * s)


def polaron_displacement(n: int, g2: float, omega_m: float) -> float:
    """Shift ``(g2/wm)(n - 1/2)`` of the phonon mode attached to doublet n."""
    return g2 / omega_m * (n - 0.5)


def polaron_angle_energy(n: int, m: int, g1: float, g2: float, omega_m: float,
                         omega_c: float = 100.0, displacement_shift: bool = False):
    """Mixing angle and energies of the polaron pair ``(|+, m-1>, |-, m>)`` in doublet n.

    The pair Hamiltonian is ``[[d/2, -c], [-c, -d/2]] + (m - 1/2) wm + w0`` with
    ``d = 2 sqrt(n) g1 - wm`` and ``c = g2 sqrt(m)/2``. Its eigenvectors are
    the rows of ``[[cos t, sin t], [sin t, -cos t]]`` with
    ``2t = atan2(-2c, d)``. At resonance (``d = 0``, m > 0) this gives ``-pi/4``.

    ``w0`` is the doublet centre ``(n - 1/2) wc``; with ``displacement_shift``
    the exact static term ``-wm D_n^2`` from displacing the phonon mode is
    added as well.

    Returns ``(theta, E_plus, E_minus)``.
    """
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    d = 2.0 * np.sqrt(n) * g1 - omega_m
    c = 0.5 * g2 * np.sqrt(m)
    theta = 0.5 * np.arctan2(-2.0 * c, d) if c > 0 else (0.0 if d >= 0 else -np.pi / 2)
    w0 = (n - 0.5) * omega_c
    if displacement_shift:
        w0 -= omega_m * polaron_displacement(n, g2, omega_m) ** 2
    split = np.sqrt(d**2 / 4 + c**2)
    base = w0 + (m - 0.5) * omega_m
    return float(theta), float(base + split), float(base - split)


def polaron_rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [s, -c]])


def displaced_overlap(l: int, m: int, n: int, g2: float, omega_m: float) -> float:
    """``<l | m^(n)>``: Fock state l against the m-th Fock state of the displaced mode.

    The displaced mode of doublet n is centred at ``D = (g2/wm)(n - 1/2)`` so
    the overlap is ``<l|D(D)|m>``, a Laguerre polynomial times ``exp(-D^2/2)``.
    """
    return _displaced_overlap(l, m, polaron_displacement(n, g2, omega_m))


def _displaced_overlap(l: int, m: int, D: float) -> float:
    if l < 0 or m < 0:
        raise ValueError("Fock indices must be non-negative")
    if D == 0:
        return float(l == m)
    x = D * D
    if l >= m:
        lo, hi, base = m, l, D
    else:
        # <l|D(D)|m> = <m|D(-D)|l>
        lo, hi, base = l, m, -D
    k = hi - lo
    log_mag = 0.5 * (gammaln(lo + 1) - gammaln(hi + 1)) + k * np.log(abs(base)) - x / 2
    sign = np.sign(base) ** k
    return float(sign * np.exp(log_mag) * eval_genlaguerre(lo, k, x))


def displaced_overlap_matrix(D: float, rows: int, cols: int) -> np.ndarray:
    """``M[l, m] = <l|D(D)|m>`` for ``l < rows``, ``m < cols``."""
    return np.array([[_displaced_overlap(l, m, D) for m in range(cols)] for l in range(rows)])


def _polaron_basis(p: SystemParams, dims: HilbertDims, phonons: int, displacement_shift: bool):
    """Approximate eigenvectors (columns), energies and carrier index on the lab space.

    The carrier index is the eigenvalue of ``a'a + sz/2`` shared by a doublet.
    """
    nc, nm = dims.cavity_dim, dims.mech_dim
    M = phonons
    vecs: list[np.ndarray] = []
    energies: list[float] = []
    carrier: list[float] = []

    def lab(q: int, cav: int, mech_amp: np.ndarray) -> np.ndarray:
        v = np.zeros((2, nc, nm), dtype=complex)
        v[q, cav] = mech_amp
        return v.ravel()

    def add(v: np.ndarray, e: float, c: float):
        vecs.append(v)
        energies.append(e)
        carrier.append(c)

    eye = np.eye(nm)
    # vacuum sector: |g,0> with an undisplaced free oscillator
    for m in range(nm):
        add(lab(0, 0, eye[m]), -0.5 * p.omega_q + m * p.omega_m, -0.5)

    s = 1 / np.sqrt(2)
    for n in range(1, nc):
        D = polaron_displacement(n, p.g2, p.omega_m)
        ov = displaced_overlap_matrix(D, nm, M)  # columns: displaced Fock states
        plus = lambda k: s * (lab(0, n, ov[:, k]) + lab(1, n - 1, ov[:, k]))
        minus = lambda k: s * (lab(0, n, ov[:, k]) - lab(1, n - 1, ov[:, k]))
        for m in range(M):
            theta, ep, em = polaron_angle_energy(n, m, p.g1, p.g2, p.omega_m, p.omega_c, displacement_shift)
            if m == 0:
                # only |-, 0> exists; theta picks the branch it belongs to
                add(minus(0), em if theta == 0.0 else ep, n - 0.5)
                continue
            R = polaron_rotation(theta)
            a, b = plus(m - 1), minus(m)
            add(R[0, 0] * a + R[0, 1] * b, ep, n - 0.5)
            add(R[1, 0] * a + R[1, 1] * b, em, n - 0.5)
        # |+, M-1> has no partner inside the phonon cutoff
        w0 = (n - 0.5) * p.omega_c - (p.omega_m * D * D if displacement_shift else 0.0)
        add(plus(M - 1), w0 + np.sqrt(n) * p.g1 + (M - 1) * p.omega_m, n - 0.5)
    # |e, nc-1> lies outside every complete doublet: keep it as a free state
    for m in range(nm):
        add(lab(1, nc - 1, eye[m]), (nc - 0.5) * p.omega_c + m * p.omega_m, nc - 0.5)
    return np.array(vecs).T, np.array(energies), np.array(carrier)


def polaron_propagate(psi0: np.ndarray, p: SystemParams, t: float, dims: HilbertDims,
                      phonons: int | None = None, displacement_shift: bool = True,
                      frame: str = "lab") -> np.ndarray:
    """Propagate ``psi0`` with the polaron spectrum and map back to the Fock basis.

    Approximate unless ``g2 = 0``: the per-doublet rotating-wave step and the
    dropped static ``sigma_x`` shift both need ``g2 << wm``. ``phonons`` is the
    number of displaced phonon states kept per doublet (default ``mech_dim + 20``).
    """
    _check_frame(frame)
    if p.g2 > 0.1 * p.omega_m:
        warnings.warn("polaron propagation assumes g2 << omega_m", stacklevel=2)
    if not p.resonant:
        raise ValueError("polaron propagation needs omega_q == omega_c")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (dims.total,):
        raise ValueError(f"state of length {psi0.shape} does not match dims {dims.shape}")
    M = phonons if phonons is not None else dims.mech_dim + 20
    V, E, carrier = _polaron_basis(p, dims, M, displacement_shift)
    if frame == "rotating":
        E = E - p.omega_c * carrier
    return V @ (np.exp(-1j * E * t) * (V.conj().T @ psi0))
