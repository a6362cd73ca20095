import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from hybridprobe.dynamics import diagonalize, evolve_pure
from hybridprobe.hilbert import HilbertDims, TruncationError, annihilation, coherent_state, fidelity, tensor
from hybridprobe.model import SystemParams, build_hamiltonian, excitation_sectors, initial_state_pure
from hybridprobe.oracles import (
    _polaron_basis,
    displaced_overlap,
    displaced_overlap_matrix,
    jc_qfi_g1,
    jc_state,
    optomech_inv_qfi_g2,
    optomech_state,
    polaron_angle_energy,
    polaron_displacement,
    polaron_propagate,
    polaron_rotation,
    polariton_states,
)

G = np.array([1.0, 0.0])


def full_state(p, d, t, alpha=2.0, beta=2.0):
    prop = diagonalize(build_hamiltonian(p, d), excitation_sectors(d))
    return evolve_pure(prop, initial_state_pure(alpha, beta, d), t)


def test_jc_state_free_limit():
    t = 0.7
    psi = jc_state(2.0, 0.0, 100.0, t, 25)
    assert fidelity(psi, tensor(G, coherent_state(2 * np.exp(-100j * t), 25))) >= 1 - 1e-12
    assert np.linalg.norm(psi) == pytest.approx(1)


@pytest.mark.parametrize("t", [np.pi / 2, np.pi, 2 * np.pi])
def test_jc_state_matches_numerics(t):
    d = HilbertDims(25, 25)
    p = SystemParams(0.1, 0.0)
    ref = tensor(jc_state(2.0, 0.1, 100.0, t, 25), coherent_state(2 * np.exp(-1j * t), 25))
    assert fidelity(full_state(p, d, t), ref) >= 1 - 1e-8


@given(st.floats(0, 30))
def test_jc_excitation_constant(t):
    psi = jc_state(1.5, 0.1, 100.0, t, 25, tol=1e-4).reshape(2, 25)
    n = np.arange(25)
    N = np.sum(np.abs(psi[0]) ** 2 * n) + np.sum(np.abs(psi[1]) ** 2 * (n + 1))
    psi0 = jc_state(1.5, 0.1, 100.0, 0.0, 25, tol=1e-4).reshape(2, 25)
    assert N == pytest.approx(np.sum(np.abs(psi0[0]) ** 2 * n), abs=1e-10)


def test_jc_state_frames_differ_by_carrier():
    lab = jc_state(1.0, 0.05, 100.0, 1.0, 15, tol=1e-6)
    rot = jc_state(1.0, 0.05, 100.0, 1.0, 15, frame="rotating", tol=1e-6)
    assert np.allclose(np.abs(lab), np.abs(rot))
    assert not np.allclose(lab, rot)
    with pytest.raises(ValueError):
        jc_state(1.0, 0.05, 100.0, 1.0, 15, frame="polar")


def test_jc_truncation():
    with pytest.raises(TruncationError):
        jc_state(2.0, 0.1, 100.0, 1.0, 10)


def test_jc_qfi():
    assert jc_qfi_g1(2, 0) == 0
    assert jc_qfi_g1(2, np.pi) == pytest.approx(157.91367041742973, rel=1e-14)
    with pytest.raises(ValueError):
        jc_qfi_g1(2, -1)


def test_optomech_free_limit():
    d = HilbertDims(25, 25)
    t = 1.1
    psi = optomech_state(2, 2, 0.0, 1.0, t, d)
    ref = tensor(coherent_state(2 * np.exp(-100j * t), 25), coherent_state(2 * np.exp(-1j * t), 25))
    assert fidelity(psi, ref) >= 1 - 1e-12


def test_optomech_disentangles_at_full_period():
    d = HilbertDims(25, 25)
    psi = optomech_state(2, 2, 0.1, 1.0, 2 * np.pi, d).reshape(25, 25)
    # every photon sector carries the same mechanical state |beta>
    beta = coherent_state(2, 25)
    for n in range(12):
        row = psi[n] / np.linalg.norm(psi[n])
        assert abs(np.vdot(beta, row)) ** 2 == pytest.approx(1, abs=1e-10)


@pytest.mark.parametrize(("g2", "mech"), [(0.1, 25), (0.2, 40)])
@pytest.mark.parametrize("t", [np.pi / 2, np.pi, 2 * np.pi])
def test_optomech_matches_numerics(g2, mech, t):
    d = HilbertDims(25, mech)
    ref = tensor(G, optomech_state(2, 2, g2, 1.0, t, d))
    assert fidelity(full_state(SystemParams(0.0, g2), d, t), ref) >= 1 - 1e-6


@given(st.floats(0, 20))
def test_optomech_photon_distribution_static(t):
    d = HilbertDims(12, 30)
    P = lambda s: np.sum(np.abs(optomech_state(1, 1, 0.1, 1.0, s, d).reshape(12, 30)) ** 2, axis=1)
    assert np.abs(P(t) - P(0.0)).max() < 1e-12


def test_optomech_truncation():
    with pytest.raises(TruncationError):
        optomech_state(2, 2, 0.2, 1.0, np.pi, HilbertDims(25, 12))


def test_optomech_inverse_qfi():
    v = optomech_inv_qfi_g2(2, 0.1, 1)
    assert v == pytest.approx(0.00044470322876728307, rel=1e-14)
    assert v == pytest.approx(1 / ((2 * 0.1 * np.pi) ** 2 * 64 * 89), rel=1e-14)
    assert optomech_inv_qfi_g2(2, 0.1, 2) == pytest.approx(v / 4, rel=1e-14)
    with pytest.raises(ZeroDivisionError):
        optomech_inv_qfi_g2(0, 0.1, 1)
    with pytest.raises(ZeroDivisionError):
        optomech_inv_qfi_g2(2, 0.0, 1)


def test_polariton_states():
    (vac,) = polariton_states(0)
    assert vac[0] == 1 and np.count_nonzero(vac) == 1
    plus, minus = polariton_states(3, 6)
    assert abs(np.vdot(plus, minus)) < 1e-15
    with pytest.raises(ValueError):
        polariton_states(-1)
    with pytest.raises(ValueError):
        polariton_states(4, 3)


def test_polaritons_diagonalise_jc():
    nc, g1 = 12, 0.07
    a = annihilation(nc)
    sp = np.array([[0, 0], [1, 0]])
    H = 100 * tensor(np.eye(2), a.T @ a) + 50 * tensor(np.diag([-1, 1]), np.eye(nc))
    H = H + g1 * (tensor(sp, a) + tensor(sp.T, a.T))
    basis = [v for n in range(11) for v in polariton_states(n, nc)]
    B = np.array(basis).T
    Hp = B.conj().T @ H @ B
    assert np.abs(Hp - np.diag(np.diag(Hp))).max() < 1e-12
    # dressed energies split by 2 sqrt(n) g1
    assert Hp[5, 5].real - Hp[6, 6].real == pytest.approx(2 * np.sqrt(3) * g1, rel=1e-12)


def test_polaron_angle_energy_limits():
    theta, ep, em = polaron_angle_energy(2, 3, 0.1, 0.0, 1.0)
    split = abs(2 * np.sqrt(2) * 0.1 - 1)
    assert theta == 0.0 or theta == pytest.approx(-np.pi / 2)
    assert ep - em == pytest.approx(split)
    assert 0.5 * (ep + em) == pytest.approx(1.5 * 100 + 2.5)
    _, ep, em = polaron_angle_energy(2, 0, 0.1, 0.2, 1.0)
    assert ep - em == pytest.approx(split)
    with pytest.raises(ValueError):
        polaron_angle_energy(0, 1, 0.1, 0.1, 1.0)


def test_polaron_resonance_branch():
    # 2 sqrt(n) g1 = wm at n = 1, g1 = 0.5
    theta, ep, em = polaron_angle_energy(1, 2, 0.5, 0.1, 1.0)
    assert theta == pytest.approx(-np.pi / 4)
    assert ep - em == pytest.approx(0.1 * np.sqrt(2))


@given(st.integers(1, 10), st.integers(0, 10), st.floats(0, 0.2), st.floats(0, 0.2))
def test_polaron_angle_range(n, m, g1, g2):
    theta, ep, em = polaron_angle_energy(n, m, g1, g2, 1.0)
    assert -np.pi / 2 - 1e-15 <= theta <= 0
    assert ep >= em


def _h_eff(n, g1, g2, wm, wc, M):
    """Doublet-n Hamiltonian on (|+>, |->) x displaced phonons, built from operators."""
    b = annihilation(M)
    tz = np.diag([1.0, -1.0])
    tp = np.array([[0, 1], [0, 0]])  # |+><-|
    H = (n - 0.5) * wc * np.eye(2 * M) + np.sqrt(n) * g1 * tensor(tz, np.eye(M)) + wm * tensor(np.eye(2), b.T @ b)
    return H - 0.5 * g2 * (tensor(tp, b) + tensor(tp.T, b.T))


@pytest.mark.parametrize(("g1", "g2"), [(0.05, 0.01), (0.1, 0.2), (0.2, 0.15), (0.5, 0.1)])
def test_polaron_eigen_residual(g1, g2):
    M, wm, wc = 12, 1.0, 100.0
    for n in range(1, 6):
        H = _h_eff(n, g1, g2, wm, wc, M)
        for m in range(M):
            theta, ep, em = polaron_angle_energy(n, m, g1, g2, wm, wc)
            if m == 0:
                v = np.zeros(2 * M)
                v[M] = 1.0  # |-, 0>
                e = em if theta == 0.0 else ep
                assert np.abs(H @ v - e * v).max() < 1e-10
                continue
            R = polaron_rotation(theta)
            for row, e in zip(R, (ep, em)):
                v = np.zeros(2 * M)
                v[m - 1] = row[0]
                v[M + m] = row[1]
                assert np.abs(H @ v - e * v).max() < 1e-10


def test_polaron_basis_orthonormal():
    d = HilbertDims(11, 60)
    V, _, _ = _polaron_basis(SystemParams(0.1, 0.2), d, 11, True)
    assert np.abs(V.conj().T @ V - np.eye(V.shape[1])).max() < 1e-8


def test_displaced_overlap_zero_displacement():
    for l in range(5):
        for m in range(5):
            assert displaced_overlap(l, m, 3, 0.0, 1.0) == float(l == m)


@pytest.mark.parametrize("n", range(1, 6))
def test_displaced_overlap_completeness(n):
    for m in range(6):
        s = sum(displaced_overlap(l, m, n, 0.2, 1.0) ** 2 for l in range(80))
        assert s == pytest.approx(1.0, abs=1e-8)


def test_displaced_overlap_matches_expm():
    D = 0.195
    N = 60
    a = annihilation(N)
    U = expm(D * (a.T - a))
    M = displaced_overlap_matrix(D, 20, 6)
    assert np.abs(M - U[:20, :6]).max() < 1e-8
    assert polaron_displacement(2, 0.13, 1.0) == pytest.approx(D)
    assert displaced_overlap(3, 1, 2, 0.13, 1.0) == pytest.approx(0.045114688421175726, rel=1e-12)


def test_polaron_propagate_round_trip():
    d = HilbertDims(10, 8)
    psi0 = initial_state_pure(0.8, 0.6, d, tol=1e-3)
    psi0 = psi0 / np.linalg.norm(psi0)
    out = polaron_propagate(psi0, SystemParams(0.1, 0.05), 0.0, d)
    assert np.abs(out - psi0).max() < 1e-8


@pytest.mark.parametrize("t", [np.pi / 2, 2 * np.pi, 5.0])
def test_polaron_reduces_to_jc(t):
    d = HilbertDims(25, 12)
    psi0 = initial_state_pure(2, 1, d, tol=1e-5)
    out = polaron_propagate(psi0, SystemParams(0.05, 0.0), t, d)
    ref = tensor(jc_state(2, 0.05, 100.0, t, 25, tol=1e-5), coherent_state(np.exp(-1j * t), 12, tol=1e-5))
    assert fidelity(out, ref) >= 1 - 1e-8


def test_polaron_propagate_weak_coupling():
    d = HilbertDims(25, 25)
    p = SystemParams(0.05, 0.01)
    psi0 = initial_state_pure(2, 2, d)
    t = 2 * np.pi
    F = fidelity(polaron_propagate(psi0, p, t, d), full_state(p, d, t))
    print(f"polaron vs full numerics at 2pi: F = {F:.6f}")
    assert F >= 0.99


def test_polaron_propagate_frames_and_errors():
    d = HilbertDims(6, 5)
    psi0 = initial_state_pure(0.5, 0.5, d, tol=1e-2)
    lab = polaron_propagate(psi0, SystemParams(0.05, 0.01), 1.0, d)
    rot = polaron_propagate(psi0, SystemParams(0.05, 0.01), 1.0, d, frame="rotating")
    assert np.allclose(np.abs(lab), np.abs(rot))
    with pytest.warns(UserWarning):
        polaron_propagate(psi0, SystemParams(0.05, 0.15), 1.0, d)
    with pytest.raises(ValueError):
        polaron_propagate(psi0, SystemParams(0.05, 0.01, omega_q=101.0), 1.0, d)
    with pytest.raises(ValueError):
        polaron_propagate(psi0[:-1], SystemParams(0.05, 0.01), 1.0, d)
