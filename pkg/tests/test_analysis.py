import logging

import numpy as np
import pytest

from hybridprobe.analysis import (
    SCENARIOS,
    WINDOWS,
    cutoff_convergence,
    efficiency,
    efficiency_joint,
    efficiency_nuisance,
    efficiency_single,
    entropy_scan,
    global_loss_ratio,
    open_records,
    optimal_subsystem_map,
    optimal_time,
    scan_map,
    scenario_value,
    von_neumann_entropy,
)
from hybridprobe.dynamics import DecoherenceRates, TimeGrid
from hybridprobe.estimation import FisherRecord
from hybridprobe.hilbert import HilbertDims, ket2dm, thermal_state
from hybridprobe.model import InitialState, SystemParams

from .conftest import random_state


def test_entropy_examples(rng):
    assert von_neumann_entropy(ket2dm(random_state(rng, 5))) == pytest.approx(0, abs=1e-10)
    assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0)
    assert von_neumann_entropy(thermal_state(1.0, 40)) == pytest.approx(2.0, abs=1e-4)


def test_entropy_scan_starts_unentangled():
    grid = TimeGrid(np.array([0.0, np.pi]))
    out = entropy_scan(SystemParams(0.1, 0.1), grid, HilbertDims(15, 15), InitialState(1.0, 1.0), tol=1e-4)
    for label in ("qubit", "cavity", "mechanics"):
        assert out[label][0] == pytest.approx(0, abs=1e-10)
        assert out[label][1] > 1e-3


def test_mechanics_disentangles_weak_qubit():
    grid = TimeGrid.uniform(2 * np.pi, 80)
    out = entropy_scan(SystemParams(0.01, 0.2), grid, HilbertDims(25, 25))
    assert out["mechanics"][-1] < 0.2 * out["mechanics"].max()
    assert np.abs(out["cavity"] - out["mechanics"]).max() < 0.1


def _rec(t, glob, sub):
    """Record with diagonal Fisher matrices: global diag(glob), qubit/cavity/mechanics diag(sub[k])."""
    Q = {"global": np.diag(glob)}
    for label, q in zip(("qubit", "cavity", "mechanics"), sub):
        Q[label] = np.diag(q)
    return FisherRecord.from_matrices(t, Q)


def test_scenario_values():
    rec = FisherRecord.from_matrices(1.0, {"global": np.array([[2.0, 1.0], [1.0, 2.0]])})
    assert scenario_value(rec, "global", "single_g1") == pytest.approx(0.5)
    assert scenario_value(rec, "global", "nuisance_g2") == pytest.approx(2 / 3)
    assert scenario_value(rec, "global", "joint") == pytest.approx(4 / 3)
    with pytest.raises(ValueError):
        scenario_value(rec, "global", "robust_g1")


def test_efficiency_identity_and_windows():
    recs = [_rec(t, [4.0, 4.0], [[4.0, 4.0], [1.0, 1.0], [0.5, 0.5]]) for t in (1.0, 2.0, 7.0, 15.0)]
    e = efficiency_single(recs, "long", "g1")
    assert e.eta == pytest.approx(1.0) and e.best_subsystem == "qubit" and e.t_star == 1.0
    for sc in SCENARIOS:
        r = efficiency(recs, "short", sc)
        assert r.t_star <= WINDOWS["short"]
        assert 0 <= r.eta <= 1 + 1e-9
    with pytest.raises(ValueError):
        efficiency(recs, "medium", "joint")
    with pytest.raises(ValueError):
        efficiency([_rec(30.0, [1, 1], [[1, 1]] * 3)], "long", "joint")


def test_optimal_time_earliest_tie_and_minimum():
    recs = [
        _rec(1.0, [9.0, 9.0], [[1.0, 1.0], [2.0, 2.0], [0.1, 0.1]]),
        _rec(2.0, [9.0, 9.0], [[3.0, 1.0], [3.0, 2.0], [0.1, 0.1]]),
        _rec(3.0, [9.0, 9.0], [[3.0, 1.0], [2.0, 5.0], [0.1, 0.1]]),
    ]
    # best single_g1: qubit and cavity both reach 3 at t=2, qubit listed first
    assert optimal_time(recs, "short", "single_g1") == (1, "qubit")
    assert optimal_time(recs, "short", "single_g2") == (2, "cavity")
    e = efficiency_single(recs, "short", "g2")
    assert e.eta == pytest.approx(5 / 9)


def test_singular_entries_excluded(caplog):
    sing = FisherRecord.from_matrices(1.0, {k: np.zeros((2, 2)) for k in ("global", "qubit", "cavity", "mechanics")})
    good = _rec(2.0, [4.0, 4.0], [[2.0, 2.0], [1.0, 1.0], [1.0, 1.0]])
    with caplog.at_level(logging.INFO, logger="hybridprobe.analysis"):
        e = efficiency_joint([sing, good], "short")
    assert e.t_star == 2.0 and "singular" in caplog.text
    with pytest.raises(ValueError):
        efficiency_joint([sing], "short")


def test_nuisance_reduces_to_single_for_diagonal():
    recs = [_rec(t, [5.0, 3.0], [[1.0, 2.0], [4.0, 1.0], [0.5, 0.5]]) for t in (1.0, 2.0)]
    for target in ("g1", "g2"):
        a = efficiency_single(recs, "short", target)
        b = efficiency_nuisance(recs, "short", target)
        assert (a.eta, a.best_subsystem, a.t_star) == pytest.approx((b.eta, b.best_subsystem, b.t_star))


@pytest.fixture(scope="module")
def small_scans():
    grid = TimeGrid.uniform(2 * np.pi, 20)
    return scan_map((0.05, 0.15), (0.05, 0.15), dims=HilbertDims(15, 15), grid=grid, tol=1e-4)


def test_map_etas_bounded(small_scans):
    rows = optimal_subsystem_map((0.05, 0.15), (0.05, 0.15), "short", "nuisance_g2", scans=small_scans)
    assert len(rows) == 2 and len(rows[0]) == 2
    for row in rows:
        for e in row:
            assert 0 <= e.eta <= 1 + 1e-9
            assert e.row()["scenario"] == "nuisance_g2"


def test_nuisance_eta_close_to_single(small_scans):
    # correlations between g1 and g2 only degrade the ratio slightly
    for (g1, g2), recs in small_scans.items():
        for target in ("g1", "g2"):
            s = efficiency_single(recs, "short", target).eta
            n = efficiency_nuisance(recs, "short", target).eta
            print(f"g1={g1} g2={g2} {target}: eta single {s:.4f} nuisance {n:.4f}")
            assert n <= s + 0.05


def test_scan_map_threads_deterministic():
    grid = TimeGrid(np.array([1.0, 2.0]))
    kw = dict(dims=HilbertDims(6, 6), grid=grid, initial=InitialState(0.5, 0.5), tol=1e-3)
    a = scan_map((0.05, 0.1), (0.1,), threads=2, **kw)
    b = scan_map((0.05, 0.1), (0.1,), **dict(kw))
    for key in a:
        for x, y in zip(a[key], b[key]):
            assert all(np.array_equal(x.Q[k], y.Q[k]) for k in x.Q)


def test_global_loss_ratio_zero_rates():
    d = HilbertDims(5, 5)
    grid = TimeGrid.uniform(2.0, 4)
    init = InitialState(0.5, 0.5, nbar=0.2)
    closed, opened = open_records(SystemParams(0.1, 0.1), d, grid, DecoherenceRates.zero(), init, tol=1e-2)
    for sc in SCENARIOS:
        assert global_loss_ratio(closed, opened, sc, "short") == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        global_loss_ratio(closed, opened[:-1], "joint", "short")


def test_global_loss_ratio_below_one_with_loss():
    d = HilbertDims(5, 5)
    grid = TimeGrid.uniform(2.0, 4)
    init = InitialState(0.5, 0.5, nbar=0.2)
    closed, opened = open_records(SystemParams(0.1, 0.1), d, grid, DecoherenceRates(kappa=0.2, gamma=0.2), init,
                                  tol=1e-2)
    assert global_loss_ratio(closed, opened, "single_g1", "short") < 1


def test_cutoff_convergence_report():
    grid = TimeGrid(np.array([np.pi / 2, np.pi]))
    rep = cutoff_convergence(SystemParams(0.1, 0.1), HilbertDims(12, 12), HilbertDims(15, 15), grid,
                             InitialState(1.0, 1.0), tol=1e-4)
    assert rep.worst == max(rep.entropy_dev, rep.bound_dev)
    assert rep.worst < 1e-3
