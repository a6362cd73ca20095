"""Entropies, efficiency ratios and optimal-subsystem maps built on Fisher scans."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .dynamics import DecoherenceRates, TimeGrid, diagonalize, evolve_pure_many
from .estimation import FisherRecord, StencilConfig, fisher_scan
from .hilbert import SUBSYSTEMS, HilbertDims, reduce_pure
from .model import InitialState, SystemParams, build_hamiltonian, excitation_sectors

log = logging.getLogger(__name__)

WINDOWS = {"short": 2 * np.pi, "long": 6 * np.pi}
SCENARIOS = ("single_g1", "single_g2", "nuisance_g1", "nuisance_g2", "joint")
DEFAULT_COUPLINGS = (0.01, 0.05, 0.1, 0.15, 0.2)


def von_neumann_entropy(rho: np.ndarray, cutoff: float = 1e-14) -> float:
    """``-sum p log2 p`` over eigenvalues above ``cutoff``."""
    p = np.linalg.eigvalsh(0.5 * (rho + np.conj(rho).T))
    p = p[p > cutoff]
    return float(-np.sum(p * np.log2(p)) + 0.0)


def entropy_scan(p: SystemParams, grid: TimeGrid, d: HilbertDims = HilbertDims(),
                 initial: InitialState = InitialState(), tol: float = 1e-6) -> dict[str, np.ndarray]:
    """Entropy of each subsystem along the closed evolution of a pure initial state."""
    prop = diagonalize(build_hamiltonian(p, d), excitation_sectors(d))
    psi = evolve_pure_many(prop, initial.vector(d, tol), grid.t_values)
    out = {"t": grid.t_values.copy()}
    for label in SUBSYSTEMS:
        out[label] = np.array([von_neumann_entropy(r) for r in reduce_pure(psi, d, label)])
    return out


def scenario_value(rec: FisherRecord, label: str, scenario: str) -> float:
    """The bound a scenario compares: ``1/Q_ii``, ``(Q^-1)_ii`` or ``Tr[Q^-1]``."""
    if scenario == "joint":
        return rec.scalar[label]
    kind, target = scenario.split("_")
    i = 0 if target == "g1" else 1
    if kind == "single":
        return rec.single[label][i]
    if kind == "nuisance":
        return rec.nuisance[label][i]
    raise ValueError(f"unknown scenario {scenario!r}")


@dataclass(frozen=True)
class EfficiencyRecord:
    g1: float
    g2: float
    window: str
    scenario: str
    best_subsystem: str
    eta: float
    t_star: float

    def row(self) -> dict:
        return asdict(self)


def _window_records(records: Sequence[FisherRecord], window: str) -> list[FisherRecord]:
    if window not in WINDOWS:
        raise ValueError(f"window must be one of {tuple(WINDOWS)}")
    limit = WINDOWS[window] * (1 + 1e-12)
    inside = [r for r in records if r.t <= limit]
    if not inside:
        raise ValueError(f"no records inside the {window} window")
    return inside


def optimal_time(records: Sequence[FisherRecord], window: str, scenario: str,
                 subsystems: Sequence[str] = SUBSYSTEMS) -> tuple[int, str]:
    """Index (into the windowed records) and subsystem of the smallest bound.

    Ties go to the earliest time, then to the first subsystem in order.
    Infinite bounds are skipped.
    """
    inside = _window_records(records, window)
    V = np.array([[scenario_value(r, s, scenario) for s in subsystems] for r in inside])
    bad = ~np.isfinite(V)
    if bad.any():
        log.info("%d singular entries excluded from the %s/%s argmin", int(bad.sum()), window, scenario)
    if bad.all():
        raise ValueError("every bound in the window is singular")
    k = int(np.argmin(np.where(bad, np.inf, V)))
    return k // len(subsystems), subsystems[k % len(subsystems)]


def efficiency(records: Sequence[FisherRecord], window: str, scenario: str,
               g1: float = float("nan"), g2: float = float("nan")) -> EfficiencyRecord:
    """``eta = bound(global) / bound(best subsystem)`` at the optimal time."""
    inside = _window_records(records, window)
    k, best = optimal_time(inside, window, scenario)
    rec = inside[k]
    eta = scenario_value(rec, "global", scenario) / scenario_value(rec, best, scenario)
    return EfficiencyRecord(g1, g2, window, scenario, best, float(eta), rec.t)


def efficiency_single(records, window: str, target: str, **kw) -> EfficiencyRecord:
    return efficiency(records, window, f"single_{target}", **kw)


def efficiency_nuisance(records, window: str, target: str, **kw) -> EfficiencyRecord:
    return efficiency(records, window, f"nuisance_{target}", **kw)


def efficiency_joint(records, window: str, **kw) -> EfficiencyRecord:
    """Ratio of global to subsystem ``Tr[Q^-1]``; no counterpart map exists for this one."""
    return efficiency(records, window, "joint", **kw)


def global_loss_ratio(records_closed: Sequence[FisherRecord], records_open: Sequence[FisherRecord],
                      scenario: str, window: str = "long") -> float:
    """``mu = bound(global, closed) / bound(global, open)`` at the optimal time.

    The optimal time is taken from the closed records (best subsystem), so
    both runs are compared at the same instant.
    """
    tc = np.array([r.t for r in records_closed])
    to = np.array([r.t for r in records_open])
    if tc.shape != to.shape or not np.allclose(tc, to, rtol=1e-12, atol=1e-12):
        raise ValueError("closed and open records are on different time grids")
    inside_c = _window_records(records_closed, window)
    k, _ = optimal_time(inside_c, window, scenario)
    closed = scenario_value(inside_c[k], "global", scenario)
    opened = scenario_value(records_open[k], "global", scenario)
    return float(closed / opened)


ScanFn = Callable[[SystemParams], list[FisherRecord]]


def scan_map(g1_grid: Sequence[float], g2_grid: Sequence[float], scan: ScanFn | None = None,
             threads: int = 1, **scan_kw) -> dict[tuple[float, float], list[FisherRecord]]:
    """Fisher scans for every ``(g1, g2)`` cell, keyed by the coupling pair."""
    if scan is None:
        d = scan_kw.pop("dims", HilbertDims())

        def scan(p: SystemParams) -> list[FisherRecord]:
            return fisher_scan(p, d, **scan_kw)

    cells = [(g1, g2) for g1 in g1_grid for g2 in g2_grid]
    run = lambda c: scan(SystemParams(g1=c[0], g2=c[1]))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    return dict(zip(cells, results))


def optimal_subsystem_map(g1_grid: Sequence[float], g2_grid: Sequence[float], window: str, scenario: str,
                          scans: dict | None = None, **scan_kw) -> list[list[EfficiencyRecord]]:
    """``out[i][j]`` is the efficiency record at ``(g1_grid[i], g2_grid[j])``."""
    if scans is None:
        scans = scan_map(g1_grid, g2_grid, **scan_kw)
    return [[efficiency(scans[(g1, g2)], window, scenario, g1=g1, g2=g2) for g2 in g2_grid] for g1 in g1_grid]


@dataclass(frozen=True)
class ConvergenceReport:
    dims: HilbertDims
    reference: HilbertDims
    entropy_dev: float
    bound_dev: float

    @property
    def worst(self) -> float:
        return max(self.entropy_dev, self.bound_dev)


def cutoff_convergence(p: SystemParams, d: HilbertDims, reference: HilbertDims, grid: TimeGrid,
                       initial: InitialState = InitialState(), tol: float = 1e-6,
                       s: StencilConfig = StencilConfig()) -> ConvergenceReport:
    """Largest change in entropies (absolute) and single-parameter bounds (relative)
    between two truncations."""
    ea = entropy_scan(p, grid, d, initial, tol)
    eb = entropy_scan(p, grid, reference, initial, tol)
    ent = max(float(np.max(np.abs(ea[k] - eb[k]))) for k in SUBSYSTEMS)
    ra = fisher_scan(p, d, s, grid, initial=initial, tol=tol)
    rb = fisher_scan(p, reference, s, grid, initial=initial, tol=tol)
    dev = 0.0
    for x, y in zip(ra, rb):
        for label in ("global",) + SUBSYSTEMS:
            for a, b in zip(x.single[label], y.single[label]):
                if np.isfinite(a) and np.isfinite(b):
                    dev = max(dev, abs(a - b) / abs(b))
    return ConvergenceReport(d, reference, ent, dev)


def open_records(p: SystemParams, d: HilbertDims, grid: TimeGrid, rates: DecoherenceRates,
                 initial: InitialState = InitialState(nbar=1.0), s: StencilConfig = StencilConfig(),
                 dt: float = 5e-3, tol: float = 1e-4) -> tuple[list[FisherRecord], list[FisherRecord]]:
    """Closed and open Fisher scans from the same initial state."""
    closed = fisher_scan(p, d, s, grid, initial=initial, tol=tol)
    opened = fisher_scan(p, d, s, grid, mode="open", rates=rates, initial=initial, dt=dt, tol=tol)
    return closed, opened
