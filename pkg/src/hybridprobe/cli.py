"""Command-line front end.

    hybridprobe <subcommand> --config run.toml [--out DIR] [--threads N]

Every run writes ``meta.json`` (resolved configuration plus library version)
and one or more CSV files with 17 significant digits. A ``meta.json`` can be
passed back as ``--config`` to repeat a run.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .analysis import (
    SCENARIOS,
    WINDOWS,
    cutoff_convergence,
    entropy_scan,
    global_loss_ratio,
    optimal_subsystem_map,
    scan_map,
)
from .dynamics import DecoherenceRates, IntegrationError, TimeGrid
from .estimation import (
    LABELS,
    FisherRecord,
    RouteMismatch,
    StencilConfig,
    family_qfi,
    fisher_scan,
    iter_stencil,
)
from .hilbert import HilbertDims, TruncationError
from .homodyne import GridError, QuadratureGrid, optimize_lo_phase
from .model import InitialState, SystemParams

log = logging.getLogger("hybridprobe")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
SHORT = {"global": "global", "qubit": "qubit", "cavity": "cavity", "mechanics": "mech"}


class ConfigError(ValueError):
    pass


@dataclass
class SystemSection:
    g1: float = 0.1
    g2: float = 0.1
    omega_c: float = 100.0
    omega_q: float = 100.0
    omega_m: float = 1.0


@dataclass
class DimsSection:
    cavity: int = 25
    mechanics: int = 25


@dataclass
class InitialSection:
    alpha: float = 2.0
    beta: float = 2.0
    nbar: float | None = None


@dataclass
class RatesSection:
    kappa: float = 0.01
    Gamma: float = 1e-5
    gamma: float = 0.01
    Nbar: float = 100.0


@dataclass
class StencilSection:
    delta_g1: float = 1e-4
    delta_g2: float = 1e-4


@dataclass
class TimeSection:
    t_max: float = 6 * np.pi
    n: int = 300


@dataclass
class MapSection:
    g1: list = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.15, 0.2])
    g2: list = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.15, 0.2])
    windows: list = field(default_factory=lambda: ["long", "short"])
    scenarios: list = field(default_factory=lambda: list(SCENARIOS))


@dataclass
class HomodyneSection:
    x_max: float = 12.0
    n_points: int = 2401
    phase_count: int = 120


@dataclass
class ConvergenceSection:
    cavity: int = 30
    mechanics: int = 30


@dataclass
class NumericsSection:
    dt: float = 5e-3
    tol: float = 1e-6
    eps: float | None = None


@dataclass
class RunConfig:
    system: SystemSection = field(default_factory=SystemSection)
    dims: DimsSection = field(default_factory=DimsSection)
    initial: InitialSection = field(default_factory=InitialSection)
    rates: RatesSection = field(default_factory=RatesSection)
    stencil: StencilSection = field(default_factory=StencilSection)
    time: TimeSection = field(default_factory=TimeSection)
    map: MapSection = field(default_factory=MapSection)
    homodyne: HomodyneSection = field(default_factory=HomodyneSection)
    convergence: ConvergenceSection = field(default_factory=ConvergenceSection)
    numerics: NumericsSection = field(default_factory=NumericsSection)

    # --- conversion to library objects

    def params(self) -> SystemParams:
        return SystemParams(**asdict(self.system))

    def hilbert(self) -> HilbertDims:
        return HilbertDims(self.dims.cavity, self.dims.mechanics)

    def initial_state(self) -> InitialState:
        return InitialState(**asdict(self.initial))

    def decoherence(self) -> DecoherenceRates:
        return DecoherenceRates(**asdict(self.rates))

    def stencil_config(self) -> StencilConfig:
        return StencilConfig(**asdict(self.stencil))

    def grid(self) -> TimeGrid:
        return TimeGrid.uniform(self.time.t_max, self.time.n)

    def quadrature(self) -> QuadratureGrid:
        return QuadratureGrid(-self.homodyne.x_max, self.homodyne.x_max, self.homodyne.n_points)


def _build(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"[{path}] must be a table")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{path or 'top level'}]: {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = getattr(cls(), name)
        where = f"{path}.{name}" if path else name
        if is_dataclass(default):
            kwargs[name] = _build(type(default), value, where)
        else:
            kwargs[name] = _coerce(value, default, where)
    return cls(**kwargs)


def _coerce(value, default, where: str):
    if value is None and default is None:
        return None
    if isinstance(default, bool) or isinstance(value, bool):
        raise ConfigError(f"{where}: booleans are not accepted")
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        kinds = {type(v) for v in default}
        for v in value:
            if kinds == {str} and not isinstance(v, str):
                raise ConfigError(f"{where}: expected strings, got {v!r}")
            if kinds == {float} and (isinstance(v, bool) or not isinstance(v, (int, float))):
                raise ConfigError(f"{where}: expected numbers, got {v!r}")
        return [float(v) for v in value] if kinds == {float} else value
    if isinstance(default, int):
        if not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or default is None:
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    return value


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        data = data.get("config", data)
    else:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    cfg = _build(RunConfig, data, "")
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    try:
        cfg.params()
        cfg.hilbert()
        cfg.decoherence()
        cfg.stencil_config()
        cfg.grid()
        cfg.quadrature()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for w in cfg.map.windows:
        if w not in WINDOWS:
            raise ConfigError(f"map.windows: unknown window {w!r}")
    for s in cfg.map.scenarios:
        if s not in SCENARIOS:
            raise ConfigError(f"map.scenarios: unknown scenario {s!r}")
    if not cfg.numerics.dt > 0:
        raise ConfigError("numerics.dt must be positive")


# --- output


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_meta(out: Path, subcommand: str, cfg: RunConfig, extra: dict | None = None) -> None:
    meta = {"library": "hybridprobe", "version": __version__, "subcommand": subcommand, "config": asdict(cfg)}
    if extra:
        meta.update(extra)
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


# --- subcommands


def cmd_entropy(cfg: RunConfig, out: Path, args) -> None:
    e = entropy_scan(cfg.params(), cfg.grid(), cfg.hilbert(), cfg.initial_state(), cfg.numerics.tol)
    rows = zip(e["t"], e["qubit"], e["cavity"], e["mechanics"])
    write_csv(out / "entropy.csv", ["t", "S_qubit", "S_cavity", "S_mech"], rows)


def _records(cfg: RunConfig, mode: str = "closed"):
    return fisher_scan(
        cfg.params(), cfg.hilbert(), cfg.stencil_config(), cfg.grid(), mode=mode,
        rates=cfg.decoherence() if mode == "open" else None, initial=cfg.initial_state(),
        dt=cfg.numerics.dt, eps=cfg.numerics.eps, tol=cfg.numerics.tol,
    )


def cmd_qfi(cfg: RunConfig, out: Path, args) -> None:
    recs = _records(cfg)
    header = ["t"] + [f"invQ{i}{i}_{SHORT[l]}" for i in (1, 2) for l in LABELS]
    rows = ([r.t] + [r.single[l][i - 1] for i in (1, 2) for l in LABELS] for r in recs)
    write_csv(out / "qfi.csv", header, rows)


def cmd_nuisance(cfg: RunConfig, out: Path, args) -> None:
    recs = _records(cfg)
    header = ["t"] + [f"nuisQ{i}{i}_{SHORT[l]}" for i in (1, 2) for l in LABELS]
    rows = ([r.t] + [r.nuisance[l][i - 1] for i in (1, 2) for l in LABELS] for r in recs)
    write_csv(out / "nuisance.csv", header, rows)


def cmd_joint(cfg: RunConfig, out: Path, args) -> None:
    s = cfg.stencil_config()
    header = ["t"] + [f"trQinv_{SHORT[l]}" for l in LABELS]
    if args.homodyne:
        header += ["trFinv_homodyne", "lo_phase"]
    rows = []
    fams = iter_stencil(cfg.params(), cfg.hilbert(), s, cfg.grid(), initial=cfg.initial_state(),
                        tol=cfg.numerics.tol)
    for fam in fams:
        rec = FisherRecord.from_matrices(fam.t, family_qfi(fam, s, cfg.numerics.eps))
        row = [rec.t] + [rec.scalar[l] for l in LABELS]
        if args.homodyne:
            scan = optimize_lo_phase(fam.reduced("cavity"), s, cfg.quadrature(), cfg.homodyne.phase_count)
            row += [scan.best_scalar, scan.best_phase]
        rows.append(row)
    write_csv(out / "joint.csv", header, rows)


def cmd_map(cfg: RunConfig, out: Path, args) -> None:
    m = cfg.map
    scans = scan_map(
        m.g1, m.g2, threads=args.threads, dims=cfg.hilbert(), s=cfg.stencil_config(), grid=cfg.grid(),
        initial=cfg.initial_state(), eps=cfg.numerics.eps, tol=cfg.numerics.tol,
    )
    rows = []
    for window in m.windows:
        for scenario in m.scenarios:
            for line in optimal_subsystem_map(m.g1, m.g2, window, scenario, scans=scans):
                for r in line:
                    rows.append([r.g1, r.g2, r.window, r.scenario, r.best_subsystem, r.eta, r.t_star])
    write_csv(out / "map.csv", ["g1", "g2", "window", "scenario", "best_subsystem", "eta", "t_star"], rows)


def cmd_open(cfg: RunConfig, out: Path, args) -> None:
    closed = _records(cfg, "closed")
    opened = _records(cfg, "open")
    header = ["t"] + [f"{b}_{kind}" for b in ("invQ11", "invQ22", "nuisQ11", "nuisQ22", "trQinv")
                      for kind in ("closed", "open")]

    def vals(r):
        g = "global"
        return [r.single[g][0], r.single[g][1], r.nuisance[g][0], r.nuisance[g][1], r.scalar[g]]

    rows = []
    for c, o in zip(closed, opened):
        vc, vo = vals(c), vals(o)
        rows.append([c.t] + [x for pair in zip(vc, vo) for x in pair])
    write_csv(out / "open.csv", header, rows)
    mu_rows = []
    t_end = cfg.grid().t_values[-1]
    for window, limit in WINDOWS.items():
        if t_end < limit * (1 - 1e-12) and window != "short":
            continue
        for scenario in SCENARIOS:
            mu_rows.append([window, scenario, global_loss_ratio(closed, opened, scenario, window)])
    write_csv(out / "mu.csv", ["window", "scenario", "mu"], mu_rows)


def cmd_convergence(cfg: RunConfig, out: Path, args) -> None:
    ref = HilbertDims(cfg.convergence.cavity, cfg.convergence.mechanics)
    rep = cutoff_convergence(cfg.params(), cfg.hilbert(), ref, cfg.grid(), cfg.initial_state(),
                             cfg.numerics.tol, cfg.stencil_config())
    write_csv(
        out / "convergence.csv",
        ["cavity", "mechanics", "ref_cavity", "ref_mechanics", "entropy_dev", "bound_rel_dev"],
        [[rep.dims.cavity_dim, rep.dims.mech_dim, ref.cavity_dim, ref.mech_dim, rep.entropy_dev, rep.bound_dev]],
    )


COMMANDS = {
    "entropy": cmd_entropy,
    "qfi": cmd_qfi,
    "nuisance": cmd_nuisance,
    "joint": cmd_joint,
    "map": cmd_map,
    "open": cmd_open,
    "convergence": cmd_convergence,
}


def _threads(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("HYBRIDPROBE_THREADS")
    if env is None:
        return 1
    try:
        return max(1, int(env))
    except ValueError:
        raise ConfigError(f"HYBRIDPROBE_THREADS must be an integer, got {env!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hybridprobe", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="TOML config (or a previous meta.json)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--threads", type=int, default=None, help="worker threads for sweeps")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "joint":
            sp.add_argument("--homodyne", action="store_true", help="add the optimised homodyne bound")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.threads = _threads(args.threads)
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    extra = {"homodyne": bool(getattr(args, "homodyne", False))}
    try:
        COMMANDS[args.command](cfg, out, args)
    except (IntegrationError, TruncationError, RouteMismatch, GridError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_meta(out, args.command, cfg, extra)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
