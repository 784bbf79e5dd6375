"""Reproducible experiment driver.

One executable, five subcommands:

* ``optimize``      two-step QAOA optimization over an (h, P) grid
* ``transfer``      warm-start refinement of stored schedules on a new target
* ``observables``   Wilson/Creutz/entropy/sector tables for chosen states
* ``spectrum``      low eigenvalues with winding-sector labels
* ``compile``       gate-level circuit for one QAOA step plus a depth report

Artifacts land in ``<output.dir>/<experiment>/<config-hash>/`` and embed the
canonical config echo; re-running with the same config and seed rewrites
byte-identical files.  Exit codes: 0 ok, 2 config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from ._eig import EigensolverError
from .circuits import CompilationError, Schedule, compile_qaoa_step, prepare_electric_gs, prepare_toric_code_gs, qaoa_evolve_exact
from .config import ConfigError, ExperimentConfig, load_config, parse_wilson_sizes
from .dualmodel import DualTFIM, dual_ground_state, dual_lowest_eigenpairs, dual_qaoa_evolve, dual_electric_gs, dual_magnetic_gs
from .hamiltonian import LGTHamiltonian, ground_state, lowest_eigenpairs
from .lattice import build_lattice
from .observables import (
    creutz_ratio,
    default_tripartition,
    sector_energies,
    topological_entropy,
    wilson_scan,
)
from .optimizer import (
    NumericalError,
    ObjectiveSpec,
    OptimizationResult,
    QAOAObjective,
    transfer_schedule,
    two_step_optimize,
)
from .runio import atomic_write_text, fmt, write_csv

LN2 = float(np.log(2.0))


def _point_seed(seed: int, index: int) -> int:
    """Stable per-point seed, independent of execution order."""
    return int(np.random.SeedSequence((seed, index)).generate_state(1)[0])


def _result_name(h: float, p: int) -> str:
    return f"result_h{h:g}_P{p}.json"


def _objective_from_cfg(cfg: ExperimentConfig, h: float, p: int) -> QAOAObjective:
    spec = ObjectiveSpec(
        model=cfg.get("model", "kind"),
        L=cfg.get("model", "l"),
        h=float(h),
        P=int(p),
        start=cfg.get("target", "start"),
        path=cfg.get("target", "path"),
    )
    return QAOAObjective(spec)


def _dt_grid_from_cfg(cfg: ExperimentConfig) -> np.ndarray:
    return np.geomspace(
        cfg.get("optimizer", "dt_min"),
        cfg.get("optimizer", "dt_max"),
        cfg.get("optimizer", "dt_points"),
    )


def _optimize_point(args: tuple) -> tuple[float, int, dict]:
    cfg, h, p, index, source_payload = args
    objective = _objective_from_cfg(cfg, h, p)
    opt = cfg.values["optimizer"]
    seed = _point_seed(opt["seed"], index)
    if source_payload is None:
        result = two_step_optimize(
            objective,
            n_restarts=opt["n_restarts"],
            eps_amp=opt["eps_amp"],
            seed=seed,
            dt_grid=_dt_grid_from_cfg(cfg),
            gtol=opt["gtol"],
            fd_step=opt["fd_step"],
            maxiter=opt["maxiter"],
        )
    else:
        source = OptimizationResult.from_dict(source_payload)
        result = transfer_schedule(
            source,
            objective,
            n_restarts=opt["n_restarts"],
            eps_amp=opt["eps_amp"],
            seed=seed,
            gtol=opt["gtol"],
            fd_step=opt["fd_step"],
            maxiter=opt["maxiter"],
        )
    out = result.as_dict()
    out["experiment_config"] = cfg.echo_lines()
    return h, p, out


def _run_points(cfg: ExperimentConfig, run_dir: Path, sources: dict | None) -> int:
    points = sorted((float(h), int(p)) for h in cfg.get("target", "h") for p in cfg.get("target", "p"))
    jobs = []
    for index, (h, p) in enumerate(points):
        payload = None
        if sources is not None:
            payload = sources[(h, p)]
        jobs.append((cfg, h, p, index, payload))
    workers = cfg.get("output", "workers")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_optimize_point, jobs))
    else:
        results = [_optimize_point(j) for j in jobs]
    rows = []
    for h, p, payload in results:
        atomic_write_text(run_dir / _result_name(h, p), json.dumps(payload, sort_keys=True, indent=2) + "\n")
        fid = payload["fidelity"]
        rows.append(
            (
                h,
                p,
                payload["config"]["model"],
                payload["config"]["L"],
                payload["config"]["start"],
                payload["energy"],
                _maybe(payload["ground_energy"]),
                _maybe(payload["residual_energy"]),
                _maybe(fid),
                _maybe(None if fid is None else 1.0 - fid),
                _maybe(payload["dt_star"]),
                payload["n_evaluations"],
            )
        )
    write_csv(
        run_dir / "summary.csv",
        ["h", "P", "model", "L", "start", "energy", "ground_energy", "residual_energy",
         "fidelity", "infidelity", "dt_star", "n_evaluations"],
        rows,
        comments=cfg.echo_lines(),
    )
    return 0


def _maybe(x):
    return "" if x is None else x


def cmd_optimize(cfg: ExperimentConfig, run_dir: Path) -> int:
    return _run_points(cfg, run_dir, None)


def cmd_transfer(cfg: ExperimentConfig, run_dir: Path, source_path: str) -> int:
    src = Path(source_path)
    sources: dict[tuple[float, int], dict] = {}
    points = [(float(h), int(p)) for h in cfg.get("target", "h") for p in cfg.get("target", "p")]
    for h, p in points:
        f = src / _result_name(h, p) if src.is_dir() else src
        if not f.exists():
            raise ConfigError(f"source result {f} not found")
        payload = json.loads(f.read_text())
        if len(payload["schedule"]["gammas"]) != p:
            raise ConfigError(
                f"source depth P={len(payload['schedule']['gammas'])} does not match target P={p}"
            )
        sources[(h, p)] = payload
    return _run_points(cfg, run_dir, sources)


def _state_for_observables(cfg: ExperimentConfig, h: float, result_dir: str | None):
    """Returns (state, geometry, is_direct) for the configured state source."""
    kind = cfg.get("model", "kind")
    L = cfg.get("model", "l")
    source = cfg.get("observables", "state")
    if kind == "dual":
        model = DualTFIM(L, float(h))
        if source == "exact_gs":
            return dual_ground_state(model)[1], model, False
        if source == "qaoa":
            sched = _schedule_from_result(cfg, h, result_dir)
            psi0 = dual_electric_gs(model) if sched.start == "electric" else dual_magnetic_gs(model)
            return dual_qaoa_evolve(psi0, sched, model), model, False
        raise ConfigError(f"observables.state={source!r} is not available in the dual model")
    lat = build_lattice(L)
    if source == "electric":
        return prepare_electric_gs(lat), lat, True
    if source == "toric":
        return prepare_toric_code_gs(lat)[0], lat, True
    if source == "exact_gs":
        return ground_state(LGTHamiltonian(lat, float(h)))[1], lat, True
    sched = _schedule_from_result(cfg, h, result_dir)
    psi0 = prepare_electric_gs(lat) if sched.start == "electric" else prepare_toric_code_gs(lat)[0]
    return qaoa_evolve_exact(psi0, sched, lat), lat, True


def _schedule_from_result(cfg: ExperimentConfig, h: float, result_dir: str | None) -> Schedule:
    raw = result_dir or cfg.get("observables", "result")
    if not raw:
        raise ConfigError("observables.state=qaoa requires observables.result (file or directory)")
    src = Path(raw)
    p = int(cfg.get("target", "p")[0])
    f = src / _result_name(float(h), p) if src.is_dir() else src
    if not f.exists():
        raise ConfigError(f"result file {f} not found")
    payload = json.loads(f.read_text())
    return Schedule(
        tuple(payload["schedule"]["gammas"]),
        tuple(payload["schedule"]["betas"]),
        payload["schedule"]["start"],
    )


def cmd_observables(cfg: ExperimentConfig, run_dir: Path, result_path: str | None) -> int:
    sizes = parse_wilson_sizes(cfg.get("observables", "wilson"))
    creutz_l = cfg.get("observables", "creutz_l")
    rows = []
    for h in cfg.get("target", "h"):
        state, geometry, is_direct = _state_for_observables(cfg, h, result_path)
        wtable = wilson_scan(state, geometry, sizes)
        for (lx, ly), val in wtable.items():
            rows.append((h, f"wilson_{lx}x{ly}", val, ""))
        needed = {(creutz_l, creutz_l), (creutz_l - 1, creutz_l - 1),
                  (creutz_l, creutz_l - 1), (creutz_l - 1, creutz_l)}
        if needed <= set(wtable):
            c = creutz_ratio(wtable, creutz_l)
            rows.append((h, f"creutz_{creutz_l}", _maybe(c.value), "indeterminate" if c.indeterminate else ""))
        if cfg.get("observables", "entropy"):
            if not is_direct:
                raise ConfigError("entropy observables need the direct model")
            part = default_tripartition(geometry)
            ent = topological_entropy(state, part)
            rows.append((h, "s_topo", ent.s_topo, ent.s_topo / LN2))
            rows.append((h, "s_abc", ent.s_abc, ent.s_abc / LN2))
        if cfg.get("observables", "sectors"):
            if not is_direct:
                raise ConfigError("sector observables need the direct model")
            sched = _schedule_from_result(cfg, h, result_path)
            for rec in sector_energies(geometry, float(h), sched, offset=cfg.get("observables", "offset")):
                rows.append((h, f"sector_energy_{rec.label}", rec.energy, ""))
                rows.append((h, f"sector_tau_h_{rec.label}", rec.tau_h, ""))
                rows.append((h, f"sector_tau_v_{rec.label}", rec.tau_v, ""))
    write_csv(
        run_dir / "observables.csv",
        ["h", "observable", "value", "extra"],
        rows,
        comments=cfg.echo_lines() + [f"critical_coupling_reference={fmt(3.04438)}"],
    )
    return 0


def cmd_spectrum(cfg: ExperimentConfig, run_dir: Path) -> int:
    k = cfg.get("spectrum", "k")
    kind = cfg.get("model", "kind")
    L = cfg.get("model", "l")
    rows = []
    for h in cfg.get("target", "h"):
        if kind == "direct":
            H = LGTHamiltonian(build_lattice(L), float(h))
            spec = lowest_eigenpairs(H, k, restrict_gauge_sector=cfg.get("spectrum", "sector") == "gauge")
        else:
            spec = dual_lowest_eigenpairs(DualTFIM(L, float(h)), k)
        for i, e, th, tv, r in spec.rows():
            rows.append((h, i, e, th, tv, r))
    write_csv(
        run_dir / "spectrum.csv",
        ["h", "index", "eigenvalue", "tau_h", "tau_v", "residual"],
        rows,
        comments=cfg.echo_lines(),
    )
    return 0


def cmd_compile(args: argparse.Namespace) -> int:
    lat = build_lattice(args.L)
    circ = compile_qaoa_step(lat, args.gamma, args.beta, start=args.start, electric_mode=args.mode)
    out = Path(args.out)
    atomic_write_text(out, circ.to_text())
    report = {
        "L": args.L,
        "n_qubits": lat.num_links,
        "gamma": args.gamma,
        "beta": args.beta,
        "start": args.start,
        "electric_mode": args.mode,
        "depth": circ.depth,
        "gate_counts": {kind: circ.count(kind) for kind in ("H", "RX", "RZ", "CNOT")},
    }
    atomic_write_text(out.with_suffix(out.suffix + ".depth.json"), json.dumps(report, sort_keys=True, indent=2) + "\n")
    print(f"wrote {out} (depth {circ.depth})")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="z2qaoa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="INI config file")
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("--model", choices=["direct", "dual"], help="shortcut for model.kind")
        p.add_argument("--L", type=int, help="shortcut for model.l")
        p.add_argument("--h", help="shortcut for target.h (comma list)")
        p.add_argument("--P", help="shortcut for target.p (comma list / a..b)")
        p.add_argument("--start", choices=["electric", "magnetic"], help="shortcut for target.start")
        p.add_argument("--seed", type=int, help="shortcut for optimizer.seed")
        p.add_argument("--out-dir", help="shortcut for output.dir")
        p.add_argument("--experiment", help="shortcut for output.experiment")
        p.add_argument("--workers", type=int, help="shortcut for output.workers")

    for name in ("optimize", "transfer", "observables", "spectrum"):
        p = sub.add_parser(name)
        add_common(p)
        if name == "transfer":
            p.add_argument("--source", required=True, help="source result file or directory")
        if name == "observables":
            p.add_argument("--result", help="optimization result file or directory for qaoa states")

    c = sub.add_parser("compile")
    c.add_argument("--L", type=int, required=True)
    c.add_argument("--gamma", type=float, required=True)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--start", choices=["electric", "magnetic"], default="electric")
    c.add_argument("--mode", choices=["rx", "hzh"], default="rx")
    c.add_argument("--out", required=True, help="circuit text output path")
    return parser


def _overrides_from_args(args: argparse.Namespace) -> list[str]:
    overrides = list(args.set)
    shortcut_map = {
        "model": "model.kind",
        "L": "model.l",
        "h": "target.h",
        "P": "target.p",
        "start": "target.start",
        "seed": "optimizer.seed",
        "out_dir": "output.dir",
        "experiment": "output.experiment",
        "workers": "output.workers",
    }
    for attr, target in shortcut_map.items():
        val = getattr(args, attr, None)
        if val is not None:
            overrides.append(f"{target}={val}")
    return overrides


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "compile":
            return cmd_compile(args)
        cfg = load_config(args.config, _overrides_from_args(args))
        run_dir = Path(cfg.get("output", "dir")) / cfg.get("output", "experiment") / cfg.run_hash()
        run_dir.mkdir(parents=True, exist_ok=True)
        atomic_write_text(run_dir / "config.txt", cfg.canonical() + "\n")
        if args.command == "optimize":
            return cmd_optimize(cfg, run_dir)
        if args.command == "transfer":
            return cmd_transfer(cfg, run_dir, args.source)
        if args.command == "observables":
            return cmd_observables(cfg, run_dir, args.result)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, run_dir)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, CompilationError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 2
    except (NumericalError, EigensolverError, RuntimeError, ValueError, ArithmeticError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}))
        return 3


if __name__ == "__main__":
    sys.exit(main())
