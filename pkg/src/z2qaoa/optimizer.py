"""Classical outer loop: linear-annealing seed, 1D step search, perturbed
multi-start BFGS refinement, basin-hopping benchmark, and schedule transfer.

The two-step protocol first minimizes over the one-parameter family of
Trotterized linear annealing schedules (a 1D grid search over the time step),
then runs ``n_restarts`` BFGS descents from the best linear schedule plus
uniform perturbations in [-eps_amp, eps_amp), keeping the best outcome.
Gradients are central finite differences; everything is seeded and the
best-of reduction is deterministic (ties break to the lowest restart index).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import basinhopping as _scipy_basinhopping
from scipy.optimize import minimize as _scipy_minimize

from .circuits import (
    Schedule,
    prepare_electric_gs,
    prepare_toric_code_gs,
    qaoa_evolve_compiled,
    qaoa_evolve_exact,
)
from .dualmodel import (
    DualTFIM,
    dual_electric_gs,
    dual_energy,
    dual_ground_state,
    dual_magnetic_gs,
    dual_qaoa_evolve,
)
from .hamiltonian import LGTHamiltonian, energy as direct_energy, ground_state
from .lattice import build_lattice
from .statevector import StateVector, fidelity

DEFAULT_DT_GRID = (0.02, 1.5, 60)  # geometric grid bounds and point count
DEFAULT_GTOL = 1e-8
# Warm-started refinements converge in tens of iterations at this tolerance;
# polishing them to 1e-8 would multiply the iteration count for no gain in
# the fidelities the transfer is judged by.
DEFAULT_TRANSFER_GTOL = 1e-5
DEFAULT_FD_STEP = 1e-6
DEFAULT_MAXITER = 500
ORACLE_DIM_CAP = 1 << 20  # beyond this, exact ground states are opt-in


class NumericalError(RuntimeError):
    """Objective returned a non-finite value."""


@dataclass(frozen=True)
class ObjectiveSpec:
    """What energy landscape to minimize."""

    model: str  # "direct" | "dual"
    L: int
    h: float
    P: int
    start: str  # "electric" | "magnetic"
    path: str = "exact"  # "exact" | "compiled"

    def __post_init__(self):
        if self.model not in ("direct", "dual"):
            raise ValueError(f"model must be 'direct' or 'dual', got {self.model!r}")
        if self.start not in ("electric", "magnetic"):
            raise ValueError(f"start must be 'electric' or 'magnetic', got {self.start!r}")
        if self.path not in ("exact", "compiled"):
            raise ValueError(f"path must be 'exact' or 'compiled', got {self.path!r}")
        if self.path == "compiled" and self.model != "direct":
            raise ValueError("the compiled evaluation path exists only for the direct model")
        if self.P < 1:
            raise ValueError("P must be >= 1")
        if self.h < 0:
            raise ValueError("h must be >= 0")

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "L": self.L,
            "h": self.h,
            "P": self.P,
            "start": self.start,
            "path": self.path,
        }


class QAOAObjective:
    """Evaluates E_P(gamma, beta) for a fixed model, depth and start.

    Parameter vectors are laid out [gamma_1..gamma_P, beta_1..beta_P].
    Ground-state oracles (for residual energy and fidelity) are computed
    lazily and cached; they are skipped by default above ORACLE_DIM_CAP.
    """

    def __init__(self, spec: ObjectiveSpec, *, oracle: bool | None = None, oracle_seed: int = 7):
        self.spec = spec
        self.n_evaluations = 0
        self._oracle_seed = oracle_seed
        self._gs: tuple[float, StateVector] | None = None
        if spec.model == "direct":
            self._lat = build_lattice(spec.L)
            self._ham = LGTHamiltonian(self._lat, spec.h)
            if spec.path == "compiled":
                from .circuits import compile_qaoa_step

                compile_qaoa_step(self._lat, 0.0, 0.0)  # raises for unsupported L
            dim = 1 << self._lat.num_links
        else:
            self._dual = DualTFIM(spec.L, spec.h)
            dim = self._dual.dim
        self._dim = dim
        self.oracle_enabled = (dim <= ORACLE_DIM_CAP) if oracle is None else oracle
        self._psi0 = self._build_initial_state()

    def _build_initial_state(self) -> StateVector:
        if self.spec.model == "direct":
            if self.spec.start == "electric":
                return prepare_electric_gs(self._lat)
            return prepare_toric_code_gs(self._lat)[0]
        if self.spec.start == "electric":
            return dual_electric_gs(self._dual)
        return dual_magnetic_gs(self._dual)

    def initial_state(self) -> StateVector:
        return self._psi0.copy()

    def evolve(self, sched: Schedule) -> StateVector:
        if sched.start != self.spec.start:
            raise ValueError(f"schedule start {sched.start!r} != objective start {self.spec.start!r}")
        if sched.P != self.spec.P:
            raise ValueError(f"schedule depth {sched.P} != objective depth {self.spec.P}")
        if self.spec.model == "direct":
            if self.spec.path == "compiled":
                return qaoa_evolve_compiled(self._psi0, sched, self._lat)
            return qaoa_evolve_exact(self._psi0, sched, self._lat)
        return dual_qaoa_evolve(self._psi0, sched, self._dual)

    def state_energy(self, psi: StateVector) -> float:
        if self.spec.model == "direct":
            return direct_energy(self._ham, psi)
        return dual_energy(self._dual, psi)

    def schedule_energy(self, sched: Schedule) -> float:
        e = self.state_energy(self.evolve(sched))
        self.n_evaluations += 1
        if not np.isfinite(e):
            raise NumericalError(f"non-finite energy {e} at schedule {sched}")
        return e

    def schedule_from_vector(self, x: np.ndarray) -> Schedule:
        return Schedule.from_vector(x, self.spec.start)

    def evaluate(self, x: np.ndarray) -> float:
        return self.schedule_energy(self.schedule_from_vector(x))

    def gradient(self, x: np.ndarray, step: float = DEFAULT_FD_STEP) -> np.ndarray:
        """Central-difference gradient; the dual model evaluates all 4P
        displaced points as one vectorized batch."""
        x = np.asarray(x, dtype=float)
        if self.spec.model != "dual":
            return central_difference_gradient(self.evaluate, x, step)
        from .dualmodel import energy_batch, evolve_batch

        d = x.size
        pts = np.repeat(x[None, :], 2 * d, axis=0)
        rows = np.arange(d)
        pts[rows, rows] += step
        pts[d + rows, rows] -= step
        amps = evolve_batch(self._dual, self._psi0, pts, self.spec.start)
        es = energy_batch(self._dual, amps)
        self.n_evaluations += 2 * d
        if not np.all(np.isfinite(es)):
            raise NumericalError("non-finite energy in gradient batch")
        return (es[:d] - es[d:]) / (2.0 * step)

    # -- oracle-backed quality measures ------------------------------------

    def _oracle(self) -> tuple[float, StateVector] | None:
        if not self.oracle_enabled:
            return None
        if self._gs is None:
            if self.spec.model == "direct":
                self._gs = ground_state(self._ham, seed=self._oracle_seed)
            else:
                self._gs = dual_ground_state(self._dual, seed=self._oracle_seed)
        return self._gs

    def ground_energy(self) -> float | None:
        gs = self._oracle()
        return None if gs is None else gs[0]

    def ground_state_vector(self) -> StateVector | None:
        gs = self._oracle()
        return None if gs is None else gs[1]

    def fidelity_of(self, sched: Schedule) -> float | None:
        gs = self._oracle()
        if gs is None:
            return None
        return fidelity(self.evolve(sched), gs[1])


# ---------------------------------------------------------------------------
# Linear digitized-annealing schedules
# ---------------------------------------------------------------------------

def linear_dqa_schedule(P: int, h: float, dt: float, start: str) -> Schedule:
    """Trotterized linear turn-on of the opposing Hamiltonian term.

    Electric start ramps the plaquette term:  gamma_m = (m dt / P) h,
    beta_m = dt.  Magnetic start ramps the electric term: gamma_m = dt,
    beta_m = m dt / (h P), undefined at h = 0.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if P < 1:
        raise ValueError("P must be >= 1")
    m = np.arange(1, P + 1, dtype=float)
    if start == "electric":
        gammas = m * dt / P * h
        betas = np.full(P, dt)
    elif start == "magnetic":
        if h == 0:
            raise ValueError("magnetic-start linear schedule is undefined at h = 0")
        gammas = np.full(P, dt)
        betas = m * dt / (h * P)
    else:
        raise ValueError(f"start must be 'electric' or 'magnetic', got {start!r}")
    return Schedule(tuple(gammas), tuple(betas), start)


@dataclass
class DtSearchResult:
    dt_star: float
    dt_grid: list[float]
    energies: list[float]
    at_boundary: bool


def default_dt_grid() -> np.ndarray:
    lo, hi, num = DEFAULT_DT_GRID
    return np.geomspace(lo, hi, num)


def grid_search_dt(
    objective, P: int, h: float, start: str, dt_grid: np.ndarray | None = None
) -> DtSearchResult:
    """1D scan of the linear-schedule family; returns argmin and full curve.

    Ties keep the first (smallest) grid point.  A minimum on the boundary of
    the grid triggers a warning: widen the grid rather than trust it.
    """
    energy_fn: Callable[[Schedule], float]
    energy_fn = objective.schedule_energy if hasattr(objective, "schedule_energy") else objective
    if dt_grid is None:
        dt_grid = default_dt_grid()
    dt_grid = np.asarray(dt_grid, dtype=float)
    if dt_grid.size == 0 or np.any(dt_grid <= 0) or np.any(np.diff(dt_grid) <= 0):
        raise ValueError("dt grid must be non-empty, positive and ascending")
    energies = np.array([energy_fn(linear_dqa_schedule(P, h, dt, start)) for dt in dt_grid])
    best = int(np.argmin(energies))
    at_boundary = best in (0, dt_grid.size - 1)
    if at_boundary and dt_grid.size > 1:
        warnings.warn(
            f"linear-schedule minimum sits on the dt grid boundary (dt={dt_grid[best]:g}); "
            "consider widening the grid",
            stacklevel=2,
        )
    return DtSearchResult(
        dt_star=float(dt_grid[best]),
        dt_grid=[float(x) for x in dt_grid],
        energies=[float(e) for e in energies],
        at_boundary=at_boundary,
    )


# ---------------------------------------------------------------------------
# Local minimization (BFGS with central-difference gradients)
# ---------------------------------------------------------------------------

def central_difference_gradient(
    fn: Callable[[np.ndarray], float], x: np.ndarray, step: float = DEFAULT_FD_STEP
) -> np.ndarray:
    grad = np.empty_like(x, dtype=float)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (fn(xp) - fn(xm)) / (2.0 * step)
    return grad


@dataclass
class LocalMinResult:
    x: np.ndarray
    energy: float
    iterations: int
    grad_norm: float
    converged: bool


def local_minimize(
    fn: Callable[[np.ndarray], float],
    x0: np.ndarray,
    *,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
    gtol: float = DEFAULT_GTOL,
    fd_step: float = DEFAULT_FD_STEP,
    maxiter: int = DEFAULT_MAXITER,
) -> LocalMinResult:
    """Quasi-Newton descent to a stationary point (or the iteration cap).

    ``jac`` defaults to central finite differences with step ``fd_step``.
    """

    x0 = np.asarray(x0, dtype=float)

    def checked(x: np.ndarray) -> float:
        v = fn(x)
        if not np.isfinite(v):
            raise NumericalError(f"objective returned {v} at x={x}")
        return v

    res = _scipy_minimize(
        checked,
        x0,
        jac=jac if jac is not None else (lambda x: central_difference_gradient(checked, x, fd_step)),
        method="BFGS",
        options={"gtol": gtol, "maxiter": maxiter},
    )
    grad_norm = float(np.max(np.abs(res.jac))) if res.jac is not None else float("nan")
    return LocalMinResult(
        x=np.asarray(res.x, dtype=float),
        energy=float(res.fun),
        iterations=int(res.nit),
        grad_norm=grad_norm,
        converged=bool(res.success) or grad_norm <= gtol,
    )


# ---------------------------------------------------------------------------
# Results container
# ---------------------------------------------------------------------------

@dataclass
class RestartRecord:
    index: int
    seed_key: int
    iterations: int
    energy: float

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "seed_key": self.seed_key,
            "iterations": self.iterations,
            "energy": self.energy,
        }


@dataclass
class OptimizationResult:
    """Best schedule plus the full experiment record."""

    config: dict
    schedule: Schedule
    energy: float
    ground_energy: float | None = None
    residual_energy: float | None = None
    fidelity: float | None = None
    dt_star: float | None = None
    dt_grid: list[float] | None = None
    dt_energies: list[float] | None = None
    restarts: list[RestartRecord] = field(default_factory=list)
    n_evaluations: int = 0

    def as_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "optimization_result",
            "config": self.config,
            "schedule": {
                "gammas": list(self.schedule.gammas),
                "betas": list(self.schedule.betas),
                "start": self.schedule.start,
            },
            "energy": self.energy,
            "ground_energy": self.ground_energy,
            "residual_energy": self.residual_energy,
            "fidelity": self.fidelity,
            "dt_star": self.dt_star,
            "dt_grid": self.dt_grid,
            "dt_energies": self.dt_energies,
            "restarts": [r.as_dict() for r in self.restarts],
            "n_evaluations": self.n_evaluations,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizationResult":
        sched = Schedule(
            tuple(d["schedule"]["gammas"]),
            tuple(d["schedule"]["betas"]),
            d["schedule"]["start"],
        )
        return cls(
            config=d.get("config", {}),
            schedule=sched,
            energy=d["energy"],
            ground_energy=d.get("ground_energy"),
            residual_energy=d.get("residual_energy"),
            fidelity=d.get("fidelity"),
            dt_star=d.get("dt_star"),
            dt_grid=d.get("dt_grid"),
            dt_energies=d.get("dt_energies"),
            restarts=[RestartRecord(**r) for r in d.get("restarts", [])],
            n_evaluations=d.get("n_evaluations", 0),
        )

    @classmethod
    def from_json(cls, text: str) -> "OptimizationResult":
        return cls.from_dict(json.loads(text))


def _finalize_result(
    objective: QAOAObjective,
    config: dict,
    records: list[RestartRecord],
    xs: list[np.ndarray],
    *,
    dt: DtSearchResult | None = None,
) -> OptimizationResult:
    best = min(range(len(records)), key=lambda i: (records[i].energy, i))
    sched = objective.schedule_from_vector(xs[best])
    e_gs = objective.ground_energy()
    resid = None if e_gs is None else records[best].energy - e_gs
    if resid is not None and resid < -1e-9:
        raise RuntimeError(
            f"variational energy beats the oracle ground energy by {-resid:.3e}"
        )
    return OptimizationResult(
        config=config,
        schedule=sched,
        energy=records[best].energy,
        ground_energy=e_gs,
        residual_energy=resid,
        fidelity=objective.fidelity_of(sched),
        dt_star=None if dt is None else dt.dt_star,
        dt_grid=None if dt is None else dt.dt_grid,
        dt_energies=None if dt is None else dt.energies,
        restarts=records,
        n_evaluations=objective.n_evaluations,
    )


def _perturbed_multistart(
    objective: QAOAObjective,
    x0: np.ndarray,
    *,
    n_restarts: int,
    eps_amp: float,
    seed: int,
    gtol: float,
    fd_step: float,
    maxiter: int,
) -> tuple[list[RestartRecord], list[np.ndarray]]:
    """n_restarts BFGS runs from x0 + eps, eps ~ U[-eps_amp, eps_amp)^{2P}."""
    records: list[RestartRecord] = []
    xs: list[np.ndarray] = []
    children = np.random.SeedSequence(seed).spawn(n_restarts)
    jac = lambda x: objective.gradient(x, fd_step)  # noqa: E731
    for r in range(n_restarts):
        rng = np.random.default_rng(children[r])
        eps = rng.uniform(-eps_amp, eps_amp, x0.size) if eps_amp > 0 else np.zeros(x0.size)
        res = local_minimize(
            objective.evaluate, x0 + eps, jac=jac, gtol=gtol, fd_step=fd_step, maxiter=maxiter
        )
        records.append(RestartRecord(index=r, seed_key=r, iterations=res.iterations, energy=res.energy))
        xs.append(res.x)
    return records, xs


def two_step_optimize(
    objective: QAOAObjective,
    *,
    n_restarts: int = 10,
    eps_amp: float = 0.025,
    seed: int = 0,
    dt_grid: np.ndarray | None = None,
    gtol: float = DEFAULT_GTOL,
    fd_step: float = DEFAULT_FD_STEP,
    maxiter: int = DEFAULT_MAXITER,
) -> OptimizationResult:
    """Stage 1: 1D linear-schedule grid search.  Stage 2: perturbed multi-start
    BFGS around the stage-1 optimum, best of ``n_restarts`` kept."""
    spec = objective.spec
    dt = grid_search_dt(objective, spec.P, spec.h, spec.start, dt_grid)
    x0 = linear_dqa_schedule(spec.P, spec.h, dt.dt_star, spec.start).as_vector()
    records, xs = _perturbed_multistart(
        objective,
        x0,
        n_restarts=n_restarts,
        eps_amp=eps_amp,
        seed=seed,
        gtol=gtol,
        fd_step=fd_step,
        maxiter=maxiter,
    )
    config = {
        **spec.as_dict(),
        "method": "two_step",
        "n_restarts": n_restarts,
        "eps_amp": eps_amp,
        "seed": seed,
        "gtol": gtol,
        "fd_step": fd_step,
        "maxiter": maxiter,
    }
    return _finalize_result(objective, config, records, xs, dt=dt)


def transfer_schedule(
    source: OptimizationResult | Schedule,
    objective: QAOAObjective,
    *,
    n_restarts: int = 10,
    eps_amp: float = 0.025,
    seed: int = 0,
    gtol: float = DEFAULT_TRANSFER_GTOL,
    fd_step: float = DEFAULT_FD_STEP,
    maxiter: int = DEFAULT_MAXITER,
) -> OptimizationResult:
    """Warm-start the target objective at a previously optimized schedule.

    The source depth and start must match the target; the refinement is the
    same perturbed multi-start used in the two-step second stage, run at the
    looser transfer tolerance.
    """
    sched = source.schedule if isinstance(source, OptimizationResult) else source
    if sched.P != objective.spec.P:
        raise ValueError(f"source depth P={sched.P} != target depth P={objective.spec.P}")
    if sched.start != objective.spec.start:
        raise ValueError(
            f"source start {sched.start!r} != target start {objective.spec.start!r}"
        )
    records, xs = _perturbed_multistart(
        objective,
        sched.as_vector(),
        n_restarts=n_restarts,
        eps_amp=eps_amp,
        seed=seed,
        gtol=gtol,
        fd_step=fd_step,
        maxiter=maxiter,
    )
    config = {
        **objective.spec.as_dict(),
        "method": "transfer",
        "n_restarts": n_restarts,
        "eps_amp": eps_amp,
        "seed": seed,
        "gtol": gtol,
        "fd_step": fd_step,
        "maxiter": maxiter,
    }
    return _finalize_result(objective, config, records, xs)


class _UniformStep:
    """basinhopping take_step: independent uniform moves of +-step per axis."""

    def __init__(self, rng: np.random.Generator, step_size: float):
        self.rng = rng
        self.step_size = step_size

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return x + self.rng.uniform(-self.step_size, self.step_size, x.size)


def basin_hopping(
    objective: QAOAObjective,
    x0: np.ndarray,
    *,
    n_hops: int = 500,
    temperature: float = 0.5,
    step_size: float = 0.3,
    n_runs: int = 100,
    seed: int = 0,
    gtol: float = DEFAULT_GTOL,
    fd_step: float = DEFAULT_FD_STEP,
    maxiter: int = DEFAULT_MAXITER,
) -> OptimizationResult:
    """Global benchmark: Metropolis chains over local minima, best of n_runs.

    temperature and step size are tunables; the defaults allow jumps between
    typical low-energy minima of these landscapes.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    x0 = np.asarray(x0, dtype=float)

    def checked(x: np.ndarray) -> float:
        v = objective.evaluate(x)
        if not np.isfinite(v):
            raise NumericalError(f"objective returned {v}")
        return v

    records: list[RestartRecord] = []
    xs: list[np.ndarray] = []
    children = np.random.SeedSequence(seed).spawn(n_runs)
    for run in range(n_runs):
        rng = np.random.default_rng(children[run])
        res = _scipy_basinhopping(
            checked,
            x0,
            niter=n_hops,
            T=temperature,
            take_step=_UniformStep(rng, step_size),
            seed=rng,
            minimizer_kwargs={
                "method": "BFGS",
                "jac": lambda x: objective.gradient(x, fd_step),
                "options": {"gtol": gtol, "maxiter": maxiter},
            },
        )
        records.append(
            RestartRecord(index=run, seed_key=run, iterations=int(res.nit), energy=float(res.fun))
        )
        xs.append(np.asarray(res.x, dtype=float))
    config = {
        **objective.spec.as_dict(),
        "method": "basin_hopping",
        "n_hops": n_hops,
        "temperature": temperature,
        "step_size": step_size,
        "n_runs": n_runs,
        "seed": seed,
    }
    return _finalize_result(objective, config, records, xs)


@dataclass
class ScheduleDiagnostics:
    s: list[float]        # s_m = gamma_m / (gamma_m + beta_m)
    dt: list[float]       # dt_m = gamma_m + beta_m
    smoothness: float     # total second difference of s_m (0 = perfectly smooth)


def schedule_diagnostics(sched: Schedule) -> ScheduleDiagnostics:
    """Annealing-style reparametrization of a schedule plus a roughness score."""
    g = np.asarray(sched.gammas)
    b = np.asarray(sched.betas)
    dt = g + b
    degenerate = [int(i) for i in np.where(dt == 0)[0]]
    if degenerate:
        raise ValueError(f"gamma_m + beta_m = 0 at indices {degenerate}")
    s = g / dt
    smooth = float(np.sum(np.abs(np.diff(s, n=2)))) if s.size >= 3 else 0.0
    return ScheduleDiagnostics(s=[float(v) for v in s], dt=[float(v) for v in dt], smoothness=smooth)
