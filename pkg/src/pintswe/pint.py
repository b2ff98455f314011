"""Parareal and MGRIT over a hierarchy of time/space discretization levels.

The engine implements the full-approximation-scheme two-level step (relax,
restrict solution and residual at C-points, solve the coarse equation,
prolong the error, final F-relaxation), applied recursively for more than
two levels.  Parareal is the two-level engine with F-relaxation only; the
two coincide exactly, which is also what makes their outputs byte-identical
in the experiment runner.

The engine is generic over a problem object providing `step`, `restrict`,
`prolong`, `copy`, `max_abs` and `is_finite`; states combine with + and -.
Slice sweeps are independent tasks executed on a thread pool; results are
assembled by slice index, so traces are identical for any worker count.
"""

from __future__ import annotations

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from . import steppers
from .spharm import SphereGeometry, SphereGrid, get_grid
from .steppers import ONE_STEP, SL_SI_SETTLS, TWO_STEP, StepperConfig, StepperState

F_THEN_V = "F_then_V"
V_CYCLE = "V"


class PintBlowUpError(RuntimeError):
    """Non-finite or runaway state detected; carries the partial trace."""

    def __init__(self, iteration: int, slice_index: int, trace: "IterationTrace"):
        super().__init__(
            f"blow-up at iteration {iteration}, slice {slice_index}")
        self.iteration = iteration
        self.slice_index = slice_index
        self.trace = trace


@dataclasses.dataclass(frozen=True)
class LevelSpec:
    """One discretization level: truncation plus stepper (dt lives there)."""

    index: int
    M: int
    stepper: StepperConfig

    @property
    def dt(self) -> float:
        return self.stepper.dt


@dataclasses.dataclass(frozen=True)
class PintConfig:
    levels: tuple
    T: float
    N0: int
    cfactor: int = 2
    nrelax: int = 0
    max_iters: int = 10
    chunk_size: int = 0            # 0: whole domain on one simulated processor
    cycle: str = F_THEN_V

    def __post_init__(self):
        L = len(self.levels)
        if L < 2:
            raise ValueError("need at least two levels")
        if self.cfactor < 2:
            raise ValueError("coarsening factor must be >= 2")
        if self.nrelax < 0 or self.max_iters < 0 or self.chunk_size < 0:
            raise ValueError("nrelax, max_iters and chunk_size must be >= 0")
        if self.cycle not in (F_THEN_V, V_CYCLE):
            raise ValueError(f"unknown cycle {self.cycle!r}")
        dt0 = self.levels[0].dt
        if abs(self.N0 * dt0 - self.T) > 1e-9 * max(self.T, 1.0):
            raise ValueError("N0 * dt_0 must equal the horizon T")
        for l in range(1, L):
            ratio = self.levels[l].dt / self.levels[l - 1].dt
            if abs(ratio - self.cfactor) > 1e-9:
                raise ValueError("level time steps must follow dt_{l+1} = cfactor*dt_l")
            if self.levels[l].M > self.levels[0].M:
                raise ValueError("coarse levels cannot exceed the fine truncation")
        if self.N0 % self.cfactor ** (L - 1) != 0:
            raise ValueError("N0 must be divisible by cfactor^(nlevels-1)")

    @property
    def nlevels(self) -> int:
        return len(self.levels)

    def points_on(self, level: int) -> int:
        return self.N0 // self.cfactor ** level

    @property
    def exact_convergence_bound(self) -> int:
        """Paper bound: exact in at most N0/((nrelax+1)*cfactor) iterations."""
        return int(np.ceil(self.N0 / ((self.nrelax + 1) * self.cfactor)))


def settls_boundary_policy(nlevels: int, level_index: int, nsteps: int,
                           cfactor: int, chunk_size: int):
    """Per-step SETTLS mode for one level.

    Non-coarsest levels use the one-step variant everywhere.  The coarsest
    level keeps the original two-step scheme except where the step's history
    would live on a different simulated processor (chunk boundaries of
    `chunk_size` fine C-point slices; 0 means a single processor).
    """
    if level_index < nlevels - 1:
        return [ONE_STEP] * nsteps
    spacing = cfactor ** (nlevels - 2)
    modes = []
    for j in range(1, nsteps + 1):
        boundary = chunk_size > 0 and ((j - 1) * spacing) % chunk_size == 0
        modes.append(ONE_STEP if boundary else TWO_STEP)
    return modes


@dataclasses.dataclass
class IterationTrace:
    """Level-0 C-point snapshots per iteration (iteration 0: initial guess)."""

    times: np.ndarray
    snapshots: list
    wall_times: list
    config: PintConfig
    blowup: Optional[dict] = None
    fine_reference: Optional[Sequence] = None

    @property
    def iterations(self) -> int:
        return len(self.snapshots) - 1


@dataclasses.dataclass(frozen=True)
class SpeedupRecord:
    iteration: int
    wall_time: float
    cumulative_time: float
    speedup: float


def speedup_report(trace: IterationTrace, t_ref: float):
    """Wall time per completed iteration and ratio to a serial reference run."""
    records = []
    cumulative = 0.0
    for k, wt in enumerate(trace.wall_times):
        cumulative += wt
        records.append(SpeedupRecord(k, wt, cumulative,
                                     t_ref / cumulative if cumulative > 0 else 0.0))
    return records


class SweProblem:
    """Shallow-water levels: per-level grid, stepper config and SETTLS policy."""

    def __init__(self, config: PintConfig, geometry: SphereGeometry = SphereGeometry()):
        self.config = config
        self.geometry = geometry
        self.grids = [get_grid(spec.M, geometry) for spec in config.levels]
        L = config.nlevels
        self.level_cfgs = []
        for l, spec in enumerate(config.levels):
            cfg = spec.stepper
            if cfg.scheme == SL_SI_SETTLS and l < L - 1:
                cfg = dataclasses.replace(cfg, settls_mode=ONE_STEP)
            self.level_cfgs.append(cfg)

    def step(self, level: int, value, prev=None):
        out = steppers.advance(StepperState(value, prev), self.level_cfgs[level])
        return out.current

    def restrict(self, level: int, value):
        return value.to_truncation(self.grids[level + 1])

    def prolong(self, level: int, value):
        """Value on `level` padded up to level-1 resolution."""
        return value.to_truncation(self.grids[level - 1])

    def copy(self, value):
        return value.copy()

    def max_abs(self, value) -> float:
        return value.max_abs()

    def is_finite(self, value) -> bool:
        return value.is_finite()

    def tracks_history(self, level: int) -> bool:
        cfg = self.level_cfgs[level]
        return cfg.scheme == SL_SI_SETTLS and cfg.settls_mode == TWO_STEP


class MgritEngine:
    """FAS-MGRIT / Parareal driver over an abstract problem."""

    def __init__(self, problem, config: PintConfig, workers: int = 1):
        self.problem = problem
        self.cfg = config
        self.workers = max(1, workers)
        self.m = config.cfactor
        self.L = config.nlevels

    # -- worker pool -------------------------------------------------------

    def _pmap(self, fn: Callable, items):
        def quiet(x):
            # errstate is thread-local; divergence is reported by the
            # blow-up check, not by elementwise overflow warnings
            with np.errstate(over="ignore", invalid="ignore"):
                return fn(x)

        if self.workers == 1:
            return [quiet(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.workers) as ex:
            return list(ex.map(quiet, items))

    # -- relaxation sweeps --------------------------------------------------

    def _f_sweep(self, level: int, u: list, g):
        """Fill F-points of every slice from its left C-point (parallel)."""
        m = self.m
        nslices = len(u) // m  # points on this level / m

        def task(i):
            vals = []
            v = u[m * (i - 1)]
            for j in range(m * (i - 1) + 1, m * i):
                v = self.problem.step(level, v)
                if g is not None:
                    v = v + g[j]
                vals.append(v)
            return vals

        results = self._pmap(task, range(1, nslices + 1))
        for i, vals in zip(range(1, nslices + 1), results):
            for k, v in enumerate(vals):
                u[m * (i - 1) + 1 + k] = v

    def _c_sweep(self, level: int, u: list, g):
        """Advance each C-point one step from its predecessor (parallel)."""
        m = self.m
        nslices = len(u) // m

        def task(i):
            v = self.problem.step(level, u[m * i - 1])
            if g is not None:
                v = v + g[m * i]
            return v

        results = self._pmap(task, range(1, nslices + 1))
        for i, v in zip(range(1, nslices + 1), results):
            u[m * i] = v

    def relax_fcf(self, level: int, u: list, g, nrelax: int):
        """F(CF)^nrelax sweep pattern."""
        self._f_sweep(level, u, g)
        for _ in range(nrelax):
            self._c_sweep(level, u, g)
            self._f_sweep(level, u, g)

    # -- FAS components -----------------------------------------------------

    def _residual(self, level: int, u: list, g):
        """C-point residual of the level system after relaxation."""
        m = self.m
        nslices = len(u) // m

        def task(i):
            prop = self.problem.step(level, u[m * i - 1])
            if g is not None:
                prop = prop + g[m * i]
            return prop - u[m * i]

        return [None] + self._pmap(task, range(1, nslices + 1))

    def _fas_restrict(self, level: int, u: list, g):
        m = self.m
        nslices = len(u) // m
        ubar = self._pmap(lambda i: self.problem.restrict(level, u[m * i]),
                          range(nslices + 1))
        r = self._residual(level, u, g)

        # the coarse-operator action must see exactly the history pattern the
        # coarse serial sweep uses, or the FAS correction stops telescoping
        # (two-step SETTLS on the coarsest level only; one-step elsewhere)
        modes = None
        if self.problem.tracks_history(level + 1):
            modes = settls_boundary_policy(self.L, level + 1, nslices, m,
                                           self.cfg.chunk_size)

        def tau(i):
            prev = None
            if modes is not None and i >= 2 and modes[i - 1] == TWO_STEP:
                prev = ubar[i - 2]
            return ubar[i] - self.problem.step(level + 1, ubar[i - 1], prev)

        taus = [None] + self._pmap(tau, range(1, nslices + 1))
        gbar = [None] + [self.problem.restrict(level, r[i]) + taus[i]
                         for i in range(1, nslices + 1)]
        return ubar, gbar

    def _coarsest_solve(self, u: list, g):
        """Serial sweep on the coarsest level, honoring the SETTLS policy."""
        level = self.L - 1
        nsteps = len(u) - 1
        modes = settls_boundary_policy(self.L, level, nsteps, self.m,
                                       self.cfg.chunk_size)
        track = self.problem.tracks_history(level)
        prev = None
        for j in range(1, nsteps + 1):
            hist = None if (not track or modes[j - 1] == ONE_STEP) else prev
            new = self.problem.step(level, u[j - 1], hist)
            if g is not None:
                new = new + g[j]
            prev = u[j - 1]
            u[j] = new

    def _cycle(self, level: int, u: list, g, kind: str):
        if level == self.L - 1:
            self._coarsest_solve(u, g)
            return
        m = self.m
        nslices = len(u) // m
        self.relax_fcf(level, u, g, self.cfg.nrelax)
        ubar, gbar = self._fas_restrict(level, u, g)
        v = [self.problem.copy(x) for x in ubar]
        self._cycle(level + 1, v, gbar, kind)
        for i in range(1, nslices + 1):
            err = v[i] - ubar[i]
            u[m * i] = u[m * i] + self.problem.prolong(level + 1, err)
        self._f_sweep(level, u, g)
        if kind == F_THEN_V and level + 1 < self.L - 1:
            self._cycle(level, u, g, V_CYCLE)

    # -- driver --------------------------------------------------------------

    def _initial_guess(self, u0):
        """Serial run of the level-1 propagator, prolonged to level 0."""
        n1 = self.cfg.points_on(1)
        v = [None] * (n1 + 1)
        v[0] = self.problem.restrict(0, u0)
        track = self.problem.tracks_history(1) and self.L == 2
        modes = settls_boundary_policy(self.L, 1, n1, self.m, self.cfg.chunk_size)
        prev = None
        for j in range(1, n1 + 1):
            hist = None if (not track or modes[j - 1] == ONE_STEP) else prev
            prev = v[j - 1]
            v[j] = self.problem.step(1, v[j - 1], hist)
        return [self.problem.prolong(1, x) for x in v]

    def run(self, u0, fine_reference: Optional[Sequence] = None,
            initial_cpoints: Optional[Sequence] = None) -> IterationTrace:
        cfg = self.cfg
        m = self.m
        n0 = cfg.N0
        n1 = cfg.points_on(1)
        times = np.arange(n1 + 1) * (m * cfg.levels[0].dt)

        t_start = time.perf_counter()
        if initial_cpoints is None:
            guess = self._initial_guess(u0)
        else:
            if len(initial_cpoints) != n1 + 1:
                raise ValueError("initial_cpoints must cover every C-point")
            guess = [self.problem.copy(v) for v in initial_cpoints]
        trace = IterationTrace(times=times, snapshots=[guess],
                               wall_times=[time.perf_counter() - t_start],
                               config=cfg, fine_reference=fine_reference)
        limit = 1e10 * max(self.problem.max_abs(u0), 1e-300)
        self._check_finite(trace, 0, guess, limit)

        # all level-0 points; F-points are overwritten by the first F-sweep
        u = [None] * (n0 + 1)
        u[0] = self.problem.copy(u0)
        for i in range(1, n1 + 1):
            u[m * i] = self.problem.copy(guess[i])
            for j in range(m * (i - 1) + 1, m * i):
                u[j] = self.problem.copy(guess[i - 1])

        for k in range(1, cfg.max_iters + 1):
            t0 = time.perf_counter()
            # overflow during a diverging iteration is reported through the
            # blow-up check below, not as elementwise warnings
            with np.errstate(over="ignore", invalid="ignore"):
                self._cycle(0, u, None, cfg.cycle)
            trace.wall_times.append(time.perf_counter() - t0)
            snap = [self.problem.copy(u[m * i]) for i in range(n1 + 1)]
            trace.snapshots.append(snap)
            self._check_finite(trace, k, snap, limit)
        return trace

    def _check_finite(self, trace, iteration, snap, limit):
        for i, v in enumerate(snap):
            if not self.problem.is_finite(v) or self.problem.max_abs(v) > limit:
                trace.blowup = {"iteration": iteration, "slice": i}
                raise PintBlowUpError(iteration, i, trace)


def mgrit_run(problem, config: PintConfig, u0, workers: int = 1,
              fine_reference: Optional[Sequence] = None,
              initial_cpoints: Optional[Sequence] = None) -> IterationTrace:
    """Run MGRIT; raises PintBlowUpError (carrying the trace) on divergence."""
    return MgritEngine(problem, config, workers).run(u0, fine_reference,
                                                     initial_cpoints)


def parareal_run(problem, config: PintConfig, u0, workers: int = 1,
                 fine_reference: Optional[Sequence] = None,
                 initial_cpoints: Optional[Sequence] = None) -> IterationTrace:
    """Parareal predictor-corrector: the two-level F-relaxation engine."""
    if config.nlevels != 2 or config.nrelax != 0:
        raise ValueError("Parareal requires nlevels=2 and nrelax=0")
    return MgritEngine(problem, config, workers).run(u0, fine_reference,
                                                     initial_cpoints)


def fine_serial_cpoints(problem, config: PintConfig, u0):
    """Serial fine solution at the level-0 C-points (reference for traces)."""
    m = config.cfactor
    out = [problem.copy(u0)]
    v = problem.copy(u0)
    for i in range(1, config.points_on(1) + 1):
        for _ in range(m):
            v = problem.step(0, v)
        out.append(problem.copy(v))
    return out
