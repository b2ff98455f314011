"""Experiment orchestration behind the CLI subcommands.

Every command resolves its configuration, runs, and writes CSV tables plus
a manifest JSON echoing the full resolved configuration.  Numeric outputs
are deterministic and independent of the worker count; wall-clock columns
(speedup.csv) are the one exception by nature.
"""

from __future__ import annotations

import dataclasses
import os
import time

import numpy as np

from . import __version__, diagnostics, dynamics, pint, scenarios, stability, steppers
from .config import ConfigError
from .dynamics import ViscositySpec
from .ioutils import ensure_dir, fmt, write_csv, write_json
from .pint import LevelSpec, PintConfig, SweProblem
from .spharm import SphereGeometry, get_grid
from .steppers import StepperConfig, StepperState

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3


def build_geometry(cfg: dict) -> SphereGeometry:
    g = cfg.get("geometry", {})
    return SphereGeometry(radius_a=g.get("radius_a", SphereGeometry().radius_a),
                          omega=g.get("omega", SphereGeometry().omega),
                          gravity_g=g.get("gravity_g", SphereGeometry().gravity_g))


def _viscosity(section: dict) -> ViscositySpec:
    return ViscositySpec(order_q=int(section.get("order", 2)),
                         coeff_nu=float(section.get("coeff", 0.0)))


def build_stepper(section: dict, dt=None) -> StepperConfig:
    try:
        return StepperConfig(
            scheme=section.get("scheme", "imex"),
            dt=float(dt if dt is not None else section["dt"]),
            viscosity=_viscosity(section.get("viscosity", {})),
            settls_mode=section.get("settls_mode", "two_step"),
            coriolis_treatment=section.get("coriolis_treatment", "implicit"),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad stepper section: {exc}") from exc


def build_pint_config(cfg: dict) -> PintConfig:
    fine = cfg["fine"]
    p = cfg["pint"]
    T = float(cfg["T"])
    dt0 = float(fine["dt"])
    n0 = int(round(T / dt0))
    nlevels = int(p.get("nlevels", 2))
    cfactor = int(p.get("cfactor", 2))
    coarse = p.get("coarse", {})
    levels = [LevelSpec(0, int(fine["M"]), build_stepper(fine))]
    for l in range(1, nlevels):
        levels.append(LevelSpec(l, int(coarse.get("M", fine["M"])),
                                build_stepper(coarse, dt=dt0 * cfactor**l)))
    try:
        return PintConfig(levels=tuple(levels), T=T, N0=n0, cfactor=cfactor,
                          nrelax=int(p.get("nrelax", 0)),
                          max_iters=int(p.get("max_iters", 10)),
                          chunk_size=int(p.get("chunk_size", 0)),
                          cycle=p.get("cycle", pint.F_THEN_V))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def initial_state(cfg: dict, M: int, geometry: SphereGeometry):
    name = cfg.get("scenario")
    if name is None:
        raise ConfigError("config needs a 'scenario'")
    try:
        scen = scenarios.get_scenario(name)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc
    return scen.initializer(get_grid(M, geometry))


def serial_run(state, stepper_cfg: StepperConfig, T: float, check_every: int = 32):
    """Serial propagation over [0, T] with periodic blow-up checks."""
    nsteps_f = T / stepper_cfg.dt
    nsteps = int(round(nsteps_f))
    if abs(nsteps_f - nsteps) > 1e-9:
        raise ConfigError("T must be an integral number of fine steps")
    s = StepperState(state)
    limit = 1e10 * max(state.max_abs(), 1e-300)
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(1, nsteps + 1):
            s = steppers.advance(s, stepper_cfg)
            if j % check_every == 0 or j == nsteps:
                if not s.current.is_finite() or s.current.max_abs() > limit:
                    raise pint.PintBlowUpError(0, j, None)
    return s.current


def write_state_csv(path, state):
    grid = state.grid
    rows = []
    for name, coeffs in (("phi", state.phi), ("xi", state.xi),
                         ("delta", state.delta)):
        for idx in range(grid.n_modes):
            rows.append((name, int(grid.m_of[idx]), int(grid.n_of[idx]),
                         float(coeffs[idx].real), float(coeffs[idx].imag)))
    write_csv(path, ("field", "m", "n", "re", "im"), rows)


def _manifest(out_dir, command, cfg, status, extra=None):
    payload = {"command": command, "config": cfg, "status": status,
               "version": __version__}
    if extra:
        payload.update(extra)
    write_json(os.path.join(out_dir, "manifest.json"), payload)


def cmd_run_serial(cfg: dict, out_dir: str, workers: int = 1) -> int:
    if "fine" not in cfg or "T" not in cfg:
        raise ConfigError("run-serial needs 'fine' and 'T'")
    ensure_dir(out_dir)
    geometry = build_geometry(cfg)
    T = float(cfg["T"])
    fine_cfg = build_stepper(cfg["fine"])
    u0 = initial_state(cfg, int(cfg["fine"]["M"]), geometry)
    diag = cfg.get("diagnostics", {})
    rnorms = diag.get("rnorms", [8])

    status = "ok"
    try:
        final = serial_run(u0, fine_cfg, T)
    except pint.PintBlowUpError as exc:
        _manifest(out_dir, "run-serial", cfg, "blowup",
                  {"blow_step": exc.slice_index})
        return EXIT_BLOWUP
    write_state_csv(os.path.join(out_dir, "state_final.csv"), final)
    spec = diagnostics.ke_spectrum(final)
    write_csv(os.path.join(out_dir, "spectrum.csv"), diagnostics.SPECTRUM_HEADER,
              diagnostics.spectrum_rows("serial", "final", spec))

    if "dt_sweep" in cfg:
        if "reference" not in cfg:
            raise ConfigError("dt_sweep needs a 'reference' section")
        ref_cfg = build_stepper(cfg["reference"])
        ref0 = initial_state(cfg, int(cfg["reference"]["M"]), geometry)
        reference = serial_run(ref0, ref_cfg, T)
        rows = []
        for dt in cfg["dt_sweep"]:
            run_cfg = dataclasses.replace(fine_cfg, dt=float(dt))
            state = serial_run(u0.copy(), run_cfg, T)
            recs = diagnostics.phi_error_records(
                0, state, "reference", reference, rnorms,
                include_l2=diag.get("l2", False))
            rows.extend((fmt(float(dt)), r.rnorm, r.target, r.value)
                        for r in recs)
        write_csv(os.path.join(out_dir, "error_vs_dt.csv"),
                  ("dt", "rnorm", "target", "value"), rows)

    _manifest(out_dir, "run-serial", cfg, status)
    return EXIT_OK


def _pint_outputs(out_dir, cfg, trace, fine_final, reference, t_ref, status,
                  workers):
    diag = cfg.get("diagnostics", {})
    rnorms = diag.get("rnorms", [8])
    include_l2 = diag.get("l2", False)
    error_rows = []
    for k, snap in enumerate(trace.snapshots):
        recs = diagnostics.phi_error_records(k, snap[-1], "fine", fine_final,
                                             rnorms, include_l2=include_l2)
        if reference is not None:
            recs += diagnostics.phi_error_records(k, snap[-1], "reference",
                                                  reference, rnorms,
                                                  include_l2=include_l2)
        error_rows.extend(r.row() for r in recs)
    write_csv(os.path.join(out_dir, "errors.csv"), diagnostics.ERROR_HEADER,
              error_rows)

    spec_rows = diagnostics.spectrum_rows(
        "fine", "", diagnostics.ke_spectrum(fine_final))
    if reference is not None:
        spec_rows += diagnostics.spectrum_rows(
            "reference", "", diagnostics.ke_spectrum(reference))
    for k in diag.get("spectrum_iterations", []):
        if 0 <= k < len(trace.snapshots):
            spec_rows += diagnostics.spectrum_rows(
                "pint", k, diagnostics.ke_spectrum(trace.snapshots[k][-1]))
    write_csv(os.path.join(out_dir, "spectrum.csv"),
              diagnostics.SPECTRUM_HEADER, spec_rows)

    speed_rows = [(r.iteration, r.wall_time, r.cumulative_time, r.speedup)
                  for r in pint.speedup_report(trace, t_ref)]
    write_csv(os.path.join(out_dir, "speedup.csv"),
              ("iteration", "wall_seconds", "cumulative_seconds", "speedup"),
              speed_rows)

    pcfg = trace.config
    engine = ("parareal" if pcfg.nlevels == 2 and pcfg.nrelax == 0 else "mgrit")
    extra = {"engine": engine, "workers": workers,
             "iterations_completed": trace.iterations,
             "t_ref_seconds": t_ref}
    if trace.blowup:
        extra["blowup"] = trace.blowup
    _manifest(out_dir, "run-pint", cfg, status, extra)


def cmd_run_pint(cfg: dict, out_dir: str, workers: int = 1) -> int:
    if "fine" not in cfg or "pint" not in cfg or "T" not in cfg:
        raise ConfigError("run-pint needs 'fine', 'pint' and 'T'")
    ensure_dir(out_dir)
    geometry = build_geometry(cfg)
    pcfg = build_pint_config(cfg)
    problem = SweProblem(pcfg, geometry)
    u0 = initial_state(cfg, pcfg.levels[0].M, geometry)

    t0 = time.perf_counter()
    fine_cpoints = pint.fine_serial_cpoints(problem, pcfg, u0)
    t_ref = time.perf_counter() - t0
    fine_final = fine_cpoints[-1]

    reference = None
    if "reference" in cfg:
        ref0 = initial_state(cfg, int(cfg["reference"]["M"]), geometry)
        reference = serial_run(ref0, build_stepper(cfg["reference"]),
                               float(cfg["T"]))

    try:
        trace = pint.mgrit_run(problem, pcfg, u0, workers=workers,
                               fine_reference=fine_cpoints)
        status = "ok"
        code = EXIT_OK
    except pint.PintBlowUpError as exc:
        trace = exc.trace
        # keep the failing iteration when it is still finite (threshold
        # trigger): diverging error curves need their growing tail
        failing = trace.snapshots[exc.iteration]
        keep = exc.iteration + 1 if all(problem.is_finite(v) for v in failing) \
            else exc.iteration
        trace.snapshots = trace.snapshots[:keep]
        trace.wall_times = trace.wall_times[:keep]
        status = "blowup"
        code = EXIT_BLOWUP
        if not trace.snapshots:
            _manifest(out_dir, "run-pint", cfg, status,
                      {"blowup": trace.blowup, "workers": workers})
            return code
    _pint_outputs(out_dir, cfg, trace, fine_final, reference, t_ref, status,
                  workers)
    return code


def cmd_stability(cfg: dict, out_dir: str, workers: int = 1) -> int:
    scans = cfg.get("stability", {}).get("scans")
    if not scans:
        raise ConfigError("stability needs stability.scans")
    ensure_dir(out_dir)
    tilde = stability.xi_l_tilde(1.0e5, SphereGeometry().radius_a)
    for scan in scans:
        name = scan.get("name")
        if not name:
            raise ConfigError("every stability scan needs a name")
        re_mult, im_mult = scan.get("xi_l", [0.0, 0.0])
        xi_l = complex(re_mult) + im_mult * tilde
        pq = None
        if "pint" in scan:
            try:
                pq = stability.PintQuery(**scan["pint"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"scan {name}: {exc}") from exc
        query = stability.StabilityQuery(
            xi_l=xi_l, scheme=scan.get("scheme", "imex"),
            imex_explicit_variant=scan.get("variant", stability.AS_PRINTED),
            pint=pq,
            re_axis=tuple(scan.get("re_axis", stability.DEFAULT_AXIS)),
            im_axis=tuple(scan.get("im_axis", stability.DEFAULT_AXIS)))
        raster = stability.region_scan(query)
        rows = []
        for i, im in enumerate(raster.im_axis):
            for j, re in enumerate(raster.re_axis):
                rows.append((float(re), float(im), int(raster.mask[i, j])))
        write_csv(os.path.join(out_dir, f"{name}.csv"),
                  ("re", "im", "stable"), rows)
        write_json(os.path.join(out_dir, f"{name}.meta.json"),
                   raster.metadata)
    _manifest(out_dir, "stability", cfg, "ok")
    return EXIT_OK


def cmd_viscosity_table(cfg: dict, out_dir: str, workers: int = 1) -> int:
    section = cfg.get("viscosity")
    if not section:
        raise ConfigError("viscosity-table needs a 'viscosity' section")
    ensure_dir(out_dir)
    geometry = build_geometry(cfg)
    a = geometry.radius_a
    rows = []
    for M in section.get("truncations", [128]):
        for q in section.get("orders", [2]):
            for tau_h in section.get("tau_hours", [1.0]):
                tau = float(tau_h) * 3600.0
                nu = dynamics.viscosity_coefficient_from_damping_time(
                    int(M), int(q), tau, a)
                rows.append((int(M), int(q), tau, nu))
    write_csv(os.path.join(out_dir, "nu_table.csv"),
              ("M", "q", "tau_seconds", "nu"), rows)

    damp_rows = []
    for entry in section.get("damping", []):
        M = int(entry["M"])
        q = int(entry["q"])
        nu = float(entry["nu"])
        dt = float(entry.get("dt", section.get("dt", 120.0)))
        grid = get_grid(M, geometry)
        b = dynamics.viscosity_damping(grid, ViscositySpec(q, nu), dt)
        for n in range(M + 1):
            idx = grid.mode_index(0, n)
            damp_rows.append((q, nu, dt, n, float(b[idx])))
    write_csv(os.path.join(out_dir, "damping.csv"),
              ("q", "nu", "dt", "n", "bhat"), damp_rows)
    _manifest(out_dir, "viscosity-table", cfg, "ok")
    return EXIT_OK
