"""Serial propagators: Strang-split IMEX and SL-SI-SETTLS.

Both schemes treat the linear gravity/Coriolis terms with Crank-Nicolson
solves and finish every step with the backward-Euler viscosity damping.
The IMEX step is implicit-half / explicit-full (Heun) / implicit-half; the
semi-Lagrangian step advects the full state to departure points computed
with the two-time-level stable extrapolation and solves the semi-implicit
system at the arrival points.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from . import dynamics, semilag
from .dynamics import PrognosticState, Tendency, ViscositySpec

IMEX = "imex"
SL_SI_SETTLS = "sl_si_settls"
TWO_STEP = "two_step"
ONE_STEP = "one_step"


class ImplicitSolveError(RuntimeError):
    """The Coriolis fixed-point iteration failed to reach tolerance."""


@dataclasses.dataclass(frozen=True)
class StepperConfig:
    scheme: str = IMEX
    dt: float = 60.0
    viscosity: ViscositySpec = ViscositySpec(2, 0.0)
    settls_mode: str = TWO_STEP
    coriolis_treatment: str = "implicit"    # "implicit" | "explicit"
    include_nonlinear: bool = True
    implicit_tol: float = 1e-12
    implicit_max_iter: int = 200

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.scheme not in (IMEX, SL_SI_SETTLS):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.settls_mode not in (TWO_STEP, ONE_STEP):
            raise ValueError(f"unknown SETTLS mode {self.settls_mode!r}")
        if self.coriolis_treatment not in ("implicit", "explicit"):
            raise ValueError("coriolis_treatment must be implicit or explicit")


@dataclasses.dataclass
class StepperState:
    """Current state plus the one-step history needed by two-step SETTLS."""

    current: PrognosticState
    previous: Optional[PrognosticState] = None


def _helmholtz_solve(grid, phibar, rphi, rxi, rdelta, alpha):
    """Per-mode solve of (I - alpha*L_G) U = r (exact, never singular).

    The (Phi, delta) pair couples through a 2x2 block whose determinant is
    1 + alpha^2*Phibar*n(n+1)/a^2 > 0; xi is untouched by L_G.
    """
    eps = -grid.laplacian_eig                    # n(n+1)/a^2 >= 0
    denom = 1.0 + alpha * alpha * phibar * eps
    phi = (rphi - alpha * phibar * rdelta) / denom
    delta = rdelta + alpha * eps * phi
    return phi, rxi.copy(), delta


def implicit_linear_solve(rhs: PrognosticState, alpha: float,
                          include_coriolis: bool = True,
                          tol: float = 1e-12,
                          max_iter: int = 200) -> PrognosticState:
    """Solve (I - alpha*L) U = rhs with L the linear SWE operator.

    The gravity part is solved exactly per mode; the Coriolis coupling is
    moved to the right-hand side and converged by fixed-point iteration
    preconditioned with the per-mode solve.  Raises ImplicitSolveError with
    the final residual if the iteration does not reach `tol`.
    """
    grid = rhs.grid
    if alpha == 0.0:
        return rhs.copy()
    phi, xi, delta = _helmholtz_solve(grid, rhs.phibar, rhs.phi, rhs.xi,
                                      rhs.delta, alpha)
    u = PrognosticState(grid, phi, xi, delta, rhs.phibar)
    if not include_coriolis or grid.geometry.omega == 0.0:
        return u

    for _ in range(max_iter):
        lc = dynamics.linear_coriolis(u)
        phi, xi, delta = _helmholtz_solve(grid, rhs.phibar,
                                          rhs.phi + alpha * lc.phi,
                                          rhs.xi + alpha * lc.xi,
                                          rhs.delta + alpha * lc.delta, alpha)
        # convergence is judged per component: Phi, xi and delta live on very
        # different scales (m^2/s^2 vs 1/s)
        overall = max(np.abs(phi).max(), np.abs(xi).max(),
                      np.abs(delta).max(), 1e-300)
        done = True
        for new, old in ((phi, u.phi), (xi, u.xi), (delta, u.delta)):
            scale = max(np.abs(new).max(), 1e-13 * overall)
            if np.abs(new - old).max() > tol * scale:
                done = False
                break
        u = PrognosticState(grid, phi, xi, delta, rhs.phibar)
        if done:
            return u
    lin = dynamics.linear_gravity(u) + dynamics.linear_coriolis(u)
    res = max(np.abs(u.phi - alpha * lin.phi - rhs.phi).max(),
              np.abs(u.xi - alpha * lin.xi - rhs.xi).max(),
              np.abs(u.delta - alpha * lin.delta - rhs.delta).max())
    raise ImplicitSolveError(
        f"Coriolis iteration did not converge; residual {res:.3e}")


def _implicit_tendency(state: PrognosticState, cfg: StepperConfig) -> Tendency:
    if cfg.coriolis_treatment == "implicit":
        return dynamics.linear_combined(state)
    return dynamics.linear_gravity(state)


def _explicit_tendency(state: PrognosticState, cfg: StepperConfig) -> Tendency:
    parts = []
    if cfg.include_nonlinear:
        parts.append(dynamics.nonlinear_advection(state))
        parts.append(dynamics.nonlinear_rest(state))
    if cfg.coriolis_treatment == "explicit":
        parts.append(dynamics.linear_coriolis(state))
    if not parts:
        z = np.zeros_like(state.phi)
        return Tendency(z, z.copy(), z.copy())
    out = parts[0]
    for p in parts[1:]:
        out = out + p
    return out


def _crank_nicolson_half(state: PrognosticState, alpha: float,
                         cfg: StepperConfig) -> PrognosticState:
    """One Crank-Nicolson solve (I - alpha*L)U = (I + alpha*L)state."""
    lin = _implicit_tendency(state, cfg)
    rhs = state.add_tendency(lin, alpha)
    return implicit_linear_solve(rhs, alpha,
                                 include_coriolis=(cfg.coriolis_treatment
                                                   == "implicit"),
                                 tol=cfg.implicit_tol,
                                 max_iter=cfg.implicit_max_iter)


def imex_step(state: PrognosticState, cfg: StepperConfig) -> PrognosticState:
    """Implicit half step, explicit Heun full step on N, implicit half step.

    Each implicit half step is Crank-Nicolson over dt/2, i.e. the solve uses
    alpha = dt/4 on both sides.  The viscosity damping closes the step.
    """
    dt = cfg.dt
    u_star = _crank_nicolson_half(state, dt / 4.0, cfg)
    k1 = _explicit_tendency(u_star, cfg)
    mid = u_star.add_tendency(k1, dt)
    k2 = _explicit_tendency(mid, cfg)
    u_exp = u_star.add_tendency(k1 + k2, 0.5 * dt)
    u_new = _crank_nicolson_half(u_exp, dt / 4.0, cfg)
    return dynamics.viscosity_step(u_new, cfg.viscosity, dt)


def settls_step(sstate: StepperState, cfg: StepperConfig) -> PrognosticState:
    """One SL-SI-SETTLS step.

    Builds G = U + (dt/2)(L U + [2 N_R(U) - N_R(U_prev)]), interpolates G to
    the departure points, adds (dt/2) N_R(U) at arrival and solves the
    Crank-Nicolson system (I - (dt/2) L) U_new = RHS.  In one-step mode (or
    on the cold start) U_prev is replaced by U, which collapses the
    extrapolations to their time-n values.
    """
    dt = cfg.dt
    u = sstate.current
    grid = u.grid
    prev = sstate.previous
    if cfg.settls_mode == ONE_STEP or prev is None:
        prev = u

    un, vn = u.winds()
    up, vp = prev.winds()
    lam_d, th_d = semilag.departure_points(grid, un, vn,
                                           2.0 * un - up, 2.0 * vn - vp, dt)

    lin = dynamics.linear_combined(u)
    nr = dynamics.nonlinear_rest(u)
    nr_prev = dynamics.nonlinear_rest(prev)
    half = 0.5 * dt
    g_phi = u.phi + half * (lin.phi + 2.0 * nr.phi - nr_prev.phi)
    g_xi = u.xi + half * (lin.xi + 2.0 * nr.xi - nr_prev.xi)
    g_delta = u.delta + half * (lin.delta + 2.0 * nr.delta - nr_prev.delta)

    def at_departure(coeffs):
        vals = grid.synthesis(coeffs)
        return grid.analysis(semilag.advect_scalar(grid, vals, lam_d, th_d))

    rhs = PrognosticState(grid,
                          at_departure(g_phi) + half * nr.phi,
                          at_departure(g_xi) + half * nr.xi,
                          at_departure(g_delta) + half * nr.delta,
                          u.phibar)
    u_new = implicit_linear_solve(rhs, half, include_coriolis=True,
                                  tol=cfg.implicit_tol,
                                  max_iter=cfg.implicit_max_iter)
    return dynamics.viscosity_step(u_new, cfg.viscosity, dt)


def advance(sstate: StepperState, cfg: StepperConfig) -> StepperState:
    """One step of the configured scheme, maintaining the SETTLS history."""
    if cfg.scheme == IMEX:
        return StepperState(imex_step(sstate.current, cfg), None)
    new = settls_step(sstate, cfg)
    if cfg.settls_mode == TWO_STEP:
        return StepperState(new, sstate.current)
    return StepperState(new, None)


def propagate(sstate: StepperState, t0: float, t1: float,
              cfg: StepperConfig) -> StepperState:
    """Advance a state over [t0, t1], which must be an integral number of steps."""
    span = t1 - t0
    if span < 0:
        raise ValueError("t1 must not precede t0")
    steps_f = span / cfg.dt
    nsteps = int(round(steps_f))
    if abs(steps_f - nsteps) > 1e-9:
        raise ValueError(f"slice [{t0}, {t1}] is not an integral number of dt")
    for _ in range(nsteps):
        sstate = advance(sstate, cfg)
    return sstate
