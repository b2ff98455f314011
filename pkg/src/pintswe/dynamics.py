"""Right-hand-side terms of the rotating shallow water equations.

State is the spectral triple (Phi, xi, delta): geopotential, vorticity and
divergence, with the constant mean geopotential recorded separately.  The
tendency split mirrors the governing equations: a gravity part that is
diagonal per spectral mode, a Coriolis part evaluated pseudospectrally, the
nonlinear advection terms, and the remaining nonlinear product -Phi'*delta.
An even-order (hyper)viscosity is applied as a backward-Euler per-mode
damping factor.
"""

from __future__ import annotations

import dataclasses
import math
from typing import NamedTuple

import numpy as np

from .spharm import SphereGrid, truncate_pad

SQRT2 = math.sqrt(2.0)


class Tendency(NamedTuple):
    phi: np.ndarray
    xi: np.ndarray
    delta: np.ndarray

    def __add__(self, other):
        return Tendency(self.phi + other.phi, self.xi + other.xi,
                        self.delta + other.delta)

    def scaled(self, c: float) -> "Tendency":
        return Tendency(c * self.phi, c * self.xi, c * self.delta)


@dataclasses.dataclass
class PrognosticState:
    """Spectral (Phi, xi, delta) with Phi storing the total geopotential."""

    grid: SphereGrid
    phi: np.ndarray
    xi: np.ndarray
    delta: np.ndarray
    phibar: float

    def copy(self) -> "PrognosticState":
        return PrognosticState(self.grid, self.phi.copy(), self.xi.copy(),
                               self.delta.copy(), self.phibar)

    def phi_prime(self) -> np.ndarray:
        """Coefficients of Phi' = Phi - mean geopotential."""
        c = self.phi.copy()
        c[0] -= self.phibar * SQRT2
        return c

    def add_tendency(self, tend: Tendency, dt: float) -> "PrognosticState":
        return PrognosticState(self.grid,
                               self.phi + dt * tend.phi,
                               self.xi + dt * tend.xi,
                               self.delta + dt * tend.delta,
                               self.phibar)

    def max_abs(self) -> float:
        return max(np.abs(self.phi).max(), np.abs(self.xi).max(),
                   np.abs(self.delta).max())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.phi).all() and np.isfinite(self.xi).all()
                    and np.isfinite(self.delta).all())

    def to_truncation(self, grid_dst: SphereGrid) -> "PrognosticState":
        """Spectral truncation or zero-padding of all three fields."""
        if grid_dst is self.grid:
            return self.copy()
        return PrognosticState(
            grid_dst,
            truncate_pad(self.phi, self.grid, grid_dst),
            truncate_pad(self.xi, self.grid, grid_dst),
            truncate_pad(self.delta, self.grid, grid_dst),
            self.phibar,
        )

    # state-space arithmetic used by the parallel-in-time corrections

    def _require_compatible(self, other: "PrognosticState"):
        if other.grid is not self.grid:
            raise ValueError("states live on different grids")

    def __add__(self, other: "PrognosticState") -> "PrognosticState":
        self._require_compatible(other)
        return PrognosticState(self.grid, self.phi + other.phi,
                               self.xi + other.xi, self.delta + other.delta,
                               self.phibar)

    def __sub__(self, other: "PrognosticState") -> "PrognosticState":
        self._require_compatible(other)
        return PrognosticState(self.grid, self.phi - other.phi,
                               self.xi - other.xi, self.delta - other.delta,
                               self.phibar)

    def winds(self):
        return self.grid.uv_from_vortdiv(self.xi, self.delta)


@dataclasses.dataclass(frozen=True)
class ViscositySpec:
    """(Hyper)viscosity order q (even, >= 2) and coefficient nu (m^q/s)."""

    order_q: int = 2
    coeff_nu: float = 0.0

    def __post_init__(self):
        if self.order_q < 2 or self.order_q % 2 != 0:
            raise ValueError("viscosity order must be an even integer >= 2")
        if self.coeff_nu < 0:
            raise ValueError("viscosity coefficient must be non-negative")


def linear_gravity(state: PrognosticState) -> Tendency:
    """(-Phibar*delta, 0, -lap(Phi)); diagonal in spectral space."""
    g = state.grid
    return Tendency(-state.phibar * state.delta,
                    np.zeros_like(state.xi),
                    -g.laplacian(state.phi))


def linear_coriolis(state: PrognosticState) -> Tendency:
    """(0, -div(f V), curl(f V)) evaluated pseudospectrally."""
    g = state.grid
    u, v = state.winds()
    f = g.coriolis_grid
    curl_fv, div_fv = g.vortdiv_from_uv(f * u, f * v)
    return Tendency(np.zeros_like(state.phi), -div_fv, curl_fv)


def linear_combined(state: PrognosticState) -> Tendency:
    return linear_gravity(state) + linear_coriolis(state)


def nonlinear_advection(state: PrognosticState) -> Tendency:
    """(-V.grad(Phi), -div(xi V), -lap(V.V/2) + curl(xi V))."""
    g = state.grid
    u, v = state.winds()
    gx, gy = g.grad_grid(state.phi)
    tphi = -g.analysis(u * gx + v * gy)
    xi_g = g.synthesis(state.xi)
    curl_xv, div_xv = g.vortdiv_from_uv(xi_g * u, xi_g * v)
    ke = g.analysis(0.5 * (u * u + v * v))
    return Tendency(tphi, -div_xv, curl_xv - g.laplacian(ke))


def nonlinear_rest(state: PrognosticState) -> Tendency:
    """(-Phi'*delta, 0, 0) via a dealiased grid product."""
    g = state.grid
    phip = g.synthesis(state.phi_prime())
    dlt = g.synthesis(state.delta)
    z = np.zeros_like(state.xi)
    return Tendency(-g.analysis(phip * dlt), z, z)


def full_rhs(state: PrognosticState) -> Tendency:
    return (linear_gravity(state) + linear_coriolis(state)
            + nonlinear_advection(state) + nonlinear_rest(state))


def viscosity_coefficient_from_damping_time(M: int, order_q: int, tau: float,
                                            radius_a: float) -> float:
    """Coefficient nu = (1/tau) * (M(M+1)/a^2)^(-q/2).

    tau is the e-folding time of the largest retained wavenumber M.
    """
    if tau <= 0:
        raise ValueError("damping time must be positive")
    if order_q < 2 or order_q % 2 != 0:
        raise ValueError("viscosity order must be an even integer >= 2")
    return (1.0 / tau) * (M * (M + 1) / radius_a**2) ** (-order_q / 2.0)


def viscosity_damping(grid: SphereGrid, vspec: ViscositySpec, dt: float) -> np.ndarray:
    """Backward-Euler damping factor per packed mode.

    b(n) = 1 / (1 + dt * nu * (n(n+1)/a^2)^(q/2)); equals 1 at n = 0, so the
    mean geopotential is untouched.
    """
    nn1 = grid.n_of * (grid.n_of + 1.0) / grid.geometry.radius_a**2
    return 1.0 / (1.0 + dt * vspec.coeff_nu * nn1 ** (vspec.order_q / 2.0))


def viscosity_step(state: PrognosticState, vspec: ViscositySpec,
                   dt: float) -> PrognosticState:
    """Damp Phi', xi and delta by the backward-Euler factor (never amplifies)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if vspec.coeff_nu == 0.0:
        return state.copy()
    b = viscosity_damping(state.grid, vspec, dt)
    return PrognosticState(state.grid, state.phi * b, state.xi * b,
                           state.delta * b, state.phibar)
