"""Initial conditions and experiment presets.

Every initializer is deterministic and resolution-convergent.  The unstable
jet constants are the standard values of the external barotropic-instability
benchmark (compactly supported zonal jet in geostrophic balance, perturbed
by a Gaussian bump in the geopotential); they are configuration defaults
taken from that external reference, not derived here.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from .dynamics import PrognosticState
from .spharm import SphereGeometry, SphereGrid, get_grid

HOUR = 3600.0

GAUSSIAN_BUMP_AMPLITUDE = 6000.0
GAUSSIAN_BUMP_WIDTHS = (20.0, 80.0, 360.0)
GAUSSIAN_BUMP_CENTERS = ((np.pi / 5.0, np.pi / 3.0),
                         (6.0 * np.pi / 5.0, np.pi / 5.0),
                         (8.0 * np.pi / 5.0, -np.pi / 4.0))
GAUSSIAN_BUMP_MEAN_DEPTH = 29400.0

# external-reference jet constants
JET_UMAX = 80.0
JET_PHI0 = np.pi / 7.0
JET_PHI1 = np.pi / 2.0 - np.pi / 7.0
JET_PHI2 = np.pi / 4.0
JET_ALPHA = 1.0 / 3.0
JET_BETA = 1.0 / 15.0
JET_HHAT = 120.0
JET_MEAN_DEPTH = 1.0e4


@dataclasses.dataclass(frozen=True)
class Scenario:
    name: str
    initializer: Callable[[SphereGrid], PrognosticState]
    horizon: float
    phibar: float


def _mesh(grid: SphereGrid):
    lam = grid.lons[None, :] * np.ones((grid.nlat, 1))
    theta = grid.lats[:, None] * np.ones((1, grid.nlon))
    return lam, theta


def great_circle_distance(lam, theta, lam0, theta0):
    """Central angle between (lam, theta) and (lam0, theta0)."""
    c = (np.sin(theta) * np.sin(theta0)
         + np.cos(theta) * np.cos(theta0) * np.cos(lam - lam0))
    return np.arccos(np.clip(c, -1.0, 1.0))


def gaussian_bumps(grid: SphereGrid) -> PrognosticState:
    """Resting geopotential perturbed by three Gaussian bumps; V = 0."""
    g = grid.geometry.gravity_g
    phibar = g * GAUSSIAN_BUMP_MEAN_DEPTH
    lam, theta = _mesh(grid)
    phi = np.full_like(lam, phibar)
    for (lam0, th0), width in zip(GAUSSIAN_BUMP_CENTERS, GAUSSIAN_BUMP_WIDTHS):
        d = great_circle_distance(lam, theta, lam0, th0)
        phi += GAUSSIAN_BUMP_AMPLITUDE * np.exp(-width * d * d)
    return PrognosticState(grid, grid.analysis(phi), grid.zeros_spectral(),
                           grid.zeros_spectral(), phibar)


def jet_wind_profile(theta):
    """Zonal jet speed, compactly supported on (JET_PHI0, JET_PHI1)."""
    e_n = math.exp(-4.0 / (JET_PHI1 - JET_PHI0) ** 2)
    theta = np.asarray(theta, dtype=float)
    inside = (theta > JET_PHI0) & (theta < JET_PHI1)
    u = np.zeros_like(theta)
    t = theta[inside]
    u[inside] = JET_UMAX / e_n * np.exp(1.0 / ((t - JET_PHI0) * (t - JET_PHI1)))
    return u


def _jet_balance_integral(theta_nodes, geometry: SphereGeometry, npts=512):
    """integral_{phi0}^{theta} a*u*(f + u*tan(phi)/a) dphi per latitude node.

    Fixed-order Gauss-Legendre on the support interval; the integrand
    vanishes outside (JET_PHI0, JET_PHI1), so the lower limit is JET_PHI0.
    """
    gx, gw = np.polynomial.legendre.leggauss(npts)
    a = geometry.radius_a
    omega = geometry.omega
    out = np.zeros_like(np.asarray(theta_nodes, dtype=float))
    for i, th in enumerate(np.atleast_1d(theta_nodes)):
        hi = min(max(th, JET_PHI0), JET_PHI1)
        if hi <= JET_PHI0:
            continue
        mid = 0.5 * (JET_PHI0 + hi)
        halfw = 0.5 * (hi - JET_PHI0)
        phi = mid + halfw * gx
        u = jet_wind_profile(phi)
        f = 2.0 * omega * np.sin(phi)
        out[i] = halfw * np.sum(gw * a * u * (f + u * np.tan(phi) / a))
    return out


def unstable_jet(grid: SphereGrid, perturb: bool = True) -> PrognosticState:
    """Balanced zonal jet, optionally perturbed by a geopotential bump.

    The geopotential is obtained by integrating the zonal balance relation
    at every Gaussian latitude; the global mean depth is then shifted to the
    reference value.  With perturb=False the state is a discrete steady
    state up to truncation error.
    """
    geom = grid.geometry
    g = geom.gravity_g
    gh_dev = -_jet_balance_integral(grid.lats, geom)     # g*h up to a constant
    weights = grid.weights / 2.0                         # sum to 1
    mean_dev = float(np.sum(weights * gh_dev))
    phibar = g * JET_MEAN_DEPTH
    phi_zonal = phibar + (gh_dev - mean_dev)

    lam, theta = _mesh(grid)
    phi = phi_zonal[:, None] * np.ones((1, grid.nlon))
    if perturb:
        lam_c = np.mod(lam + np.pi, 2.0 * np.pi) - np.pi   # (-pi, pi]
        bump = (JET_HHAT * np.cos(theta)
                * np.exp(-((lam_c / JET_ALPHA) ** 2))
                * np.exp(-(((JET_PHI2 - theta) / JET_BETA) ** 2)))
        phi = phi + g * bump

    u = jet_wind_profile(grid.lats)[:, None] * np.ones((1, grid.nlon))
    v = np.zeros_like(u)
    xi, delta = grid.vortdiv_from_uv(u, v)
    return PrognosticState(grid, grid.analysis(phi), xi, delta, phibar)


def solid_body_test(grid: SphereGrid, u0: float,
                    phibar: float = 0.0,
                    bump_center=(np.pi, 0.0),
                    bump_width: float = 10.0,
                    bump_amplitude: float = 1000.0) -> PrognosticState:
    """Zonal solid-body wind with a Gaussian geopotential bump tracer."""
    a = grid.geometry.radius_a
    lam, theta = _mesh(grid)
    d = great_circle_distance(lam, theta, *bump_center)
    phi = phibar + bump_amplitude * np.exp(-bump_width * d * d)
    xi = grid.zeros_spectral()
    if u0 != 0.0:
        # solid-body rotation: xi = 2 u0 mu / a, a pure (0,1) mode
        xi = grid.analysis(2.0 * u0 * np.sin(theta) / a)
    return PrognosticState(grid, grid.analysis(phi), xi,
                           grid.zeros_spectral(), phibar)


def get_scenario(name: str) -> Scenario:
    try:
        return _SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; "
                       f"choose from {sorted(_SCENARIOS)}") from None


_SCENARIOS = {
    "gaussian_bumps": Scenario("gaussian_bumps", gaussian_bumps, 36.0 * HOUR,
                               SphereGeometry().gravity_g * GAUSSIAN_BUMP_MEAN_DEPTH),
    "unstable_jet": Scenario("unstable_jet", unstable_jet, 144.0 * HOUR,
                             SphereGeometry().gravity_g * JET_MEAN_DEPTH),
}


def scenario_names():
    return sorted(_SCENARIOS)
