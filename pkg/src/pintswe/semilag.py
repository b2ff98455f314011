"""Semi-Lagrangian building blocks: departure points and interpolation.

Departure points follow the two-time-level stable extrapolation rule: the
wind extrapolated to t_{n+1} at the departure guess is averaged with the
arrival-point wind at t_n and the arrival point is displaced backward along
the corresponding great circle.  A fixed small number of iterations is used.

Interpolation is bicubic Lagrange on the Gaussian grid: uniform-spaced
cubic weights in longitude, true nonuniform 4-point Lagrange weights in
latitude, with ghost rows obtained by shifting half a revolution across
each pole (exact for the even longitude count).  Velocity vectors are
interpolated through their Cartesian components, which are genuine scalars
on the sphere, then rotated to the arrival point's tangent plane.
"""

from __future__ import annotations

import functools

import numpy as np

from .spharm import SphereGrid


class SphereInterpolator:
    """Bicubic scalar interpolation on one Gaussian grid."""

    def __init__(self, grid: SphereGrid):
        self.grid = grid
        self.nlat = grid.nlat
        self.nlon = grid.nlon
        self.dlon = 2.0 * np.pi / grid.nlon
        lat_asc = grid.lats[::-1]                # ascending latitude
        self.theta_ext = np.concatenate([
            [-np.pi - lat_asc[1], -np.pi - lat_asc[0]],
            lat_asc,
            [np.pi - lat_asc[-1], np.pi - lat_asc[-2]],
        ])

    def _extend(self, values: np.ndarray) -> np.ndarray:
        v = values[::-1]                          # ascending latitude rows
        half = self.nlon // 2
        return np.vstack([
            np.roll(v[1], half), np.roll(v[0], half),
            v,
            np.roll(v[-1], half), np.roll(v[-2], half),
        ])

    def weights(self, lam: np.ndarray, theta: np.ndarray):
        """Stencil indices and Lagrange weights for scattered points."""
        lam = np.mod(lam, 2.0 * np.pi)
        frac = lam / self.dlon
        i0 = np.floor(frac).astype(np.int64)
        t = frac - i0
        wl = np.stack([
            -t * (t - 1.0) * (t - 2.0) / 6.0,
            (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
            -(t + 1.0) * t * (t - 2.0) / 2.0,
            (t + 1.0) * t * (t - 1.0) / 6.0,
        ], axis=-1)
        lon_idx = (i0[..., None] + np.arange(-1, 3)) % self.nlon

        j = np.searchsorted(self.theta_ext, theta) - 1
        j = np.clip(j, 1, self.theta_ext.size - 3)
        lat_idx = j[..., None] + np.arange(-1, 3)
        nodes = self.theta_ext[lat_idx]           # (..., 4)
        x = theta[..., None]
        wt = np.empty_like(nodes)
        for k in range(4):
            num = 1.0
            den = 1.0
            for l in range(4):
                if l == k:
                    continue
                num = num * (x[..., 0] - nodes[..., l])
                den = den * (nodes[..., k] - nodes[..., l])
            wt[..., k] = num / den
        return lat_idx, lon_idx, wt, wl

    def interpolate(self, values: np.ndarray, lam: np.ndarray,
                    theta: np.ndarray) -> np.ndarray:
        lat_idx, lon_idx, wt, wl = self.weights(lam, theta)
        return self.interpolate_with(values, lat_idx, lon_idx, wt, wl)

    def interpolate_with(self, values: np.ndarray, lat_idx, lon_idx, wt, wl):
        """Interpolate using precomputed stencils (reused across fields)."""
        ext = self._extend(values)
        patch = ext[lat_idx[..., :, None], lon_idx[..., None, :]]
        return np.einsum("...ij,...i,...j->...", patch, wt, wl)


@functools.lru_cache(maxsize=64)
def get_interpolator(grid: SphereGrid) -> SphereInterpolator:
    return SphereInterpolator(grid)


def _unit_vectors(grid: SphereGrid):
    lam = grid.lons[None, :] * np.ones((grid.nlat, 1))
    mu = grid.mu[:, None] * np.ones((1, grid.nlon))
    cos = grid.cos_lat[:, None] * np.ones((1, grid.nlon))
    xa = np.stack([cos * np.cos(lam), cos * np.sin(lam), mu])
    e_lam = np.stack([-np.sin(lam), np.cos(lam), np.zeros_like(lam)])
    e_th = np.stack([-mu * np.cos(lam), -mu * np.sin(lam), cos])
    return xa, e_lam, e_th


@functools.lru_cache(maxsize=64)
def _arrival_frame(grid: SphereGrid):
    return _unit_vectors(grid)


def _displace(xa: np.ndarray, w: np.ndarray, dt: float, radius: float):
    """Move backward from xa along the great circle tangent to w for time dt."""
    speed = np.sqrt((w * w).sum(axis=0))
    sigma = speed * dt / radius
    with np.errstate(invalid="ignore", divide="ignore"):
        what = np.where(speed > 0.0, w / np.where(speed > 0, speed, 1.0), 0.0)
    xd = np.cos(sigma) * xa - np.sin(sigma) * what
    norm = np.sqrt((xd * xd).sum(axis=0))
    return xd / norm


def _rotate_to(v: np.ndarray, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Parallel transport of tangent vector v from src to dst (unit vectors)."""
    k = np.cross(src, dst, axis=0)
    s2 = (k * k).sum(axis=0)
    c = (src * dst).sum(axis=0)
    small = s2 < 1e-24
    s2_safe = np.where(small, 1.0, s2)
    kxv = np.cross(k, v, axis=0)
    kdv = (k * v).sum(axis=0)
    rotated = c * v + kxv + k * (kdv * (1.0 - c) / s2_safe)
    return np.where(small, v, rotated)


def departure_points(grid: SphereGrid, u_arr: np.ndarray, v_arr: np.ndarray,
                     u_ext: np.ndarray, v_ext: np.ndarray, dt: float,
                     iterations: int = 2):
    """Departure longitudes/latitudes for every grid point.

    (u_arr, v_arr) is the arrival-time wind; (u_ext, v_ext) the wind field
    extrapolated to t_{n+1} that is evaluated at the departure guess.  The
    fixed-point update is x_d = x_a - (dt/2) * (V_ext(x_d) + V(t_n, x_a)),
    applied as a great-circle displacement with the departure-point vector
    rotated into the arrival tangent plane.
    """
    a = grid.geometry.radius_a
    xa, e_lam, e_th = _arrival_frame(grid)
    wa = u_arr[None] * e_lam + v_arr[None] * e_th
    ve_cart = u_ext[None] * e_lam + v_ext[None] * e_th
    interp = get_interpolator(grid)

    xd = _displace(xa, wa, dt, a)
    for _ in range(iterations):
        lam_d = np.mod(np.arctan2(xd[1], xd[0]), 2.0 * np.pi)
        th_d = np.arcsin(np.clip(xd[2], -1.0, 1.0))
        stencil = interp.weights(lam_d, th_d)
        we = np.stack([interp.interpolate_with(ve_cart[c], *stencil)
                       for c in range(3)])
        we = we - ((we * xd).sum(axis=0)) * xd
        wt = _rotate_to(we, xd, xa)
        w = 0.5 * (wt + wa)
        xd = _displace(xa, w, dt, a)

    lam_d = np.mod(np.arctan2(xd[1], xd[0]), 2.0 * np.pi)
    th_d = np.arcsin(np.clip(xd[2], -1.0, 1.0))
    if not (np.isfinite(lam_d).all() and np.isfinite(th_d).all()):
        raise DeparturePointError("departure-point iteration diverged")
    return lam_d, th_d


class DeparturePointError(RuntimeError):
    """Trajectory iteration produced non-finite departure points."""


def advect_scalar(grid: SphereGrid, values: np.ndarray, lam_d: np.ndarray,
                  th_d: np.ndarray) -> np.ndarray:
    """Interpolate a grid scalar at the departure points."""
    return get_interpolator(grid).interpolate(values, lam_d, th_d)
