"""Spherical-harmonic transform core on a Gaussian grid.

Scalar fields on the sphere are represented by complex coefficients s_{m,n}
under triangular truncation (0 <= m <= M, m <= n <= M, only m >= 0 stored;
real fields are recovered through conjugate symmetry).  The associated
Legendre functions used here are orthonormal with respect to
``integral_{-1}^{1} dmu`` and the longitude basis is exp(i*m*lambda), so a
constant field c has single coefficient s_{0,0} = c*sqrt(2) and the grid
inner product ``sum_j w_j * (2*pi/nlon) * sum_i f g`` matches the spectral
one (see README for the normalization summary).
"""

from __future__ import annotations

import dataclasses
import functools
import math

import numpy as np

EARTH_RADIUS = 6371.22e3      # m
EARTH_OMEGA = 7.292e-5        # s^-1
EARTH_GRAVITY = 9.80616       # m s^-2


class RootFindingError(RuntimeError):
    """Newton iteration for a Legendre root failed to converge."""


@dataclasses.dataclass(frozen=True)
class SphereGeometry:
    """Sphere radius, rotation rate and gravity (all strictly positive)."""

    radius_a: float = EARTH_RADIUS
    omega: float = EARTH_OMEGA
    gravity_g: float = EARTH_GRAVITY

    def __post_init__(self):
        if not (self.radius_a > 0 and self.gravity_g > 0):
            raise ValueError("radius and gravity must be strictly positive")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")


@dataclasses.dataclass(frozen=True)
class Truncation:
    """Triangular truncation M with its dealiased Gaussian grid size."""

    M: int
    nlat: int
    nlon: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("truncation M must be >= 1")
        if self.nlat < math.ceil((3 * self.M + 1) / 2):
            raise ValueError("nlat violates the 3/2 rule")
        if self.nlon < 3 * self.M + 1 or self.nlon % 2 != 0:
            raise ValueError("nlon must be even and satisfy the 3/2 rule")

    @classmethod
    def for_wavenumber(cls, M: int) -> "Truncation":
        """Smallest grid satisfying the anti-aliasing 3/2-rule bounds."""
        nlat = math.ceil((3 * M + 1) / 2)
        nlon = 3 * M + 1
        if nlon % 2 != 0:
            nlon += 1
        return cls(M=M, nlat=nlat, nlon=nlon)

    @property
    def n_modes(self) -> int:
        return (self.M + 1) * (self.M + 2) // 2


def gauss_legendre(n: int, tol: float = 1e-15, max_iter: int = 100):
    """Nodes and weights of n-point Gauss-Legendre quadrature on [-1, 1].

    Newton iteration on P_n with the Tricomi initial guess.  Nodes are
    returned in decreasing order (north to south when read as mu).
    Raises RootFindingError naming the first non-converged root.
    """
    if n < 1:
        raise ValueError("need at least one quadrature node")
    k = np.arange(n)
    x = np.cos(np.pi * (k + 0.75) / (n + 0.5))
    converged = np.zeros(n, dtype=bool)
    pp = np.zeros(n)
    for _ in range(max_iter):
        p0 = np.ones_like(x)
        p1 = x.copy()
        if n == 1:
            p_n, p_nm1 = p1, p0
        else:
            for j in range(2, n + 1):
                p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
            p_n, p_nm1 = p1, p0
        pp = n * (x * p_n - p_nm1) / (x * x - 1.0)
        dx = p_n / pp
        x = x - dx
        converged = np.abs(dx) <= tol * np.maximum(1.0, np.abs(x))
        if converged.all():
            break
    else:
        bad = int(np.flatnonzero(~converged)[0])
        raise RootFindingError(f"Legendre root {bad} of P_{n} did not converge")
    w = 2.0 / ((1.0 - x * x) * pp * pp)
    order = np.argsort(-x)
    return x[order], w[order]


def _epsilon(m: int, n: int) -> float:
    """Recurrence coefficient sqrt((n^2 - m^2)/(4n^2 - 1))."""
    if n <= m:
        return 0.0
    return math.sqrt((n * n - m * m) / (4.0 * n * n - 1.0))


def legendre_table(M: int, n_max: int, mu: np.ndarray):
    """Normalized associated Legendre values P_{m,n}(mu) for 0<=m<=M, m<=n<=n_max.

    Three-term recurrence in n on top of the stable diagonal recurrence for
    P_{m,m}; orthonormal w.r.t. integral over mu (no factorials, safe at
    large M).  Returns a list indexed by m of arrays (nlat, n_max - m + 1).
    """
    nlat = mu.shape[0]
    sin2 = np.maximum(1.0 - mu * mu, 0.0)
    cos_t = np.sqrt(sin2)
    tables = []
    pmm = np.full(nlat, 1.0 / math.sqrt(2.0))
    for m in range(M + 1):
        if m > 0:
            pmm = pmm * cos_t * math.sqrt((2.0 * m + 1.0) / (2.0 * m))
        cols = n_max - m + 1
        tab = np.empty((nlat, cols))
        tab[:, 0] = pmm
        if cols > 1:
            tab[:, 1] = math.sqrt(2.0 * m + 3.0) * mu * pmm
        for n in range(m + 2, n_max + 1):
            e_n = _epsilon(m, n)
            e_nm1 = _epsilon(m, n - 1)
            tab[:, n - m] = (mu * tab[:, n - m - 1] - e_nm1 * tab[:, n - m - 2]) / e_n
        tables.append(tab)
    return tables


class SphereGrid:
    """Gaussian grid plus transform tables for one truncation and geometry.

    Packed coefficient layout: for m = 0..M the block of n = m..M, giving
    (M+1)(M+2)/2 complex entries.  All public methods are pure functions of
    their inputs; instances are safe to share between worker threads.
    """

    def __init__(self, trunc: Truncation, geometry: SphereGeometry):
        self.trunc = trunc
        self.geometry = geometry
        M, nlat, nlon = trunc.M, trunc.nlat, trunc.nlon
        self.M = M
        self.nlat = nlat
        self.nlon = nlon

        self.mu, self.weights = gauss_legendre(nlat)
        self.lats = np.arcsin(self.mu)
        self.lons = 2.0 * np.pi * np.arange(nlon) / nlon
        self.cos_lat = np.sqrt(1.0 - self.mu**2)

        # packed (m, n) layout
        self.offsets = np.zeros(M + 2, dtype=np.int64)
        for m in range(M + 1):
            self.offsets[m + 1] = self.offsets[m] + (M + 1 - m)
        self.n_modes = int(self.offsets[M + 1])
        self.n_of = np.concatenate([np.arange(m, M + 1) for m in range(M + 1)])
        self.m_of = np.concatenate([np.full(M + 1 - m, m) for m in range(M + 1)])

        # Legendre tables up to n = M+1 (the derivative needs P_{m,n+1})
        full = legendre_table(M, M + 1, self.mu)
        self._pnm = [np.ascontiguousarray(t[:, : M + 1 - m])
                     for m, t in enumerate(full)]
        self._hnm = []
        for m, t in enumerate(full):
            h = np.empty((nlat, M + 1 - m))
            for n in range(m, M + 1):
                j = n - m
                h[:, j] = -n * _epsilon(m, n + 1) * t[:, j + 1]
                if n > m:
                    h[:, j] += (n + 1) * _epsilon(m, n) * t[:, j - 1]
            self._hnm.append(h)
        # contiguous transposes and joined [P | H] blocks: the hot loops run
        # real GEMMs on (re, im) column pairs, avoiding complex promotion
        self._pnm_t = [np.ascontiguousarray(p.T) for p in self._pnm]
        self._hnm_t = [np.ascontiguousarray(h.T) for h in self._hnm]
        self._ph = [np.ascontiguousarray(np.hstack([p, h]))
                    for p, h in zip(self._pnm, self._hnm)]

        a = geometry.radius_a
        nn1 = self.n_of * (self.n_of + 1.0)
        self.laplacian_eig = -nn1 / (a * a)
        with np.errstate(divide="ignore"):
            inv = np.where(nn1 > 0, -(a * a) / np.where(nn1 > 0, nn1, 1.0), 0.0)
        self.inv_laplacian_eig = inv
        self._w_over_sin2 = self.weights / (1.0 - self.mu**2)
        self.coriolis_grid = 2.0 * geometry.omega * self.mu[:, None] * np.ones((1, nlon))

    # -- layout helpers --------------------------------------------------

    def mode_index(self, m: int, n: int) -> int:
        if not (0 <= m <= self.M and m <= n <= self.M):
            raise IndexError(f"mode ({m},{n}) outside truncation M={self.M}")
        return int(self.offsets[m]) + (n - m)

    def zeros_spectral(self) -> np.ndarray:
        return np.zeros(self.n_modes, dtype=np.complex128)

    def zeros_grid(self) -> np.ndarray:
        return np.zeros((self.nlat, self.nlon))

    def _block(self, coeffs: np.ndarray, m: int) -> np.ndarray:
        return coeffs[self.offsets[m]: self.offsets[m + 1]]

    # -- scalar transforms ------------------------------------------------

    def _check_grid(self, values: np.ndarray):
        if values.shape != (self.nlat, self.nlon):
            raise ValueError(
                f"grid shape {values.shape} != ({self.nlat}, {self.nlon})"
            )

    def _check_spec(self, coeffs: np.ndarray):
        if coeffs.shape != (self.n_modes,):
            raise ValueError(f"expected {self.n_modes} packed coefficients")

    @staticmethod
    def _as_real_pairs(c: np.ndarray) -> np.ndarray:
        """(k,) complex -> (k, 2) float view (re, im); copies if needed."""
        c = np.ascontiguousarray(c, dtype=np.complex128)
        return c.view(np.float64).reshape(-1, 2)

    def analysis(self, values: np.ndarray) -> np.ndarray:
        """Grid values -> packed spectral coefficients (forward transform)."""
        self._check_grid(values)
        fm = np.fft.rfft(values, axis=1) / self.nlon     # (nlat, nlon//2+1)
        out = np.empty(self.n_modes, dtype=np.complex128)
        ov = out.view(np.float64).reshape(-1, 2)
        for m in range(self.M + 1):
            wg = self._as_real_pairs(self.weights * fm[:, m])
            ov[self.offsets[m]: self.offsets[m + 1]] = self._pnm_t[m] @ wg
        return out

    def synthesis(self, coeffs: np.ndarray) -> np.ndarray:
        """Packed spectral coefficients -> real grid values (inverse transform)."""
        self._check_spec(coeffs)
        half = np.zeros((self.nlat, self.nlon // 2 + 1), dtype=np.complex128)
        hv = half.view(np.float64).reshape(self.nlat, -1, 2)
        cv = np.ascontiguousarray(coeffs).view(np.float64).reshape(-1, 2)
        for m in range(self.M + 1):
            hv[:, m, :] = self._pnm[m] @ cv[self.offsets[m]: self.offsets[m + 1]]
        return np.fft.irfft(half * self.nlon, n=self.nlon, axis=1)

    def _synthesis_pair(self, cp: np.ndarray, ch: np.ndarray) -> np.ndarray:
        """Synthesize sum_m (P*cp_m + H*ch_m) e^{i m lambda} (helper for winds)."""
        half = np.zeros((self.nlat, self.nlon // 2 + 1), dtype=np.complex128)
        hv = half.view(np.float64).reshape(self.nlat, -1, 2)
        for m in range(self.M + 1):
            sl = slice(self.offsets[m], self.offsets[m + 1])
            stacked = np.concatenate([cp[sl], ch[sl]])
            hv[:, m, :] = self._ph[m] @ stacked.view(np.float64).reshape(-1, 2)
        return np.fft.irfft(half * self.nlon, n=self.nlon, axis=1)

    # -- diagonal spectral operators ---------------------------------------

    def laplacian(self, coeffs: np.ndarray) -> np.ndarray:
        self._check_spec(coeffs)
        return coeffs * self.laplacian_eig

    def inverse_laplacian(self, coeffs: np.ndarray) -> np.ndarray:
        """Inverse Laplacian; the (0,0) mode is mapped to zero."""
        self._check_spec(coeffs)
        return coeffs * self.inv_laplacian_eig

    # -- differential / vector operations ----------------------------------

    def grad_grid(self, coeffs: np.ndarray):
        """Gradient of a spectral field on the grid.

        Returns (gx, gy) with gx = (1/(a cos(theta))) d/dlambda and
        gy = (1/a) d/dtheta, both evaluated at the grid points.
        """
        self._check_spec(coeffs)
        a = self.geometry.radius_a
        dlam = coeffs * (1j * self.m_of)
        gx = self.synthesis(dlam) / (a * self.cos_lat[:, None])
        gy = self._synthesis_pair(np.zeros_like(coeffs), coeffs)
        gy /= a * self.cos_lat[:, None]
        return gx, gy

    def uv_from_vortdiv(self, xi: np.ndarray, delta: np.ndarray):
        """Wind components on the grid from vorticity/divergence coefficients.

        Inverts the streamfunction/velocity-potential relations
        psi = inv_lap(xi), chi = inv_lap(delta) and evaluates
        u = (d_lambda chi - cos(theta) d_theta... ) / (a cos) via the
        precomputed derivative tables.
        """
        self._check_spec(xi)
        self._check_spec(delta)
        a = self.geometry.radius_a
        psi = self.inverse_laplacian(xi)
        chi = self.inverse_laplacian(delta)
        im = 1j * self.m_of
        u = self._synthesis_pair(chi * im, -psi)
        v = self._synthesis_pair(psi * im, chi)
        scale = 1.0 / (a * self.cos_lat[:, None])
        return u * scale, v * scale

    def vortdiv_from_uv(self, u: np.ndarray, v: np.ndarray):
        """Spectral vorticity and divergence of a grid wind field.

        Quadrature-exact adjoint of the derivative synthesis (integration by
        parts in mu; the boundary terms vanish because u*cos and v*cos do at
        the poles).  Returns (xi, delta) packed coefficients.
        """
        self._check_grid(u)
        self._check_grid(v)
        a = self.geometry.radius_a
        amx = np.fft.rfft(u * self.cos_lat[:, None], axis=1) / self.nlon
        bmx = np.fft.rfft(v * self.cos_lat[:, None], axis=1) / self.nlon
        xi = np.empty(self.n_modes, dtype=np.complex128)
        delta = np.empty(self.n_modes, dtype=np.complex128)
        ws = self._w_over_sin2
        for m in range(self.M + 1):
            ab = np.empty((self.nlat, 4))
            ab[:, 0:2] = self._as_real_pairs(ws * amx[:, m])
            ab[:, 2:4] = self._as_real_pairs(ws * bmx[:, m])
            pt = self._pnm_t[m] @ ab                      # (k, 4)
            ht = self._hnm_t[m] @ ab
            p_am = pt[:, 0] + 1j * pt[:, 1]
            p_bm = pt[:, 2] + 1j * pt[:, 3]
            h_am = ht[:, 0] + 1j * ht[:, 1]
            h_bm = ht[:, 2] + 1j * ht[:, 3]
            sl = slice(self.offsets[m], self.offsets[m + 1])
            delta[sl] = (1j * m) * p_am - h_bm
            xi[sl] = (1j * m) * p_bm + h_am
        return xi / a, delta / a


@functools.lru_cache(maxsize=64)
def get_grid(M: int, geometry: SphereGeometry = SphereGeometry()) -> SphereGrid:
    """Shared, cached transform engine for (M, geometry)."""
    return SphereGrid(Truncation.for_wavenumber(M), geometry)


def truncate_pad(coeffs: np.ndarray, grid_src: SphereGrid, grid_dst: SphereGrid) -> np.ndarray:
    """Map packed coefficients between truncations (drop n > M_dst or zero-pad).

    Truncation never increases the coefficient energy; padding adds exact
    zeros.  Source and destination must share the geometry.
    """
    if grid_src.geometry != grid_dst.geometry:
        raise ValueError("truncate_pad requires matching geometries")
    grid_src._check_spec(coeffs)
    out = grid_dst.zeros_spectral()
    m_max = min(grid_src.M, grid_dst.M)
    for m in range(m_max + 1):
        ls = grid_src.offsets[m]
        ld = grid_dst.offsets[m]
        k = m_max - m + 1
        out[ld: ld + k] = coeffs[ls: ls + k]
    return out


# -- simple field containers (API surface) ---------------------------------


@dataclasses.dataclass
class SpectralField:
    """Packed complex coefficients of one real scalar field."""

    grid: SphereGrid
    coeffs: np.ndarray

    def __post_init__(self):
        self.grid._check_spec(self.coeffs)

    def to_grid(self) -> "GridField":
        return GridField(self.grid, self.grid.synthesis(self.coeffs))


@dataclasses.dataclass
class GridField:
    """Real values on the Gaussian grid (nlat x nlon, latitudes north first)."""

    grid: SphereGrid
    values: np.ndarray

    def __post_init__(self):
        self.grid._check_grid(self.values)

    def to_spectral(self) -> SpectralField:
        return SpectralField(self.grid, self.grid.analysis(self.values))
