"""Closed-form amplification factors and stability-region rasters.

Covers the serial schemes (the IMEX product factor and the semi-Lagrangian
two-root quadratic), the Parareal binomial stability function and its
two-level MGRIT generalization with F(CF)^nrelax relaxation, plus the
defining recurrences used as anti-regression oracles.  Conventions:

* xi_L = lambda_L * dt and xi_N = lambda_N * dt are per-step values; in
  parallel-in-time scans the raster is expressed in units of the coarse
  step, with the fine factors evaluated at xi / (Nf/Nc).
* A raster point is stable when |A| <= 1; semi-Lagrangian regions intersect
  the 21 spatial-wavenumber samples kappa*s = 0, pi/10, ..., 2*pi.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

IMEX_SCHEME = "imex"
SETTLS_SCHEME = "settls"
AS_PRINTED = "as_printed"
HEUN = "heun"

DEFAULT_AXIS = (-4.0, 4.0, 401)


def kappa_samples() -> np.ndarray:
    """The 21 spatial-wavenumber samples 0..2*pi in steps of pi/10."""
    return np.arange(21) * (np.pi / 10.0)


def xi_l_tilde(phibar: float, radius_a: float) -> complex:
    """Characteristic gravity-mode frequency i*sqrt(phibar)/a (per unit dt)."""
    return 1j * np.sqrt(phibar) / radius_a


# -- serial schemes ----------------------------------------------------------


def amp_imex(xi_l: complex, xi_n, variant: str = AS_PRINTED):
    """IMEX amplification ((4+xiL)/(4-xiL))^2 * E(xiN).

    variant "as_printed" uses the explicit factor xiN*(2+xiN)/2; "heun" the
    consistent Runge-Kutta-2 factor 1 + xiN + xiN^2/2 (the factor the time
    stepper actually realizes).  The implicit factor has a pole at xiL = 4.
    """
    if xi_l == 4.0:
        raise ValueError("xi_l = 4 is a pole of the implicit factor")
    xi_n = np.asarray(xi_n, dtype=complex)
    implicit = (4.0 + xi_l) / (4.0 - xi_l)
    if variant == AS_PRINTED:
        explicit = xi_n * (2.0 + xi_n) / 2.0
    elif variant == HEUN:
        explicit = 1.0 + xi_n + xi_n * xi_n / 2.0
    else:
        raise ValueError(f"unknown IMEX variant {variant!r}")
    return implicit * implicit * explicit


def amp_settls(xi_l: complex, xi_n, kappa_s: float):
    """Both roots of the SL-SI-SETTLS per-step quadratic.

    A^2 (1 - xiL/2) - A (e^{-i ks}(1 + xiL/2 + xiN) + xiN/2)
        + (xiN/2) e^{-i ks} = 0

    Solved in the cancellation-safe form (larger-magnitude root first from
    the quadratic formula, companion root from the product).  Raises for
    xi_l = 2 where the leading coefficient degenerates.
    """
    if xi_l == 2.0:
        raise ValueError("xi_l = 2 degenerates the leading coefficient")
    xi_n = np.asarray(xi_n, dtype=complex)
    phase = np.exp(-1j * kappa_s)
    a = 1.0 - xi_l / 2.0
    b = -(phase * (1.0 + xi_l / 2.0 + xi_n) + xi_n / 2.0)
    c = (xi_n / 2.0) * phase
    disc = np.sqrt(b * b - 4.0 * a * c)
    sign = np.where((np.conj(b) * disc).real >= 0.0, 1.0, -1.0)
    q = -0.5 * (b + sign * disc)
    root_big = q / a
    with np.errstate(invalid="ignore", divide="ignore"):
        root_small = np.where(q != 0, c / np.where(q != 0, q, 1.0), 0.0)
    return root_big, root_small


def settls_max_abs(xi_l: complex, xi_n, kappa_s: float):
    big, small = amp_settls(xi_l, xi_n, kappa_s)
    return np.maximum(np.abs(big), np.abs(small))


def settls_region(xi_l: complex, xi_n_grid) -> np.ndarray:
    """Stability mask: intersection over all kappa*s samples of |A+-| <= 1."""
    mask = np.ones(np.shape(xi_n_grid), dtype=bool)
    for ks in kappa_samples():
        mask &= settls_max_abs(xi_l, xi_n_grid, ks) <= 1.0
    return mask


# -- parallel-in-time stability functions ------------------------------------


def amp_parareal(n: int, k: int, nf: int, nc: int, a_f, a_c):
    """Parareal stability function sum_i C(n,i) S^i R^(n-i), S=Af^Nf - Ac^Nc.

    Binomial coefficients accumulate through the multiplicative term ratio
    so n = 100 stays far from overflow; terms with i > n vanish through the
    zero factor in the ratio.
    """
    if k < 0 or n < 0:
        raise ValueError("n and k must be non-negative")
    a_f = np.asarray(a_f, dtype=complex)
    a_c = np.asarray(a_c, dtype=complex)
    r = a_c**nc
    s = a_f**nf - r
    coeff = 1.0
    s_pow = np.ones_like(s)
    total = np.zeros(np.broadcast(a_f, a_c).shape, dtype=complex)
    for i in range(k + 1):
        if i > 0:
            coeff = coeff * (n - i + 1) / i
            s_pow = s_pow * s
        total = total + coeff * s_pow * r ** (n - i)
    return total


def amp_mgrit2(n: int, k: int, nf: int, nc: int, nrelax: int, a_f, a_c):
    """Two-level MGRIT stability function with F(CF)^nrelax relaxation.

    sum_{i=0}^{floor(k/(nrelax+1))} C(n - i*nrelax, i)
        * (Af^(Nf*nrelax) (Af^Nf - Ac^Nc))^i * (Ac^Nc)^(n - i(nrelax+1))

    At nrelax = 0 this is delegated to amp_parareal, to which it reduces
    exactly.
    """
    if nrelax < 0:
        raise ValueError("nrelax must be non-negative")
    if nrelax == 0:
        return amp_parareal(n, k, nf, nc, a_f, a_c)
    a_f = np.asarray(a_f, dtype=complex)
    a_c = np.asarray(a_c, dtype=complex)
    r = a_c**nc
    t = a_f ** (nf * nrelax) * (a_f**nf - r)
    i_max = k // (nrelax + 1)
    t_pow = np.ones_like(t)
    total = np.zeros(np.broadcast(a_f, a_c).shape, dtype=complex)
    for i in range(i_max + 1):
        if i > 0:
            t_pow = t_pow * t
        upper = n - i * nrelax
        if upper < i:
            continue
        coeff = 1.0
        for j in range(1, i + 1):
            coeff = coeff * (upper - i + j) / j
        total = total + coeff * t_pow * r ** (n - i * (nrelax + 1))
    return total


def parareal_recurrence(n: int, k: int, nf: int, nc: int, a_f, a_c):
    """Direct iteration of u^k_n = R u^k_{n-1} + S u^{k-1}_{n-1} (oracle).

    Broadcasts over array-valued propagator factors.
    """
    a_f = np.asarray(a_f, dtype=complex)
    a_c = np.asarray(a_c, dtype=complex)
    r = a_c**nc
    s = a_f**nf - r
    shape = np.broadcast(a_f, a_c).shape
    one = np.ones(shape, dtype=complex)
    table = np.zeros((k + 1, n + 1) + shape, dtype=complex)
    table[:, 0] = one
    for j in range(1, n + 1):
        table[0, j] = r * table[0, j - 1]
    for kk in range(1, k + 1):
        for j in range(1, n + 1):
            table[kk, j] = r * table[kk, j - 1] + s * table[kk - 1, j - 1]
    out = table[k, n]
    return out if shape else complex(out)


def mgrit2_recurrence(n: int, k: int, nf: int, nc: int, nrelax: int, a_f, a_c):
    """Direct iteration of the overlapping-Parareal recurrence (oracle).

    u^j_n = R u^j_{n-1} + (Af^((nr+1)Nf) - R Af^(nr*Nf)) u^{j-1}_{n-(nr+1)},
    with out-of-range terms zero and the closed form advancing one
    recurrence depth per (nrelax+1) iterations (j = floor(k/(nrelax+1))).
    Broadcasts over array-valued propagator factors.
    """
    a_f = np.asarray(a_f, dtype=complex)
    a_c = np.asarray(a_c, dtype=complex)
    r = a_c**nc
    s = a_f ** ((nrelax + 1) * nf) - r * a_f ** (nrelax * nf)
    depth = k // (nrelax + 1)
    shape = np.broadcast(a_f, a_c).shape
    one = np.ones(shape, dtype=complex)
    table = np.zeros((depth + 1, n + 1) + shape, dtype=complex)
    table[:, 0] = one
    for j in range(1, n + 1):
        table[0, j] = r * table[0, j - 1]
    for kk in range(1, depth + 1):
        for j in range(1, n + 1):
            back = j - (nrelax + 1)
            prev = table[kk - 1, back] if back >= 0 else 0.0
            table[kk, j] = r * table[kk, j - 1] + s * prev
    out = table[depth, n]
    return out if shape else complex(out)


# -- f-plane linear operator --------------------------------------------------


def fplane_matrix(n: int, phibar: float, f: float, radius_a: float) -> np.ndarray:
    """Per-mode linear operator on (Phi, xi, delta) with constant Coriolis."""
    eps = n * (n + 1) / radius_a**2
    return np.array([[0.0, 0.0, -phibar],
                     [0.0, 0.0, -f],
                     [eps, f, 0.0]])


def fplane_eigenvalues(n: int, phibar: float, f: float, radius_a: float):
    """Eigenvalues {0, +-i sqrt(f^2 + n(n+1) phibar / a^2)}."""
    w = np.sqrt(f * f + n * (n + 1) * phibar / radius_a**2)
    return np.array([0.0, 1j * w, -1j * w])


# -- raster scans --------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class PintQuery:
    """Parallel-in-time composite: n slices at iteration k, Nf/Nc steps/slice."""

    n: int = 100
    k: int = 5
    nf: int = 2
    nc: int = 1
    nrelax: int = 0
    fine_scheme: str = IMEX_SCHEME
    coarse_scheme: str = IMEX_SCHEME

    def __post_init__(self):
        if self.nrelax == 0 and self.n < self.k:
            raise ValueError("Parareal stability function requires n >= k")
        if self.nrelax > 0 and self.n < self.k / (self.nrelax + 1):
            raise ValueError("two-level MGRIT requires n >= k/(nrelax+1)")


@dataclasses.dataclass(frozen=True)
class StabilityQuery:
    xi_l: complex = 0.0
    scheme: str = IMEX_SCHEME
    imex_explicit_variant: str = AS_PRINTED
    pint: Optional[PintQuery] = None
    re_axis: tuple = DEFAULT_AXIS
    im_axis: tuple = DEFAULT_AXIS

    def axes(self):
        re = np.linspace(*self.re_axis)
        im = np.linspace(*self.im_axis)
        return re, im

    def grid(self):
        re, im = self.axes()
        return re[None, :] + 1j * im[:, None]


@dataclasses.dataclass
class RegionRaster:
    re_axis: np.ndarray
    im_axis: np.ndarray
    mask: np.ndarray            # mask[i, j] for (im_axis[i], re_axis[j])
    metadata: dict

    def __post_init__(self):
        if self.mask.shape != (self.im_axis.size, self.re_axis.size):
            raise ValueError("mask dimensions must match the axes")


def _serial_factors(scheme: str, xi_l: complex, xi_n, variant: str, ks: float):
    """Candidate per-step amplification factors of one serial scheme."""
    if scheme == IMEX_SCHEME:
        return [amp_imex(xi_l, xi_n, variant)]
    if scheme == SETTLS_SCHEME:
        return list(amp_settls(xi_l, xi_n, ks))
    raise ValueError(f"unknown scheme {scheme!r}")


def region_scan(query: StabilityQuery) -> RegionRaster:
    """Rasterize |A| <= 1 over the xi_N grid.

    For serial SETTLS (and for any composite involving SETTLS) the mask is
    the intersection over the 21 kappa*s samples; with two quadratic roots
    every root choice must be stable.  For parallel-in-time queries the grid
    is in coarse-step units and the fine factors are evaluated at
    xi/(Nf/Nc).
    """
    zn = query.grid()
    re, im = query.axes()
    meta = {"xi_l": (query.xi_l.real if isinstance(query.xi_l, complex)
                     else float(query.xi_l), complex(query.xi_l).imag),
            "scheme": query.scheme,
            "imex_explicit_variant": query.imex_explicit_variant,
            "pint": dataclasses.asdict(query.pint) if query.pint else None,
            "re_axis": list(query.re_axis), "im_axis": list(query.im_axis)}

    if query.pint is None:
        if query.scheme == IMEX_SCHEME:
            mask = np.abs(amp_imex(query.xi_l, zn,
                                   query.imex_explicit_variant)) <= 1.0
        else:
            mask = settls_region(query.xi_l, zn)
        return RegionRaster(re, im, mask, meta)

    p = query.pint
    ratio = p.nf / p.nc
    xi_l = complex(query.xi_l)
    needs_kappa = SETTLS_SCHEME in (p.fine_scheme, p.coarse_scheme)
    ks_list = kappa_samples() if needs_kappa else np.array([0.0])
    mask = np.ones(zn.shape, dtype=bool)
    for ks in ks_list:
        fine = _serial_factors(p.fine_scheme, xi_l / ratio, zn / ratio,
                               query.imex_explicit_variant, ks)
        coarse = _serial_factors(p.coarse_scheme, xi_l, zn,
                                 query.imex_explicit_variant, ks)
        for a_f in fine:
            for a_c in coarse:
                amp = amp_mgrit2(p.n, p.k, p.nf, p.nc, p.nrelax, a_f, a_c)
                mask &= np.abs(amp) <= 1.0
    return RegionRaster(re, im, mask, meta)
