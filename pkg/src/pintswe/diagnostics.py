"""Error norms, kinetic-energy spectra and their record types.

The spectral error is the max-coefficient-magnitude ratio restricted to the
triangular window m <= R, n <= R; the physical-space error is the plain
root-mean-square ratio over the grid.  The kinetic-energy spectrum per
total wavenumber n is

    E(n) = (1/4) a^2/(n(n+1)) sum_m (|xi_{m,n}|^2 + |delta_{m,n}|^2)

with the m-sum running over -n..n, realized here by doubling the stored
m > 0 coefficients (conjugate symmetry).
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .dynamics import PrognosticState
from .spharm import SphereGrid


@dataclasses.dataclass(frozen=True)
class ErrorRecord:
    iteration: int
    rnorm: str          # wavenumber cap as digits, or "l2"
    target: str         # "fine" | "reference"
    value: float

    def row(self):
        return (self.iteration, self.rnorm, self.target, self.value)


ERROR_HEADER = ("k", "rnorm", "target", "value")


@dataclasses.dataclass
class KESpectrumRecord:
    n: np.ndarray
    wavelength: np.ndarray
    energy: np.ndarray


def _window(coeffs: np.ndarray, grid: SphereGrid, rnorm: int) -> np.ndarray:
    if rnorm < 1 or rnorm > grid.M:
        raise ValueError(f"rnorm {rnorm} outside 1..{grid.M}")
    sel = (grid.m_of <= rnorm) & (grid.n_of <= rnorm)
    return coeffs[sel]


def spectral_error(coeffs: np.ndarray, grid: SphereGrid,
                   ref_coeffs: np.ndarray, ref_grid: SphereGrid,
                   rnorm: int) -> float:
    """Relative max-coefficient error over the window m,n <= rnorm.

    The two fields may live on different truncations as long as both cover
    the window; the packed layout enumerates (m, n) identically on both.
    """
    w = _window(coeffs, grid, rnorm)
    w_ref = _window(ref_coeffs, ref_grid, rnorm)
    den = np.abs(w_ref).max()
    if den == 0.0:
        raise ZeroDivisionError("reference field vanishes on the error window")
    return float(np.abs(w - w_ref).max() / den)


def l2_error(values: np.ndarray, ref_values: np.ndarray) -> float:
    """Relative RMS error on a uniform-weight physical grid."""
    if values.shape != ref_values.shape:
        raise ValueError("grids differ in shape")
    den = np.sqrt(np.mean(ref_values**2))
    if den == 0.0:
        raise ZeroDivisionError("reference field vanishes")
    return float(np.sqrt(np.mean((values - ref_values) ** 2)) / den)


def ke_spectrum(state: PrognosticState) -> KESpectrumRecord:
    """Kinetic-energy spectrum per total wavenumber (n >= 1)."""
    grid = state.grid
    a = grid.geometry.radius_a
    mult = np.where(grid.m_of == 0, 1.0, 2.0)
    power = mult * (np.abs(state.xi) ** 2 + np.abs(state.delta) ** 2)
    per_n = np.bincount(grid.n_of, weights=power, minlength=grid.M + 1)
    n = np.arange(1, grid.M + 1)
    energy = 0.25 * a * a / (n * (n + 1.0)) * per_n[1:]
    return KESpectrumRecord(n=n, wavelength=2.0 * np.pi * a / n, energy=energy)


def spectrum_rows(series: str, iteration, record: KESpectrumRecord):
    """Rows for spectrum.csv: (series, iteration, n, wavelength_m, energy)."""
    return [(series, iteration, int(nn), float(wl), float(en))
            for nn, wl, en in zip(record.n, record.wavelength, record.energy)]


SPECTRUM_HEADER = ("series", "iteration", "n", "wavelength_m", "energy")


def phi_error_records(iteration: int, state: PrognosticState,
                      target_name: str, target: PrognosticState,
                      rnorms, include_l2: bool = False):
    """Geopotential error records of one iterate against one target.

    Cross-resolution comparisons project both states onto the common
    truncation min(M, M_target) before measuring (spectral truncation of
    the finer one).
    """
    common = state.grid if state.grid.M <= target.grid.M else target.grid
    s = state.to_truncation(common)
    t = target.to_truncation(common)
    records = []
    for rnorm in rnorms:
        val = spectral_error(s.phi, common, t.phi, common, rnorm)
        records.append(ErrorRecord(iteration, str(int(rnorm)), target_name, val))
    if include_l2:
        val = l2_error(common.synthesis(s.phi), common.synthesis(t.phi))
        records.append(ErrorRecord(iteration, "l2", target_name, val))
    return records
