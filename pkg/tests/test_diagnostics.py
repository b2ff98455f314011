"""Error norms, KE spectra and lossless record round trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_h

from pintswe import diagnostics
from pintswe.diagnostics import ke_spectrum, l2_error, spectral_error
from pintswe.dynamics import PrognosticState
from pintswe.ioutils import read_csv, write_csv
from pintswe.spharm import SphereGeometry, get_grid


def random_field(grid, rng):
    c = rng.standard_normal(grid.n_modes) + 1j * rng.standard_normal(grid.n_modes)
    c[:grid.M + 1] = c[:grid.M + 1].real
    return c


# ---------------------------------------------------------------------------
# spectral error
# ---------------------------------------------------------------------------


def test_spectral_error_basics():
    grid = get_grid(16)
    rng = np.random.default_rng(0)
    c = random_field(grid, rng)
    assert spectral_error(c, grid, c, grid, 8) == 0.0
    assert spectral_error(2 * c, grid, c, grid, 8) == pytest.approx(1.0)


def test_spectral_error_ignores_modes_outside_window():
    grid = get_grid(16)
    rng = np.random.default_rng(1)
    c = random_field(grid, rng)
    d = c.copy()
    rnorm = 8
    outside = grid.n_of == rnorm + 1
    d[outside] += 123.0
    assert spectral_error(d, grid, c, grid, rnorm) == 0.0


def test_spectral_error_zero_reference_raises():
    grid = get_grid(8)
    z = grid.zeros_spectral()
    with pytest.raises(ZeroDivisionError):
        spectral_error(z, grid, z, grid, 4)


def test_spectral_error_cross_truncation():
    g16, g32 = get_grid(16), get_grid(32)
    rng = np.random.default_rng(2)
    c = random_field(g16, rng)
    from pintswe.spharm import truncate_pad
    c32 = truncate_pad(c, g16, g32)
    assert spectral_error(c32, g32, c, g16, 12) == 0.0


@settings(max_examples=30, deadline=None)
@given(st_h.floats(min_value=0.1, max_value=100.0))
def test_spectral_error_scale_covariance(c_scale):
    grid = get_grid(8)
    rng = np.random.default_rng(3)
    ref = random_field(grid, rng)
    pert = random_field(grid, rng)
    base = spectral_error(ref + pert, grid, ref, grid, 6)
    scaled = spectral_error(ref + c_scale * pert, grid, ref, grid, 6)
    assert scaled == pytest.approx(c_scale * base, rel=1e-12)


# ---------------------------------------------------------------------------
# physical-space error
# ---------------------------------------------------------------------------


def test_l2_error_basics_and_double_loop_oracle():
    rng = np.random.default_rng(4)
    ref = rng.standard_normal((7, 9))
    assert l2_error(ref, ref) == 0.0
    assert l2_error(2 * ref, ref) == pytest.approx(1.0)
    vals = ref + rng.standard_normal((7, 9))
    num = 0.0
    den = 0.0
    for i in range(7):
        for j in range(9):
            num += (vals[i, j] - ref[i, j]) ** 2
            den += ref[i, j] ** 2
    oracle = np.sqrt(num / (7 * 9)) / np.sqrt(den / (7 * 9))
    assert l2_error(vals, ref) == pytest.approx(oracle, rel=1e-12)


# ---------------------------------------------------------------------------
# kinetic-energy spectrum
# ---------------------------------------------------------------------------


def test_ke_spectrum_zero_state():
    grid = get_grid(8)
    state = PrognosticState(grid, grid.zeros_spectral(), grid.zeros_spectral(),
                            grid.zeros_spectral(), 1.0)
    assert np.abs(ke_spectrum(state).energy).max() == 0.0


def test_ke_spectrum_single_mode_unit_sphere():
    geom = SphereGeometry(radius_a=1.0)
    grid = get_grid(8, geom)
    state = PrognosticState(grid, grid.zeros_spectral(), grid.zeros_spectral(),
                            grid.zeros_spectral(), 1.0)
    c = 3.0
    state.xi[grid.mode_index(0, 2)] = c
    spec = ke_spectrum(state)
    assert spec.energy[spec.n.tolist().index(2)] == pytest.approx(c**2 / 24.0)
    assert spec.wavelength[0] == pytest.approx(2 * np.pi)


def brute_force_spectrum(state):
    """Double loop over all (m, n) with explicit conjugate doubling."""
    grid = state.grid
    a = grid.geometry.radius_a
    out = np.zeros(grid.M + 1)
    for m in range(grid.M + 1):
        for n in range(m, grid.M + 1):
            idx = grid.mode_index(m, n)
            w = abs(state.xi[idx]) ** 2 + abs(state.delta[idx]) ** 2
            if m > 0:
                w *= 2.0
            out[n] += w
    n = np.arange(1, grid.M + 1)
    return 0.25 * a * a / (n * (n + 1.0)) * out[1:]


def test_ke_spectrum_matches_brute_force():
    grid = get_grid(12)
    rng = np.random.default_rng(5)
    state = PrognosticState(grid, grid.zeros_spectral(),
                            random_field(grid, rng), random_field(grid, rng),
                            1.0)
    spec = ke_spectrum(state)
    oracle = brute_force_spectrum(state)
    assert np.abs(spec.energy - oracle).max() <= 1e-12 * oracle.max()


def test_ke_spectrum_invariant_under_longitude_rotation():
    grid = get_grid(12)
    rng = np.random.default_rng(6)
    xi_g = grid.synthesis(random_field(grid, rng))
    shift = grid.nlon // 4
    state_a = PrognosticState(grid, grid.zeros_spectral(),
                              grid.analysis(xi_g), grid.zeros_spectral(), 1.0)
    state_b = PrognosticState(grid, grid.zeros_spectral(),
                              grid.analysis(np.roll(xi_g, shift, axis=1)),
                              grid.zeros_spectral(), 1.0)
    ea = ke_spectrum(state_a).energy
    eb = ke_spectrum(state_b).energy
    assert np.abs(ea - eb).max() <= 1e-12 * ea.max()


# ---------------------------------------------------------------------------
# records round trip
# ---------------------------------------------------------------------------


def test_error_records_round_trip(tmp_path):
    grid = get_grid(8)
    rng = np.random.default_rng(7)
    state = PrognosticState(grid, random_field(grid, rng),
                            random_field(grid, rng), random_field(grid, rng),
                            1.0)
    ref = PrognosticState(grid, random_field(grid, rng),
                          random_field(grid, rng), random_field(grid, rng),
                          1.0)
    recs = diagnostics.phi_error_records(3, state, "fine", ref, [4, 8],
                                         include_l2=True)
    path = tmp_path / "errors.csv"
    write_csv(path, diagnostics.ERROR_HEADER, [r.row() for r in recs])
    header, rows = read_csv(path)
    assert header == list(diagnostics.ERROR_HEADER)
    for rec, row in zip(recs, rows):
        assert int(row[0]) == rec.iteration
        assert row[1] == rec.rnorm
        assert row[2] == rec.target
        assert float(row[3]) == rec.value      # bit-identical re-parse


def test_spectrum_rows_round_trip(tmp_path):
    grid = get_grid(8)
    rng = np.random.default_rng(8)
    state = PrognosticState(grid, grid.zeros_spectral(),
                            random_field(grid, rng), random_field(grid, rng),
                            1.0)
    spec = ke_spectrum(state)
    rows = diagnostics.spectrum_rows("pint", 2, spec)
    path = tmp_path / "spectrum.csv"
    write_csv(path, diagnostics.SPECTRUM_HEADER, rows)
    _, parsed = read_csv(path)
    for row, (nn, wl, en) in zip(parsed, zip(spec.n, spec.wavelength,
                                             spec.energy)):
        assert int(row[2]) == nn
        assert float(row[3]) == wl
        assert float(row[4]) == en
