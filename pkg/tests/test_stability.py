"""Amplification factors, recurrence oracles and region rasters."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st_h

from pintswe import stability as st
from pintswe.spharm import SphereGeometry


def annulus(rng, n=1):
    mag = rng.uniform(0.3, 1.1, n)
    ph = rng.uniform(0, 2 * np.pi, n)
    z = mag * np.exp(1j * ph)
    return z if n > 1 else complex(z[0])


# ---------------------------------------------------------------------------
# serial schemes
# ---------------------------------------------------------------------------


def test_imex_explicit_variants_at_zero():
    xl = 0.5j
    implicit_sq = ((4 + xl) / (4 - xl)) ** 2
    assert st.amp_imex(xl, 0.0, "as_printed") == 0.0
    assert st.amp_imex(xl, 0.0, "heun") == pytest.approx(implicit_sq)


def test_imex_unit_modulus_for_imaginary_xi_l():
    rng = np.random.default_rng(0)
    for y in (0.1, 2.5, 6.25):
        xn = annulus(rng)
        ratio = abs(st.amp_imex(1j * y, xn)) / abs(xn * (2 + xn) / 2)
        assert abs(ratio - 1.0) < 1e-13


def test_imex_pole_raises():
    with pytest.raises(ValueError, match="pole"):
        st.amp_imex(4.0, 0.1)


def test_settls_degenerate_raises():
    with pytest.raises(ValueError, match="degenerate"):
        st.amp_settls(2.0, 0.1, 0.0)


def test_settls_roots_at_zero_forcing():
    xl = 0.3 + 0.7j
    ks = 1.3
    big, small = st.amp_settls(xl, 0.0, ks)
    expected = np.exp(-1j * ks) * (1 + xl / 2) / (1 - xl / 2)
    assert abs(big - expected) < 1e-14
    assert abs(small) == 0.0


@settings(max_examples=200, deadline=None)
@given(st_h.integers(min_value=0, max_value=2**32 - 1))
def test_settls_roots_satisfy_quadratic(seed):
    rng = np.random.default_rng(seed)
    xl, xn = annulus(rng), annulus(rng)
    ks = rng.uniform(0, 2 * np.pi)
    a = 1 - xl / 2
    phase = np.exp(-1j * ks)
    b = -(phase * (1 + xl / 2 + xn) + xn / 2)
    c = (xn / 2) * phase
    roots = st.amp_settls(xl, xn, ks)
    # Vieta: product of roots = c/a
    assert abs(roots[0] * roots[1] - c / a) < 1e-12 * max(abs(c / a), 1.0)
    for root in roots:
        res = abs(a * root * root + b * root + c)
        scale = max(abs(a * root * root), abs(b * root), abs(c), 1e-300)
        assert res < 1e-12 * scale


def test_settls_region_uses_21_samples_and_intersects():
    ks = st.kappa_samples()
    assert ks.size == 21
    assert ks[0] == 0.0
    assert ks[-1] == pytest.approx(2 * np.pi)
    assert np.allclose(np.diff(ks), np.pi / 10)
    xl = 0.2j
    grid = st.StabilityQuery(xi_l=xl, scheme="settls",
                             re_axis=(-2, 2, 41), im_axis=(-2, 2, 41)).grid()
    full = st.settls_region(xl, grid)
    for one in (0.0, np.pi / 2, np.pi):
        single = st.settls_max_abs(xl, grid, one) <= 1.0
        assert not (full & ~single).any()


def test_settls_negative_real_axis_near_zero_stable():
    q = st.StabilityQuery(xi_l=0.0, scheme="settls",
                          re_axis=(-0.3, -0.01, 30), im_axis=(0.0, 0.0, 1))
    assert st.region_scan(q).mask.all()


# ---------------------------------------------------------------------------
# parallel-in-time closed forms
# ---------------------------------------------------------------------------


def test_parareal_collapses_at_k0_and_kn():
    rng = np.random.default_rng(1)
    af, ac = annulus(rng), annulus(rng)
    n = 12
    assert st.amp_parareal(n, 0, 2, 1, af, ac) == pytest.approx(ac**n)
    full = st.amp_parareal(n, n, 2, 1, af, ac)
    assert abs(full - af ** (2 * n)) < 1e-12 * abs(af ** (2 * n))


@settings(max_examples=150, deadline=None)
@given(st_h.integers(min_value=0, max_value=2**32 - 1))
def test_closed_forms_match_recurrences(seed):
    rng = np.random.default_rng(seed)
    af, ac = annulus(rng), annulus(rng)
    k = int(rng.integers(0, 11))
    closed = st.amp_parareal(100, k, 2, 1, af, ac)
    rec = st.parareal_recurrence(100, k, 2, 1, af, ac)
    assert abs(closed - rec) <= 1e-12 * abs(rec)
    nr = int(rng.integers(1, 4))
    closed = st.amp_mgrit2(100, k, 2, 1, nr, af, ac)
    rec = st.mgrit2_recurrence(100, k, 2, 1, nr, af, ac)
    assert abs(closed - rec) <= 1e-12 * max(abs(rec), 1e-300)


def test_mgrit2_reduces_to_parareal_exactly():
    rng = np.random.default_rng(2)
    af = annulus(rng, 64)
    ac = annulus(rng, 64)
    for k in (0, 1, 5, 10):
        a = st.amp_mgrit2(100, k, 2, 1, 0, af, ac)
        b = st.amp_parareal(100, k, 2, 1, af, ac)
        assert np.array_equal(a, b)


def test_mgrit2_k0_is_coarse_power():
    rng = np.random.default_rng(3)
    af, ac = annulus(rng), annulus(rng)
    out = st.amp_mgrit2(100, 0, 2, 1, 2, af, ac)
    assert abs(out - ac**100) < 1e-12 * abs(ac**100)


# ---------------------------------------------------------------------------
# f-plane operator
# ---------------------------------------------------------------------------


def test_fplane_matrix_matches_physical_blocks():
    phibar, f, a = 1.0e5, 2 * 7.292e-5, 6371.22e3
    m = st.fplane_matrix(10, phibar, f, a)
    assert m[0, 2] == -phibar          # -phibar*delta in the Phi row
    assert m[1, 2] == -f               # -f*delta in the xi row
    assert m[2, 0] == pytest.approx(10 * 11 / a**2)   # -lap(Phi) row
    assert m[2, 1] == f


@pytest.mark.parametrize("n", [1, 10, 50, 200])
def test_fplane_eigenvalues_match_assembled_matrix(n):
    phibar, f, a = 1.0e5, 2 * 7.292e-5, 6371.22e3
    got = np.linalg.eigvals(st.fplane_matrix(n, phibar, f, a))
    want = st.fplane_eigenvalues(n, phibar, f, a)
    got_sorted = np.sort_complex(np.round(got, 16))
    want_sorted = np.sort_complex(want)
    scale = np.abs(want_sorted).max()
    assert np.abs(got_sorted - want_sorted).max() < 1e-10 * scale


def test_xi_l_tilde_formula():
    val = st.xi_l_tilde(1.0e5, SphereGeometry().radius_a)
    assert val.real == 0.0
    assert val.imag == pytest.approx(np.sqrt(1.0e5) / 6371.22e3, rel=1e-12)


# ---------------------------------------------------------------------------
# region scans
# ---------------------------------------------------------------------------


def small_axes():
    return dict(re_axis=(-3.0, 1.0, 41), im_axis=(-2.0, 2.0, 41))


def test_pint_k0_equals_serial_coarse_region():
    q_serial = st.StabilityQuery(xi_l=0.0, scheme="imex", **small_axes())
    q_pint = st.StabilityQuery(
        xi_l=0.0, scheme="imex",
        pint=st.PintQuery(n=100, k=0, nf=2, nc=1, nrelax=0,
                          fine_scheme="imex", coarse_scheme="imex"),
        **small_axes())
    serial = st.region_scan(q_serial).mask
    composite = st.region_scan(q_pint).mask
    assert np.array_equal(serial, composite)


def test_imex_serial_region_invariant_under_imaginary_xi_l():
    tilde = st.xi_l_tilde(1.0e5, SphereGeometry().radius_a)
    masks = [st.region_scan(st.StabilityQuery(xi_l=mult * tilde,
                                              scheme="imex", **small_axes())).mask
             for mult in (0.0, 1e4, 2.5e4)]
    assert np.array_equal(masks[0], masks[1])
    assert np.array_equal(masks[0], masks[2])


def test_settls_coarse_region_shrinks_with_iterations():
    """More Parareal iterations cannot be run here cheaply at full size;
    on a small raster the k=1 region with SETTLS coarse loses the imaginary
    axis near the origin, as the analysis section reports."""
    tilde = st.xi_l_tilde(1.0e5, SphereGeometry().radius_a)
    xi_l = 1e4 * tilde
    masks = {}
    for k in (0, 1):
        q = st.StabilityQuery(
            xi_l=xi_l, scheme="imex",
            pint=st.PintQuery(n=100, k=k, nf=2, nc=1, nrelax=0,
                              fine_scheme="imex", coarse_scheme="settls"),
            re_axis=(-1.0, 0.5, 31), im_axis=(-0.75, 0.75, 31))
        masks[k] = st.region_scan(q).mask
    assert masks[1].sum() <= masks[0].sum()


def test_region_raster_shape_validation():
    with pytest.raises(ValueError):
        st.RegionRaster(np.zeros(3), np.zeros(4), np.zeros((3, 4), bool), {})


def test_pint_query_validation():
    with pytest.raises(ValueError):
        st.PintQuery(n=5, k=10, nrelax=0)
