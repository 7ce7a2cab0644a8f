import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from afbm.exceptions import DomainError, SingularInputError
from afbm.kernels import (
    HurstIndex,
    build_contour,
    c_alpha,
    cov_halfplane,
    cov_realline,
    cov_Y,
    cross_cov_re_im,
    deriv_cov_halfplane,
    deriv_cov_Y,
    var_Y_increment,
)

alphas = st.floats(0.05, 0.95)
upper = st.complex_numbers(max_magnitude=3.0).map(lambda z: complex(z.real, abs(z.imag)))


def test_hurst_index_validation():
    assert HurstIndex(0.3).alpha == 0.3
    for bad in (0.0, 1.0, 1.2, -0.1, True, "0.3"):
        with pytest.raises(DomainError):
            HurstIndex(bad)


def test_c_alpha_values():
    assert c_alpha(0.25) == pytest.approx(0.25 * 0.5 / (2 * np.cos(np.pi / 4)), rel=1e-14)
    assert c_alpha(0.5) == pytest.approx(1 / (2 * np.pi), rel=1e-14)
    assert c_alpha(0.75) == pytest.approx(0.75 * -0.5 / (2 * np.cos(0.75 * np.pi)), rel=1e-14)


@given(alphas)
def test_c_alpha_matches_literal_formula_away_from_half(a):
    if abs(a - 0.5) > 1e-3:
        assert c_alpha(a) == pytest.approx(a * (1 - 2 * a) / (2 * np.cos(np.pi * a)), rel=1e-10)


def test_deriv_cov_at_i():
    # -i(i - conj(i)) = 2, so the value is c_alpha 2^(2 alpha - 2)
    assert deriv_cov_halfplane(1j, 1j, 0.25) == pytest.approx(c_alpha(0.25) * 2 ** (-1.5), rel=1e-14)


def test_deriv_cov_errors():
    with pytest.raises(SingularInputError):
        deriv_cov_halfplane(1.0, 1.0, 0.3)
    with pytest.raises(DomainError):
        deriv_cov_halfplane(-1j, 1j, 0.3)


@pytest.mark.parametrize(
    "s,t,a,expected",
    [
        # literal real-line formula evaluated with mpmath at 30 digits
        (-1.0, 2.0, 0.25, 0.17054068870105443882 + 0.17054068870105443882j),
        (0.5, 1.5, 0.75, 0.29766767442016433396 - 0.12089097912352745286j),
        (1.0, -0.3, 0.4, 0.037033446722660899459 - 0.1139772293031903197j),
        (2.0, 2.0, 0.3, 0.75785828325519902951),
    ],
)
def test_cov_realline_frozen(s, t, a, expected):
    assert cov_realline(s, t, a) == pytest.approx(expected, rel=1e-13)
    assert cov_halfplane(s, t, a) == pytest.approx(expected, rel=1e-13)


def test_cov_halfplane_frozen_interior():
    # double integral of the derivative kernel from 0 to z and 0 to w (mpmath quadrature)
    val = cov_halfplane(0.4 + 0.7j, -0.5 + 0.2j, 0.3)
    assert val == pytest.approx(0.139487060078294 - 0.0835520757613254j, rel=1e-12)


@given(alphas, upper, upper)
def test_cov_halfplane_hermitian(a, z, w):
    assert np.isclose(cov_halfplane(z, w, a), np.conj(cov_halfplane(w, z, a)), rtol=1e-10, atol=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_cov_realline_continuous_through_half(s, t):
    lo = cov_realline(s, t, 0.5 - 2e-4)
    mid = cov_realline(s, t, 0.5)
    hi = cov_realline(s, t, 0.5 + 2e-4)
    assert np.isclose(lo, mid, atol=5e-3) and np.isclose(hi, mid, atol=5e-3)
    assert np.isclose(0.5 * (lo + hi), mid, atol=1e-6)


@given(alphas, st.floats(0.01, 5.0))
def test_real_part_has_fbm_variance(a, t):
    # Var(2 Re G_t) = 2 E|G_t|^2 because the pseudo-covariance vanishes
    assert 2 * cov_realline(t, t, a).real == pytest.approx(t ** (2 * a), rel=1e-10)


def test_cross_cov_matches_imaginary_part():
    for s, t, a in [(-1.0, 1.0, 0.25), (0.3, 2.0, 0.6), (1.5, 0.5, 0.8)]:
        assert cross_cov_re_im(s, t, a) == pytest.approx(-0.5 * cov_realline(s, t, a).imag, rel=1e-12)
    assert cross_cov_re_im(-1.0, 1.0, 0.25) == pytest.approx(-0.07322330470336313, rel=1e-12)


@settings(max_examples=25)
@given(alphas, st.lists(upper, min_size=2, max_size=6))
def test_covariance_matrix_psd(a, pts):
    pts = np.array(pts)
    cov = cov_halfplane(pts[:, None], pts[None, :], a)
    ev = np.linalg.eigvalsh(0.5 * (cov + cov.conj().T))
    assert ev.min() > -1e-9 * max(1.0, ev.max())


def test_Y_kernels_frozen():
    # mpmath double integrals of the derivative kernel
    assert var_Y_increment(0.5, 1.0, 0.3) == pytest.approx(0.0074713585029907765068, rel=1e-12)
    assert cov_Y(0.7, 1.3, 0.3) == pytest.approx(0.0982742496848743, rel=1e-12)


@pytest.mark.parametrize("a", [0.25, 0.5, 0.75])
def test_var_Y_increment_against_quadrature(a):
    val, _ = integrate.dblquad(lambda y, x: deriv_cov_Y(x, y, a), 0.2, 1.1, 0.2, 1.1, epsabs=1e-13)
    assert var_Y_increment(0.2, 1.1, a) == pytest.approx(val, rel=1e-9)
    expected = (2 - 2 ** (2 * a)) / (8 * np.cos(np.pi * a)) if a != 0.5 else np.log(2) / (2 * np.pi)
    assert var_Y_increment(0.0, 1.0, a) == pytest.approx(expected, rel=1e-12)


def test_Y_domain_errors():
    with pytest.raises(DomainError):
        deriv_cov_Y(0.0, 1.0, 0.3)
    with pytest.raises(DomainError):
        cov_Y(-1.0, 1.0, 0.3)
    with pytest.raises(DomainError):
        var_Y_increment(1.0, 0.5, 0.3)


def test_contour_shapes():
    c = build_contour(0.0, 1.0)
    assert len(c.segments) == 3 and c.start == 0 and c.end == 1
    assert np.allclose(c.vertices, [0, 1j, 1 + 1j, 1])
    straight = build_contour(0.0, 0.2 + 1j)
    assert len(straight.segments) == 1
    assert build_contour(0.5j, 0.5j).is_degenerate
    with pytest.raises(DomainError):
        build_contour(-1j, 1.0)


@given(upper, upper)
def test_contour_stays_in_upper_half_plane(s, t):
    c = build_contour(s, t)
    x = np.linspace(0, 1, 101)
    z = c(x)
    assert np.all(np.imag(z) >= -1e-12)
    assert np.isclose(c(0.0), s) and np.isclose(c(1.0), t)


def test_contour_stopped():
    c = build_contour(0.0, 3.0)
    half = c.stopped(0.5)
    assert half.end == pytest.approx(c(0.5))
    assert np.allclose(half(np.linspace(0, 0.5, 7)), c(np.linspace(0, 0.5, 7)))
