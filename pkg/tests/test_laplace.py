import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capeuler.geometry import AnnulusShape, ellipse_curve, make_star_curve
from capeuler.laplace import (
    DomainError, SpectralDomain, cheb_matrix, dirichlet_neumann, dn_inverse, gmres,
    harmonic_extension, poisson_zero_dirichlet,
)


def harmonic_poly(k, x, y):
    z = (x + 1j * y) ** k
    dz = k * (x + 1j * y) ** (k - 1)
    return np.real(z), np.array([np.real(dz), -np.imag(dz)])


@pytest.mark.parametrize("k", [1, 5, 20])
def test_dn_of_disk_modes(disk, k):
    f = np.cos(k * disk.theta)
    assert np.max(np.abs(dirichlet_neumann(disk, f) - k * f)) < 1e-9 * k


@pytest.mark.parametrize("a,b", [(1.2, 1.0), (1.5, 1.0), (2.0, 1.0)])
@pytest.mark.parametrize("k", [1, 3, 8])
def test_dn_of_harmonic_polynomials_on_ellipses(a, b, k):
    d = SpectralDomain(ellipse_curve(a, b, 128), 32)
    X, Y = d.curves[0].points
    f, grad = harmonic_poly(k, X, Y)
    exact = np.sum(grad * d.geoms[0].normal, 0)
    assert np.max(np.abs(dirichlet_neumann(d, f) - exact)) < 1e-7 * np.max(np.abs(exact))


def test_harmonic_extension_reproduces_interior(ellipse):
    f = np.real((ellipse.x + 1j * ellipse.y) ** 3)
    U = harmonic_extension(ellipse, ellipse.trace(f))
    assert np.max(np.abs(U - f)) < 1e-10
    assert np.max(np.abs(ellipse.laplacian(U)[1:])) < 1e-8


def test_poisson_on_disk(disk):
    U = poisson_zero_dirichlet(disk, 4 * np.ones((disk.n_s, disk.n_theta)))
    assert np.max(np.abs(U - (disk.x ** 2 + disk.y ** 2 - 1))) < 1e-11


def test_annulus_log_and_poisson(annulus):
    th, r = annulus.theta, np.hypot(annulus.x, annulus.y)
    U = harmonic_extension(annulus, np.array([0 * th, 1 + 0 * th]))
    assert np.max(np.abs(U - np.log(r) / np.log(2))) < 1e-11
    U = poisson_zero_dirichlet(annulus, np.ones((annulus.n_s, annulus.n_theta)))
    c = -0.75 / np.log(2)
    assert np.max(np.abs(U - (r ** 2 / 4 + c * np.log(r) - 0.25))) < 1e-11


def test_annulus_dn_mode_one(annulus):
    # u = A r + B / r with u(1) = 0, u(2) = cos: outward DN on both sides
    th = annulus.theta
    dn = dirichlet_neumann(annulus, np.array([0 * th, np.cos(th)]))
    assert np.max(np.abs(dn[1] - 5 / 6 * np.cos(th))) < 1e-10
    assert np.max(np.abs(dn[0] + 4 / 3 * np.cos(th))) < 1e-10


def test_dn_inverse_round_trip(annulus):
    th = annulus.theta
    f = np.array([np.cos(3 * th), 0.5 * np.sin(2 * th)])
    f = f - annulus.boundary_integral(f) / annulus.perimeter
    g = dn_inverse(annulus, dirichlet_neumann(annulus, f))
    assert np.max(np.abs(g - f)) < 1e-9
    with pytest.raises(ValueError):
        dn_inverse(annulus, np.ones((2, annulus.n_theta)))


def test_quadrature(ellipse):
    assert ellipse.area == pytest.approx(np.pi * 1.2, rel=1e-12)
    assert ellipse.integrate(ellipse.x ** 2) == pytest.approx(np.pi * 1.2 ** 3 / 4, rel=1e-11)


@given(st.floats(-0.9, 0.9), st.floats(0, 2 * np.pi))
def test_interpolation_is_spectral(r, t):
    d = SpectralDomain(ellipse_curve(1.2, 1.0, 64), 16)
    x, y = np.array([r * np.cos(t)]), np.array([0.9 * r * np.sin(t)])
    f = np.real((d.x + 1j * d.y) ** 3) + d.x * d.y
    exact = np.real((x + 1j * y) ** 3) + x * y
    assert np.allclose(d.interpolate(f, x, y), exact, atol=1e-11)


@given(st.integers(0, 2 ** 31))
def test_green_identity(seed):
    # int |grad H f|^2 = boundary integral of f N f
    d = SpectralDomain(make_star_curve([(3, 0.1)], 1.0, 64), 16)
    rng = np.random.default_rng(seed)
    k = np.arange(1, 7)[:, None]
    f = (rng.standard_normal((6, 1)) * np.cos(k * d.theta) / k ** 2).sum(0)
    U = harmonic_extension(d, f)
    lhs = d.integrate(np.sum(d.grad(U) ** 2, 0))
    rhs = d.boundary_integral(f * d.as_boundary(d.normal_derivative(U)))
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_cheb_matrix_differentiates_polynomials():
    x = np.cos(np.pi * np.arange(9) / 8)
    D = cheb_matrix(x)
    assert np.allclose(D @ x ** 5, 5 * x ** 4, atol=1e-12)
    assert np.allclose(cheb_matrix(x[::-1]) @ x[::-1] ** 3, 3 * x[::-1] ** 2, atol=1e-12)


def test_gmres_small_system():
    rng = np.random.default_rng(0)
    A = np.eye(20) * 4 + rng.standard_normal((20, 20)) * 0.3
    b = rng.standard_normal(20)
    x, rel, _ = gmres(lambda u: A @ u, lambda u: u, b)
    assert rel < 1e-12
    assert np.allclose(A @ x, b, atol=1e-10)


def test_domain_errors():
    with pytest.raises(DomainError):
        SpectralDomain(make_star_curve([], 1.0, 64), 2)
    with pytest.raises(DomainError):
        SpectralDomain("circle", 16)
    d = SpectralDomain(make_star_curve([], 1.0, 64), 8)
    with pytest.raises(DomainError):
        d.as_boundary(np.ones(32))
