import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capeuler.geometry import ellipse_curve, make_star_curve
from capeuler.identities import (
    dn_square_residual, energy_identity_residual, product_rule_residual, sqrt_laplacian_gap,
)
from capeuler.laplace import SpectralDomain


def band(rng, th, kmax=6):
    k = np.arange(1, kmax + 1)[:, None]
    return ((rng.standard_normal((kmax, 1)) * np.cos(k * th)
             + rng.standard_normal((kmax, 1)) * np.sin(k * th)) / k).sum(0)


@given(st.integers(0, 2 ** 31))
def test_product_rule(ellipse, seed):
    rng = np.random.default_rng(seed)
    th = ellipse.theta
    assert product_rule_residual(ellipse, band(rng, th), band(rng, th)) < 1e-8


@given(st.integers(0, 2 ** 31))
def test_dn_square(ellipse, seed):
    rng = np.random.default_rng(seed)
    assert dn_square_residual(ellipse, band(rng, ellipse.theta)) < 1e-7


@given(st.integers(0, 2 ** 31))
def test_energy_identity(ellipse, seed):
    rng = np.random.default_rng(seed)
    assert energy_identity_residual(ellipse, band(rng, ellipse.theta)) < 1e-9


def test_dn_square_needs_single_boundary(annulus):
    with pytest.raises(ValueError):
        dn_square_residual(annulus, np.cos(annulus.theta))


def test_sqrt_laplacian_gap_vanishes_on_circle():
    d = SpectralDomain(make_star_curve([], 1.0, 64), 16)
    gap, norm = sqrt_laplacian_gap(d, np.cos(5 * d.theta))
    assert gap < 1e-10 * norm


def test_sqrt_laplacian_gap_bounded_on_ellipse():
    d = SpectralDomain(ellipse_curve(1.2, 1.0, 128), 32)
    gaps, ratios = [], []
    for k in (2, 4, 8, 16, 32):
        gap, norm = sqrt_laplacian_gap(d, np.cos(k * d.theta))
        gaps.append(gap)
        ratios.append(gap / norm)
    # each term grows like k while the difference stays bounded
    assert max(gaps) < 1.0
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
