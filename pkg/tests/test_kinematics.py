import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from capeuler import kinematics as K
from capeuler.fields import boundary_curvature, curvature_force_J, divergence
from capeuler.geometry import fourier_diff, make_star_curve
from capeuler.laplace import SpectralDomain

SMOOTH_F = (lambda x, y: 1 + x ** 2 - x * y + 0.3 * y ** 3,
            lambda x, y: (2 * x - y, -x + 0.9 * y ** 2))


@pytest.fixture(scope="module")
def shear():
    fam = K.standard_family("ellipse-shear", 128, 32)
    dom = fam.domain_at(0.0)
    return fam, fam.snapshot(0.0, dom)


def curvature_q(d, p):
    return K.boundary_sample(d, boundary_curvature(d), p)


def test_expanding_circle_closed_forms():
    fam = K.standard_family("expanding-circle", 64, 16)
    snap = fam.snapshot()
    # unit radial speed on the unit circle: kappa = 1/R decreases at rate 1
    for form in (1, 2):
        assert np.allclose(K.dt_curvature(snap, form), -1.0, atol=1e-10)
    assert np.allclose(K.dt_surface_measure(snap), 1.0, atol=1e-10)
    assert np.allclose(K.dt_normal(snap), 0.0, atol=1e-10)


def test_rigid_rotation_closed_forms():
    fam = K.standard_family("rigid-rotation", 64, 16)
    snap = fam.snapshot()
    dom = snap.domain
    T = dom.geoms[0].tangent
    assert np.allclose(K.dt_normal(snap), T, atol=1e-10)
    assert np.allclose(K.dt_curvature(snap), 0.0, atol=1e-10)
    assert np.allclose(K.dt_surface_measure(snap), 0.0, atol=1e-10)


@given(st.integers(2, 4), st.floats(0.01, 0.05), st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_curvature_forms_agree(k, amp, m):
    # the two expressions for D_t kappa coincide for any smooth velocity
    d = SpectralDomain(make_star_curve([(k, amp)], 1.0, 128), 8)
    v = np.array([m[0] * d.x + m[1] * d.y + m[4] * d.x * d.y,
                  m[2] * d.x + m[3] * d.y + m[5] * d.y ** 2])
    snap = K.FlowSnapshot(d, v)
    assert np.allclose(K.dt_curvature(snap, 1), K.dt_curvature(snap, 2), atol=1e-8)


def test_dt2_curvature_needs_acceleration(disk):
    with pytest.raises(ValueError):
        K.dt2_curvature(K.FlowSnapshot(disk, np.zeros((2, disk.n_s, disk.n_theta))))


def test_dt2_split_adds_up(shear):
    _, snap = shear
    lead, rem = K.dt2_curvature_split(snap, 0.3)
    assert np.allclose(lead + rem, K.dt2_curvature(snap), atol=1e-12)


def test_covariant_dt_J_is_divergence_free(shear):
    _, snap = shear
    W = K.covariant_dt_J(snap)
    scale = np.max(np.abs(W))
    assert np.max(np.abs(divergence(snap.domain, W))) < 1e-6 * scale


@pytest.mark.parametrize("name,quantity,exact,derivative,step", [
    ("dt_normal", lambda d, p: np.array([K.boundary_sample(d, d.geoms[0].normal[i], p) for i in range(2)]),
     lambda s: K.dt_normal(s), 1, 2e-3),
    ("dt_surface_measure", lambda d, p: np.log(np.linalg.norm(fourier_diff(p), axis=0)),
     lambda s: K.dt_surface_measure(s), 1, 2e-3),
    ("dt_curvature_1", curvature_q, lambda s: K.dt_curvature(s, 1), 1, 2e-3),
    ("dt_curvature_2", curvature_q, lambda s: K.dt_curvature(s, 2), 1, 2e-3),
    ("dt2_curvature", curvature_q, lambda s: K.dt2_curvature(s), 2, 5e-3),
])
def test_boundary_evaluators_match_flow(shear, name, quantity, exact, derivative, step):
    fam, snap = shear
    fd = K.flow_fd(fam, quantity, 0.0, step, derivative=derivative)
    ex = exact(snap)
    assert fd.errors(ex)[-1] < 1e-5
    assert fd.observed_order(ex) >= 1.9


def test_dt_J_matches_flow(shear):
    fam, snap = shear
    fd = K.flow_fd(fam, lambda d, p: np.array([d.interpolate(c, p[0], p[1]) for c in curvature_force_J(d)]),
                   0.0, 2e-3, where="interior")
    ex = K.dt_J(snap)[:, 1:].reshape(2, -1)
    assert fd.errors(ex)[-1] < 1e-5
    assert fd.observed_order(ex) >= 1.9


@pytest.mark.parametrize("family", ["ellipse-shear", "ellipse-bandlimited"])
@pytest.mark.parametrize("which", ["H", "N", "surface_laplace", "inv_laplace"])
def test_commutators(family, which):
    fam = K.standard_family(family, 128, 32)
    F, G = SMOOTH_F if which == "inv_laplace" else K.angular_mode(3)
    err, order, _ = K.commutator_residual(fam, which, F, G, 0.0, 2e-3)
    assert err < 1e-5
    assert order >= 1.9


def test_commutators_vanish_without_motion():
    fam = K.standard_family("stationary", 64, 16)
    snap = fam.snapshot()
    F, G = K.angular_mode(2)
    for which in ("H", "N", "surface_laplace"):
        assert np.max(np.abs(K.commutator_rhs(snap, which, F, G))) < 1e-10


def test_fd_estimate_zero_handling():
    fd = K.FDEstimate([1e-3, 5e-4], [np.full(3, 1e-13), np.full(3, 1e-14)])
    assert fd.errors(np.zeros(3)) == [1e-13, 1e-14]
    assert fd.observed_order(np.zeros(3)) == float("inf")
    fd = K.FDEstimate([1e-3, 5e-4], [np.full(3, 2.04), np.full(3, 2.01)])
    assert fd.observed_order(np.full(3, 2.0)) == pytest.approx(2.0, abs=1e-9)


@given(st.floats(0, 2 * np.pi), st.integers(2, 6), st.floats(0.01, 0.2))
def test_resample_polar_round_trip(shift, k, amp):
    c = make_star_curve([(k, amp)], 1.0, 64, center=(0.1, 0.2))
    # same curve, labels shifted in angle
    th = c.theta + 0.3 * np.sin(c.theta + shift)
    r = c.eval_rho(th)
    pts = np.array([0.1 + r * np.cos(th), 0.2 + r * np.sin(th)])
    assert np.allclose(K.resample_polar(pts, c.center).rho, c.rho, atol=1e-10)


def test_unknown_family_and_commutator():
    with pytest.raises(ValueError):
        K.standard_family("swirl")
    fam = K.standard_family("stationary", 64, 16)
    with pytest.raises(ValueError):
        K.commutator_rhs(fam.snapshot(), "curl", *K.angular_mode(2))
