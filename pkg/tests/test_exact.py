import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from capeuler.exact import (
    CollapseError, RotatingDiskSolution, annulus_energy, annulus_initial_state, annulus_integrate,
    annulus_ode_rhs, annulus_rt_signs, annulus_swirl, annulus_velocity, annulus_vorticity, bump_profile,
    rotating_disk_verify,
)


def test_bump_support_and_smoothness():
    b = bump_profile(2.0, 0.5, 0.2)
    assert b.support == pytest.approx((0.3, 0.7))
    assert b(np.array([0.5]))[0] == pytest.approx(2.0)
    assert np.all(b(np.array([0.0, 0.3, 0.7, 1.0])) == 0)


def test_rotating_disk_pressure_oracle():
    sol = RotatingDiskSolution.bump(1.0, 0.5, 0.2)
    r = np.array([0.2, 0.45, 0.6, 1.0])
    exact = [-quad(lambda s: s * sol.profile(np.array([s]))[0] ** 2, x, 1, points=[0.3, 0.5, 0.7])[0] for x in r]
    assert np.allclose(sol.pressure(r), exact, atol=1e-12)
    assert sol.pressure(np.array([1.0]))[0] == 0.0
    # p_r = r Theta^2
    h = 1e-5
    dp = (sol.pressure(np.array([0.55 + h])) - sol.pressure(np.array([0.55 - h]))) / (2 * h)
    assert dp[0] == pytest.approx(0.55 * sol.profile(np.array([0.55]))[0] ** 2, rel=1e-8)


def test_rotating_disk_is_stationary_low_res():
    rep = rotating_disk_verify(RotatingDiskSolution.bump(1.0, 0.5, 0.2), n_theta=64, n_r=96)
    assert rep.max_residual() < 1e-6
    # no motion at the boundary: the capillary condition only sees the circle
    assert rep.normal_velocity < 1e-14


def test_lagrangian_map():
    sol = RotatingDiskSolution.bump(1.0, 0.5, 0.2)
    r, th = sol.lagrangian_map(2.0, np.array([0.5, 0.9]), np.array([0.0, 1.0]))
    assert np.allclose(r, [0.5, 0.9])
    assert np.allclose(th, [2.0, 1.0])


def test_static_annulus_rhs_vanishes():
    A1, A2, th = annulus_ode_rhs(annulus_initial_state(0.5, 1.0, 0.0))
    assert A1 == 0 and A2 == 0 and np.all(th == 0)


@given(st.floats(0.2, 0.8), st.floats(1.0, 2.0), st.floats(-1, 1))
def test_irrotational_rhs_formula(r1, r2, a1):
    _, da1, _ = annulus_ode_rhs(annulus_initial_state(r1, r2, a1))
    assert da1 == pytest.approx(0.5 * a1 ** 2 * (1 / r1 ** 2 - 1 / r2 ** 2) / np.log(r2 / r1), rel=1e-12)


def test_irrotational_energy_and_volume():
    tr = annulus_integrate(annulus_initial_state(0.5, 1.0, 0.5), 0.5, 1e-3)
    assert np.ptp(tr.E0) / tr.E0[0] < 1e-10
    assert np.ptp(tr.volume) < 1e-12
    assert np.allclose(tr.E0, np.pi * tr.a1 ** 2 * np.log(tr.r2 / tr.r1), rtol=1e-13)


@pytest.mark.parametrize("eps", [0.0, 0.3])
def test_swirl_energy_conserved(eps):
    st0 = annulus_initial_state(0.5, 1.0, 0.5, bump_profile(0.3, 0.75, 0.2))
    tr = annulus_integrate(st0, 0.5, 1e-3, eps)
    assert np.ptp(tr.E0) / tr.E0[0] < 1e-9


def test_against_reference_integrator():
    sw = bump_profile(0.3, 0.75, 0.2)
    st0 = annulus_initial_state(0.5, 1.0, 0.5, sw)

    def f(t, y):
        A, a1 = y[0], y[1]
        r1s, r2s = 0.25 + 2 * A, 1 + 2 * A
        s = quad(lambda r0: r0 * (sw(np.array([r0]))[0] * r0 ** 2 / (r0 ** 2 + 2 * A)) ** 2, 0.5, 1.0,
                 epsabs=1e-14, limit=200)[0]
        da1 = (0.5 * a1 ** 2 * (1 / r1s - 1 / r2s) + s) / (0.5 * np.log(r2s / r1s))
        return [a1, da1] + list(st0.r0 ** 2 / (st0.r0 ** 2 + 2 * A))

    ref = solve_ivp(f, (0, 0.5), [0, 0.5] + [0] * st0.r0.size, method="DOP853", rtol=1e-12, atol=1e-13)
    tr = annulus_integrate(st0, 0.5, 1e-3)
    assert abs(ref.y[0, -1] - tr.A[-1]) < 1e-8
    assert np.max(np.abs(ref.y[2:, -1] * st0.swirl0 - tr.theta1[-1])) < 1e-8
    s = tr.states[-1]
    r = np.linspace(s.r1, s.r2, 40)
    lab = np.sqrt(r ** 2 - 2 * s.A)
    assert np.max(np.abs(annulus_swirl(s, r) - lab ** 2 / r ** 2 * sw(lab))) < 1e-12


def test_velocity_and_vorticity_of_swirl():
    st0 = annulus_initial_state(0.5, 1.0, 0.2, bump_profile(0.3, 0.75, 0.2))
    x, y = np.array([0.7]), np.array([0.2])
    r = np.hypot(x, y)
    om = annulus_swirl(st0, r)
    assert np.allclose(annulus_velocity(st0, x, y), [0.2 * x / r ** 2 - om * y, 0.2 * y / r ** 2 + om * x])
    h = 1e-5
    L = lambda q: q ** 2 * annulus_swirl(st0, np.array([q]))[0]
    fd = (L(0.7 + h) - L(0.7 - h)) / (2 * h) / 0.7
    assert annulus_vorticity(st0, np.array([0.7]))[0] == pytest.approx(fd, rel=1e-6)


def test_rt_signs():
    p1, p2, m = annulus_rt_signs(annulus_initial_state(0.5, 1.0, 0.5, bump_profile(0.3, 0.75, 0.2)))
    assert p1 > 0 > p2 and m > 0
    _, _, m_strong = annulus_rt_signs(annulus_initial_state(0.5, 1.0, 0.5, bump_profile(5.0, 0.9, 0.1)))
    assert m_strong < m


def test_collapse_raises():
    st0 = annulus_initial_state(0.2, 0.5, -1.0)
    with pytest.raises(CollapseError):
        annulus_integrate(st0, 5.0, 1e-3)
    with pytest.raises(ValueError):
        annulus_initial_state(1.0, 0.5, 0.0)


def test_energy_includes_surface_term():
    st0 = annulus_initial_state(0.5, 1.0, 0.0)
    assert annulus_energy(st0, 0.5) == pytest.approx(0.25 * 2 * np.pi * 1.5)
