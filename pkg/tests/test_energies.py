import warnings

import numpy as np
import pytest

from capeuler.energies import (
    EnergyReport, InconsistentSnapshotsError, conserved_energy, energy_monitors, higher_energy,
    linearized_residual, rt_energy_quadratic, rt_margin, sobolev_norm_sq,
)
from capeuler.geometry import make_star_curve
from capeuler.laplace import SpectralDomain
from capeuler.solver import capillary_frequency, drop_state, simulate, SimConfig, step


def zeros(d):
    return np.zeros((2, d.n_s, d.n_theta))


def test_conserved_energy_rotation(disk):
    v = np.array([-0.7 * disk.y, 0.7 * disk.x])
    # kinetic pi omega^2 / 4 plus eps^2 times 2 pi
    assert conserved_energy(disk, v, 0.5) == pytest.approx(np.pi * 0.49 / 4 + 0.25 * 2 * np.pi, rel=1e-10)


def test_circle_at_rest_has_no_higher_energy(disk):
    r = higher_energy(disk, zeros(disk), 0.5)
    assert r.E_dtJ == pytest.approx(0, abs=1e-16)
    assert r.E_eps == pytest.approx(0, abs=1e-16)
    assert r.E_vort == 0
    assert r.E0 == pytest.approx(0.25 * 2 * np.pi)
    mon = energy_monitors(r, disk, zeros(disk), 0.5)
    assert all(np.isfinite(mon[k]) or np.isnan(mon[k]) for k in mon)
    assert mon["mon_kappa_H2"] >= 0


def test_rigid_rotation_margin_and_vorticity_norm():
    d = SpectralDomain(make_star_curve([], 1.0, 128), 32)
    v = np.array([-0.7 * d.y, 0.7 * d.x])
    assert rt_margin(d, v) == pytest.approx(-0.49, abs=1e-10)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r = higher_energy(d, v, 0.0)  # J vanishes on a circle, so no warning
    # omega = 1.4 constant: H^2 norm is |omega|^2 times the area
    assert r.E_vort == pytest.approx(1.96 * np.pi, rel=1e-10)


@pytest.mark.parametrize("k", [2, 4, 8])
def test_surface_energy_eigenrelation(k):
    a, eps = 1e-4, 0.5
    d = SpectralDomain(make_star_curve([(k, a)], 1.0, 256), 64)
    r = higher_energy(d, zeros(d), eps)
    assert r.E_eps / (eps ** 2 * np.pi * a ** 2 * k ** 4 * (k * k - 1) ** 2 / 2) == pytest.approx(1, rel=1e-3)
    assert r.E_RT == pytest.approx(0, abs=1e-20)


def test_rt_energy_two_ways():
    d = SpectralDomain(make_star_curve([(3, 0.05)], 1.0, 128), 32)
    v = np.array([np.sin(d.y), np.cos(d.x)])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        direct = higher_energy(d, v, 0.5).E_RT
    assert rt_energy_quadratic(d, v) == pytest.approx(direct, rel=1e-8)


def test_negative_margin_warns():
    d = SpectralDomain(make_star_curve([(3, 0.05)], 1.0, 64), 16)
    v = np.array([-d.y, d.x])
    with pytest.warns(RuntimeWarning):
        r = higher_energy(d, v, 0.5)
    assert r.rt_margin < 0


def test_sobolev_norm_counts_each_multi_index_once(disk):
    u = disk.x * disk.y
    # |u|^2 + |u_x|^2 + |u_y|^2 + |u_xy|^2 integrated over the unit disk
    exact = np.pi / 24 + np.pi / 4 + np.pi / 4 + np.pi
    assert sobolev_norm_sq(disk, u, 2) == pytest.approx(exact, rel=1e-10)
    assert sobolev_norm_sq(disk, np.array([u, u]), 2) == pytest.approx(2 * exact, rel=1e-10)


def test_report_totals():
    r = EnergyReport(1.0, 2.0, 3.0, 4.0, 5.0, 0.1)
    assert r.E_total == 9.0 and r.script_E == 14.0
    assert r.as_dict()["script_E"] == 14.0


def _snaps(states, n_r):
    out = []
    for s in states:
        d = s.domain(n_r)
        out.append((d, s.interior_velocity(d)))
    return out


def test_linearized_residual_is_small_relative_to_leading():
    eps, k, h = 1.0, 4, 1e-4
    st = drop_state(k, 1e-5, eps, 64)
    st = simulate(st, SimConfig(eps=eps, t_end=0.125 * 2 * np.pi / capillary_frequency(k, eps), n_r=16)).final
    s1 = step(st, h, eps, 16)
    s2 = step(s1, h, eps, 16)
    r = linearized_residual(_snaps([st, s1, s2], 16), h, eps)
    assert r.leading > 0
    assert r.ratio < 0.2


def test_linearized_residual_rejects_bad_input():
    st = drop_state(3, 1e-3, 1.0, 64)
    snaps = _snaps([st, st, st], 16)
    with pytest.raises(InconsistentSnapshotsError):
        linearized_residual(snaps[:2], 1e-3, 1.0)
    other = drop_state(3, 1e-3, 1.0, 32)
    with pytest.raises(InconsistentSnapshotsError):
        linearized_residual([snaps[0], _snaps([other], 16)[0], snaps[2]], 1e-3, 1.0)
    d, v = snaps[1]
    with pytest.raises(InconsistentSnapshotsError):
        linearized_residual([snaps[0], (d, v + np.array([1.0, 0.0])[:, None, None]), snaps[2]], 1e-3, 1.0)
