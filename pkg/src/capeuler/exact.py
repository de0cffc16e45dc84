"""Explicit rotating solutions used as oracles.

Two families:

* a steady swirl v = Theta(r) d/d theta on the unit disk whose pressure
  balances the centripetal term;
* an expanding or contracting annulus carrying radial flux a1 / r plus a
  swirl that conserves angular momentum particle-wise.  Its motion reduces to
  a scalar ODE for the area coordinate A with r(t)^2 = r0^2 + 2 A(t).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .fields import divergence, jacobian
from .geometry import make_star_curve
from .laplace import SpectralDomain, _clenshaw_curtis, cheb_matrix

__all__ = [
    "CollapseError",
    "bump_profile",
    "RotatingDiskSolution",
    "rotating_disk_verify",
    "AnnulusODEState",
    "AnnulusTrajectory",
    "annulus_initial_state",
    "annulus_ode_rhs",
    "annulus_integrate",
    "annulus_rt_signs",
    "annulus_energy",
    "annulus_swirl",
    "annulus_velocity",
    "annulus_vorticity",
]


class CollapseError(RuntimeError):
    """The inner radius of the annulus reached zero."""


def bump_profile(amplitude: float = 1.0, center: float = 0.5, width: float = 0.2,
                 sharpness: float = 4.0) -> Callable:
    """Compactly supported C-infinity bump amplitude * exp(c (1 - 1 / (1 - xi^2))).

    Larger ``sharpness`` c flattens the edges and speeds up spectral convergence.
    """

    def theta(r):
        xi = (np.asarray(r, dtype=float) - center) / width
        inside = np.abs(xi) < 1
        out = np.zeros_like(xi)
        out[inside] = amplitude * np.exp(sharpness * (1.0 - 1.0 / (1.0 - xi[inside] ** 2)))
        return out

    theta.support = (center - width, center + width)
    return theta


# ----- rotating disk ---------------------------------------------------

@dataclass(frozen=True)
class RotatingDiskSolution:
    """Steady swirl with angular velocity ``profile(r)`` supported in ``support``."""

    profile: Callable
    support: tuple[float, float]

    def __post_init__(self):
        lo, hi = self.support
        if not 0.0 < lo < hi < 1.0:
            raise ValueError(f"swirl support {self.support} must lie strictly inside (0, 1)")

    @classmethod
    def bump(cls, amplitude=1.0, center=0.5, width=0.2, sharpness=4.0):
        p = bump_profile(amplitude, center, width, sharpness)
        return cls(p, p.support)

    def pressure(self, r) -> np.ndarray:
        """p(r) = -int_r^1 s Theta(s)^2 ds, so that p_r = r Theta^2 and p(1) = 0."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        lo, hi = self.support

        def integrand(s):
            return s * float(self.profile(np.array([s]))[0]) ** 2

        out = np.empty(r.shape)
        for idx, ri in np.ndenumerate(r):
            a = min(max(ri, lo), hi)
            out[idx] = -quad(integrand, a, hi, epsabs=1e-15, epsrel=1e-13, limit=200)[0] if a < hi else 0.0
        return out

    def velocity(self, x, y):
        th = self.profile(np.hypot(x, y))
        return np.array([-th * y, th * x])

    def lagrangian_map(self, t, r0, theta0):
        """Particle positions (r, theta) at time t for labels (r0, theta0)."""
        return r0, theta0 + t * self.profile(r0)


@dataclass
class DiskReport:
    divergence: float
    euler: float
    boundary_pressure_spread: float
    normal_velocity: float
    rt_margin: float

    def max_residual(self) -> float:
        return max(self.divergence, self.euler, self.boundary_pressure_spread, self.normal_velocity)


def rotating_disk_verify(sol: RotatingDiskSolution, n_theta: int = 256, n_r: int = 128,
                         eps: float = 1.0) -> DiskReport:
    """Residuals of the steady Euler system for the swirl on the unit disk.

    The pressure is the quadrature oracle; the capillary boundary condition is
    checked up to an additive constant.
    """
    from .fields import rt_function

    dom = SpectralDomain(make_star_curve([], 1.0, n_theta), n_r)
    v = sol.velocity(dom.x, dom.y)
    radii = np.hypot(dom.x[:, 0], dom.y[:, 0])
    p = np.repeat(sol.pressure(radii)[:, None], n_theta, axis=1)
    adv = np.einsum("ji...,i...->j...", jacobian(dom, v), v)
    euler = adv + dom.grad(p)
    kappa = dom.geoms[0].kappa
    pb = dom.trace(p) - eps ** 2 * kappa
    vn = dom.normal_component(v)
    return DiskReport(
        divergence=float(np.max(np.abs(divergence(dom, v)))),
        euler=float(np.max(np.abs(euler))),
        boundary_pressure_spread=float(np.ptp(pb)),
        normal_velocity=float(np.max(np.abs(vn))),
        rt_margin=float(np.min(rt_function(dom, v))),
    )


# ----- expanding annulus ----------------------------------------------

@dataclass(frozen=True)
class AnnulusODEState:
    """Annulus state; ``theta1`` is the angular displacement on the label grid ``r0``."""

    t: float
    A: float
    a1: float
    theta1: np.ndarray
    r10: float
    r20: float
    r0: np.ndarray = field(repr=False)
    swirl0: np.ndarray = field(repr=False)
    swirl: Callable | None = field(default=None, repr=False, compare=False)

    @property
    def r1(self) -> float:
        return float(np.sqrt(self.r10 ** 2 + 2 * self.A))

    @property
    def r2(self) -> float:
        return float(np.sqrt(self.r20 ** 2 + 2 * self.A))


def annulus_initial_state(r10: float, r20: float, a1: float, swirl: Callable | None = None,
                          n_r0: int = 64) -> AnnulusODEState:
    if not 0 < r10 < r20:
        raise ValueError("need 0 < r10 < r20")
    r0 = r10 + (r20 - r10) * (1 - np.cos(np.pi * np.arange(n_r0 + 1) / n_r0)) / 2
    s0 = np.zeros_like(r0) if swirl is None else np.asarray(swirl(r0), dtype=float)
    return AnnulusODEState(0.0, 0.0, float(a1), np.zeros_like(r0), float(r10), float(r20), r0, s0, swirl)


def _label_weights(state):
    # Clenshaw-Curtis weights on [r10, r20] for the label grid
    return _clenshaw_curtis(state.r0.size - 1)[::-1] * (state.r20 - state.r10) / 2


def annulus_ode_rhs(state: AnnulusODEState, eps: float = 0.0):
    """(dA/dt, da1/dt, d theta1/dt) for the annulus system."""
    r1sq = state.r10 ** 2 + 2 * state.A
    if r1sq <= 0:
        raise CollapseError(f"inner radius collapsed at t={state.t}")
    r2sq = state.r20 ** 2 + 2 * state.A
    omega = state.swirl0 * state.r0 ** 2 / (state.r0 ** 2 + 2 * state.A)
    swirl_term = float(np.sum(_label_weights(state) * state.r0 * omega ** 2))
    num = (0.5 * state.a1 ** 2 * (1 / r1sq - 1 / r2sq) + swirl_term
           - eps ** 2 * (1 / np.sqrt(r1sq) + 1 / np.sqrt(r2sq)))
    return state.a1, num / (0.5 * np.log(r2sq / r1sq)), omega


@dataclass
class AnnulusTrajectory:
    t: np.ndarray
    A: np.ndarray
    a1: np.ndarray
    theta1: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    E0: np.ndarray
    states: list

    @property
    def volume(self) -> np.ndarray:
        return self.r2 ** 2 - self.r1 ** 2


def _advance(state, eps, dt):
    def shifted(s, k, h):
        return replace(s, t=s.t + h, A=state.A + h * k[0], a1=state.a1 + h * k[1],
                       theta1=state.theta1 + h * k[2])

    k1 = annulus_ode_rhs(state, eps)
    k2 = annulus_ode_rhs(shifted(state, k1, dt / 2), eps)
    k3 = annulus_ode_rhs(shifted(state, k2, dt / 2), eps)
    k4 = annulus_ode_rhs(shifted(state, k3, dt), eps)
    comb = [(a + 2 * b + 2 * c + d) / 6 for a, b, c, d in zip(k1, k2, k3, k4)]
    return shifted(state, comb, dt)


def annulus_integrate(state: AnnulusODEState, T: float, dt: float, eps: float = 0.0) -> AnnulusTrajectory:
    """Fixed-step RK4; the last step is shortened to land on T."""
    states = [state]
    while states[-1].t < T - 1e-14:
        h = min(dt, T - states[-1].t)
        states.append(_advance(states[-1], eps, h))
    return AnnulusTrajectory(
        t=np.array([s.t for s in states]),
        A=np.array([s.A for s in states]),
        a1=np.array([s.a1 for s in states]),
        theta1=np.array([s.theta1 for s in states]),
        r1=np.array([s.r1 for s in states]),
        r2=np.array([s.r2 for s in states]),
        E0=np.array([annulus_energy(s, eps) for s in states]),
        states=states,
    )


def annulus_swirl(state: AnnulusODEState, r) -> np.ndarray:
    """Angular velocity at physical radius r: conserved r^2 Theta per particle."""
    r = np.asarray(r, dtype=float)
    lab = np.sqrt(r ** 2 - 2 * state.A)
    if state.swirl is not None:
        s0 = np.asarray(state.swirl(lab), dtype=float)
    else:
        s0 = _cheb_interp(state, state.swirl0, lab)
    return s0 * lab ** 2 / r ** 2


def _cheb_interp(state, values, r0):
    from .laplace import _bary_matrix
    x = 2 * (state.r0 - state.r10) / (state.r20 - state.r10) - 1
    xq = 2 * (np.atleast_1d(r0) - state.r10) / (state.r20 - state.r10) - 1
    return (_bary_matrix(x, xq.ravel()) @ values).reshape(np.shape(r0))


def annulus_velocity(state: AnnulusODEState, x, y, swirl: Callable | None = None):
    """Cartesian velocity a1 x / r^2 + r Theta e_theta at physical points."""
    r2 = x ** 2 + y ** 2
    om = annulus_swirl(state, np.sqrt(r2)) if swirl is None else swirl(np.sqrt(r2))
    return np.array([state.a1 * x / r2 - om * y, state.a1 * y / r2 + om * x])


def annulus_vorticity(state: AnnulusODEState, r) -> np.ndarray:
    """(1/r) d/dr (r^2 Theta) at physical radius r, via the label-grid Chebyshev derivative."""
    L = state.swirl0 * state.r0 ** 2
    x = 2 * (state.r0 - state.r10) / (state.r20 - state.r10) - 1
    dL = cheb_matrix(x) @ L * 2 / (state.r20 - state.r10)
    r = np.asarray(r, dtype=float)
    lab = np.sqrt(r ** 2 - 2 * state.A)
    # d/dr = (r / r0) d/dr0
    return _cheb_interp(state, dL, lab) / lab


def annulus_energy(state: AnnulusODEState, eps: float = 0.0) -> float:
    """Kinetic energy plus eps^2 times total boundary length."""
    r1, r2 = state.r1, state.r2
    radial = np.pi * state.a1 ** 2 * np.log(r2 / r1)
    omega = state.swirl0 * state.r0 ** 2 / (state.r0 ** 2 + 2 * state.A)
    # int r^3 Theta^2 dr over physical radii, with r dr = r0 dr0
    swirl = np.pi * float(np.sum(_label_weights(state) * state.r0 * (state.r0 ** 2 + 2 * state.A) * omega ** 2))
    return float(radial + swirl + 2 * np.pi * eps ** 2 * (r1 + r2))


def annulus_rt_signs(state: AnnulusODEState):
    """Signs of d_r p_{v,v} at r1 and r2 and the Rayleigh-Taylor margin.

    p_{v,v} is the zero-trace pressure: d_r p = a1^2 / r^3 + r Theta^2 + c / r
    with c fixed by p(r1) = p(r2).  The margin is min(-p_r(r2), p_r(r1)).
    """
    r1, r2 = state.r1, state.r2
    omega = state.swirl0 * state.r0 ** 2 / (state.r0 ** 2 + 2 * state.A)
    swirl_int = float(np.sum(_label_weights(state) * state.r0 * omega ** 2))
    c = -(0.5 * state.a1 ** 2 * (1 / r1 ** 2 - 1 / r2 ** 2) + swirl_int) / np.log(r2 / r1)
    th1, th2 = annulus_swirl(state, np.array([r1, r2]))

    def pr(r, th):
        return state.a1 ** 2 / r ** 3 + r * th ** 2 + c / r

    p1, p2 = pr(r1, th1), pr(r2, th2)
    return int(np.sign(p1)), int(np.sign(p2)), float(min(-p2, p1))
