"""Irrotational free-boundary time stepping with surface tension.

Each boundary is a polar graph rho(theta) about a common center and carries
the trace phi of the velocity potential.  With v = grad H(phi) on the
boundary,

    rho_t = (v . N) / (e_r . N)
    phi_t = -|v|^2 / 2 - eps^2 kappa + rho_t (e_r . v) + c(t)

where N and kappa refer to the fluid side and c(t) is a gauge constant that
removes the angular mean of phi_t on the outermost boundary.  Time stepping
is classical RK4 with a 2/3 dealiasing filter on the right-hand side.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (AnnulusShape, GeometryError, StarCurve, arclength_derivative, dealias,
                       integrate_boundary)
from .laplace import SpectralDomain

__all__ = [
    "SimulationError",
    "RTConditionError",
    "StabilityError",
    "WaveState",
    "SimConfig",
    "Trajectory",
    "drop_state",
    "annulus_state",
    "stability_dt",
    "boundary_velocity",
    "rhs",
    "step",
    "simulate",
    "conserved_energy_boundary",
    "DispersionResult",
    "dispersion_probe",
    "capillary_frequency",
    "SweepResult",
    "require_rt",
    "sweep_scenario",
    "SWEEP_SCENARIOS",
    "eps_sweep",
]


class SimulationError(RuntimeError):
    """Non-finite data or loss of the star-shaped parametrization."""


class RTConditionError(ValueError):
    """The Rayleigh-Taylor sign condition fails for the requested scenario."""


class StabilityError(ValueError):
    """Requested time step exceeds the stability bound."""


@dataclass(frozen=True)
class WaveState:
    """Boundary radii and potential traces, ordered (inner, outer) for an annulus."""

    t: float
    rho: np.ndarray
    phi: np.ndarray
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        rho = np.atleast_2d(np.asarray(self.rho, dtype=float))
        phi = np.atleast_2d(np.asarray(self.phi, dtype=float))
        if rho.shape != phi.shape or rho.shape[0] not in (1, 2):
            raise ValueError(f"rho {rho.shape} and phi {phi.shape} must both be (1, N) or (2, N)")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "phi", phi)

    @property
    def kind(self) -> str:
        return "disk" if self.rho.shape[0] == 1 else "annulus"

    @property
    def n_theta(self) -> int:
        return self.rho.shape[1]

    def shape(self):
        curves = [StarCurve.from_values(r, self.center) for r in self.rho]
        return curves[0] if len(curves) == 1 else AnnulusShape(curves[0], curves[1])

    def domain(self, n_r: int) -> SpectralDomain:
        return SpectralDomain(self.shape(), n_r)

    def interior_velocity(self, dom: SpectralDomain) -> np.ndarray:
        return dom.grad(dom.solve(f=dom.from_boundary(self.phi)))


@dataclass(frozen=True)
class SimConfig:
    eps: float
    t_end: float
    n_r: int = 64
    dt: float | None = None
    safety: float = 0.5
    record_every: int = 1
    dealias: bool = True
    drift_alarm: float | None = 1e-4


@dataclass
class Trajectory:
    states: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])

    @property
    def final(self) -> WaveState:
        return self.states[-1]


def drop_state(k: int, amplitude: float, eps: float, n_theta: int = 128, radius: float = 1.0,
               traveling: bool = False) -> WaveState:
    """Perturbed circular drop rho = R + a cos(k theta).

    With ``traveling`` the potential is set to the linear traveling-wave
    value (R a omega / k) sin(k theta), otherwise the drop starts at rest.
    """
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    rho = radius + amplitude * np.cos(k * th)
    if traveling:
        om = capillary_frequency(k, eps, radius)
        phi = radius * amplitude * om / k * np.sin(k * th)
    else:
        phi = np.zeros(n_theta)
    return WaveState(0.0, rho[None], phi[None])


def annulus_state(r1: float, r2: float, a1: float, n_theta: int = 128, outer_modes=(),
                  inner_modes=()) -> WaveState:
    """Radially expanding annulus with potential a1 log r; modes are (k, amplitude) pairs."""
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    ri = r1 + sum(a * np.cos(k * th) for k, a in inner_modes) + 0 * th
    ro = r2 + sum(a * np.cos(k * th) for k, a in outer_modes) + 0 * th
    rho = np.array([ri, ro])
    return WaveState(0.0, rho, a1 * np.log(rho))


def boundary_velocity(state: WaveState, dom: SpectralDomain) -> np.ndarray:
    """Boundary velocities (nb, 2, N) from phi via N(phi) N + phi_s T."""
    dn = dom.as_boundary(dom.normal_derivative(dom.solve(f=dom.from_boundary(state.phi))))
    out = []
    for k, (c, g) in enumerate(zip(dom.curves, dom.geoms)):
        ps = arclength_derivative(c, state.phi[k])
        out.append(dn[k] * g.normal + ps * g.tangent)
    return np.array(out)


def stability_dt(state: WaveState, eps: float, safety: float = 0.5, vmax: float | None = None) -> float:
    """Capillary bound safety * ds^(3/2) / eps combined with the advective bound safety * ds / |v|."""
    dom_curves = state.shape()
    curves = [dom_curves] if isinstance(dom_curves, StarCurve) else [dom_curves.inner, dom_curves.outer]
    ds = min(float(np.min(np.hypot(c.rho, c.drho))) * 2 * np.pi / c.n_theta for c in curves)
    bounds = []
    if eps > 0:
        bounds.append(safety * ds ** 1.5 / eps)
    if vmax is None:
        vmax = float(np.max(np.linalg.norm(boundary_velocity(state, state.domain(16)), axis=1)))
    if vmax > 0:
        bounds.append(safety * ds / vmax)
    if not bounds:
        return float("inf")
    return min(bounds)


def rhs(state: WaveState, eps: float, n_r: int, filt: bool = True):
    try:
        dom = state.domain(n_r)
    except GeometryError as exc:
        raise SimulationError(f"lost star shape at t={state.t:.6g}: {exc}") from exc
    vel = boundary_velocity(state, dom)
    drho = np.empty_like(state.rho)
    dphi = np.empty_like(state.phi)
    for k, (c, g) in enumerate(zip(dom.curves, dom.geoms)):
        er = np.array([np.cos(c.theta), np.sin(c.theta)])
        v = vel[k]
        drho[k] = np.sum(v * g.normal, 0) / np.sum(er * g.normal, 0)
        dphi[k] = -0.5 * np.sum(v * v, 0) - eps ** 2 * g.kappa + drho[k] * np.sum(er * v, 0)
    dphi -= dphi[-1].mean()
    if filt:
        drho, dphi = dealias(drho), dealias(dphi)
    return drho, dphi


def _check(state: WaveState):
    if not (np.all(np.isfinite(state.rho)) and np.all(np.isfinite(state.phi))):
        raise SimulationError(f"non-finite state at t={state.t:.6g}")
    if np.min(state.rho) <= 0 or (state.rho.shape[0] == 2 and np.any(state.rho[0] >= state.rho[1])):
        raise SimulationError(f"lost star shape at t={state.t:.6g}")


def step(state: WaveState, dt: float, eps: float, n_r: int, filt: bool = True) -> WaveState:
    """One classical RK4 step."""
    _check(state)

    def shifted(k, h):
        return replace(state, t=state.t + h, rho=state.rho + h * k[0], phi=state.phi + h * k[1])

    k1 = rhs(state, eps, n_r, filt)
    k2 = rhs(shifted(k1, dt / 2), eps, n_r, filt)
    k3 = rhs(shifted(k2, dt / 2), eps, n_r, filt)
    k4 = rhs(shifted(k3, dt), eps, n_r, filt)
    new = replace(state, t=state.t + dt,
                  rho=state.rho + dt * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]) / 6,
                  phi=state.phi + dt * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]) / 6)
    _check(new)
    return new


def simulate(state: WaveState, cfg: SimConfig, callback=None) -> Trajectory:
    """Integrate from state.t to cfg.t_end, recording every ``record_every`` steps and the final state.

    ``callback(state)`` runs on each recorded state.  A RuntimeWarning is
    issued when the relative drift of the conserved energy at a recorded
    state exceeds ``cfg.drift_alarm``.
    """
    bound = stability_dt(state, cfg.eps, cfg.safety)
    dt = bound if cfg.dt is None else cfg.dt
    if dt > bound * (1 + 1e-12):
        raise StabilityError(f"dt={dt:.3e} exceeds the stability bound {bound:.3e}")
    t0 = state.t
    span = cfg.t_end - t0
    n_steps = max(1, int(np.ceil(span / dt - 1e-9)))
    dt = span / n_steps
    e_ref = conserved_energy_boundary(state, cfg.eps) if cfg.drift_alarm else None
    traj = Trajectory([state])
    if callback:
        callback(state)
    for i in range(1, n_steps + 1):
        state = step(state, dt, cfg.eps, cfg.n_r, cfg.dealias)
        state = replace(state, t=t0 + i * dt)
        if i % cfg.record_every == 0 or i == n_steps:
            traj.states.append(state)
            if e_ref:
                drift = abs(conserved_energy_boundary(state, cfg.eps) / e_ref - 1)
                if drift > cfg.drift_alarm:
                    warnings.warn(f"energy drift {drift:.2e} at t={state.t:.6g}", RuntimeWarning, stacklevel=2)
            if callback:
                callback(state)
    return traj


def conserved_energy_boundary(state: WaveState, eps: float, dom: SpectralDomain | None = None) -> float:
    """Kinetic energy via 1/2 sum oint phi N(phi) dS plus eps^2 times total length."""
    dom = dom or state.domain(32)
    dn = dom.as_boundary(dom.normal_derivative(dom.solve(f=dom.from_boundary(state.phi))))
    kin = sum(integrate_boundary(c, state.phi[k] * dn[k]) for k, c in enumerate(dom.curves))
    return 0.5 * kin + eps ** 2 * dom.perimeter


# ----- experiments -----------------------------------------------------

def capillary_frequency(k: int, eps: float, radius: float = 1.0) -> float:
    """Linear drop frequency sqrt(eps^2 k (k^2 - 1) / R^3)."""
    return float(np.sqrt(eps ** 2 * k * (k * k - 1) / radius ** 3))


@dataclass
class DispersionResult:
    k: int
    measured: float
    predicted: float
    harmonic_content: float = 0.0

    @property
    def rel_error(self) -> float:
        if self.predicted == 0:
            return abs(self.measured)
        return abs(self.measured - self.predicted) / self.predicted

    @property
    def nonlinear(self) -> bool:
        """Energy outside mode k exceeds 5% of the mode-k amplitude."""
        return self.harmonic_content > 0.05


def dispersion_probe(k: int, eps: float = 1.0, radius: float = 1.0, amplitude: float = 1e-5,
                     n_theta: int = 64, n_r: int = 24, periods: float = 1.0,
                     steps_per_period: int = 60, duration: float = 1.0) -> DispersionResult:
    """Measure the angular phase speed of a small traveling wave on a drop.

    The frequency is the least-squares slope of the unwrapped phase of the
    k-th Fourier coefficient of rho.  The predicted value only sets the run
    length and step size; with eps = 0 the run lasts ``duration``.
    """
    if amplitude > 1e-2:
        raise ValueError("amplitude must be <= 1e-2 for a linear-regime probe")
    state = drop_state(k, amplitude, eps, n_theta, radius, traveling=True)
    om = capillary_frequency(k, eps, radius)
    T = periods * 2 * np.pi / om if om > 0 else duration
    dt = stability_dt(state, eps, vmax=0.0 if om == 0 else None)
    if om > 0:
        dt = min(dt, T / (periods * steps_per_period))
    else:
        dt = min(dt, T / steps_per_period)
    n = int(np.ceil(T / dt))
    dt = T / n
    ts, phases = [0.0], [np.angle(np.fft.rfft(state.rho[0])[k])]
    for i in range(n):
        state = step(state, dt, eps, n_r)
        ts.append((i + 1) * dt)
        phases.append(np.angle(np.fft.rfft(state.rho[0])[k]))
    ph = np.unwrap(phases)
    slope = np.polyfit(ts, ph, 1)[0]
    spec = np.abs(np.fft.rfft(state.rho[0]))
    spec[0] = 0.0
    main = spec[k]
    spec[k] = 0.0
    # rho_k ~ exp(-i omega t) for cos(k theta - omega t)
    return DispersionResult(k, float(-slope), om, float(spec.max() / main) if main > 0 else float("inf"))


@dataclass
class SweepResult:
    """d(eps) against the eps = 0 run; ``min_margin[0]`` belongs to that reference run."""

    eps: list
    distance: list
    cauchy: list
    min_margin: list
    finals: list = field(default_factory=list, repr=False)

    @property
    def valid(self) -> bool:
        return all(m > 0 for m in self.min_margin)

    @property
    def strictly_decreasing(self) -> bool:
        return all(a > b for a, b in zip(self.distance, self.distance[1:]))


def _sweep_distance(a: WaveState, b: WaveState) -> float:
    """Discrete L2(d theta) distance of the boundary radii."""
    return float(np.sqrt(2 * np.pi / a.n_theta * np.sum((a.rho - b.rho) ** 2)))


def require_rt(domain: SpectralDomain, v) -> float:
    """Return the Rayleigh-Taylor margin, raising RTConditionError unless it is positive."""
    from .energies import rt_margin

    m = rt_margin(domain, v)
    if not m > 0:
        raise RTConditionError(f"Rayleigh-Taylor margin {m:.3e} is not positive")
    return m


SWEEP_SCENARIOS = ("expanding-annulus", "rigid-rotation")


def sweep_scenario(name: str, n_theta: int = 128, n_r: int = 32):
    """(domain, velocity, WaveState or None) for a named sweep scenario.

    ``expanding-annulus``: radii 0.5 and 1, flux coefficient 0.5, mode-3
    amplitude 1e-3 on the outer boundary.  ``rigid-rotation``: unit disk in
    solid-body rotation with unit angular velocity; it has no potential, so no
    WaveState exists for it.
    """
    if name == "expanding-annulus":
        st = annulus_state(0.5, 1.0, 0.5, n_theta, outer_modes=[(3, 1e-3)])
        dom = st.domain(n_r)
        return dom, st.interior_velocity(dom), st
    if name == "rigid-rotation":
        from .geometry import make_star_curve
        dom = SpectralDomain(make_star_curve([], 1.0, n_theta), n_r)
        return dom, np.array([-dom.y, dom.x]), None
    raise ValueError(f"unknown sweep scenario {name!r}; choose from {SWEEP_SCENARIOS}")


def eps_sweep(scenario: str | WaveState, eps_values, t_end: float = 0.25, n_theta: int = 128, n_r: int = 32,
              dt: float | None = None, margin_every: int = 5) -> SweepResult:
    """Run one initial state for eps = 0 and each eps; report final-state distances d(eps).

    Refuses with RTConditionError when the initial Rayleigh-Taylor margin is
    not positive.
    """
    if isinstance(scenario, str):
        dom0, v0, state = sweep_scenario(scenario, n_theta, n_r)
    else:
        state = scenario
        dom0 = state.domain(n_r)
        v0 = state.interior_velocity(dom0)
    m0 = require_rt(dom0, v0)
    if state is None:
        raise ValueError("scenario has no irrotational representation")
    from .energies import rt_margin

    eps_values = list(eps_values)
    if dt is None:
        dt = min(stability_dt(state, e) for e in eps_values + [0.0])

    def run(e):
        low = [m0]
        count = [0]

        def cb(s):
            count[0] += 1
            if count[0] % margin_every == 0 or s.t >= t_end - 1e-12:
                d = s.domain(n_r)
                low.append(rt_margin(d, s.interior_velocity(d)))

        traj = simulate(state, SimConfig(eps=e, t_end=t_end, n_r=n_r, dt=dt), cb)
        return traj.final, min(low)

    ref, mref = run(0.0)
    dist, margins, finals = [], [mref], [ref]
    for e in eps_values:
        fin, m = run(e)
        dist.append(_sweep_distance(fin, ref))
        margins.append(m)
        finals.append(fin)
    cauchy = [_sweep_distance(a, b) for a, b in zip(finals[1:], finals[2:])]
    return SweepResult(eps_values, dist, cauchy, margins, finals)
