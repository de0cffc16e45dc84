"""Conserved and higher-order energies, the Rayleigh-Taylor margin and run monitors."""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .fields import (curvature_force_J, inner, op_A, op_R0, pressure_bilinear, rt_function,
                     vorticity)
from .geometry import arclength_derivative, boundary_norm, integrate_boundary
from .kinematics import FlowSnapshot, covariant_dt_J
from .laplace import SpectralDomain

__all__ = [
    "EnergyReport",
    "InconsistentSnapshotsError",
    "conserved_energy",
    "higher_energy",
    "rt_margin",
    "rt_energy_quadratic",
    "sobolev_norm_sq",
    "energy_monitors",
    "linearized_residual",
    "LinearizedResidual",
]


class InconsistentSnapshotsError(ValueError):
    pass


@dataclass
class EnergyReport:
    E0: float
    E_dtJ: float
    E_eps: float
    E_vort: float
    E_RT: float
    rt_margin: float

    @property
    def E_total(self) -> float:
        return self.E_dtJ + self.E_eps + self.E_vort

    @property
    def script_E(self) -> float:
        return self.E_total + self.E_RT

    def as_dict(self) -> dict:
        d = asdict(self)
        d["E_total"] = self.E_total
        d["script_E"] = self.script_E
        return d


def conserved_energy(domain: SpectralDomain, v, eps: float) -> float:
    """Kinetic energy plus eps^2 times total boundary length."""
    return 0.5 * inner(domain, v, v) + eps ** 2 * domain.perimeter


def rt_margin(domain: SpectralDomain, v, q=None) -> float:
    """Minimum over the boundary of -d_N p_{v,v}."""
    if q is None:
        q = rt_function(domain, v)
    return float(np.min(q))


def sobolev_norm_sq(domain: SpectralDomain, u, order: int) -> float:
    """Sum over multi-indices |alpha| <= order of ||d^alpha u||^2 (components summed)."""
    u = np.asarray(u, dtype=float)
    total = 0.0
    for c in (u if u.ndim == 3 else u[None]):
        # level j holds d_x^(j-i) d_y^i c for i = 0..j
        level = [c]
        total += domain.integrate(c * c)
        for _ in range(order):
            level = [domain.grad(level[0])[0]] + [domain.grad(f)[1] for f in level]
            total += sum(domain.integrate(f * f) for f in level)
    return float(total)


def higher_energy(domain: SpectralDomain, v, eps: float, J=None) -> EnergyReport:
    if J is None:
        J = curvature_force_J(domain)
    q = rt_function(domain, v)
    dtj = covariant_dt_J(FlowSnapshot(domain, v), J)
    Jn = domain.as_boundary(domain.normal_component(J))
    e_eps = 0.0
    e_rt = 0.0
    qb = domain.as_boundary(q)
    for k, c in enumerate(domain.curves):
        e_eps += 0.5 * eps ** 2 * _boundary_integral(domain, k, arclength_derivative(c, Jn[k]) ** 2)
        e_rt += 0.5 * _boundary_integral(domain, k, qb[k] * Jn[k] ** 2)
    margin = float(np.min(qb))
    if margin < 0 and np.max(np.abs(Jn)) > 1e-10:
        warnings.warn(f"Rayleigh-Taylor margin {margin:.3e} < 0; E_RT is negative", RuntimeWarning,
                      stacklevel=2)
    return EnergyReport(
        E0=conserved_energy(domain, v, eps),
        E_dtJ=0.5 * inner(domain, dtj, dtj),
        E_eps=float(e_eps),
        E_vort=sobolev_norm_sq(domain, vorticity(domain, v), 2),
        E_RT=float(e_rt),
        rt_margin=margin,
    )


def _boundary_integral(domain, k, f):
    return integrate_boundary(domain.curves[k], f)


def rt_energy_quadratic(domain: SpectralDomain, v, J=None) -> float:
    """E_RT as the interior pairing 1/2 <R0(v) J, J>."""
    if J is None:
        J = curvature_force_J(domain)
    return 0.5 * inner(domain, op_R0(domain, v, J), J)


def energy_monitors(report: EnergyReport, domain: SpectralDomain, v, eps: float) -> dict:
    """Ratios of controlled norms to energy expressions; bounded along well-posed runs."""
    kap_h2 = sum(boundary_norm(c, g.kappa, 2) ** 2 for c, g in zip(domain.curves, domain.geoms))
    out = {
        "mon_kappa_H2": eps ** 2 * kap_h2 / (3 * report.E_total + eps ** 2) if eps > 0 else float("nan"),
        "mon_v_H3": sobolev_norm_sq(domain, v, 3) / (report.E_total + report.E0 + 1),
        "mon_kappa_H1": float("nan"),
    }
    if report.rt_margin > 0:
        kap_h1 = sum(boundary_norm(c, g.kappa, 1) ** 2 for c, g in zip(domain.curves, domain.geoms))
        out["mon_kappa_H1"] = kap_h1 / (report.E_RT + 1)
    return out


@dataclass
class LinearizedResidual:
    residual: float
    leading: float

    @property
    def ratio(self) -> float:
        return self.residual / self.leading if self.leading > 0 else float(self.residual)


def linearized_residual(snaps, dt: float, eps: float) -> LinearizedResidual:
    """Normal-trace size of D_t^2 J + R0(v) J + eps^2 A J from three snapshots.

    ``snaps`` is a sequence of (domain, v) at t - dt, t, t + dt.  The
    covariant derivative W = D_t J + grad p_{v,J} is differenced in time at
    fixed polar angle; the tangential slip of grid nodes against particles is
    corrected with (v - rho_t e_r).T d_s W, and grad p_{v,W} is added.
    """
    if len(snaps) != 3:
        raise InconsistentSnapshotsError("need exactly three snapshots")
    doms = [s[0] for s in snaps]
    if len({(d.kind, d.n_theta, d.n_s) for d in doms}) != 1:
        raise InconsistentSnapshotsError("snapshots use different grids")
    if not all(np.allclose(d.center, doms[0].center) for d in doms):
        raise InconsistentSnapshotsError("snapshots use different centers")
    Ws = []
    for d, v in snaps:
        Ws.append(covariant_dt_J(FlowSnapshot(d, v)))
    dom, v = snaps[1]
    J = curvature_force_J(dom)
    res = []
    lead = []
    aj = _normal_trace(dom, op_A(dom, J))
    rj = _normal_trace(dom, op_R0(dom, v, J))
    W = Ws[1]
    pw = dom.normal_derivative(pressure_bilinear(dom, v, W))
    pw = dom.as_boundary(pw)
    for k, (row, c, g) in enumerate(zip(dom.boundary_rows, dom.curves, dom.geoms)):
        rho_t = (doms[2].curves[k].rho - doms[0].curves[k].rho) / (2 * dt)
        er = np.array([np.cos(c.theta), np.sin(c.theta)])
        vb = v[:, row]
        vn_geom = rho_t * np.sum(er * g.normal, 0)
        vn = np.sum(vb * g.normal, 0)
        scale = max(np.max(np.abs(vb)), 1e-12)
        if np.max(np.abs(vn_geom - vn)) > 1e-2 * scale + 1e-8:
            raise InconsistentSnapshotsError("boundary motion does not match the velocity field")
        slip = np.sum((vb - rho_t * er) * g.tangent, 0)
        wt = (Ws[2][:, row] - Ws[0][:, row]) / (2 * dt)
        dW = wt + slip * arclength_derivative(c, W[:, row])
        d2J_n = np.sum(dW * g.normal, 0) + pw[k]
        r = d2J_n + rj[k] + eps ** 2 * aj[k]
        res.append(_boundary_integral(dom, k, r ** 2))
        lead.append(_boundary_integral(dom, k, (eps ** 2 * aj[k]) ** 2))
    return LinearizedResidual(float(np.sqrt(sum(res))), float(np.sqrt(sum(lead))))


def _normal_trace(dom, V):
    return dom.as_boundary(dom.normal_component(V))
