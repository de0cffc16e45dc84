"""Material derivatives of boundary and interior quantities.

Evaluators consume one instantaneous snapshot (domain, v, optionally D_t v)
and return the material derivative predicted by closed-form identities.
``flow_fd`` independently measures the same derivatives by advecting
particles with an analytic velocity field and recomputing quantities on the
moved domain.

Notation on each boundary: T is the counterclockwise unit tangent, N the
outward fluid normal, subscript s the arclength derivative, a = v_s.T and
b = v_s.N.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fields import (boundary_curvature, boundary_laplacian, curvature_force_J, jacobian,
                     pressure_bilinear)
from .geometry import StarCurve, arclength_derivative, fourier_diff, fourier_eval, make_star_curve, \
    ellipse_curve
from .laplace import SpectralDomain

__all__ = [
    "FlowSnapshot",
    "FlowFamily",
    "FDEstimate",
    "InconsistentFamilyError",
    "dt_normal",
    "dt_surface_measure",
    "dt_curvature",
    "dt2_curvature",
    "dt2_curvature_split",
    "dt_J",
    "covariant_dt_J",
    "commutator_rhs",
    "commutator_residual",
    "flow_fd",
    "angular_mode",
    "boundary_sample",
    "resample_polar",
    "standard_family",
]


class InconsistentFamilyError(RuntimeError):
    pass


@dataclass
class FlowSnapshot:
    domain: SpectralDomain
    v: np.ndarray
    accel: np.ndarray | None = None


@dataclass
class _Frame:
    T: np.ndarray
    N: np.ndarray
    kappa: np.ndarray
    vb: np.ndarray
    vs: np.ndarray
    vss: np.ndarray
    a: np.ndarray
    b: np.ndarray
    curve: StarCurve


def _frames(snap: FlowSnapshot):
    dom = snap.domain
    out = []
    for row, g, c in zip(dom.boundary_rows, dom.geoms, dom.curves):
        vb = snap.v[:, row]
        vs = arclength_derivative(c, vb)
        vss = arclength_derivative(c, vs)
        out.append(_Frame(g.tangent, g.normal, g.kappa, vb, vs, vss,
                          np.sum(vs * g.tangent, 0), np.sum(vs * g.normal, 0), c))
    return out


def _pack(dom, values):
    return dom.from_boundary(np.array(values))


def dt_normal(snap: FlowSnapshot) -> np.ndarray:
    """D_t N = -(v_s . N) T, shape (2, n) per boundary."""
    return _pack(snap.domain, [-f.b * f.T for f in _frames(snap)])


def dt_surface_measure(snap: FlowSnapshot) -> np.ndarray:
    """Rate factor of the arclength element: D_t dS = (v_s . T) dS."""
    return _pack(snap.domain, [f.a for f in _frames(snap)])


def dt_curvature(snap: FlowSnapshot, form: int = 2) -> np.ndarray:
    """Material derivative of the curvature.

    form 1: -v_ss.N - 2 kappa (v_s.T)
    form 2: -d_ss v_perp - kappa^2 v_perp + kappa_s v_tan
    """
    vals = []
    for f in _frames(snap):
        if form == 1:
            vals.append(-np.sum(f.vss * f.N, 0) - 2 * f.kappa * f.a)
        else:
            vp = np.sum(f.vb * f.N, 0)
            vt = np.sum(f.vb * f.T, 0)
            ks = arclength_derivative(f.curve, f.kappa)
            vals.append(-arclength_derivative(f.curve, vp, 2) - f.kappa ** 2 * vp + ks * vt)
    return _pack(snap.domain, vals)


def _accel_frames(snap):
    if snap.accel is None:
        raise ValueError("second material derivative of curvature needs the acceleration D_t v")
    dom = snap.domain
    out = []
    for row, f in zip(dom.boundary_rows, _frames(snap)):
        A = snap.accel[:, row]
        As = arclength_derivative(f.curve, A)
        out.append((f, As, arclength_derivative(f.curve, As)))
    return out


def dt2_curvature(snap: FlowSnapshot) -> np.ndarray:
    """Second material derivative of the curvature from boundary traces of v and D_t v."""
    vals = []
    for f, As, Ass in _accel_frames(snap):
        vals.append(-np.sum(Ass * f.N, 0) + 4 * f.a * np.sum(f.vss * f.N, 0)
                    + 2 * f.b * np.sum(f.vss * f.T, 0) - 3 * f.kappa * f.b ** 2
                    + 6 * f.kappa * f.a ** 2 - 2 * f.kappa * np.sum(As * f.T, 0))
    return _pack(snap.domain, vals)


def dt2_curvature_split(snap: FlowSnapshot, eps: float):
    """Split D_t^2 kappa into its leading part and the lower-order remainder.

    leading = -N . d_ss(D_t v) + 2 eps^2 kappa (J_s . T); returns (leading, remainder).
    """
    total = snap.domain.as_boundary(dt2_curvature(snap))
    J = curvature_force_J(snap.domain)
    lead = []
    for row, (f, As, Ass) in zip(snap.domain.boundary_rows, _accel_frames(snap)):
        Js = arclength_derivative(f.curve, J[:, row])
        lead.append(-np.sum(Ass * f.N, 0) + 2 * eps ** 2 * f.kappa * np.sum(Js * f.T, 0))
    lead = np.array(lead)
    return snap.domain.from_boundary(lead), snap.domain.from_boundary(total - lead)


def _hessian_terms(dom, v, u):
    """2 Dv . D^2 u + grad u . Laplace v for scalar u."""
    gu = dom.grad(u)
    hess = jacobian(dom, gu)
    dv = jacobian(dom, v)
    lap_v = np.array([dom.laplacian(v[0]), dom.laplacian(v[1])])
    return 2 * np.einsum("ji...,ij...->...", dv, hess) + np.sum(gu * lap_v, 0)


def dt_J(snap: FlowSnapshot) -> np.ndarray:
    """Material derivative of J = grad H(kappa) from instantaneous data."""
    dom, v = snap.domain, snap.v
    kh = dom.solve(f=boundary_curvature(dom))
    J = dom.grad(kh)
    dk = dt_curvature(snap, form=2)
    dkh = dom.solve(g=_hessian_terms(dom, v, kh), f=dk)
    dv = jacobian(dom, v)
    return dom.grad(dkh) - np.einsum("ji...,j...->i...", dv, J)


def covariant_dt_J(snap: FlowSnapshot, J=None) -> np.ndarray:
    """Divergence-free part D_t J + grad p_{v,J}."""
    dom = snap.domain
    if J is None:
        J = curvature_force_J(dom)
    return dt_J(snap) + dom.grad(pressure_bilinear(dom, snap.v, J))


# ----- commutators -----------------------------------------------------

def _boundary_values(dom, F):
    return dom.from_boundary(np.array([F(*c.points) for c in dom.curves]))


def _boundary_dt(dom, v, gradF):
    """D_t f = v . grad F on the boundary for a time-independent ambient F."""
    vals = []
    for row, c in zip(dom.boundary_rows, dom.curves):
        gx, gy = gradF(*c.points)
        vals.append(v[0, row] * gx + v[1, row] * gy)
    return dom.from_boundary(np.array(vals))


def commutator_rhs(snap: FlowSnapshot, which: str, F, gradF):
    """Closed-form D_t(Op f) for f given by an ambient function F.

    Returns a boundary array for ``N`` and ``surface_laplace`` and an
    interior field for ``H`` and ``inv_laplace``.
    """
    dom, v = snap.domain, snap.v
    if which == "inv_laplace":
        g = F(dom.x, dom.y)
        gx, gy = gradF(dom.x, dom.y)
        w = dom.solve(g=g)
        return dom.solve(g=v[0] * gx + v[1] * gy + _hessian_terms(dom, v, w))
    f = _boundary_values(dom, F)
    dtf = _boundary_dt(dom, v, gradF)
    if which == "surface_laplace":
        vals = []
        for fr, fi, dfi in zip(_frames(snap), dom.as_boundary(f), dom.as_boundary(dtf)):
            fs = arclength_derivative(fr.curve, fi)
            fss = arclength_derivative(fr.curve, fs)
            vals.append(arclength_derivative(fr.curve, dfi, 2) - 2 * fr.a * fss
                        - fs * np.sum(fr.vss * fr.T, 0) + fr.kappa * fs * fr.b)
        return dom.from_boundary(np.array(vals))
    u = dom.solve(f=f)
    extra = dom.solve(g=_hessian_terms(dom, v, u))
    if which == "H":
        return dom.solve(f=dtf) + extra
    if which == "N":
        gu = dom.grad(u)
        dv = jacobian(dom, v)
        vals = []
        base = dom.as_boundary(dom.normal_derivative(dom.solve(f=dtf) + extra))
        for k, (row, fr, fi) in enumerate(zip(dom.boundary_rows, _frames(snap), dom.as_boundary(f))):
            dnv = np.einsum("ji...,i...->j...", dv[:, :, row], fr.N)
            fs = arclength_derivative(fr.curve, fi)
            vals.append(base[k] - np.sum(gu[:, row] * dnv, 0) - fs * fr.b)
        return dom.from_boundary(np.array(vals))
    raise ValueError(f"unknown commutator {which!r}")


def _op_value(which, F):
    """Quantity (domain, points) -> values for the LHS of a commutator."""
    def q(dom, pts):
        if which == "inv_laplace":
            return dom.interpolate(dom.solve(g=F(dom.x, dom.y)), pts[0], pts[1])
        f = _boundary_values(dom, F)
        if which == "H":
            return dom.interpolate(dom.solve(f=f), pts[0], pts[1])
        if which == "N":
            return boundary_sample(dom, dom.normal_derivative(dom.solve(f=f)), pts)
        if which == "surface_laplace":
            return boundary_sample(dom, boundary_laplacian(dom, f), pts)
        raise ValueError(f"unknown commutator {which!r}")
    return q


def boundary_sample(dom, values, pts):
    """Evaluate boundary data of a disk domain at boundary points ``pts``."""
    th = np.arctan2(pts[1] - dom.center[1], pts[0] - dom.center[0])
    return fourier_eval(dom.as_boundary(values)[0], th)


def angular_mode(k: int, center=(0.0, 0.0)):
    """Ambient extension F = cos(k * polar angle) and its gradient."""
    cx, cy = center

    def F(x, y):
        return np.cos(k * np.arctan2(y - cy, x - cx))

    def gradF(x, y):
        dx, dy = x - cx, y - cy
        r2 = dx ** 2 + dy ** 2
        fac = -k * np.sin(k * np.arctan2(dy, dx)) / r2
        return fac * (-dy), fac * dx

    return F, gradF


# ----- flow families and the finite-difference oracle ------------------

@dataclass
class FlowFamily:
    """Domain moving with a steady analytic velocity field.

    ``velocity(x, y)`` returns (vx, vy); ``velocity_jacobian(x, y)`` returns
    the 2x2 nested tuple d v^j / d x^i used to form D_t v = (Dv) v.
    """

    name: str
    initial: StarCurve
    velocity: Callable
    velocity_jacobian: Callable | None = None
    n_r: int = 64
    _cache: dict = field(default_factory=dict, repr=False)

    def advect(self, pts, h, substeps=None):
        pts = np.array(pts, dtype=float)
        n = substeps or max(2, int(np.ceil(abs(h) / 2.5e-4)))
        dt = h / n

        def f(p):
            return np.array(self.velocity(p[0], p[1]))

        for _ in range(n):
            k1 = f(pts)
            k2 = f(pts + 0.5 * dt * k1)
            k3 = f(pts + 0.5 * dt * k2)
            k4 = f(pts + dt * k3)
            pts = pts + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        return pts

    def curve_at(self, t: float) -> StarCurve:
        if t == 0.0:
            return self.initial
        key = round(t, 15)
        if key not in self._cache:
            pts = self.advect(self.initial.points, t)
            self._cache[key] = resample_polar(pts, self.initial.center)
        return self._cache[key]

    def domain_at(self, t: float) -> SpectralDomain:
        return SpectralDomain(self.curve_at(t), self.n_r)

    def snapshot(self, t: float = 0.0, domain=None) -> FlowSnapshot:
        dom = domain or self.domain_at(t)
        v = np.array(self.velocity(dom.x, dom.y))
        acc = None
        if self.velocity_jacobian is not None:
            jac = self.velocity_jacobian(dom.x, dom.y)
            acc = np.array([jac[j][0] * v[0] + jac[j][1] * v[1] for j in range(2)])
        return FlowSnapshot(dom, v, acc)


def resample_polar(pts, center, iterations=30) -> StarCurve:
    """StarCurve through closed-curve samples ``pts`` (periodic in their label)."""
    pts = np.asarray(pts, dtype=float)
    n = pts.shape[1]
    c = np.asarray(center, dtype=float)[:, None]
    rel = pts - c
    target = 2 * np.pi * np.arange(n) / n
    # labels are uniform in [0, 2 pi); one fixed-point step on the angular drift
    drift = np.unwrap(np.arctan2(rel[1], rel[0])) - target
    drift -= 2 * np.pi * np.round(drift.mean() / (2 * np.pi))
    tt = target - drift
    drel = fourier_diff(rel, 1)
    for _ in range(iterations):
        p = fourier_eval(rel, tt)
        dp = fourier_eval(drel, tt)
        ang = np.arctan2(p[1], p[0])
        res = np.angle(np.exp(1j * (ang - target)))
        dang = (p[0] * dp[1] - p[1] * dp[0]) / (p[0] ** 2 + p[1] ** 2)
        step = res / dang
        tt = tt - step
        if np.max(np.abs(step)) < 1e-15:
            break
    p = fourier_eval(rel, tt)
    return StarCurve.from_values(np.hypot(p[0], p[1]), tuple(c[:, 0]))


@dataclass
class FDEstimate:
    """Centered finite-difference estimates at step sizes dts (coarse to fine)."""

    dts: list
    estimates: list
    self_order: float | None = None

    @property
    def finest(self):
        return self.estimates[-1]

    def errors(self, exact, zero_tol: float = 1e-10) -> list:
        """Relative max-norm errors; absolute when ``exact`` is identically ~0."""
        exact = np.asarray(exact)
        scale = np.max(np.abs(exact))
        scale = 1.0 if scale < zero_tol else scale
        return [float(np.max(np.abs(e - exact)) / scale) for e in self.estimates]

    def observed_order(self, exact, floor: float = 1e-11) -> float:
        """Order from the two finest levels; inf when both errors sit below ``floor``."""
        e = self.errors(exact)
        if e[-1] < floor and e[-2] < floor:
            return float("inf")
        return float(np.log2(e[-2] / max(e[-1], 1e-300)))


def flow_fd(family: FlowFamily, quantity, t: float = 0.0, dt: float = 1e-3, where: str = "boundary",
            derivative: int = 1, levels: int = 2, check: bool = True) -> FDEstimate:
    """Centered difference of ``quantity(domain, points)`` along particle paths.

    Particles start at boundary nodes (``where="boundary"``) or interior
    collocation nodes (``"interior"``) of the domain at time t.
    """
    dom0 = family.domain_at(t)
    if where == "boundary":
        start = dom0.curves[0].points
    else:
        start = np.array([dom0.x[1:].ravel(), dom0.y[1:].ravel()])
    q0 = quantity(dom0, start) if derivative == 2 else None
    if check:
        _check_family(family, dom0, t, dt)
    dts, ests = [], []
    h = dt
    for _ in range(levels + (1 if levels >= 2 else 0)):
        vals = []
        for sgn in (1.0, -1.0):
            pts_b = family.advect(dom0.curves[0].points, sgn * h)
            dom = SpectralDomain(resample_polar(pts_b, dom0.center), family.n_r)
            pts = pts_b if where == "boundary" else family.advect(start, sgn * h)
            vals.append(quantity(dom, pts))
        if derivative == 1:
            ests.append((vals[0] - vals[1]) / (2 * h))
        else:
            ests.append((vals[0] - 2 * q0 + vals[1]) / h ** 2)
        dts.append(h)
        h /= 2
    order = None
    if len(ests) >= 3:
        d1 = np.max(np.abs(ests[0] - ests[1]))
        d2 = np.max(np.abs(ests[1] - ests[2]))
        order = float(np.log2(d1 / d2)) if d2 > 0 and d1 > 0 else float("inf")
    return FDEstimate(dts[:levels], ests[:levels], order)


def _check_family(family, dom0, t, dt, tol=1e-6):
    """The boundary must move with normal speed v.N."""
    curve = dom0.curves[0]
    g = dom0.geoms[0]
    h = dt
    rp = family.advect(curve.points, h)
    rm = family.advect(curve.points, -h)
    cp = resample_polar(rp, curve.center).rho
    cm = resample_polar(rm, curve.center).rho
    rho_t = (cp - cm) / (2 * h)
    er = np.array([np.cos(curve.theta), np.sin(curve.theta)])
    vn_curve = rho_t * np.sum(er * g.normal, 0)
    vb = np.array(family.velocity(*curve.points))
    vn = np.sum(vb * g.normal, 0)
    scale = max(np.max(np.abs(vb)), 1e-12)
    mismatch = np.max(np.abs(vn_curve - vn)) / scale
    if mismatch > max(tol, 10 * h ** 2 * 1e2):
        raise InconsistentFamilyError(f"boundary normal speed differs from v.N by {mismatch:.2e}")


def standard_family(name: str, n_theta: int = 256, n_r: int = 64) -> FlowFamily:
    """Named analytic test families used by the identity suite."""
    if name == "ellipse-shear":
        return FlowFamily(name, ellipse_curve(1.2, 1.0, n_theta), lambda x, y: (y, 0 * x),
                          lambda x, y: ((0 * x, 1 + 0 * x), (0 * x, 0 * x)), n_r)
    if name == "ellipse-bandlimited":
        # stream function psi = 0.3 sin(x + 0.3) sin(y - 0.2) + 0.2 x y; v = (psi_y, -psi_x)
        A, c = 0.3, 0.2

        def vel(x, y):
            return (A * np.sin(x + 0.3) * np.cos(y - 0.2) + c * x,
                    -A * np.cos(x + 0.3) * np.sin(y - 0.2) - c * y)

        def jac(x, y):
            return ((A * np.cos(x + 0.3) * np.cos(y - 0.2) + c, -A * np.sin(x + 0.3) * np.sin(y - 0.2)),
                    (A * np.sin(x + 0.3) * np.sin(y - 0.2), -A * np.cos(x + 0.3) * np.cos(y - 0.2) - c))
        return FlowFamily(name, ellipse_curve(1.2, 1.0, n_theta), vel, jac, n_r)
    if name == "rigid-rotation":
        return FlowFamily(name, make_star_curve([], 1.0, n_theta), lambda x, y: (-y, x),
                          lambda x, y: ((0 * x, -1 + 0 * x), (1 + 0 * x, 0 * x)), n_r)
    if name == "expanding-circle":
        def vel(x, y):
            r = np.hypot(x, y)
            return x / r, y / r
        return FlowFamily(name, make_star_curve([], 1.0, n_theta), vel, None, n_r)
    if name == "stationary":
        return FlowFamily(name, ellipse_curve(1.2, 1.0, n_theta), lambda x, y: (0 * x, 0 * y),
                          lambda x, y: ((0 * x, 0 * x), (0 * x, 0 * x)), n_r)
    raise ValueError(f"unknown flow family {name!r}")


def commutator_residual(family: FlowFamily, which: str, F, gradF, t: float = 0.0, dt: float = 1e-3):
    """Compare the flow-FD commutator with its closed form.

    Returns (relative error at the finest step, observed order, FDEstimate).
    """
    dom = family.domain_at(t)
    snap = family.snapshot(t, dom)
    rhs = commutator_rhs(snap, which, F, gradF)
    where = "interior" if which in ("H", "inv_laplace") else "boundary"
    fd = flow_fd(family, _op_value(which, F), t, dt, where=where)
    exact = rhs[1:].ravel() if where == "interior" else dom.as_boundary(rhs)[0]
    return fd.errors(exact)[-1], fd.observed_order(exact), fd
