"""Vector-field operators on a SpectralDomain.

Vector fields are arrays of shape (2, n_s, n_theta) holding Cartesian
components.  Jacobians have shape (2, 2, n_s, n_theta) with
``jac[j, i] = d v^j / d x^i``.
"""

from __future__ import annotations

import numpy as np

from .geometry import arclength_derivative
from .geometry import surface_laplacian as _curve_laplacian
from .laplace import SpectralDomain, dn_inverse

__all__ = [
    "jacobian",
    "divergence",
    "vorticity",
    "inner",
    "l2_norm",
    "divergence_residual",
    "boundary_laplacian",
    "boundary_d_s",
    "boundary_curvature",
    "normal_trace",
    "pressure_bilinear",
    "curvature_force_J",
    "rt_function",
    "op_A",
    "op_A_trace",
    "op_R0",
    "op_R0_trace",
    "hodge_decompose",
    "rotational_split",
]


def jacobian(domain: SpectralDomain, v) -> np.ndarray:
    return np.array([domain.grad(v[0]), domain.grad(v[1])])


def divergence(domain: SpectralDomain, v) -> np.ndarray:
    return domain.grad(v[0])[0] + domain.grad(v[1])[1]


def vorticity(domain: SpectralDomain, v) -> np.ndarray:
    return domain.grad(v[1])[0] - domain.grad(v[0])[1]


def inner(domain: SpectralDomain, u, w) -> float:
    """L2(domain) pairing of scalars or vector fields."""
    prod = np.asarray(u) * np.asarray(w)
    if prod.ndim == 3:
        prod = prod.sum(axis=0)
    return domain.integrate(prod)


def l2_norm(domain: SpectralDomain, u) -> float:
    return float(np.sqrt(max(inner(domain, u, u), 0.0)))


def divergence_residual(domain: SpectralDomain, v) -> float:
    """Relative H^-1 size of div v: sqrt(<div v, -inv_lap div v>) / ||v||."""
    d = divergence(domain, v)
    q = domain.solve(g=d)
    val = max(-inner(domain, d, q), 0.0)
    scale = l2_norm(domain, v)
    return float(np.sqrt(val) / scale) if scale > 0 else float(np.sqrt(val))


def _per_boundary(domain: SpectralDomain, f, op):
    fb = domain.as_boundary(f)
    return domain.from_boundary(np.array([op(c, fi) for c, fi in zip(domain.curves, fb)]))


def boundary_laplacian(domain: SpectralDomain, f) -> np.ndarray:
    return _per_boundary(domain, f, _curve_laplacian)


def boundary_d_s(domain: SpectralDomain, f) -> np.ndarray:
    """Arclength derivative along the counterclockwise tangent of each curve."""
    return _per_boundary(domain, f, arclength_derivative)


def boundary_curvature(domain: SpectralDomain) -> np.ndarray:
    return domain.from_boundary(np.array([g.kappa for g in domain.geoms]))


def normal_trace(domain: SpectralDomain, w) -> np.ndarray:
    """Normal trace of a vector field, or pass-through for boundary data."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 3 and w.shape[0] == 2 and w.shape[1] == domain.n_s:
        return domain.normal_component(w)
    return domain.from_boundary(domain.as_boundary(w))


def pressure_bilinear(domain: SpectralDomain, v, w) -> np.ndarray:
    """p with -Laplace p = tr(Dv Dw) and zero boundary trace."""
    jv, jw = jacobian(domain, v), jacobian(domain, w)
    tr = np.einsum("ji...,ij...->...", jv, jw)
    return domain.solve(g=-tr)


def curvature_force_J(domain: SpectralDomain) -> np.ndarray:
    return domain.grad(domain.solve(f=boundary_curvature(domain)))


def rt_function(domain: SpectralDomain, v) -> np.ndarray:
    """-grad_N p_{v,v} on the boundary."""
    return -domain.normal_derivative(pressure_bilinear(domain, v, v))


def op_A_trace(domain: SpectralDomain, w) -> np.ndarray:
    wp = normal_trace(domain, w)
    return domain.normal_derivative(domain.solve(f=-boundary_laplacian(domain, wp)))


def op_A(domain: SpectralDomain, w) -> np.ndarray:
    wp = normal_trace(domain, w)
    return domain.grad(domain.solve(f=-boundary_laplacian(domain, wp)))


def op_R0(domain: SpectralDomain, v, w, q=None) -> np.ndarray:
    if q is None:
        q = rt_function(domain, v)
    return domain.grad(domain.solve(f=q * normal_trace(domain, w)))


def op_R0_trace(domain: SpectralDomain, v, w, q=None) -> np.ndarray:
    if q is None:
        q = rt_function(domain, v)
    return domain.normal_derivative(domain.solve(f=q * normal_trace(domain, w)))


def hodge_decompose(domain: SpectralDomain, u):
    """Return (v, p) with u = v - grad p, div v = 0 and p = 0 on the boundary."""
    p = domain.solve(g=-divergence(domain, u))
    return np.asarray(u) + domain.grad(p), p


def rotational_split(domain: SpectralDomain, v):
    """Return (v_r, v_ir) with v_ir = grad H N^-1 (v.N) and v_r = v - v_ir."""
    vn = domain.as_boundary(normal_trace(domain, v))
    # absorb the small discrete flux imbalance so the inverse is well posed
    vn = vn - domain.boundary_integral(vn) / domain.perimeter
    phi = dn_inverse(domain, domain.from_boundary(vn))
    v_ir = domain.grad(domain.solve(f=phi))
    return np.asarray(v) - v_ir, v_ir
