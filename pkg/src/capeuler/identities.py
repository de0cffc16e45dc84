"""Residuals of Dirichlet-Neumann identities used as solver self-checks.

Each function returns a relative residual (max norm over the boundary,
scaled by the largest term) so callers can compare it with a tolerance.
"""

from __future__ import annotations

import numpy as np

from .fields import boundary_d_s, jacobian
from .geometry import surface_laplacian, surface_sqrt_laplacian
from .laplace import SpectralDomain

__all__ = ["product_rule_residual", "dn_square_residual", "sqrt_laplacian_gap", "energy_identity_residual"]


def _rel(res, *terms):
    scale = max(float(np.max(np.abs(t))) for t in terms)
    return float(np.max(np.abs(res)) / scale) if scale > 0 else float(np.max(np.abs(res)))


def _dn(dom, f):
    return dom.normal_derivative(dom.solve(f=f))


def product_rule_residual(dom: SpectralDomain, f, g) -> float:
    """N(fg) - f N(g) - g N(f) + 2 d_N inv_lap(grad f_H . grad g_H)."""
    gf = dom.grad(dom.solve(f=f))
    gg = dom.grad(dom.solve(f=g))
    corr = 2 * dom.normal_derivative(dom.solve(g=np.sum(gf * gg, 0)))
    lhs = _dn(dom, f * g)
    rhs = f * _dn(dom, g) + g * _dn(dom, f)
    return _rel(lhs - rhs + corr, lhs, rhs, corr)


def dn_square_residual(dom: SpectralDomain, f) -> float:
    """Check (-Delta_b - N^2) f = kappa N f + 2 d_N inv_lap(DN_H . D^2 f_H) - N(N) . (N(f) N + f_s T).

    Single-boundary domains only; N_H is the harmonic extension of the unit normal.
    """
    if dom.kind != "disk":
        raise ValueError("identity check implemented for simply connected domains")
    g = dom.geoms[0]
    fh = dom.solve(f=f)
    nf = _dn(dom, f)
    nh = np.array([dom.solve(f=g.normal[i]) for i in range(2)])
    hess = jacobian(dom, dom.grad(fh))
    dn = jacobian(dom, nh)
    src = np.einsum("ji...,ij...->...", dn, hess)
    lhs = -surface_laplacian(dom.curves[0], f) - _dn(dom, nf)
    nn = np.array([_dn(dom, g.normal[i]) for i in range(2)])
    fs = boundary_d_s(dom, f)
    tail = np.sum(nn * (nf * g.normal + fs * g.tangent), 0)
    corr = 2 * dom.normal_derivative(dom.solve(g=src))
    rhs = g.kappa * nf + corr - tail
    return _rel(lhs - rhs, lhs, g.kappa * nf, corr, tail)


def sqrt_laplacian_gap(dom: SpectralDomain, f) -> tuple[float, float]:
    """L2 boundary norms of (-Delta_b)^(1/2) f - N f and of N f."""
    c = dom.curves[0]
    nf = _dn(dom, f)
    diff = surface_sqrt_laplacian(c, f) - nf
    return float(np.sqrt(dom.boundary_integral(diff ** 2))), float(np.sqrt(dom.boundary_integral(nf ** 2)))


def energy_identity_residual(dom: SpectralDomain, f) -> float:
    """|oint f N(f) dS - int |grad f_H|^2| relative to the Dirichlet energy."""
    fh = dom.solve(f=f)
    bulk = dom.integrate(np.sum(dom.grad(fh) ** 2, 0))
    surf = dom.boundary_integral(f * _dn(dom, f))
    return abs(surf - bulk) / max(abs(bulk), 1e-300)
