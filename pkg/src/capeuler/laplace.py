"""Mapped Fourier x Chebyshev collocation for Laplace and Poisson problems.

Disks use the map x = c + s*(rho_e(theta) + s*rho_o(theta)) e_r with s in
(0, 1], where rho_e and rho_o are the even and odd angular parts of the
boundary profile.  That map is invariant under (s, theta) -> (-s, theta+pi),
so fields can be folded onto the positive half of an even-sized Chebyshev
grid on [-1, 1] and the origin never appears as a node.

Annuli use a linear blend between the inner and outer profiles on a full
Chebyshev-Lobatto grid in s in [-1, 1].

Interior fields are arrays of shape (n_s, n_theta).  Row 0 is the outer
boundary.  Boundary data is an (n_theta,) array for disks and a
(2, n_theta) array ordered (inner, outer) for annuli.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .geometry import AnnulusShape, StarCurve, fourier_diff, fourier_eval, geometry, theta_grid

__all__ = [
    "SpectralDomain",
    "SolverError",
    "DomainError",
    "cheb_matrix",
    "gmres",
    "harmonic_extension",
    "poisson_zero_dirichlet",
    "dirichlet_neumann",
    "dn_inverse",
]

SOLVE_TOL = 1e-13
ACCEPT_TOL = 1e-8


class SolverError(RuntimeError):
    pass


class DomainError(ValueError):
    pass


def cheb_matrix(x: np.ndarray) -> np.ndarray:
    """Differentiation matrix on Chebyshev-Lobatto nodes ``x`` (descending)."""
    n = x.size - 1
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return D


def _clenshaw_curtis(n: int) -> np.ndarray:
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    inner = slice(1, n)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n ** 2 - 1)
        for k in range(1, n // 2):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k ** 2 - 1)
        v -= np.cos(n * theta[inner]) / (n ** 2 - 1)
    else:
        w[0] = w[n] = 1.0 / n ** 2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k ** 2 - 1)
    w[inner] = 2 * v / n
    return w


def _odd_weights(s: np.ndarray) -> np.ndarray:
    """Weights w with sum w*q(s) = int_0^1 q for odd polynomials of degree < 2*len(s)."""
    n = s.size
    deg = 2 * np.arange(n) + 1
    V = np.cos(np.outer(deg, np.arccos(s)))
    xg, wg = np.polynomial.legendre.leggauss(2 * n + 2)
    xg = 0.5 * (xg + 1.0)
    moments = 0.5 * (np.cos(np.outer(deg, np.arccos(xg))) @ wg)
    return np.linalg.solve(V, moments)


def _bary_matrix(nodes: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Barycentric interpolation matrix from Chebyshev-Lobatto ``nodes`` to ``pts``."""
    n = nodes.size
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    diff = pts[:, None] - nodes[None, :]
    exact = np.abs(diff) < 1e-15
    diff[exact] = 1.0
    B = w / diff
    B /= B.sum(axis=1, keepdims=True)
    rows = np.any(exact, axis=1)
    B[rows] = exact[rows].astype(float)
    return B


def gmres(apply_a, apply_m, b, x0=None, tol=SOLVE_TOL, restart=80, max_restarts=10):
    """Right-preconditioned restarted GMRES.  Returns (x, relative residual, iterations)."""
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0.0, 0
    x = np.zeros_like(b) if x0 is None else x0.copy()
    its = 0
    rel = np.inf
    for _ in range(max_restarts):
        r = b - apply_a(x)
        beta = np.linalg.norm(r)
        rel = beta / bnorm
        if rel <= tol:
            break
        V = np.zeros((restart + 1, b.size))
        Z = np.zeros((restart, b.size))
        H = np.zeros((restart + 1, restart))
        cs = np.zeros(restart)
        sn = np.zeros(restart)
        g = np.zeros(restart + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        for j in range(restart):
            Z[j] = apply_m(V[j])
            w = apply_a(Z[j])
            for _pass in range(2):
                h = V[: j + 1] @ w
                w -= V[: j + 1].T @ h
                H[: j + 1, j] += h
            H[j + 1, j] = np.linalg.norm(w)
            if H[j + 1, j] > 0:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            its += 1
            if abs(g[j + 1]) <= 0.1 * tol * bnorm:
                break
        y = np.linalg.solve(np.triu(H[:k, :k]), g[:k])
        x = x + Z[:k].T @ y
    r = b - apply_a(x)
    return x, np.linalg.norm(r) / bnorm, its


class SpectralDomain:
    """Collocation discretization of a star-shaped disk or annulus."""

    def __init__(self, shape: StarCurve | AnnulusShape, n_r: int = 64):
        if n_r < 4:
            raise DomainError("n_r must be at least 4")
        if not isinstance(shape, (StarCurve, AnnulusShape)):
            raise DomainError("shape must be a StarCurve or AnnulusShape")
        self.shape = shape
        self.n_r = n_r
        n = shape.n_theta
        self.n_theta = n
        self.theta = theta_grid(n)
        self.center = np.asarray(shape.center, dtype=float)
        self._m = np.arange(n // 2 + 1)
        if isinstance(shape, StarCurve):
            self._build_disk(shape, n_r)
        else:
            self._build_annulus(shape, n_r)
        self.n_s = self.s.size
        R, Rs = self._R, self._Rs
        if np.min(Rs) <= 0 or np.min(R) <= 0:
            raise DomainError("degenerate map: radial Jacobian is not positive on the grid")
        self.x = self.center[0] + R * np.cos(self.theta)
        self.y = self.center[1] + R * np.sin(self.theta)
        self.weights = self._radial_w[:, None] * R * Rs * (2 * np.pi / n)
        self._build_operator()

    # ----- construction -------------------------------------------------
    def _build_disk(self, curve, n_r):
        self.kind = "disk"
        nf = 2 * n_r
        xf = np.cos(np.pi * np.arange(nf) / (nf - 1))
        Df = cheb_matrix(xf)
        D2f = Df @ Df
        self._full_nodes = xf
        self.s = xf[:n_r]

        def fold(A, p):
            return A[:n_r, :n_r] + p * A[:n_r, n_r:][:, ::-1]

        self._D = {1: fold(Df, 1), -1: fold(Df, -1)}
        self._D2 = {1: fold(D2f, 1), -1: fold(D2f, -1)}
        self._rowmag = (np.abs(Df[:n_r]).sum(1), np.abs(D2f[:n_r]).sum(1))
        self._parity = np.where(self._m % 2 == 0, 1, -1)
        rho_e, rho_o = curve.parity_split()
        de, do = fourier_diff(rho_e, 1), fourier_diff(rho_o, 1)
        d2e, d2o = fourier_diff(rho_e, 2), fourier_diff(rho_o, 2)
        S = self.s[:, None]
        self._R = S * (rho_e + S * rho_o)
        self._Rs = rho_e + 2 * S * rho_o
        self._Rss = np.broadcast_to(2 * rho_o, self._R.shape).copy()
        self._Rt = S * (de + S * do)
        self._Rst = de + 2 * S * do
        self._Rtt = S * (d2e + S * d2o)
        self._radial_w = _odd_weights(self.s)
        self.boundary_rows = (0,)
        self.curves = (curve,)
        self.sides = ("single",)
        self._rho_parts = (rho_e, rho_o)

    def _build_annulus(self, shape, n_r):
        self.kind = "annulus"
        x = np.cos(np.pi * np.arange(n_r + 1) / n_r)
        D = cheb_matrix(x)
        self._full_nodes = x
        self.s = x
        self._D = {1: D}
        self._D2 = {1: D @ D}
        self._rowmag = (np.abs(D).sum(1), np.abs(D @ D).sum(1))
        self._parity = np.ones(self._m.size, dtype=int)
        ri, ro = shape.inner.rho, shape.outer.rho
        dri, dro = shape.inner.drho, shape.outer.drho
        d2ri, d2ro = shape.inner.d2rho, shape.outer.d2rho
        lam = (x[:, None] + 1.0) / 2.0
        ones = np.ones((x.size, 1))
        self._R = ri + lam * (ro - ri)
        self._Rs = ones * (ro - ri) / 2
        self._Rss = np.zeros_like(self._R)
        self._Rt = dri + lam * (dro - dri)
        self._Rst = ones * (dro - dri) / 2
        self._Rtt = d2ri + lam * (d2ro - d2ri)
        self._radial_w = _clenshaw_curtis(n_r)
        self.boundary_rows = (n_r, 0)
        self.curves = (shape.inner, shape.outer)
        self.sides = ("inner", "outer")

    def _build_operator(self):
        R, Rs, Rss, Rt, Rst, Rtt = self._R, self._Rs, self._Rss, self._Rt, self._Rst, self._Rtt
        a = 1.0 / Rs
        b = -Rt / Rs
        a_s = -Rss / Rs ** 2
        b_s = -Rst / Rs + Rt * Rss / Rs ** 2
        b_t = -Rtt / Rs + Rt * Rst / Rs ** 2
        self._a, self._b = a, b
        # Laplacian multiplied by R^2; the theta-theta coefficient is 1
        self._cA = R ** 2 * a ** 2 + b ** 2
        self._cB = 2 * b
        self._cE = R ** 2 * a * a_s + R * a + b_t + b * b_s
        mmax = self._m[-1]
        rowscale = (np.abs(self._cA) * self._rowmag[1][:, None]
                    + np.abs(self._cB) * mmax * self._rowmag[0][:, None]
                    + np.abs(self._cE) * self._rowmag[0][:, None] + mmax ** 2)
        self._rowscale = 1.0 / rowscale
        self._bmask = np.zeros(self.n_s, dtype=bool)
        self._bmask[list(self.boundary_rows)] = True
        self._rowscale[self._bmask] = 1.0
        A_bar, B_bar, E_bar = (c.mean(axis=1) for c in (self._cA, self._cB, self._cE))
        mats = []
        eye = np.eye(self.n_s)
        for m, p in zip(self._m, self._parity):
            D, D2 = self._D[p], self._D2[p]
            P = (A_bar[:, None] * D2 + (1j * m * B_bar + E_bar)[:, None] * D - m ** 2 * eye).astype(complex)
            P[self._bmask] = eye[self._bmask]
            mats.append(P)
        self._precond = np.linalg.inv(np.array(mats))

    # ----- differentiation ---------------------------------------------
    def _apply_radial(self, U, mats):
        if self.kind == "annulus":
            return mats[1] @ U
        Uh = np.fft.rfft(U, axis=-1)
        out = np.empty_like(Uh)
        even = self._parity == 1
        out[..., even] = mats[1] @ Uh[..., even]
        out[..., ~even] = mats[-1] @ Uh[..., ~even]
        return np.fft.irfft(out, n=self.n_theta, axis=-1)

    def d_s(self, U):
        return self._apply_radial(U, self._D)

    def d_ss(self, U):
        return self._apply_radial(U, self._D2)

    def d_theta(self, U, order=1):
        return fourier_diff(U, order, axis=-1)

    def grad(self, U) -> np.ndarray:
        """Cartesian gradient, shape (2, n_s, n_theta)."""
        Us = self.d_s(U)
        u_r = self._a * Us
        u_phi = (self.d_theta(U) + self._b * Us) / self._R
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.array([c * u_r - s * u_phi, s * u_r + c * u_phi])

    def _scaled_laplacian(self, U):
        Us = self.d_s(U)
        return (self._cA * self.d_ss(U) + self._cB * self.d_theta(Us)
                + self.d_theta(U, 2) + self._cE * Us)

    def laplacian(self, U):
        return self._scaled_laplacian(U) / self._R ** 2

    # ----- boundary helpers --------------------------------------------
    @cached_property
    def geoms(self):
        return tuple(geometry(c, side) for c, side in zip(self.curves, self.sides))

    def as_boundary(self, f) -> np.ndarray:
        """Normalize boundary data to shape (n_boundaries, n_theta)."""
        f = np.asarray(f, dtype=float)
        nb = len(self.boundary_rows)
        if f.shape == (self.n_theta,) and nb == 1:
            return f[None, :]
        if f.shape != (nb, self.n_theta):
            raise DomainError(f"boundary data must have shape ({nb}, {self.n_theta}) or match the curve grid")
        return f

    def from_boundary(self, g: np.ndarray) -> np.ndarray:
        return g[0] if len(self.boundary_rows) == 1 else g

    def trace(self, U) -> np.ndarray:
        out = np.asarray(U)[..., list(self.boundary_rows), :]
        return out[..., 0, :] if len(self.boundary_rows) == 1 else out

    def trace_vector(self, V) -> np.ndarray:
        """Boundary values of a vector field, shape (nb, 2, n_theta) squeezed for disks."""
        out = np.array([V[:, r] for r in self.boundary_rows])
        return out[0] if len(self.boundary_rows) == 1 else out

    def normal_component(self, V) -> np.ndarray:
        out = np.array([np.sum(V[:, r] * g.normal, axis=0)
                        for r, g in zip(self.boundary_rows, self.geoms)])
        return self.from_boundary(out)

    def normal_derivative(self, U) -> np.ndarray:
        return self.normal_component(self.grad(U))

    def boundary_integral(self, f) -> float:
        f = self.as_boundary(f)
        return float(sum(np.sum(fi * g.speed) * 2 * np.pi / self.n_theta
                         for fi, g in zip(f, self.geoms)))

    @property
    def perimeter(self) -> float:
        return float(sum(g.length for g in self.geoms))

    def integrate(self, F) -> float:
        return float(np.sum(self.weights * F))

    @property
    def area(self) -> float:
        return self.integrate(np.ones((self.n_s, self.n_theta)))

    # ----- linear solves -----------------------------------------------
    def _apply_system(self, u):
        U = u.reshape(self.n_s, self.n_theta)
        out = self._scaled_laplacian(U)
        out[self._bmask] = U[self._bmask]
        return (out * self._rowscale).ravel()

    def _apply_precond(self, r):
        rh = np.fft.rfft((r.reshape(self.n_s, self.n_theta) / self._rowscale), axis=1)
        out = np.einsum("mij,jm->im", self._precond, rh)
        return np.fft.irfft(out, n=self.n_theta, axis=1).ravel()

    def solve(self, g=None, f=None) -> np.ndarray:
        """Solve Laplace(U) = g inside with U = f on the boundary."""
        rhs = np.zeros((self.n_s, self.n_theta))
        if g is not None:
            rhs += self._R ** 2 * np.asarray(g, dtype=float)
        rows = list(self.boundary_rows)
        rhs[rows] = 0.0 if f is None else self.as_boundary(f)
        b = (rhs * self._rowscale).ravel()
        x0 = self._apply_precond(b)
        x, rel, _ = gmres(self._apply_system, self._apply_precond, b, x0=x0)
        if not np.isfinite(rel) or rel > ACCEPT_TOL:
            raise SolverError(f"collocation solve did not converge (relative residual {rel:.2e}, "
                              f"condition estimate {self.condition_estimate():.2e})")
        return x.reshape(self.n_s, self.n_theta)

    def condition_estimate(self) -> float:
        return float(max(np.linalg.cond(P) for P in self._precond))

    # ----- interpolation -------------------------------------------------
    def locate(self, x, y):
        """Reference coordinates (s, theta) of physical points."""
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        th = np.mod(np.arctan2(dy, dx), 2 * np.pi)
        r = np.hypot(dx, dy)
        if self.kind == "disk":
            re, ro = (fourier_eval(p, th) for p in self._rho_parts)
            s = 2 * r / (re + np.sqrt(re ** 2 + 4 * ro * r))
            s = np.clip(s, 0.0, 1.0)
        else:
            ri = fourier_eval(self.curves[0].rho, th)
            rout = fourier_eval(self.curves[1].rho, th)
            s = np.clip(2 * (r - ri) / (rout - ri) - 1.0, -1.0, 1.0)
        return s, th

    def interpolate(self, U, x, y) -> np.ndarray:
        """Spectral interpolation of interior field(s) at physical points.

        ``U`` may carry leading batch axes in front of (n_s, n_theta).
        """
        U = np.asarray(U, dtype=float)
        s, th = self.locate(np.ravel(x), np.ravel(y))
        n = self.n_theta
        Uh = np.fft.rfft(U, axis=-1) / n
        if self.kind == "disk":
            neg = Uh[..., ::-1, :] * self._parity
            Uh = np.concatenate([Uh, neg], axis=-2)
        B = _bary_matrix(self._full_nodes, s)
        C = np.einsum("pj,...jm->...pm", B, Uh)
        weight = np.full(self._m.size, 2.0)
        weight[0] = 1.0
        weight[-1] = 1.0
        phase = np.exp(1j * np.outer(th, self._m)) * weight
        out = np.real(np.sum(C * phase, axis=-1))
        return out.reshape(U.shape[:-2] + np.shape(x))


def harmonic_extension(domain: SpectralDomain, f) -> np.ndarray:
    return domain.solve(f=f)


def poisson_zero_dirichlet(domain: SpectralDomain, g) -> np.ndarray:
    """Inverse Laplacian with zero Dirichlet data."""
    return domain.solve(g=g)


def dirichlet_neumann(domain: SpectralDomain, f) -> np.ndarray:
    return domain.normal_derivative(domain.solve(f=f))


def dn_inverse(domain: SpectralDomain, f) -> np.ndarray:
    """Zero-mean g with N(g) = f, for f of zero boundary mean."""
    fb = domain.as_boundary(f)
    norm = np.sqrt(domain.boundary_integral(fb ** 2))
    if abs(domain.boundary_integral(fb)) > 1e-8 * max(norm, 1e-300):
        raise ValueError("data is not in the range of the Dirichlet-Neumann operator (nonzero mean)")
    if norm == 0.0:
        return domain.from_boundary(np.zeros_like(fb))
    shape = fb.shape
    total = domain.perimeter
    radius = np.array([np.mean(c.rho) for c in domain.curves])[:, None]
    sym = radius / np.maximum(np.arange(shape[1] // 2 + 1), 1)

    def apply_a(g):
        gb = g.reshape(shape)
        out = domain.as_boundary(dirichlet_neumann(domain, domain.from_boundary(gb)))
        return (out + domain.boundary_integral(gb) / total).ravel()

    def apply_m(r):
        rh = np.fft.rfft(r.reshape(shape), axis=-1) * sym
        return np.fft.irfft(rh, n=shape[1], axis=-1).ravel()

    g, rel, _ = gmres(apply_a, apply_m, fb.ravel(), tol=1e-12, restart=60)
    if rel > ACCEPT_TOL:
        raise SolverError(f"inverse Dirichlet-Neumann solve did not converge ({rel:.2e})")
    g = g.reshape(shape)
    return domain.from_boundary(g - domain.boundary_integral(g) / total)
