"""Star-shaped boundary curves and their intrinsic geometry.

A boundary is stored as the angular spectrum of its radial profile
rho(theta) about a fixed center.  All geometric quantities are computed
pseudo-spectrally on the uniform theta grid.

Boundary scalars are plain real arrays sampled on the theta grid of the
owning curve.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "StarCurve",
    "AnnulusShape",
    "GeometryReport",
    "GeometryError",
    "theta_grid",
    "fourier_diff",
    "dealias",
    "fourier_eval",
    "make_star_curve",
    "ellipse_curve",
    "geometry",
    "arclength_derivative",
    "surface_laplacian",
    "surface_sqrt_laplacian",
    "boundary_norm",
    "integrate_boundary",
    "arclength_resample",
]

_DEGENERATE_METRIC = 1e-12
_RESOLUTION_MASS = 1e-10


class GeometryError(ValueError):
    """Raised for invalid or degenerate boundary data."""


def _is_power_of_two(n: int) -> bool:
    return n >= 4 and (n & (n - 1)) == 0


def theta_grid(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def _multiplier(n: int, order: int) -> np.ndarray:
    m = np.fft.rfftfreq(n, 1.0 / n)
    mult = (1j * m) ** order
    if order % 2 == 1 and n % 2 == 0:
        # odd derivatives kill the Nyquist mode so that d/dtheta stays skew
        mult[-1] = 0.0
    return mult


def fourier_diff(f: np.ndarray, order: int = 1, axis: int = -1) -> np.ndarray:
    """Spectral derivative of real periodic samples along ``axis``."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    mult = _multiplier(n, order)
    shape = [1] * f.ndim
    shape[axis] = mult.size
    fh = np.fft.rfft(f, axis=axis) * mult.reshape(shape)
    return np.fft.irfft(fh, n=n, axis=axis)


def dealias(f: np.ndarray, axis: int = -1) -> np.ndarray:
    """Zero all angular modes with |m| > n/3 (2/3 rule)."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    fh = np.fft.rfft(f, axis=axis)
    keep = np.arange(fh.shape[axis]) <= n // 3
    shape = [1] * f.ndim
    shape[axis] = keep.size
    return np.fft.irfft(fh * keep.reshape(shape), n=n, axis=axis)


def fourier_eval(f: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of samples ``f`` at ``theta``.

    ``f`` may carry leading batch axes; the last axis is the periodic one.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[-1]
    fh = np.fft.rfft(f, axis=-1) / n
    m = np.arange(fh.shape[-1])
    weight = np.full(m.size, 2.0)
    weight[0] = 1.0
    if n % 2 == 0:
        weight[-1] = 1.0
    theta = np.asarray(theta, dtype=float)
    phase = np.exp(1j * np.multiply.outer(theta.ravel(), m))
    out = np.real((fh * weight) @ phase.T)
    return out.reshape(f.shape[:-1] + theta.shape)


@dataclass(frozen=True, eq=False)
class StarCurve:
    """Closed curve r = rho(theta) about ``center``.

    ``rho_modes`` holds the normalized DFT of rho on the uniform grid, so
    that ``rho = real(ifft(rho_modes) * n_theta)``.
    """

    center: tuple[float, float]
    rho_modes: np.ndarray
    n_theta: int

    def __post_init__(self):
        modes = np.asarray(self.rho_modes, dtype=complex)
        if not _is_power_of_two(self.n_theta):
            raise GeometryError(f"n_theta must be a power of two >= 4, got {self.n_theta}")
        if modes.shape != (self.n_theta,):
            raise GeometryError("rho_modes length must equal n_theta")
        sym = modes - np.conj(np.roll(modes[::-1], 1))
        if np.max(np.abs(sym)) > 1e-12 * max(1.0, np.max(np.abs(modes))):
            raise GeometryError("rho_modes are not conjugate-symmetric")
        object.__setattr__(self, "rho_modes", modes)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if np.min(self.rho) <= 0.0:
            raise GeometryError("not star-shaped: rho must be positive at every node")

    @classmethod
    def from_values(cls, rho, center=(0.0, 0.0)) -> "StarCurve":
        rho = np.asarray(rho, dtype=float)
        return cls(center=tuple(center), rho_modes=np.fft.fft(rho) / rho.size, n_theta=rho.size)

    @cached_property
    def theta(self) -> np.ndarray:
        return theta_grid(self.n_theta)

    @cached_property
    def rho(self) -> np.ndarray:
        return np.real(np.fft.ifft(self.rho_modes)) * self.n_theta

    @cached_property
    def drho(self) -> np.ndarray:
        return fourier_diff(self.rho, 1)

    @cached_property
    def d2rho(self) -> np.ndarray:
        return fourier_diff(self.rho, 2)

    @cached_property
    def points(self) -> np.ndarray:
        """Boundary nodes, shape (2, n_theta)."""
        c = np.asarray(self.center)[:, None]
        return c + self.rho * np.array([np.cos(self.theta), np.sin(self.theta)])

    @property
    def resolved(self) -> bool:
        power = np.abs(self.rho_modes) ** 2
        m = np.abs(np.fft.fftfreq(self.n_theta, 1.0 / self.n_theta))
        total = power.sum()
        return bool(power[m > self.n_theta / 3].sum() <= _RESOLUTION_MASS * total)

    def parity_split(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (even-mode part, odd-mode part) of rho on the grid."""
        m = np.fft.fftfreq(self.n_theta, 1.0 / self.n_theta).astype(int)
        even = np.real(np.fft.ifft(np.where(m % 2 == 0, self.rho_modes, 0))) * self.n_theta
        return even, self.rho - even

    def area(self) -> float:
        """Enclosed area (1/2) * integral of rho^2 dtheta."""
        return float(0.5 * np.mean(self.rho ** 2) * 2.0 * np.pi)

    def eval_rho(self, theta) -> np.ndarray:
        return fourier_eval(self.rho, theta)


@dataclass(frozen=True, eq=False)
class AnnulusShape:
    inner: StarCurve
    outer: StarCurve

    def __post_init__(self):
        if self.inner.n_theta != self.outer.n_theta:
            raise GeometryError("inner and outer curves must share n_theta")
        if np.max(np.abs(np.subtract(self.inner.center, self.outer.center))) > 0:
            raise GeometryError("inner and outer curves must share a center")
        if np.max(self.inner.rho) >= np.min(self.outer.rho):
            raise GeometryError("annulus boundaries intersect (no positive gap)")

    @property
    def n_theta(self) -> int:
        return self.outer.n_theta

    @property
    def center(self):
        return self.outer.center

    def area(self) -> float:
        return self.outer.area() - self.inner.area()


@dataclass(frozen=True, eq=False)
class GeometryReport:
    normal: np.ndarray          # (2, n) outward from the fluid
    tangent: np.ndarray         # (2, n), counterclockwise on every curve
    kappa: np.ndarray
    speed: np.ndarray           # dS/dtheta
    length: float
    resolved: bool = True
    side: str = "single"
    second_fundamental: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "second_fundamental", self.kappa)


def make_star_curve(mode_list, base_radius: float, n_theta: int, center=(0.0, 0.0)) -> StarCurve:
    """rho = base_radius + sum of amp*cos(k theta) (or a*cos + b*sin for triples)."""
    if base_radius <= 0:
        raise GeometryError("base_radius must be positive")
    if not _is_power_of_two(n_theta):
        raise GeometryError(f"n_theta must be a power of two >= 4, got {n_theta}")
    th = theta_grid(n_theta)
    rho = np.full(n_theta, float(base_radius))
    for entry in mode_list:
        k = int(entry[0])
        if not 0 < k < n_theta // 2:
            raise GeometryError(f"wavenumber {k} not representable on {n_theta} nodes")
        rho = rho + entry[1] * np.cos(k * th)
        if len(entry) > 2:
            rho = rho + entry[2] * np.sin(k * th)
    return StarCurve.from_values(rho, center)


def ellipse_curve(a: float, b: float, n_theta: int, center=(0.0, 0.0)) -> StarCurve:
    """Ellipse x^2/a^2 + y^2/b^2 = 1 in polar form about its center."""
    th = theta_grid(n_theta)
    rho = a * b / np.sqrt((b * np.cos(th)) ** 2 + (a * np.sin(th)) ** 2)
    return StarCurve.from_values(rho, center)


def _check_grid(curve: StarCurve, f) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != curve.n_theta:
        raise GeometryError(f"grid mismatch: data has {f.shape[-1]} nodes, curve has {curve.n_theta}")
    return f


def _speed(curve: StarCurve) -> np.ndarray:
    w2 = curve.rho ** 2 + curve.drho ** 2
    if np.min(w2) < _DEGENERATE_METRIC:
        raise GeometryError("degenerate metric: rho^2 + rho'^2 vanishes")
    return np.sqrt(w2)


def geometry(curve: StarCurve, side: str = "single") -> GeometryReport:
    """Normal, tangent, curvature and arclength density of ``curve``.

    ``side`` is "single" or "outer" when the fluid lies inside the curve and
    "inner" when it lies outside; the inner side flips N and kappa.
    """
    rho, d1, d2 = curve.rho, curve.drho, curve.d2rho
    w = _speed(curve)
    th = curve.theta
    er = np.array([np.cos(th), np.sin(th)])
    et = np.array([-np.sin(th), np.cos(th)])
    tangent = (d1 * er + rho * et) / w
    normal = np.array([tangent[1], -tangent[0]])
    kappa = (rho ** 2 + 2 * d1 ** 2 - rho * d2) / w ** 3
    resolved = curve.resolved
    if not resolved:
        warnings.warn("curve spectrum is under-resolved", RuntimeWarning, stacklevel=2)
    if side == "inner":
        normal, kappa = -normal, -kappa
    elif side not in ("single", "outer"):
        raise ValueError(f"unknown side {side!r}")
    length = float(np.mean(w) * 2.0 * np.pi)
    return GeometryReport(normal=normal, tangent=tangent, kappa=kappa, speed=w,
                          length=length, resolved=resolved, side=side)


def arclength_derivative(curve: StarCurve, f, order: int = 1) -> np.ndarray:
    f = _check_grid(curve, f)
    w = _speed(curve)
    for _ in range(order):
        f = fourier_diff(f, 1) / w
    return f


def surface_laplacian(curve: StarCurve, f) -> np.ndarray:
    """Second arclength derivative (1/w) d/dtheta ((1/w) df/dtheta)."""
    return arclength_derivative(curve, f, 2)


def integrate_boundary(curve: StarCurve, f) -> float:
    f = _check_grid(curve, f)
    return float(np.sum(f * _speed(curve), axis=-1) * (2.0 * np.pi / curve.n_theta))


def _arclength_nodes(curve: StarCurve, iterations: int = 50) -> tuple[np.ndarray, float]:
    """theta values at which arclength is uniformly spaced, plus total length."""
    n = curve.n_theta
    w = _speed(curve)
    length = float(np.mean(w) * 2 * np.pi)
    w_mean = length / (2 * np.pi)
    # s(theta) = w_mean*theta + periodic part; periodic part via spectral antiderivative
    wh = np.fft.rfft(w - w_mean) / n
    m = np.arange(wh.size)
    anti = np.zeros_like(wh)
    anti[1:] = wh[1:] / (1j * m[1:])
    if n % 2 == 0:
        anti[-1] = 0.0
    coef = np.full(m.size, 2.0)
    coef[0] = 1.0
    if n % 2 == 0:
        coef[-1] = 1.0

    def periodic(theta, spec):
        return np.real(np.exp(1j * np.outer(theta, m)) @ (spec * coef))

    p0 = periodic(np.zeros(1), anti)[0]
    targets = length * np.arange(n) / n
    th = theta_grid(n).copy()
    wh_full = np.fft.rfft(w) / n
    for _ in range(iterations):
        s = w_mean * th + periodic(th, anti) - p0
        ds = periodic(th, wh_full)
        step = (s - targets) / ds
        th = th - step
        if np.max(np.abs(step)) < 1e-15:
            break
    return th, length


def arclength_resample(curve: StarCurve, f) -> tuple[np.ndarray, float]:
    """Samples of f on a uniform arclength grid and the total length."""
    f = _check_grid(curve, f)
    th, length = _arclength_nodes(curve)
    return fourier_eval(f, th), length


def _arclength_at_nodes(curve: StarCurve) -> tuple[np.ndarray, float]:
    """Arclength s(theta_j) from theta = 0 and the total length."""
    n = curve.n_theta
    w = _speed(curve)
    wh = np.fft.rfft(w - w.mean())
    m = np.arange(wh.size)
    anti = np.zeros_like(wh)
    anti[1:] = wh[1:] / (1j * m[1:])
    anti[-1] = 0.0
    per = np.fft.irfft(anti, n)
    return w.mean() * curve.theta + per - per[0], float(w.mean() * 2 * np.pi)


def surface_sqrt_laplacian(curve: StarCurve, f) -> np.ndarray:
    """(-Delta_boundary)^(1/2) f as the arclength multiplier |2 pi m / L|."""
    g, length = arclength_resample(curve, f)
    n = g.size
    m = np.arange(n // 2 + 1)
    h = np.fft.irfft(np.fft.rfft(g) * (2 * np.pi * m / length), n)
    s, _ = _arclength_at_nodes(curve)
    return fourier_eval(h, 2 * np.pi * s / length)


def boundary_norm(curve: StarCurve, f, r: float) -> float:
    """H^r(boundary) norm via the multiplier (1 + (2 pi m / L)^2)^(r/2) in arclength."""
    if not -4.0 <= r <= 4.0:
        raise ValueError("order r must lie in [-4, 4]")
    g, length = arclength_resample(curve, f)
    n = g.size
    c = np.fft.fft(g) / n
    m = np.fft.fftfreq(n, 1.0 / n)
    sym = (1.0 + (2 * np.pi * m / length) ** 2) ** r
    return float(np.sqrt(length * np.sum(np.abs(c) ** 2 * sym)))
