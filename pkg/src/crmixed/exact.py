"""Manufactured solutions for the convergence studies.

Six cases: three Poisson (smooth Gaussian bump, M-shaped corner
singularity, crack-tip singularity) and three Stokes (Kovasznay flow and
the Verfuerth corner/crack singularities).  Each case bundles vectorized
closed-form evaluators for the primal field, the flux/pseudostress, the
volume source, the Dirichlet data and (for Stokes) the zero-mean pressure.

Poisson convention: sigma = -grad(u), div(sigma) = f.
Stokes convention:  sigma = nu*grad(u) - p*I (pseudostress, stored row
major as (s11, s12, s21, s22)), div(sigma) = -f taken row-wise, and
p = -tr(sigma)/2.

The singular cases use polar coordinates with the branch cut along the
positive x axis, theta in [0, 2*pi).  Points on the lower crack lip must
be evaluated side-aware (nudged into the owning triangle) because the
fields are two-valued across the slit; the ``side_aware`` flag tells the
interpolation and assembly routines to do so.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

TWO_PI = 2.0 * np.pi


def _polar(pts):
    """Radius and angle with theta in [0, 2*pi)."""
    x = pts[..., 0]
    y = pts[..., 1]
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    theta = np.where(theta < 0.0, theta + TWO_PI, theta)
    return r, theta


@dataclass
class ManufacturedCase:
    """Exact fields and derived data of one test problem.

    All evaluators take an (..., 2) array of points and return arrays with
    the matching leading shape; vector/tensor values add a trailing axis
    of length 2 (Poisson flux, Stokes velocity/source) or 4 (pseudostress
    components s11, s12, s21, s22).
    """

    tag: str
    domain: str
    kind: str                     # "poisson" | "stokes"
    u: Callable
    sigma: Callable
    f: Callable
    side_aware: bool = False
    nu: Optional[float] = None
    p: Optional[Callable] = None
    lam: Optional[float] = None
    err_quad_tri: int = 8
    err_quad_edge: int = 8
    regularity: str = ""
    extras: dict = field(default_factory=dict)

    @property
    def g(self):
        """Dirichlet boundary data (the trace of u)."""
        return self.u

    def div_sigma(self, pts):
        s = self.f(pts)
        return s if self.kind == "poisson" else -s


def case_p1():
    """Smooth Gaussian bump on the M-shaped domain; f = -laplace(u)."""
    def u(pts):
        return np.exp(-10.0 * (pts[..., 0] ** 2 + pts[..., 1] ** 2))

    def sigma(pts):
        return 20.0 * pts * u(pts)[..., None]

    def f(pts):
        r2 = pts[..., 0] ** 2 + pts[..., 1] ** 2
        return (40.0 - 400.0 * r2) * np.exp(-10.0 * r2)

    return ManufacturedCase(tag="p1", domain="m_shape", kind="poisson",
                            u=u, sigma=sigma, f=f, err_quad_tri=8,
                            regularity="smooth")


def case_p2():
    """Corner singularity r^(2/3) sin(2 theta/3) - r^2/4; f = 1."""
    a = 2.0 / 3.0

    def u(pts):
        r, th = _polar(pts)
        return r ** a * np.sin(a * th) - 0.25 * r ** 2

    def sigma(pts):
        r, th = _polar(pts)
        s = a * r ** (a - 1.0)
        gx = s * np.sin((a - 1.0) * th) - 0.5 * pts[..., 0]
        gy = s * np.cos((a - 1.0) * th) - 0.5 * pts[..., 1]
        return -np.stack([gx, gy], axis=-1)

    def f(pts):
        return np.ones(pts.shape[:-1])

    return ManufacturedCase(tag="p2", domain="m_shape", kind="poisson",
                            u=u, sigma=sigma, f=f, side_aware=True,
                            err_quad_tri=10, regularity="u in H^(5/3)")


def case_p3():
    """Crack-tip singularity r^(1/2) sin(theta/2); harmonic, f = 0."""
    def u(pts):
        r, th = _polar(pts)
        return np.sqrt(r) * np.sin(0.5 * th)

    def sigma(pts):
        r, th = _polar(pts)
        s = 0.5 / np.sqrt(r)
        return np.stack([s * np.sin(0.5 * th), -s * np.cos(0.5 * th)],
                        axis=-1)

    def f(pts):
        return np.zeros(pts.shape[:-1])

    return ManufacturedCase(tag="p3", domain="crack_diamond", kind="poisson",
                            u=u, sigma=sigma, f=f, side_aware=True,
                            err_quad_tri=10,
                            regularity="sigma not in H^(1/2)")


def kovasznay_lambda(nu):
    """Flow parameter of the Kovasznay field."""
    inv = 1.0 / nu
    return -8.0 * np.pi ** 2 / (inv + np.sqrt(inv ** 2 + 16.0 * np.pi ** 2))


def case_s1(nu=1.0):
    """Kovasznay flow on (-1/2, 3/2) x (0, 2), imposed as Stokes data.

    The pair (u, p) solves the Navier-Stokes equations; here the source is
    manufactured as f = -div(nu*grad(u) - p*I) so the Stokes system holds
    exactly.  p is shifted by the closed-form constant that makes it
    zero-mean over the rectangle.
    """
    if nu <= 0:
        raise ValueError("viscosity must be positive")
    lam = kovasznay_lambda(nu)
    # mean of -exp(2*lam*x)/2 over the domain (area 4)
    p0 = -(np.exp(3.0 * lam) - np.exp(-lam)) / (8.0 * lam)

    def u(pts):
        x, y = pts[..., 0], pts[..., 1]
        ex = np.exp(lam * x)
        return np.stack([1.0 - ex * np.cos(TWO_PI * y),
                         (lam / TWO_PI) * ex * np.sin(TWO_PI * y)], axis=-1)

    def p(pts):
        return -0.5 * np.exp(2.0 * lam * pts[..., 0]) - p0

    def sigma(pts):
        x, y = pts[..., 0], pts[..., 1]
        ex = np.exp(lam * x)
        cos = np.cos(TWO_PI * y)
        sin = np.sin(TWO_PI * y)
        pr = p(pts)
        s11 = nu * (-lam * ex * cos) - pr
        s12 = nu * (TWO_PI * ex * sin)
        s21 = nu * (lam ** 2 / TWO_PI) * ex * sin
        s22 = nu * (lam * ex * cos) - pr
        return np.stack([s11, s12, s21, s22], axis=-1)

    def f(pts):
        x, y = pts[..., 0], pts[..., 1]
        ex = np.exp(lam * x)
        f1 = (nu * (lam ** 2 - 4.0 * np.pi ** 2) * ex * np.cos(TWO_PI * y)
              - lam * np.exp(2.0 * lam * x))
        f2 = nu * lam * (TWO_PI - lam ** 2 / TWO_PI) * ex * np.sin(TWO_PI * y)
        return np.stack([f1, f2], axis=-1)

    return ManufacturedCase(tag="s1", domain="kovasznay_rect", kind="stokes",
                            u=u, sigma=sigma, f=f, p=p, nu=nu, lam=lam,
                            err_quad_tri=8, regularity="smooth",
                            extras={"p0": p0})


def _stokes_lambda_mshape(omega=1.5 * np.pi, lo=0.5, hi=0.6, tol=1e-12):
    """Smallest positive root of sin(lam*omega) + lam*sin(omega) = 0."""
    def q(lam):
        return np.sin(lam * omega) + lam * np.sin(omega)

    flo, fhi = q(lo), q(hi)
    if flo * fhi > 0:
        raise ValueError("root not bracketed")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if flo * q(mid) <= 0:
            hi = mid
        else:
            lo, flo = mid, q(mid)
    return 0.5 * (lo + hi)


def _singular_stokes_case(tag, domain, lam, omega, psi_funcs, theta_max):
    """Verfuerth-type singular Stokes solution with f = 0 and nu = 1.

    ``psi_funcs`` supplies the angular profile and its first three
    derivatives.  p has the closed form -r^(lam-1) * ((1+lam)^2 Psi' +
    Psi''') / (1-lam); the additive constant making it zero-mean over the
    domain is computed from the one-dimensional radial integral.
    """
    psi, dpsi, d2psi, d3psi = psi_funcs

    def angular_pressure(th):
        return -((1.0 + lam) ** 2 * dpsi(th) + d3psi(th)) / (1.0 - lam)

    # integral of r^(lam-1) P(theta) over the domain in polar form; the
    # diamond boundary is r = 1/(|cos| + |sin|)
    def dtheta_integrand(th):
        rad = 1.0 / (abs(np.cos(th)) + abs(np.sin(th)))
        return angular_pressure(th) * rad ** (lam + 1.0) / (lam + 1.0)

    breaks = [t for t in (0.5 * np.pi, np.pi, 1.5 * np.pi) if t < theta_max]
    total, _ = quad(dtheta_integrand, 0.0, theta_max, points=breaks,
                    limit=200)
    area = 1.5 if domain == "m_shape" else 2.0
    p_mean = total / area

    def a_fun(th):
        return (1.0 + lam) * np.sin(th) * psi(th) + np.cos(th) * dpsi(th)

    def b_fun(th):
        return np.sin(th) * dpsi(th) - (1.0 + lam) * np.cos(th) * psi(th)

    def da_fun(th):
        return ((1.0 + lam) * np.cos(th) * psi(th)
                + lam * np.sin(th) * dpsi(th) + np.cos(th) * d2psi(th))

    def db_fun(th):
        return ((1.0 + lam) * np.sin(th) * psi(th)
                - lam * np.cos(th) * dpsi(th) + np.sin(th) * d2psi(th))

    def u(pts):
        r, th = _polar(pts)
        rl = r ** lam
        return np.stack([rl * a_fun(th), rl * b_fun(th)], axis=-1)

    def p(pts):
        r, th = _polar(pts)
        return r ** (lam - 1.0) * angular_pressure(th) - p_mean

    def sigma(pts):
        r, th = _polar(pts)
        rl1 = r ** (lam - 1.0)
        cos, sin = np.cos(th), np.sin(th)
        a, b = a_fun(th), b_fun(th)
        da, db = da_fun(th), db_fun(th)
        u1x = rl1 * (lam * a * cos - da * sin)
        u1y = rl1 * (lam * a * sin + da * cos)
        u2x = rl1 * (lam * b * cos - db * sin)
        u2y = rl1 * (lam * b * sin + db * cos)
        pr = rl1 * angular_pressure(th) - p_mean
        return np.stack([u1x - pr, u1y, u2x, u2y - pr], axis=-1)

    def f(pts):
        return np.zeros(pts.shape)

    return ManufacturedCase(tag=tag, domain=domain, kind="stokes",
                            u=u, sigma=sigma, f=f, p=p, nu=1.0, lam=lam,
                            side_aware=True, err_quad_tri=10,
                            regularity=f"u in H^(1+{lam:.3g})",
                            extras={"omega": omega, "p_mean_shift": p_mean})


def case_s2():
    """Singular Stokes flow at the reentrant corner of the M-shape."""
    omega = 1.5 * np.pi
    lam = _stokes_lambda_mshape(omega)
    colo = np.cos(lam * omega)
    op, om = 1.0 + lam, 1.0 - lam

    def psi(th):
        return (np.sin(op * th) * colo / op - np.cos(op * th)
                - np.sin(om * th) * colo / om + np.cos(om * th))

    def dpsi(th):
        return (np.cos(op * th) * colo + op * np.sin(op * th)
                - np.cos(om * th) * colo - om * np.sin(om * th))

    def d2psi(th):
        return (-op * np.sin(op * th) * colo + op ** 2 * np.cos(op * th)
                + om * np.sin(om * th) * colo - om ** 2 * np.cos(om * th))

    def d3psi(th):
        return (-op ** 2 * np.cos(op * th) * colo - op ** 3 * np.sin(op * th)
                + om ** 2 * np.cos(om * th) * colo + om ** 3 * np.sin(om * th))

    return _singular_stokes_case("s2", "m_shape", lam, omega,
                                 (psi, dpsi, d2psi, d3psi), theta_max=omega)


def case_s3():
    """Singular Stokes flow at the crack tip (opening angle 2*pi)."""
    lam = 0.5
    omega = TWO_PI

    def psi(th):
        return 3.0 * np.sin(0.5 * th) - np.sin(1.5 * th)

    def dpsi(th):
        return 1.5 * np.cos(0.5 * th) - 1.5 * np.cos(1.5 * th)

    def d2psi(th):
        return -0.75 * np.sin(0.5 * th) + 2.25 * np.sin(1.5 * th)

    def d3psi(th):
        return -0.375 * np.cos(0.5 * th) + 3.375 * np.cos(1.5 * th)

    return _singular_stokes_case("s3", "crack_diamond", lam, omega,
                                 (psi, dpsi, d2psi, d3psi), theta_max=omega)


_BUILDERS = {"p1": case_p1, "p2": case_p2, "p3": case_p3,
             "s1": case_s1, "s2": case_s2, "s3": case_s3}


def get_case(tag, nu=None):
    """Case by tag; `nu` applies to the Kovasznay case only."""
    tag = tag.lower()
    if tag not in _BUILDERS:
        raise ValueError(f"unknown case tag {tag!r}")
    if tag == "s1":
        return case_s1(1.0 if nu is None else nu)
    case = _BUILDERS[tag]()
    if nu is not None and case.kind == "stokes" and nu != case.nu:
        raise ValueError(f"case {tag} is defined for nu = {case.nu}")
    return case
