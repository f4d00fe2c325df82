"""Shock algebra for planar isentropic MHD at infinite resistivity.

Everything is expressed in the normalized frame: shock speed -1, left
specific volume 1, left velocity 0.  Jump conditions, rest-point
enumeration and typing, shock classification, relative entropy, Mach
numbers, and the geometry of the four-rest-point parameter region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import (DegenerateBifurcationError, EntropyViolationError,
                     InvalidShockError, MhdShockError, NonGenericConfigError,
                     NotPhysicalError, SingularConfigError)
from .numerics import find_root

# Normalization record shared by the whole package.
SHOCK_SPEED = -1.0
V_MINUS = 1.0
U_MINUS = 0.0
W_MINUS = 0.0

# a-values below this are clamped in limit-study mode (large-amplitude runs).
A_FLOOR = 1e-12

_DOUBLE_ROOT_TOL = 1e-8
_K_EXCLUSION = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Physical constants and normalized shock data.

    ``tau = 2*mu + eta`` holds exactly; ``J`` and ``K`` are derived from the
    primitive fields and verified on construction.  ``B2_minus``, ``w_plus``
    and ``a`` come from the jump conditions (:func:`solve_rh`).
    """

    gamma: float
    a: float
    mu: float
    eta: float
    tau: float
    mu0: float
    I: float
    B2_plus: float
    v_plus: float
    B2_minus: float
    w_plus: float
    J: float
    K: float

    def __post_init__(self):
        if self.gamma < 1.0:
            raise ValueError("gamma must be >= 1")
        if self.mu <= 0.0 or self.mu0 <= 0.0 or self.tau <= 0.0:
            raise ValueError("viscosities and permeability must be positive")
        if self.tau != 2.0 * self.mu + self.eta:
            raise ValueError("tau must equal 2*mu + eta exactly")
        if abs(self.J - self.B2_minus ** 2 / (2.0 * self.mu0)) > 1e-14 * max(1.0, self.J):
            raise ValueError("stored J disagrees with B2_minus**2 / (2 mu0)")
        if abs(self.K - self.I ** 2 / self.mu0) > 1e-14 * max(1.0, self.K):
            raise ValueError("stored K disagrees with I**2 / mu0")

    # -- pressure law -------------------------------------------------
    def p(self, v):
        return self.a * v ** -self.gamma

    def p_prime(self, v):
        return -self.gamma * self.a * v ** (-self.gamma - 1.0)

    def pressure_integral(self, v):
        """Integral of p from 1 to v."""
        if self.gamma == 1.0:
            return self.a * np.log(v)
        return self.a * (v ** (1.0 - self.gamma) - 1.0) / (1.0 - self.gamma)

    @property
    def r_ratio(self) -> float:
        """Viscosity ratio mu / tau controlling intermediate profiles."""
        return self.mu / self.tau

    def with_viscosity(self, mu=None, tau=None, eta=None) -> "ModelParams":
        """Copy with a different viscosity triple (tau = 2 mu + eta kept)."""
        if mu is not None and tau is not None:
            eta_new = tau - 2.0 * mu
        elif mu is not None:
            eta_new = -2.0 * mu / 3.0 if eta is None else eta
        else:
            raise ValueError("specify mu (and optionally tau or eta)")
        # store tau re-derived so the exact identity holds bitwise
        return replace(self, mu=mu, eta=eta_new, tau=2.0 * mu + eta_new)

    # -- constructors -------------------------------------------------
    @staticmethod
    def from_primitive(gamma, v_plus, I, B2_plus, mu0=1.0, mu=0.75, tau=1.0,
                       limit_study=False) -> "ModelParams":
        """Build from the primitive sweep parameters (gamma, v+, I, B2+).

        Solves the jump conditions for the remaining state and the pressure
        constant.  ``limit_study`` clamps non-positive ``a`` at 1e-12 to
        support large-amplitude sequences.
        """
        u_plus, B2_minus, w_plus, a, J, K = solve_rh(
            gamma, v_plus, I, B2_plus, mu0=mu0, limit_study=limit_study)
        eta = tau - 2.0 * mu
        return ModelParams(gamma=gamma, a=a, mu=mu, eta=eta,
                           tau=2.0 * mu + eta, mu0=mu0, I=I,
                           B2_plus=B2_plus, v_plus=v_plus,
                           B2_minus=B2_minus, w_plus=w_plus, J=J, K=K)

    @staticmethod
    def from_reduced(gamma, K, J, v_plus=None, a=None, mu0=1.0, mu=0.75,
                     tau=1.0, limit_study=False) -> "ModelParams":
        """Build from the reduced parameters (gamma, K, J) plus v+ or a.

        The left field takes the sign convention ``B2_minus <= 0``.  With
        ``v_plus`` given, ``a`` comes from the jump conditions; with ``a``
        given, ``v_plus`` is resolved to the smallest rest-point root.
        """
        if K < 0.0 or J < 0.0:
            raise ValueError("K and J must be nonnegative")
        if abs(K - 1.0) < 1e-12:
            raise DegenerateBifurcationError(
                "K = 1 collapses three rest points")
        I = math.sqrt(K * mu0)
        B2_minus = -math.sqrt(2.0 * mu0 * J)
        eta = tau - 2.0 * mu
        tau = 2.0 * mu + eta
        if v_plus is not None:
            if abs(v_plus - K) < _K_EXCLUSION:
                raise SingularConfigError("v_plus on the Alfven line v = K")
            a_val = a_from_jump(gamma, v_plus, J, K)
            if a_val <= 0.0:
                if not limit_study:
                    raise NotPhysicalError(a_val, 0.0)
                a_val = A_FLOOR
            B2_plus = B2_minus * (1.0 - K) / (v_plus - K)
            w_plus = I * B2_minus * (1.0 - v_plus) / (mu0 * (v_plus - K)) if I > 0 else 0.0
            return ModelParams(gamma=gamma, a=a_val, mu=mu, eta=eta, tau=tau,
                               mu0=mu0, I=I, B2_plus=B2_plus, v_plus=v_plus,
                               B2_minus=B2_minus, w_plus=w_plus, J=J, K=K)
        if a is None:
            raise ValueError("from_reduced needs v_plus or a")
        if a <= 0.0:
            if not limit_study:
                raise NotPhysicalError(a, 0.0)
            a = max(a, A_FLOOR)
        pts = rest_points(gamma, a, J, K, mu0=mu0, B2_minus=B2_minus)
        v_lo = pts[0].v
        B2_plus = B2_minus * (1.0 - K) / (v_lo - K)
        w_lo = pts[0].w
        return ModelParams(gamma=gamma, a=a, mu=mu, eta=eta, tau=tau,
                           mu0=mu0, I=I, B2_plus=B2_plus, v_plus=v_lo,
                           B2_minus=B2_minus, w_plus=w_lo, J=J, K=K)


@dataclass(frozen=True)
class RestPoint:
    """One root of the reduced jump relations with its dynamical type."""

    v: float
    u: float
    w: float
    B2: float
    dyn_type: str          # 'saddle' | 'attractor' | 'repellor'
    side: str              # 'below_K' | 'above_K' | 'parallel'
    entropy: float
    index_j: int
    f_prime: float         # derivative of the reduced jump function at v

    def state(self):
        return np.array([self.v, self.u, self.w, self.B2])

    def vw(self):
        return np.array([self.v, self.w])


@dataclass(frozen=True)
class ShockType:
    """Characteristic bookkeeping for one candidate connection."""

    jk_2d: tuple
    jk_3d: tuple
    ell_2d: int
    ell_3d: int
    class_2d: str          # 'lax' | 'overcompressive' | 'undercompressive'
    class_3d: str
    intermediate: bool

    @property
    def shock_class(self) -> str:
        """Planar classification; drives the contour origin policy."""
        return self.class_2d

    def label(self) -> str:
        j, k = self.jk_2d
        tag = {"lax": "Lax", "overcompressive": "OC",
               "undercompressive": "UC"}[self.class_2d]
        body = f"{tag} {j}" if j == k else f"{tag} {j}-{k}"
        return body + (" (intermediate)" if self.intermediate else "")


# ---------------------------------------------------------------------------
# jump conditions
# ---------------------------------------------------------------------------

def a_from_jump(gamma, v_plus, J, K):
    """Pressure constant forced by the jump conditions, J-form."""
    lead = (1.0 - v_plus) / (v_plus ** -gamma - 1.0)
    return lead * (1.0 - J * (1.0 + v_plus - 2.0 * K) / (v_plus - K) ** 2)


def solve_rh(gamma, v_plus, I, B2_plus, mu0=1.0, limit_study=False):
    """Unique solution of the jump conditions in the normalized frame.

    Returns ``(u_plus, B2_minus, w_plus, a, J, K)``.  The four relations are
    re-substituted and must close to 1e-12.

    Raises
    ------
    DegenerateBifurcationError
        If ``K = I**2/mu0`` equals 1 (three rest points collapse).
    NotPhysicalError
        If the forced pressure constant is non-positive and ``limit_study``
        is off.
    """
    if v_plus <= 0.0:
        raise InvalidShockError("v_plus must be positive")
    if abs(v_plus - 1.0) < 1e-14:
        raise InvalidShockError("v_plus = 1 admits no profile (zero jump)")
    K = I ** 2 / mu0
    if abs(K - 1.0) < 1e-12:
        raise DegenerateBifurcationError("K = 1 collapses three rest points")
    u_plus = v_plus - 1.0
    B2_minus = (v_plus - K) / (1.0 - K) * B2_plus
    w_plus = 0.0 if I == 0.0 else (K / I) * ((1.0 - v_plus) / (1.0 - K)) * B2_plus
    J = B2_minus ** 2 / (2.0 * mu0)
    a = ((1.0 - v_plus) / (v_plus ** -gamma - 1.0)) * (
        1.0 - (B2_plus ** 2 / (2.0 * mu0)) * (1.0 + v_plus - 2.0 * K) / (1.0 - K) ** 2)
    if a <= 0.0:
        if not limit_study:
            bound = (v_plus - K) ** 2 / (1.0 - 2.0 * K) if K < 0.5 else math.inf
            raise NotPhysicalError(a, bound)
        a = A_FLOOR
        res = math.inf
    else:
        res = rh_residual(gamma, a, mu0, I, v_plus, u_plus, w_plus,
                          B2_plus, B2_minus)
        if res > 1e-12:
            raise MhdShockError(f"jump-condition residual {res:.3e} > 1e-12")
    return u_plus, B2_minus, w_plus, a, J, K


def rh_residual(gamma, a, mu0, I, v_plus, u_plus, w_plus, B2_plus, B2_minus):
    """Max absolute residual of the four jump relations (speed -1 frame)."""
    p_plus = a * v_plus ** -gamma
    p_minus = a
    r1 = (v_plus - V_MINUS) - (u_plus - U_MINUS)
    r2 = (u_plus - U_MINUS) + (p_plus - p_minus
                               + (B2_plus ** 2 - B2_minus ** 2) / (2.0 * mu0))
    r3 = (w_plus - W_MINUS) - (I / mu0) * (B2_plus - B2_minus)
    r4 = (v_plus * B2_plus - V_MINUS * B2_minus) - I * (w_plus - W_MINUS)
    return max(abs(r1), abs(r2), abs(r3), abs(r4))


def rescale(gamma, s, v_minus, v_plus, I, B2_plus, mu0=1.0, a=None,
            mu=0.75, tau=1.0, limit_study=False):
    """Normalize an arbitrary left-moving shock to the s=-1, v-=1 frame.

    Applies the similarity scaling (volume by ``1/v_minus``, field by
    ``-1/s``, permeability by ``v_minus``, pressure constant by
    ``v_minus**(-gamma-1)/s**2``) and solves the jump conditions in the new
    frame.  Already-normalized input is a fixed point.  When ``a`` is given
    it is cross-checked against the value forced by the jump conditions.
    """
    if s >= 0.0:
        raise InvalidShockError("only left-moving shocks (s < 0) are handled")
    if v_minus <= 0.0:
        raise InvalidShockError("v_minus must be positive")
    eps = v_minus
    params = ModelParams.from_primitive(
        gamma, v_plus / eps, -I / s, -B2_plus / s, mu0=eps * mu0,
        mu=mu, tau=tau, limit_study=limit_study)
    if a is not None:
        a_scaled = a * eps ** (-gamma - 1.0) / s ** 2
        if abs(a_scaled - params.a) > 1e-8 * max(1.0, abs(params.a)):
            raise InvalidShockError(
                f"supplied pressure constant rescales to {a_scaled:.6g} but "
                f"the jump conditions force {params.a:.6g}")
    return params


# ---------------------------------------------------------------------------
# rest points
# ---------------------------------------------------------------------------

def f_tilde(v, gamma, a, J, K):
    """Reduced jump function whose roots are the rest-point volumes."""
    v = np.asarray(v, dtype=float)
    return (a * (v ** -gamma - 1.0)
            + J * ((1.0 - K) ** 2 / (v - K) ** 2 - 1.0) + v - 1.0)


def f_tilde_prime(v, gamma, a, J, K):
    return (-gamma * a * v ** (-gamma - 1.0)
            - 2.0 * J * (1.0 - K) ** 2 / (v - K) ** 3 + 1.0)


def f_factored(v, gamma, a, J, K):
    """``f_tilde`` with the root v = 1 factored out.

    Expanding the quotient gives a minus sign on the magnetic term:
    ``(p(v)-p(1))/(v-1) - J (1+v-2K)/(v-K)^2 + 1``.
    """
    v = np.asarray(v, dtype=float)
    near_one = np.abs(v - 1.0) < 1e-9
    # placeholder keeps denominators nonzero; overwritten below
    safe = np.where(near_one, K + 1.7914, v)
    val = (a * (safe ** -gamma - 1.0) / (safe - 1.0)
           - J * (1.0 + safe - 2.0 * K) / (safe - K) ** 2 + 1.0)
    if np.any(near_one):
        lim = f_tilde_prime(1.0, gamma, a, J, K)
        val = np.where(near_one, lim, val)
    return val


def relative_entropy(v, w, p: ModelParams, B2_minus=None):
    """Scalar potential increasing along planar profile orbits.

    Critical exactly at rest points; rows of its gradient are the
    (viscosity-free) right-hand sides of the planar traveling-wave system.
    """
    if np.any(np.asarray(v) <= 0.0):
        raise ValueError("relative entropy requires v > 0")
    Bm = p.B2_minus if B2_minus is None else B2_minus
    return _phi_hat(v, w, p.gamma, p.a, p.I, Bm, p.mu0)


def _phi_hat(v, w, gamma, a, I, B2_minus, mu0):
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if gamma == 1.0:
        pint = a * np.log(v)
    else:
        pint = a * (v ** (1.0 - gamma) - 1.0) / (1.0 - gamma)
    K = I ** 2 / mu0
    return (pint - a * (v - 1.0) + 0.5 * (v - 1.0) ** 2
            + 0.5 * w ** 2 * (1.0 - K / v)
            + (B2_minus * I * w / mu0) * (1.0 - 1.0 / v)
            - (B2_minus ** 2 / (2.0 * mu0)) * (v + 1.0 / v))


def entropy_gradient(v, w, p: ModelParams, B2_minus=None):
    """Analytic gradient of the relative entropy (volume, transverse)."""
    Bm = p.B2_minus if B2_minus is None else B2_minus
    pres = p.a * v ** -p.gamma
    g_v = (pres - p.a
           + ((Bm + p.I * w) ** 2 - v ** 2 * Bm ** 2) / (2.0 * p.mu0 * v ** 2)
           + v - 1.0)
    g_w = -p.I * (Bm + p.I * w - Bm * v) / (p.mu0 * v) + w
    return g_v, g_w


def _build_rest_point(v, gamma, a, J, K, mu0, I, B2_minus, dyn_type, side, fp):
    B2 = B2_minus * (1.0 - K) / (v - K)
    w = I * B2_minus * (1.0 - v) / (mu0 * (v - K)) if I > 0.0 else 0.0
    phi = float(_phi_hat(v, w, gamma, a, I, B2_minus, mu0))
    return RestPoint(v=float(v), u=float(v - 1.0), w=float(w), B2=float(B2),
                     dyn_type=dyn_type, side=side, entropy=phi,
                     index_j=0, f_prime=float(fp))


def rest_points(gamma, a, J, K, mu0=1.0, B2_minus=None):
    """All rest points of the traveling-wave system, ordered by volume.

    Nonparallel case: roots of the reduced jump function (v = 1 always
    included), typed per side of K: the largest root above K is a repellor,
    the smallest below K an attractor, the rest saddles.  Parallel case
    (J = 0): the gas-dynamical root pair plus, when K sits between them,
    two Alfven saddles at v = K.

    Raises ``NonGenericConfigError`` when a (near-)double root is detected.
    """
    if a <= 0.0:
        raise ValueError("a must be positive (clamp via limit_study upstream)")
    if K < 0.0 or J < 0.0:
        raise ValueError("J and K must be nonnegative")
    if abs(K - 1.0) < 1e-12:
        raise DegenerateBifurcationError("K = 1 collapses three rest points")
    I = math.sqrt(K * mu0)

    if J == 0.0:
        points = _rest_points_parallel(gamma, a, K, mu0, I)
    else:
        if B2_minus is None:
            B2_minus = -math.sqrt(2.0 * mu0 * J)
        points = _rest_points_nonparallel(gamma, a, J, K, mu0, I, B2_minus)

    points.sort(key=lambda rp: (rp.v, rp.w))
    out = []
    for j, rp in enumerate(points, start=1):
        out.append(replace(rp, index_j=j))
    return out


def _roots_by_scan(func, lo, hi, n=2000, log_spaced=True):
    """Sign-change scan followed by bracketed refinement."""
    if hi <= lo:
        return []
    if log_spaced:
        grid = np.geomspace(lo, hi, n)
    else:
        grid = np.linspace(lo, hi, n)
    vals = func(grid)
    roots = []
    sign = np.sign(vals)
    for i in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        roots.append(find_root(lambda v: float(func(v)),
                               (grid[i], grid[i + 1]), tol=1e-14))
    for i in np.nonzero(vals == 0.0)[0]:
        roots.append(float(grid[i]))
    return sorted(roots)


def _rest_points_nonparallel(gamma, a, J, K, mu0, I, B2_minus):
    v_over = K + J / 2.0 + math.sqrt(max(J * J / 4.0 + J * (1.0 - K), 0.0))
    # f_tilde > 0 outside [lo, hi]: the pressure term dominates below lo,
    # the volume term above hi
    hi = max(3.0, 2.0 * v_over, 2.0 + a + J)
    lo = min(1e-4, 0.5 * (a / (a + J + 1.0)) ** (1.0 / gamma))

    def f(v):
        return f_factored(v, gamma, a, J, K)

    roots = []
    if K > _K_EXCLUSION:
        roots += _roots_by_scan(f, lo, K - _K_EXCLUSION)
    roots += _roots_by_scan(f, K + _K_EXCLUSION, hi)
    roots = [r for r in roots if abs(r - 1.0) > 1e-9]
    roots.append(1.0)
    roots = sorted(set(round(r, 13) for r in roots))

    for r in roots:
        if abs(f_tilde_prime(r, gamma, a, J, K)) < _DOUBLE_ROOT_TOL:
            raise NonGenericConfigError(
                f"near-double root at v = {r:.8g}; types are ambiguous")

    below = [r for r in roots if r < K]
    above = [r for r in roots if r > K]
    points = []
    for r in roots:
        fp = f_tilde_prime(r, gamma, a, J, K)
        if r > K:
            side = "above_K"
            dyn = "repellor" if r == max(above) else "saddle"
        else:
            side = "below_K"
            dyn = "attractor" if r == min(below) else "saddle"
        points.append(_build_rest_point(r, gamma, a, J, K, mu0, I, B2_minus,
                                        dyn, side, fp))
    return points


def _rest_points_parallel(gamma, a, K, mu0, I):
    def g(v):
        v = np.asarray(v, dtype=float)
        return a * (v ** -gamma - 1.0) + v - 1.0

    g_prime_1 = 1.0 - gamma * a
    if abs(g_prime_1) < _DOUBLE_ROOT_TOL:
        raise NonGenericConfigError("parallel double root at v = 1 "
                                    "(a = 1/gamma)")
    if g_prime_1 > 0.0:
        lo = 0.4 * (a / (a + 1.0)) ** (1.0 / gamma)
        v_star = _roots_by_scan(g, lo, 1.0 - 1e-9)[-1]
    else:
        v_star = _roots_by_scan(g, 1.0 + 1e-9, 2.0 + a,
                                log_spaced=False)[0]

    lo, hi = min(v_star, 1.0), max(v_star, 1.0)
    has_alfven = lo < K < hi

    def mk(v, dyn):
        fp = float(f_tilde_prime(v, gamma, a, 0.0, K))
        phi = float(_phi_hat(v, 0.0, gamma, a, I, 0.0, mu0))
        return RestPoint(v=float(v), u=float(v - 1.0), w=0.0, B2=0.0,
                         dyn_type=dyn, side="parallel", entropy=phi,
                         index_j=0, f_prime=fp)

    points = []
    if has_alfven:
        points.append(mk(1.0, "repellor"))
        points.append(mk(v_star, "attractor"))
        gK = float(g(K))
        B = math.sqrt(max(-2.0 * mu0 * gK, 0.0))
        for B_val in (B, -B):
            w = K * B_val / I
            phi = float(_phi_hat(K, w, gamma, a, I, 0.0, mu0))
            points.append(RestPoint(v=float(K), u=float(K - 1.0), w=float(w),
                                    B2=float(B_val), dyn_type="saddle",
                                    side="parallel", entropy=phi,
                                    index_j=0, f_prime=0.0))
    elif K < lo:
        # both rest points above K
        points.append(mk(max(v_star, 1.0), "repellor"))
        points.append(mk(min(v_star, 1.0), "saddle"))
    else:
        # both rest points below K
        points.append(mk(min(v_star, 1.0), "attractor"))
        points.append(mk(max(v_star, 1.0), "saddle"))
    return points


# ---------------------------------------------------------------------------
# parameter-region geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionInfo:
    region: str                      # 'R1' | 'R2' | 'R3' | 'outside'
    a_interval: Optional[tuple]      # (0, A) for K < 1, (A_tilde, inf) for K > 1

    @property
    def four_point(self) -> bool:
        return self.region != "outside"


def q_probe(J, K):
    """Value of the limiting quadratic at v = 0; negative means inside."""
    return -K * K + J * (1.0 - 2.0 * K)


def _has_root_in(gamma, a, J, K, lo, hi):
    if hi <= lo:
        return False
    grid = np.geomspace(max(lo, 1e-6), hi, 1200)
    vals = f_tilde(grid, gamma, a, J, K)
    return bool(np.any(vals[:-1] * vals[1:] < 0.0) or np.any(vals == 0.0))


def four_point_upper_a(J, K, gamma, mu0=1.0):
    """Largest pressure constant admitting a rest point below K (K < 1)."""
    if not _has_root_in(gamma, A_FLOOR, J, K, 1e-6, K - _K_EXCLUSION):
        return 0.0
    hi = 1.0
    while _has_root_in(gamma, hi, J, K, 1e-6, K - _K_EXCLUSION):
        hi *= 2.0
        if hi > 1e6:
            return math.inf
    lo = A_FLOOR
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _has_root_in(gamma, mid, J, K, 1e-6, K - _K_EXCLUSION):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _lower_a_above_K(J, K, gamma):
    """Smallest a with a root pair above K (K > 1 branch)."""
    if _has_root_in(gamma, A_FLOOR, J, K, K + _K_EXCLUSION, 10.0 * K + 10.0):
        return 0.0
    lo = A_FLOOR
    hi = 1.0
    while not _has_root_in(gamma, hi, J, K, K + _K_EXCLUSION, 10.0 * K + 10.0):
        hi *= 2.0
        if hi > 1e8:
            return math.inf
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _has_root_in(gamma, mid, J, K, K + _K_EXCLUSION, 10.0 * K + 10.0):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def four_point_region(J, K, gamma=5 / 3, mu0=1.0) -> RegionInfo:
    """Membership of (J, K) in the four-rest-point region with a-interval.

    For K < 1 the decisive criterion is ``q(0) < 0`` with
    ``q(0) = -K^2 + J(1-2K)``; membership comes with the admissible interval
    ``(0, A(J, K))``.  For K > 1 four points occur for ``a`` above a
    threshold, zero exactly when ``J > 4(K-1)``.
    """
    if J < 0.0 or K < 0.0:
        raise ValueError("J and K must be nonnegative")
    if abs(K - 1.0) < 1e-12:
        raise DegenerateBifurcationError("K = 1 collapses three rest points")
    if K < 1.0:
        inside = q_probe(J, K) < 0.0
        if not inside:
            return RegionInfo("outside", None)
        region = "R1" if K < 0.5 else "R2"
        if J == 0.0:
            return RegionInfo(region, (0.0, math.inf))
        A = four_point_upper_a(J, K, gamma, mu0)
        return RegionInfo(region, (0.0, A))
    a_tilde = _lower_a_above_K(J, K, gamma)
    region = "R3" if J > 4.0 * (K - 1.0) else "outside"
    return RegionInfo(region, (a_tilde, math.inf))


def amplitude_limits(J, K, gamma):
    """Amplitude bounds: root band of the pressure bracket plus a-limits.

    Returns ``(v_under, v_over, a_star, A_upper)``.  The band endpoints are
    real when ``J^2/4 + J(1-K) >= 0`` (always for K <= 1); otherwise both
    are returned as None.  ``a_star`` marks the characteristic boundary
    where the reduced jump function has a critical root at v = 1.
    """
    rad = J * J / 4.0 + J * (1.0 - K)
    if rad >= 0.0:
        root = math.sqrt(rad)
        v_under = K + J / 2.0 - root
        v_over = K + J / 2.0 + root
    else:
        v_under = v_over = None
    if abs(K - 1.0) < 1e-12:
        raise DegenerateBifurcationError("K = 1 collapses three rest points")
    a_star = (1.0 - K - 2.0 * J) / (gamma * (1.0 - K))
    A_upper = four_point_upper_a(J, K, gamma) if K < 1.0 else math.inf
    return v_under, v_over, a_star, A_upper


# ---------------------------------------------------------------------------
# classification, Hessian signature, Mach numbers
# ---------------------------------------------------------------------------

def classify_shock(from_rp: RestPoint, to_rp: RestPoint, config) -> ShockType:
    """Characteristic type of the connection ``from -> to`` (v decreasing).

    Planar labels: same side of K gives regular Lax 1/2; in a four-point
    configuration the node-to-node connection is overcompressive 1-2, the
    outer saddle bridges are intermediate Lax, and the middle saddle pair is
    undercompressive 2-1.  The corresponding full-space labels replace the
    intermediate Lax connections by overcompressive types and the planar
    undercompressive by a rotational (Alfven) Lax 2.
    """
    if from_rp.v <= to_rp.v:
        raise EntropyViolationError(
            "profiles with increasing specific volume are excluded by the "
            "entropy inequality")
    order = sorted(config, key=lambda rp: (rp.v, rp.w))
    n = len(order)

    def pos(rp):
        for i, q in enumerate(order):
            if abs(q.v - rp.v) < 1e-12 and abs(q.w - rp.w) < 1e-12:
                return i
        raise ValueError("rest point not part of the configuration")

    i_from, i_to = pos(from_rp), pos(to_rp)

    if {from_rp.side, to_rp.side} == {"parallel"}:
        return _classify_parallel(from_rp, to_rp, config)

    above = from_rp.side == "above_K" and to_rp.side == "above_K"
    below = from_rp.side == "below_K" and to_rp.side == "below_K"
    if above:
        return ShockType((1, 1), (1, 1), 1, 1, "lax", "lax", False)
    if below:
        return ShockType((2, 2), (3, 3), 1, 1, "lax", "lax", False)

    # intermediate connection in a four-point configuration
    if n < 4:
        raise ValueError("intermediate connection requires four rest points")
    if i_from == n - 1 and i_to == 0:          # v4 -> v1
        return ShockType((1, 2), (1, 3), 2, 3,
                         "overcompressive", "overcompressive", True)
    if i_from == n - 1 and i_to == 1:          # v4 -> v2
        return ShockType((1, 1), (1, 2), 1, 2,
                         "lax", "overcompressive", True)
    if i_from == n - 2 and i_to == 0:          # v3 -> v1
        return ShockType((2, 2), (2, 3), 1, 2,
                         "lax", "overcompressive", True)
    if i_from == n - 2 and i_to == 1:          # v3 -> v2
        return ShockType((2, 1), (2, 2), 0, 1,
                         "undercompressive", "lax", True)
    raise ValueError("unrecognized connection pattern")


def _classify_parallel(from_rp, to_rp, config):
    K_location = None
    for rp in config:
        if rp.B2 != 0.0:
            K_location = rp.v
    straddle = K_location is not None
    if not straddle:
        # two-point parallel configuration; K off the segment
        if from_rp.dyn_type == "repellor" or to_rp.dyn_type == "saddle":
            return ShockType((1, 1), (1, 1), 1, 1, "lax", "lax", False)
        return ShockType((2, 2), (3, 3), 1, 1, "lax", "lax", False)
    if from_rp.B2 == 0.0 and to_rp.B2 == 0.0:
        return ShockType((1, 2), (1, 3), 2, 3,
                         "overcompressive", "overcompressive", True)
    if from_rp.B2 == 0.0:
        return ShockType((1, 1), (1, 2), 1, 2, "lax", "overcompressive", True)
    return ShockType((2, 2), (2, 3), 1, 2, "lax", "overcompressive", True)


def hessian_signature(rp: RestPoint, p: ModelParams):
    """Hessian determinant of the reduced entropy, computed two ways.

    The 3x3 Hessian in (volume, transverse velocity, field) coordinates is
    evaluated numerically and compared against the closed form
    ``mu0 (v - K) ftilde'(v)`` valid at rest points.  Returns
    ``(det_sign, f_prime_sign, consistent)``.
    """
    v = rp.v
    if abs(v - p.K) < 1e-8:
        raise SingularConfigError("rest point on the Alfven line v = K")
    B = rp.B2
    H = np.array([
        [p.p_prime(v) + 1.0, 0.0, B],
        [0.0, 1.0, -p.I],
        [B, -p.I, v * p.mu0],
    ])
    det = float(np.linalg.det(H))
    fp = float(f_tilde_prime(v, p.gamma, p.a, p.J, p.K))
    closed = p.mu0 * (v - p.K) * fp
    consistent = (math.copysign(1.0, det) == math.copysign(1.0, closed)
                  and abs(det - closed) <= 1e-8 * max(1.0, abs(det)))
    return (int(math.copysign(1.0, det)), int(math.copysign(1.0, fp)),
            consistent)


def mach_number(p, family="lax1"):
    """Mach number 1/c- with c- the fast or slow magnetoacoustic speed.

    ``family='lax1'`` takes the fast (+) branch, ``'lax2'`` the slow (-)
    branch.  Invariant under the normalizing rescaling, so it measures
    shock strength in the original frame.
    """
    return mach_number_reduced(p.gamma, p.a, p.J, p.K, family)


def mach_number_reduced(gamma, a, J, K, family="lax1"):
    if a <= 0.0:
        raise ValueError("a must be positive (clamped limit-study allowed)")
    b = gamma * a + 2.0 * J + K
    disc = b * b - 4.0 * gamma * a * K
    if disc < 0.0:
        raise MhdShockError("negative magnetoacoustic discriminant; "
                            "inconsistent parameters")
    root = math.sqrt(disc)
    c2 = 0.5 * (b + root) if family == "lax1" else 0.5 * (b - root)
    if c2 <= 0.0:
        raise MhdShockError(f"non-positive squared speed for family {family}")
    return 1.0 / math.sqrt(c2)
