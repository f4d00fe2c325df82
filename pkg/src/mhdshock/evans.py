"""Integrated eigenvalue systems along a profile and the Evans function.

The coplanar 6x6 and transverse 3x3 first-order systems are assembled from
interpolated profile data; asymptotic bases are continued analytically in
the spectral parameter by a projector-transport scheme, and the Evans
function is evaluated by continuous orthogonalization (polar coordinates:
orthonormal frame plus log-radius slaved to the frame).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistentSplittingError, MhdShockError
from .model import ModelParams
from .numerics import (integrate_adaptive, invariant_basis, orthonormalize,
                       spectral_projector)
from .profiles import Profile

COPLANAR = "coplanar6"
TRANSVERSE = "transverse3"


def coeff_h(x, pr: Profile, p: ModelParams = None):
    """Pressure-viscosity coefficient of the volume row.

    ``h = -tau v^(gamma-1) v' + a gamma`` along the profile; at the
    endstates only the pressure term survives.
    """
    p = pr.params if p is None else p
    v, _, vp, _, _ = pr.values_at(x)
    return -p.tau * v ** (p.gamma - 1.0) * vp + p.a * p.gamma


@dataclass
class SpectralSystem:
    """Selector for one of the two integrated eigenvalue systems."""

    variant: str
    profile: Profile

    def __post_init__(self):
        if self.variant not in (COPLANAR, TRANSVERSE):
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def params(self) -> ModelParams:
        return self.profile.params

    @property
    def dims(self) -> int:
        return 6 if self.variant == COPLANAR else 3

    def A(self, x, lam):
        """Coefficient matrix at position x; endstate values outside the
        truncated domain."""
        out = np.zeros((self.dims, self.dims), dtype=complex)
        self.fill(x, lam, out)
        return out

    def fill(self, x, lam, out):
        p = self.params
        v, w, vp, wp, B2 = self.profile.values_at(x)
        if self.variant == TRANSVERSE:
            _fill_transverse(out, lam, v, p)
            return
        h = -p.tau * v ** (p.gamma - 1.0) * vp + p.a * p.gamma
        f = (v - v ** -p.gamma * h) / p.tau
        _fill_coplanar(out, lam, v, wp, B2, f, p)

    def A_limit(self, side, lam):
        """Constant coefficient matrix at the minus or plus endstate."""
        p = self.params
        rp = self.profile.end_minus if side == "minus" else self.profile.end_plus
        out = np.zeros((self.dims, self.dims), dtype=complex)
        if self.variant == TRANSVERSE:
            _fill_transverse(out, lam, rp.v, p)
            return out
        f = (rp.v - rp.v ** -p.gamma * p.a * p.gamma) / p.tau
        _fill_coplanar(out, lam, rp.v, 0.0, rp.B2, f, p)
        return out

    def splitting(self, lam=1.0):
        """(k_minus, k_plus) = unstable/stable dimensions at the endstates;
        they must complement each other for Re(lam) > 0."""
        A_m = self.A_limit("minus", lam)
        A_p = self.A_limit("plus", lam)
        k_minus = invariant_basis(A_m, unstable=True).shape[1]
        k_plus = invariant_basis(A_p, unstable=False).shape[1]
        if k_minus + k_plus != self.dims:
            raise ConsistentSplittingError(
                complex(lam), f"dims {k_minus}+{k_plus} != {self.dims}")
        return k_minus, k_plus


def _fill_coplanar(A, lam, v, wp, B2, f, p):
    tau, mu, mu0, I, K = p.tau, p.mu, p.mu0, p.I, p.K
    A[0, 1] = lam
    A[0, 2] = 1.0
    A[1, 2] = 1.0
    A[2, 0] = lam * v / tau
    A[2, 1] = lam * v / tau
    A[2, 2] = f - lam - B2 * B2 / (mu0 * tau)
    A[2, 4] = I * B2 / (mu0 * mu * tau)
    A[2, 5] = -lam * B2 / (mu0 * tau)
    A[3, 4] = 1.0 / mu
    A[4, 2] = mu * wp / v + I * B2 / mu0
    A[4, 3] = lam * v
    A[4, 4] = (v - K) / mu
    A[4, 5] = lam * I / mu0
    A[5, 4] = I / mu
    A[5, 5] = -lam


def _fill_transverse(A, lam, v, p):
    A[0, 1] = 1.0 / p.mu
    A[1, 0] = lam * v
    A[1, 1] = (v - p.K) / p.mu
    A[1, 2] = p.I * lam / p.mu0
    A[2, 1] = p.I / p.mu
    A[2, 2] = -lam


def assemble_A(sys: SpectralSystem, x, lam):
    return sys.A(x, lam)


# ---------------------------------------------------------------------------
# analytic bases along a contour
# ---------------------------------------------------------------------------

@dataclass
class AnalyticBasis:
    """Analytically continued frames for one side of the phase space.

    One frame per contour node; ``shifts`` holds the trace of the limiting
    matrix restricted to the subspace (the growth normalization used by the
    radius equation).
    """

    side: str                 # 'minus_unstable' | 'plus_stable'
    contour: np.ndarray
    frames: list
    shifts: np.ndarray
    k: int

    def at(self, lam):
        idx = int(np.argmin(np.abs(self.contour - lam)))
        if abs(self.contour[idx] - lam) > 1e-12 * max(1.0, abs(lam)):
            raise KeyError(f"lambda {lam} is not a contour node")
        return self.frames[idx], self.shifts[idx]

    def conjugated(self):
        """Mirror basis for the conjugate contour (real seed symmetry)."""
        return AnalyticBasis(
            side=self.side, contour=np.conj(self.contour),
            frames=[np.conj(F) for F in self.frames],
            shifts=np.conj(self.shifts), k=self.k)


def projector_fn(sys, side):
    """Spectral projector of one limiting matrix as a function of lambda.

    Near-origin contour nodes carry slow modes with tiny real parts; the
    sign stays well above roundoff, so the tolerance here is the roundoff
    guard rather than the public splitting tolerance.
    """
    unstable = side == "minus_unstable"
    which = "minus" if unstable else "plus"

    def proj(lam):
        A = sys.A_limit(which, lam)
        try:
            return spectral_projector(A, unstable=unstable,
                                      center_tol=1e-12)
        except ConsistentSplittingError as exc:
            raise ConsistentSplittingError(
                exc.eigenvalue, f"lambda = {lam:.6g}") from exc
    return proj


def _log_substeps(lam_a, lam_b, max_dlog=0.2):
    """Waypoints from lam_a to lam_b, geometric in the log plane.

    Bounding the complex log increment bounds both the modulus ratio and
    the swept angle per transport step, which keeps the projector
    transport accurate across widely separated scales."""
    la, lb = cmath.log(lam_a), cmath.log(lam_b)
    n = max(1, int(math.ceil(abs(lb - la) / max_dlog)))
    return [cmath.exp(la + (lb - la) * (k / n)) for k in range(1, n + 1)]


def kato_transport(proj, frame, lam_from, lam_to, P_prev=None,
                   max_dlog=0.2):
    """Second-order projector transport of a frame between two nodes.

    Each substep exponentiates the commutator generator (projector
    increment against the midpoint projector) to second order and
    re-projects onto the exact subspace, keeping the subspace residual at
    roundoff while the frame varies analytically in the refinement limit.
    """
    if P_prev is None:
        P_prev = proj(lam_from)
    R = frame
    lam_prev = lam_from
    for lam_next in _log_substeps(lam_from, lam_to, max_dlog):
        P_next = proj(lam_next)
        P_mid = proj(0.5 * (lam_prev + lam_next))
        dP = P_next - P_prev
        G = dP @ P_mid - P_mid @ dP
        GR = G @ R
        R = P_next @ (R + GR + 0.5 * (G @ GR))
        P_prev, lam_prev = P_next, lam_next
    res = np.linalg.norm(R - P_prev @ R)
    if res > 1e-8:
        raise MhdShockError(f"subspace residual {res:.2e} at "
                            f"lambda = {lam_to:.6g}")
    return R, P_prev


def kato_basis(sys: SpectralSystem, contour, side,
               max_dlog=0.2) -> AnalyticBasis:
    """Transport an invariant-subspace basis analytically along a contour.

    One frame per contour node; transport between nodes is substepped in
    the log plane (cap ``max_dlog``), so widely spaced nodes still receive
    accurate frames.  A real seed node yields real frames, so conjugating
    the contour conjugates the basis.
    """
    if side not in ("minus_unstable", "plus_stable"):
        raise ValueError(f"unknown side {side!r}")
    unstable = side == "minus_unstable"
    which = "minus" if unstable else "plus"
    lams = np.asarray(contour, dtype=complex)
    proj = projector_fn(sys, side)

    A0 = sys.A_limit(which, lams[0])
    R = invariant_basis(A0, unstable=unstable)
    k = R.shape[1]
    frames = [R]
    P_here = proj(lams[0])
    shifts = [np.trace(A0 @ P_here)]
    for j in range(1, lams.size):
        R, P_here = kato_transport(proj, frames[-1], lams[j - 1], lams[j],
                                   P_prev=P_here, max_dlog=max_dlog)
        if R.shape[1] != k:
            raise ConsistentSplittingError(0.0, f"lambda = {lams[j]:.6g}")
        frames.append(R)
        A_next = sys.A_limit(which, lams[j])
        shifts.append(np.trace(A_next @ P_here))
    return AnalyticBasis(side=side, contour=lams, frames=frames,
                         shifts=np.array(shifts), k=k)


# ---------------------------------------------------------------------------
# Evans evaluation
# ---------------------------------------------------------------------------

def _evolve_polar(sys, lam, R, shift, x_from, x_to):
    """Drury frame/radius evolution of one side toward the matching point.

    Returns ``(Omega, log_rho)`` at ``x_to``; the radius carries the
    triangular factor of the initialization so frame times radius equals
    the transported analytic wedge (up to the growth normalization)."""
    n, k = R.shape
    Omega0, T = orthonormalize(R)
    log_rho0 = complex(np.sum(np.log(np.diag(T).real.astype(float))))
    A_buf = np.zeros((n, n), dtype=complex)
    fill = sys.fill

    def field(x, y):
        Om = y[:-1].reshape(n, k)
        fill(x, lam, A_buf)
        F = A_buf @ Om
        G = Om.conj().T @ F
        dOm = F - Om @ G
        out = np.empty(n * k + 1, dtype=complex)
        out[:-1] = dOm.ravel()
        out[-1] = np.trace(G) - shift
        return out

    y0 = np.empty(n * k + 1, dtype=complex)
    y0[:-1] = Omega0.ravel()
    y0[-1] = log_rho0
    traj = integrate_adaptive(field, (x_from, x_to), y0)
    y_end = traj.ys[-1]
    Omega = y_end[:-1].reshape(n, k)
    drift = np.linalg.norm(Omega.conj().T @ Omega - np.eye(k))
    log_rho = y_end[-1]
    if drift > 1e-9:
        Omega, T_fix = orthonormalize(Omega)
        log_rho = log_rho + complex(
            np.sum(np.log(np.diag(T_fix).real.astype(float))))
    return Omega, log_rho


def evans_eval(sys: SpectralSystem, lam, bases):
    """Integrated Evans function by the polar-coordinate method.

    ``bases`` is the pair (minus-side, plus-side) of analytic bases whose
    contours contain ``lam``.  Frames evolve by continuous
    orthogonalization from both truncation ends to x = 0 where the full
    determinant is taken; radii evolve in log form with the endpoint growth rates
    removed, which changes the result by a nonvanishing analytic factor
    only (winding-safe).
    """
    basis_minus, basis_plus = bases
    R_m, shift_m = basis_minus.at(lam)
    R_p, shift_p = basis_plus.at(lam)
    pr = sys.profile
    Om_m, lr_m = _evolve_polar(sys, lam, R_m, shift_m, -pr.L_minus, 0.0)
    Om_p, lr_p = _evolve_polar(sys, lam, R_p, shift_p, +pr.L_plus, 0.0)
    det = np.linalg.det(np.hstack([Om_m, Om_p]))
    return det * cmath.exp(lr_m + lr_p)


def evans_eval_conjugate_pair(sys, lam, bases):
    """Value at lam and independently computed value at conj(lam)."""
    val = evans_eval(sys, lam, bases)
    conj_bases = (bases[0].conjugated(), bases[1].conjugated())
    val_conj = evans_eval(sys, np.conj(lam), conj_bases)
    return val, val_conj


def evans_direct(sys: SpectralSystem, lam, bases=None, renorm_interval=1.0):
    """Direct-integration oracle for the polar method.

    Integrates the raw linear system for each basis column with QR
    renormalization at checkpoints (positive-real triangular diagonals, so
    only a positive factor is absorbed), then applies the same endpoint
    growth normalization as the polar method.  Returns a value with the
    same argument as :func:`evans_eval` and modulus rescaled by a positive
    real factor to unit order.
    """
    if abs(lam) > 4.0 + 1e-12:
        raise MhdShockError("direct integration is reliable only for "
                            "moderate |lambda| (<= 4); use the polar method")
    pr = sys.profile
    n = sys.dims
    if bases is not None:
        R_m, shift_m = bases[0].at(lam)
        R_p, shift_p = bases[1].at(lam)
    else:
        A_m = sys.A_limit("minus", lam)
        A_p = sys.A_limit("plus", lam)
        R_m = invariant_basis(A_m, unstable=True)
        R_p = invariant_basis(A_p, unstable=False)
        shift_m = np.trace(A_m @ spectral_projector(A_m, True))
        shift_p = np.trace(A_p @ spectral_projector(A_p, False))

    log_total = -shift_m * pr.L_minus + shift_p * pr.L_plus

    def run(R, x_from):
        nonlocal log_total
        k = R.shape[1]
        W = R.astype(complex)
        A_buf = np.zeros((n, n), dtype=complex)

        def field(x, y):
            sys.fill(x, lam, A_buf)
            return (A_buf @ y.reshape(n, k)).ravel()

        x = x_from
        direction = -1.0 if x_from > 0 else 1.0
        while (0.0 - x) * direction > 1e-13:
            x_next = x + direction * min(renorm_interval,
                                         abs(x) if abs(x) > 0 else 1.0)
            if (x_next - 0.0) * direction > 0:
                x_next = 0.0
            traj = integrate_adaptive(field, (x, x_next), W.ravel())
            W = traj.ys[-1].reshape(n, k)
            Q, T = orthonormalize(W)
            log_total += complex(
                np.sum(np.log(np.diag(T).real.astype(float))))
            W = Q
            x = x_next
        return W

    Q_m = run(R_m, -pr.L_minus)
    Q_p = run(R_p, +pr.L_plus)
    det = np.linalg.det(np.hstack([Q_m, Q_p]))
    # keep the argument, rescale the modulus by a positive real factor
    return det * cmath.exp(1j * log_total.imag)
