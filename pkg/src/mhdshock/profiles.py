"""Connecting orbits of the planar traveling-wave system.

Shooting construction of all profile types: same-side Lax connections from
saddle manifolds, the overcompressive family from transversal seeds, the
undercompressive viscosity-ratio bisection, plus nullcline geometry and
truncation of raw orbits to a centered numerical profile.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (BracketError, MhdShockError, NearCompositeError,
                     NoConnectionError, NonConvergentOrbitError,
                     StiffnessError)
from .model import (ModelParams, RestPoint, ShockType, classify_shock,
                    relative_entropy, rest_points)
from .numerics import Trajectory, eig_small, find_root, integrate_adaptive

PROFILE_TOL = 1e-3      # endstate deviation defining the truncation lengths
DELTA_LAND = 1e-4       # landing radius at target rest points
LAUNCH_EPS = 1e-6       # saddle launch offset relative to rest-point scale
X_BUDGET = 500.0        # total integration budget for one shot
L_MAX = 200.0           # truncation cap before declaring a composite wave
L_STANDARD = 10.0       # domain flagged as the common sufficient length
FINE_STEP = 0.015       # max integrator step for profile-producing shots


def rhs_planar(v, w, p: ModelParams, B2_minus=None):
    """Right-hand side of the planar profile system (volume, transverse).

    ``tau v' = v(v-1) + v(p(v)-p(1)) + ((B- + Iw)^2 - v^2 B-^2)/(2 mu0 v)``
    and ``mu w' = v w - (I/mu0)(B-(1-v) + Iw)``.
    """
    if np.any(np.asarray(v) <= 0.0):
        raise ValueError("rhs_planar requires v > 0")
    Bm = p.B2_minus if B2_minus is None else B2_minus
    pres = p.a * v ** -p.gamma
    dv = (v * (v - 1.0) + v * (pres - p.a)
          + ((Bm + p.I * w) ** 2 - v ** 2 * Bm ** 2) / (2.0 * p.mu0 * v)) / p.tau
    dw = (v * w - (p.I / p.mu0) * (Bm * (1.0 - v) + p.I * w)) / p.mu
    return dv, dw


def planar_jacobian(v, w, p: ModelParams, B2_minus=None):
    Bm = p.B2_minus if B2_minus is None else B2_minus
    pres = p.a * v ** -p.gamma
    dpres = -p.gamma * p.a * v ** (-p.gamma - 1.0)
    dv_dv = (2.0 * v - 1.0 + (pres - p.a) + v * dpres
             - (Bm + p.I * w) ** 2 / (2.0 * p.mu0 * v ** 2)
             - Bm ** 2 / (2.0 * p.mu0)) / p.tau
    dv_dw = p.I * (Bm + p.I * w) / (p.mu0 * v * p.tau)
    dw_dv = (w + p.I * Bm / p.mu0) / p.mu
    dw_dw = (v - p.K) / p.mu
    return np.array([[dv_dv, dv_dw], [dw_dv, dw_dw]])


def h_tilde(v, p: ModelParams):
    """Shifted enthalpy-like function whose negative band hosts the orbits."""
    return p.a * np.asarray(v, dtype=float) ** -p.gamma - p.a + v - 1.0 - p.J


def nullclines(p: ModelParams, B2_minus=None, n=600):
    """Sampled nullcline curves of the planar system.

    The volume nullcline is the closed curve ``Iw = -B- +/- sqrt(-2 mu0 v^2
    h(v))`` over the band where ``h <= 0``; the transverse nullcline has two
    hyperbola branches ``w = I B- (1-v) / (mu0 (v-K))`` split by v = K.
    Curves may be empty.  In the parallel case the transverse nullcline
    degenerates to the axis w = 0 plus the vertical line v = K.
    """
    Bm = p.B2_minus if B2_minus is None else B2_minus
    out = {}

    # band where h_tilde <= 0
    grid = np.linspace(1e-3, max(3.0, 2.0 + p.a + p.J), 6000)
    hv = h_tilde(grid, p)
    neg = np.nonzero(hv <= 0.0)[0]
    if neg.size:
        lo_idx, hi_idx = neg[0], neg[-1]
        v_lo = grid[max(lo_idx - 1, 0)]
        v_hi = grid[min(hi_idx + 1, grid.size - 1)]
        v_lo = find_root(lambda v: float(h_tilde(v, p)), (v_lo, grid[lo_idx]),
                         tol=1e-13) if h_tilde(v_lo, p) > 0 else v_lo
        v_hi = find_root(lambda v: float(h_tilde(v, p)), (grid[hi_idx], v_hi),
                         tol=1e-13) if h_tilde(v_hi, p) > 0 else v_hi
        vs = np.linspace(v_lo, v_hi, n)
        rad = np.sqrt(np.maximum(-2.0 * p.mu0 * vs ** 2 * h_tilde(vs, p), 0.0))
        if p.I > 0.0:
            out["C_upper"] = (vs, (-Bm + rad) / p.I)
            out["C_lower"] = (vs, (-Bm - rad) / p.I)
        else:
            out["C_upper"] = (vs, np.full_like(vs, np.nan))
            out["C_lower"] = (vs, np.full_like(vs, np.nan))
    else:
        out["C_upper"] = (np.array([]), np.array([]))
        out["C_lower"] = (np.array([]), np.array([]))

    hi = max(3.0, 2.0 + p.a + p.J)
    if p.J > 0.0 and p.I > 0.0:
        if p.K > 1e-9:
            vs_l = np.linspace(1e-3, p.K - 1e-6, n)
            out["B_left"] = (vs_l, p.I * Bm * (1.0 - vs_l)
                             / (p.mu0 * (vs_l - p.K)))
        else:
            out["B_left"] = (np.array([]), np.array([]))
        vs_r = np.linspace(p.K + 1e-6, hi, n)
        out["B_right"] = (vs_r, p.I * Bm * (1.0 - vs_r)
                          / (p.mu0 * (vs_r - p.K)))
    else:
        vs = np.linspace(1e-3, hi, n)
        out["B_left"] = (vs, np.zeros_like(vs))
        out["B_right"] = (np.full(n, p.K), np.linspace(-3.0, 3.0, n))
    return out


# ---------------------------------------------------------------------------
# shooting machinery
# ---------------------------------------------------------------------------

@dataclass
class RawOrbit:
    """Assembled shooting result, oriented with increasing x."""
    xs: np.ndarray
    vs: np.ndarray
    ws: np.ndarray

    def as_trajectory(self, p, B2_minus=None):
        dv, dw = rhs_planar(self.vs, self.ws, p, B2_minus)
        ys = np.column_stack([self.vs, self.ws]).astype(complex)
        dys = np.column_stack([dv, dw]).astype(complex)
        return Trajectory(self.xs, ys, dys)


def _escape_ceiling(p: ModelParams):
    rad = math.sqrt(max(p.J ** 2 / 4.0 + p.J * (1.0 - p.K), 0.0))
    v_over = p.K + p.J / 2.0 + rad
    return 2.0 * v_over + 1.0


def _v_floor(p: ModelParams, targets):
    lo = 0.5 * (p.a / (p.a + p.J + 1.0)) ** (1.0 / p.gamma)
    t_min = min(t.v for t in targets)
    return min(1e-4, 0.5 * lo, 0.25 * t_min)


def _shoot(p, start, target, reverse=False, B2_minus=None,
           budget=X_BUDGET, section_w=None, extra_targets=(),
           max_step=0.5):
    """Integrate from ``start`` until landing, escape, or budget exhaustion.

    Returns ``(label, orbit, x_land, section_v)`` where label is ``"landed"``,
    ``"landed_extra:<i>"`` or ``"escaped"``; the orbit is oriented in the
    integration parameter (reverse handled by the caller).  ``section_w``
    optionally records the volume at the first crossing of that w level.
    """
    Bm = p.B2_minus if B2_minus is None else B2_minus
    sign = -1.0 if reverse else 1.0
    # ceiling must clear every rest point involved, not just the a->0 band
    v_esc = max(_escape_ceiling(p),
                2.0 * max(t.v for t in (target,) + tuple(extra_targets))
                + 1.0)
    v_flo = _v_floor(p, (target,) + tuple(extra_targets))

    def fld(x, y):
        dv, dw = rhs_planar(y[0].real, y[1].real, p, Bm)
        return np.array([sign * dv, sign * dw], dtype=complex)

    def dist_to(point, v, w):
        return max(abs(v - point.v), abs(w - point.w))

    all_targets = [target] + list(extra_targets)
    xs_parts, ys_parts = [], []
    x0 = 0.0
    y = np.array(start, dtype=complex)
    section_v = None
    chunk = 2.0
    while x0 < budget:
        traj = None
        step = chunk
        while step >= 1e-3:
            try:
                traj = integrate_adaptive(fld, (x0, min(x0 + step, budget)),
                                          y, max_step=max_step)
                break
            except (StiffnessError, ValueError):
                # finite-x blowup of an escaping orbit; salvage a shorter leg
                step /= 8.0
        if traj is None:
            xs, ys = _stack(xs_parts, ys_parts, None, None)
            return "escaped", (xs, ys), None, section_v
        vs = traj.ys[:, 0].real
        ws = traj.ys[:, 1].real
        if section_w is not None and section_v is None:
            crossings = np.nonzero((ws[:-1] - section_w)
                                   * (ws[1:] - section_w) <= 0.0)[0]
            if crossings.size:
                i = crossings[0]
                t = (section_w - ws[i]) / (ws[i + 1] - ws[i]) \
                    if ws[i + 1] != ws[i] else 0.0
                section_v = float(vs[i] + t * (vs[i + 1] - vs[i]))
        for j in range(1, traj.xs.size):
            v_j, w_j = vs[j], ws[j]
            for ti, tgt in enumerate(all_targets):
                if dist_to(tgt, v_j, w_j) <= DELTA_LAND:
                    x_land = _refine_landing(traj, tgt, traj.xs[j - 1],
                                             traj.xs[j])
                    xs_parts.append(traj.xs[:j])
                    ys_parts.append(traj.ys[:j])
                    xs, ys = _stack(xs_parts, ys_parts, x_land,
                                    traj(x_land))
                    label = "landed" if ti == 0 else f"landed_extra:{ti - 1}"
                    return label, (xs, ys), x_land, section_v
            if v_j > v_esc or v_j < v_flo:
                xs_parts.append(traj.xs[: j + 1])
                ys_parts.append(traj.ys[: j + 1])
                xs, ys = _stack(xs_parts, ys_parts, None, None)
                return "escaped", (xs, ys), None, section_v
        xs_parts.append(traj.xs)
        ys_parts.append(traj.ys)
        x0 = traj.xs[-1]
        y = traj.ys[-1]
    raise NonConvergentOrbitError(
        f"orbit still wandering after x budget {budget}")


def _refine_landing(traj, tgt, x_lo, x_hi):
    def gap(x):
        y = traj(x)
        return max(abs(y[0].real - tgt.v), abs(y[1].real - tgt.w)) - DELTA_LAND
    if gap(x_lo) <= 0.0:
        return float(x_lo)
    return float(find_root(gap, (x_lo, x_hi), tol=1e-12))


def _stack(xs_parts, ys_parts, x_land, y_land):
    xs = np.concatenate(xs_parts) if xs_parts else np.empty(0)
    ys = (np.concatenate(ys_parts) if ys_parts
          else np.empty((0, 2), dtype=complex))
    if x_land is not None:
        xs = np.append(xs, x_land)
        ys = np.vstack([ys, y_land])
    # drop duplicated chunk boundaries
    keep = np.ones(xs.size, dtype=bool)
    keep[1:] = np.diff(xs) > 0.0
    return xs[keep], ys[keep]


def _saddle_direction(saddle: RestPoint, p, toward: RestPoint, stable=False,
                      B2_minus=None):
    Jm = planar_jacobian(saddle.v, saddle.w, p, B2_minus)
    pairs = eig_small(Jm)
    lams = [lam.real for lam, _ in pairs]
    if not (min(lams) < 0.0 < max(lams)):
        raise MhdShockError(f"linearization at v = {saddle.v:.6g} is not of "
                            f"saddle type (eigenvalues {lams})")
    want_negative = stable
    lam, vec = min(pairs, key=lambda lv: lv[0].real) if want_negative \
        else max(pairs, key=lambda lv: lv[0].real)
    e = vec.real / np.linalg.norm(vec.real)
    drift = np.array([toward.v - saddle.v, toward.w - saddle.w])
    if float(e @ drift) < 0.0:
        e = -e
    return e


def _launch_point(saddle, e):
    scale = max(1.0, abs(saddle.v), abs(saddle.w))
    return np.array([saddle.v, saddle.w]) + LAUNCH_EPS * scale * e


# ---------------------------------------------------------------------------
# profile container
# ---------------------------------------------------------------------------

@dataclass
class Profile:
    """Heteroclinic orbit truncated to [-L-, L+] on a uniform grid.

    Node data carries the orbit, its exact derivatives, and the derived
    field component ``B2 = (B2- + I w)/v``.  The grid center follows a fixed
    convention: the volume midpoint for monotone profiles, the volume
    extremum otherwise, so spectral evaluation at x = 0 is reproducible.
    """

    params: ModelParams
    kind: ShockType
    L_minus: float
    L_plus: float
    xs: np.ndarray
    v: np.ndarray
    w: np.ndarray
    vp: np.ndarray
    wp: np.ndarray
    B2: np.ndarray
    B2p: np.ndarray
    end_minus: RestPoint
    end_plus: RestPoint
    B2_const: float        # global integration constant v B2 - I w
    monotone_v: bool
    monotone_w: bool
    composite_proximity: float
    within_standard_domain: bool
    meta: dict = field(default_factory=dict)

    @property
    def B2_minus(self):
        return self.B2_const

    def values_at(self, x):
        """Scalar fast path: (v, w, vp, wp, B2) at x, endstates outside."""
        p = self.params
        Bm = self.B2_minus
        if x <= self.xs[0]:
            rp = self.end_minus
            return rp.v, rp.w, 0.0, 0.0, rp.B2
        if x >= self.xs[-1]:
            rp = self.end_plus
            return rp.v, rp.w, 0.0, 0.0, rp.B2
        h = self.xs[1] - self.xs[0]
        i = min(int((x - self.xs[0]) / h), self.xs.size - 2)
        t = (x - self.xs[i]) / h
        t2 = t * t
        t3 = t2 * t
        a0 = 2 * t3 - 3 * t2 + 1
        a1 = (t3 - 2 * t2 + t) * h
        a2 = -2 * t3 + 3 * t2
        a3 = (t3 - t2) * h
        v = a0 * self.v[i] + a1 * self.vp[i] + a2 * self.v[i + 1] + a3 * self.vp[i + 1]
        w = a0 * self.w[i] + a1 * self.wp[i] + a2 * self.w[i + 1] + a3 * self.wp[i + 1]
        pres = p.a * v ** -p.gamma
        vp = (v * (v - 1.0) + v * (pres - p.a)
              + ((Bm + p.I * w) ** 2 - v ** 2 * Bm ** 2)
              / (2.0 * p.mu0 * v)) / p.tau
        wp = (v * w - (p.I / p.mu0) * (Bm * (1.0 - v) + p.I * w)) / p.mu
        B2 = (Bm + p.I * w) / v
        return v, w, vp, wp, B2

    def entropy_along(self):
        return relative_entropy(self.v, self.w, self.params, self.B2_minus)

    def ode_residual(self):
        """Relative defect of the dense interpolant against the planar
        system, sampled at interval midpoints."""
        h = self.xs[1] - self.xs[0]
        # cubic Hermite value and slope at midpoints (t = 1/2)
        vm = (0.5 * (self.v[:-1] + self.v[1:])
              + 0.125 * h * (self.vp[:-1] - self.vp[1:]))
        wm = (0.5 * (self.w[:-1] + self.w[1:])
              + 0.125 * h * (self.wp[:-1] - self.wp[1:]))
        svm = (1.5 * (self.v[1:] - self.v[:-1]) / h
               - 0.25 * (self.vp[:-1] + self.vp[1:]))
        swm = (1.5 * (self.w[1:] - self.w[:-1]) / h
               - 0.25 * (self.wp[:-1] + self.wp[1:]))
        dv, dw = rhs_planar(vm, wm, self.params, self.B2_minus)
        scale = max(1.0, float(np.max(np.abs(self.vp))),
                    float(np.max(np.abs(self.wp))))
        return float(max(np.max(np.abs(svm - dv)), np.max(np.abs(swm - dw)))
                     / scale)

    # -- serialization -------------------------------------------------
    def to_text(self):
        p = self.params
        buf = io.StringIO()
        fmt = "%.17g"

        def line(tag, *vals):
            buf.write("# " + tag + " "
                      + " ".join(fmt % v for v in vals) + "\n")

        buf.write("# mhdshock profile v1\n")
        line("params", p.gamma, p.a, p.mu, p.eta, p.tau, p.mu0, p.I,
             p.B2_plus, p.v_plus, p.B2_minus, p.w_plus, p.J, p.K)
        buf.write(f"# kind {self.kind.class_2d} {self.kind.class_3d} "
                  f"{self.kind.jk_2d[0]} {self.kind.jk_2d[1]} "
                  f"{self.kind.jk_3d[0]} {self.kind.jk_3d[1]} "
                  f"{int(self.kind.intermediate)}\n")
        line("L", self.L_minus, self.L_plus)
        line("Bconst", self.B2_const)
        for tag, rp in (("end_minus", self.end_minus),
                        ("end_plus", self.end_plus)):
            buf.write(f"# {tag} {rp.dyn_type} {rp.side} {rp.index_j} "
                      + " ".join(fmt % v for v in
                                 (rp.v, rp.u, rp.w, rp.B2, rp.entropy,
                                  rp.f_prime)) + "\n")
        buf.write(f"# flags {int(self.monotone_v)} {int(self.monotone_w)} "
                  f"{fmt % self.composite_proximity} "
                  f"{int(self.within_standard_domain)}\n")
        buf.write("# columns x v w vp wp B2 B2p\n")
        cols = np.column_stack([self.xs, self.v, self.w, self.vp, self.wp,
                                self.B2, self.B2p])
        for row in cols:
            buf.write(" ".join(fmt % c for c in row) + "\n")
        return buf.getvalue()

    @staticmethod
    def from_text(text):
        lines = text.strip().splitlines()
        hdr = {}
        rows = []
        kind = None
        ends = {}
        flags = None
        for ln in lines:
            if ln.startswith("#"):
                parts = ln[1:].split()
                if not parts or parts[0] in ("mhdshock", "columns"):
                    continue
                if parts[0] == "kind":
                    kind = ShockType(
                        jk_2d=(int(parts[3]), int(parts[4])),
                        jk_3d=(int(parts[5]), int(parts[6])),
                        ell_2d=int(parts[4]) - int(parts[3]) + 1,
                        ell_3d=int(parts[6]) - int(parts[5]) + 1,
                        class_2d=parts[1],
                        class_3d=parts[2],
                        intermediate=bool(int(parts[7])))
                elif parts[0] in ("end_minus", "end_plus"):
                    vals = [float(v) for v in parts[4:]]
                    ends[parts[0]] = RestPoint(
                        v=vals[0], u=vals[1], w=vals[2], B2=vals[3],
                        dyn_type=parts[1], side=parts[2],
                        entropy=vals[4], index_j=int(parts[3]),
                        f_prime=vals[5])
                elif parts[0] == "flags":
                    flags = parts[1:]
                else:
                    hdr[parts[0]] = [float(v) for v in parts[1:]]
            else:
                rows.append([float(v) for v in ln.split()])
        pv = hdr["params"]
        params = ModelParams(gamma=pv[0], a=pv[1], mu=pv[2], eta=pv[3],
                             tau=pv[4], mu0=pv[5], I=pv[6], B2_plus=pv[7],
                             v_plus=pv[8], B2_minus=pv[9], w_plus=pv[10],
                             J=pv[11], K=pv[12])
        arr = np.array(rows)
        return Profile(
            params=params, kind=kind, L_minus=hdr["L"][0], L_plus=hdr["L"][1],
            xs=arr[:, 0], v=arr[:, 1], w=arr[:, 2], vp=arr[:, 3],
            wp=arr[:, 4], B2=arr[:, 5], B2p=arr[:, 6],
            end_minus=ends["end_minus"], end_plus=ends["end_plus"],
            B2_const=hdr["Bconst"][0],
            monotone_v=bool(int(flags[0])), monotone_w=bool(int(flags[1])),
            composite_proximity=float(flags[2]),
            within_standard_domain=bool(int(flags[3])))


# ---------------------------------------------------------------------------
# truncation / centering
# ---------------------------------------------------------------------------

def truncate_and_center(raw: RawOrbit, end_minus: RestPoint,
                        end_plus: RestPoint, p: ModelParams, kind: ShockType,
                        config=None, tol=PROFILE_TOL, B2_minus=None):
    """Cut a raw orbit to the smallest domain within ``tol`` of both
    endstates, center it, and resample on a uniform grid.

    Centering convention: volume midpoint for monotone-volume profiles, the
    volume extremum otherwise.  Raises ``NearCompositeError`` when the
    needed half-length exceeds the cap.
    """
    Bm = p.B2_minus if B2_minus is None else B2_minus
    traj = raw.as_trajectory(p, Bm)
    xs, vs, ws = raw.xs, raw.vs, raw.ws

    dev_minus = np.maximum(np.abs(vs - end_minus.v), np.abs(ws - end_minus.w))
    dev_plus = np.maximum(np.abs(vs - end_plus.v), np.abs(ws - end_plus.w))

    # innermost indices where deviation stays below tol toward each end
    left_ok = np.nonzero(dev_minus > tol)[0]
    i_left = 0 if left_ok.size == 0 else left_ok[0]
    right_ok = np.nonzero(dev_plus > tol)[0]
    i_right = xs.size - 1 if right_ok.size == 0 else right_ok[-1]
    if i_left > 0:
        i_left -= 1
    if i_right < xs.size - 1:
        i_right += 1

    # center on a volume extremum only when it overshoots the endstate
    # range by more than the truncation tolerance; landing-radius wiggles
    # near a spiral node are not a centering feature
    over_hi = float(np.max(vs) - max(end_minus.v, end_plus.v))
    over_lo = float(min(end_minus.v, end_plus.v) - np.min(vs))
    if max(over_hi, over_lo) <= tol:
        v_mid = 0.5 * (end_minus.v + end_plus.v)
        k = int(np.nonzero((vs[:-1] - v_mid) * (vs[1:] - v_mid) <= 0.0)[0][0])
        x_center = find_root(lambda x: float(traj(x)[0].real - v_mid),
                             (xs[k], xs[k + 1]), tol=1e-12)
    else:
        k = int(np.argmax(vs)) if over_hi > over_lo else int(np.argmin(vs))
        k = max(1, min(k, xs.size - 2))
        x_center = _extremum_x(traj, xs, k)

    L_minus = x_center - xs[i_left]
    L_plus = xs[i_right] - x_center
    if L_minus > L_MAX or L_plus > L_MAX:
        raise NearCompositeError(max(L_minus, L_plus), L_MAX)
    if L_minus <= 0.0 or L_plus <= 0.0:
        raise NoConnectionError("degenerate truncation window")

    h = max(0.02, (L_minus + L_plus) / 8000.0)
    n = int(math.ceil((L_minus + L_plus) / h)) + 1
    grid = np.linspace(-L_minus, L_plus, n)
    states = traj(grid + x_center)
    v = states[:, 0].real.copy()
    w = states[:, 1].real.copy()
    vp, wp = rhs_planar(v, w, p, Bm)
    B2 = (Bm + p.I * w) / v
    B2p = (p.I * wp * v - (Bm + p.I * w) * vp) / v ** 2

    mono_v = bool(np.all(vp <= 1e-14) or np.all(vp >= -1e-14))
    mono_w = bool(np.all(wp <= 1e-14) or np.all(wp >= -1e-14))

    prox = math.inf
    if config is not None:
        lo_v = min(end_minus.v, end_plus.v)
        hi_v = max(end_minus.v, end_plus.v)
        for rp in config:
            if lo_v + 1e-12 < rp.v < hi_v - 1e-12:
                d = np.min(np.maximum(np.abs(v - rp.v), np.abs(w - rp.w)))
                prox = min(prox, float(d))

    return Profile(
        params=p, kind=kind, L_minus=float(L_minus), L_plus=float(L_plus),
        xs=grid, v=v, w=w, vp=vp, wp=wp, B2=B2, B2p=B2p,
        end_minus=end_minus, end_plus=end_plus,
        B2_const=Bm,
        monotone_v=mono_v, monotone_w=mono_w, composite_proximity=prox,
        within_standard_domain=bool(L_minus <= L_STANDARD
                                    and L_plus <= L_STANDARD))


def _extremum_x(traj, xs, k):
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, xs.size - 1)]

    def slope(x):
        return float(traj.derivative(x)[0].real)

    try:
        return find_root(slope, (lo, hi), tol=1e-12)
    except BracketError:
        return float(xs[k])


# ---------------------------------------------------------------------------
# connections
# ---------------------------------------------------------------------------

def _config_for(p: ModelParams, config):
    if config is not None:
        return config
    return rest_points(p.gamma, p.a, p.J, p.K, mu0=p.mu0,
                       B2_minus=p.B2_minus)


def connect_lax(saddle: RestPoint, node: RestPoint, p: ModelParams,
                config=None) -> Profile:
    """Lax connection from a saddle manifold to a node.

    Forward shooting along the unstable eigenvector when the node attracts;
    backward shooting along the stable eigenvector when it repels.  The
    orbit is truncated and centered into a Profile.
    """
    config = _config_for(p, config)
    if node.dyn_type == "attractor":
        reverse = False
        from_rp, to_rp = saddle, node
        e = _saddle_direction(saddle, p, node, stable=False)
    elif node.dyn_type == "repellor":
        reverse = True
        from_rp, to_rp = node, saddle
        e = _saddle_direction(saddle, p, node, stable=True)
    else:
        raise ValueError("second argument must be a node (attractor/repellor)")
    kind = classify_shock(from_rp, to_rp, config)
    if kind.class_2d != "lax":
        raise ValueError(f"connection classifies as {kind.class_2d}, "
                         "not lax")
    start = _launch_point(saddle, e)
    label, (xs, ys), x_land, _ = _shoot(p, start, node, reverse=reverse,
                                        max_step=FINE_STEP)
    if label != "landed":
        raise NoConnectionError(
            f"orbit from saddle v = {saddle.v:.6g} escaped before reaching "
            f"node v = {node.v:.6g}")
    vs, ws = ys[:, 0].real, ys[:, 1].real
    if reverse:
        raw = RawOrbit(-xs[::-1], vs[::-1], ws[::-1])
    else:
        raw = RawOrbit(xs, vs, ws)
    return truncate_and_center(raw, from_rp, to_rp, p, kind, config)


def oc_seeds(config, n=5):
    """Evenly spaced seeds on the segment joining the two saddles."""
    saddles = [rp for rp in config if rp.dyn_type == "saddle"]
    if len(saddles) != 2:
        raise ValueError("overcompressive seeding needs two saddles")
    a, b = saddles[0].vw(), saddles[1].vw()
    return [a + (i / (n + 1)) * (b - a) for i in range(1, n + 1)]


def connect_overcompressive(seed, p: ModelParams, config=None) -> Profile:
    """Overcompressive connection through a transversal seed point.

    Forward integration must land at the attractor, backward at the
    repellor; the two legs are spliced into one profile.
    """
    config = _config_for(p, config)
    attr = [rp for rp in config if rp.dyn_type == "attractor"]
    rep = [rp for rp in config if rp.dyn_type == "repellor"]
    if not attr or not rep:
        raise ValueError("configuration lacks attractor/repellor pair")
    attr, rep = attr[0], rep[0]
    lf, (xs_f, ys_f), _, _ = _shoot(p, seed, attr, max_step=FINE_STEP)
    if lf != "landed":
        raise NoConnectionError("forward leg escaped; seed is outside the "
                                "overcompressive family")
    lb, (xs_b, ys_b), _, _ = _shoot(p, seed, rep, reverse=True,
                                    max_step=FINE_STEP)
    if lb != "landed":
        raise NoConnectionError("backward leg escaped; seed is outside the "
                                "overcompressive family")
    xs = np.concatenate([-xs_b[::-1], xs_f[1:]])
    vs = np.concatenate([ys_b[::-1, 0].real, ys_f[1:, 0].real])
    ws = np.concatenate([ys_b[::-1, 1].real, ys_f[1:, 1].real])
    kind = classify_shock(rep, attr, config)
    return truncate_and_center(RawOrbit(xs, vs, ws), rep, attr, p, kind,
                               config)


def _uc_probe(p: ModelParams, config, max_step=0.5):
    """Launch from the unstable manifold of the upper saddle, decreasing v.

    Returns ``(label, raw_arrays, section_v)`` with label in
    ``{'to_v1', 'to_v2', 'escape'}``.
    """
    saddles = [rp for rp in config if rp.dyn_type == "saddle"]
    attr = [rp for rp in config if rp.dyn_type == "attractor"][0]
    v3 = max(saddles, key=lambda rp: rp.v)
    v2 = min(saddles, key=lambda rp: rp.v)
    e = _saddle_direction(v3, p, attr, stable=False)
    if e[0] > 0.0:
        e = -e
    start = _launch_point(v3, e)
    # mid-level section crossed by every probe orbit; the crossing volume
    # moves monotonically with the viscosity ratio (clockwise exit)
    section_w = 0.5 * (v3.w + v2.w)
    label, (xs, ys), _, section_v = _shoot(
        p, start, attr, section_w=section_w, extra_targets=(v2,),
        max_step=max_step)
    if label == "landed":
        return "to_v1", (xs, ys), section_v
    if label.startswith("landed_extra"):
        return "to_v2", (xs, ys), section_v
    return "escape", (xs, ys), section_v


def classify_orbit_exit(orbit, config):
    """Classify a computed probe orbit: lands at the attractor, the lower
    saddle, or escapes past the volume ceiling."""
    if isinstance(orbit, Trajectory):
        vs = orbit.ys[:, 0].real
        ws = orbit.ys[:, 1].real
    else:
        xs, ys = orbit
        vs, ws = ys[:, 0].real, ys[:, 1].real
    saddles = sorted((rp for rp in config if rp.dyn_type == "saddle"),
                     key=lambda rp: rp.v)
    attr = [rp for rp in config if rp.dyn_type == "attractor"][0]
    v2 = saddles[0]
    d1 = np.maximum(np.abs(vs - attr.v), np.abs(ws - attr.w))
    d2 = np.maximum(np.abs(vs - v2.v), np.abs(ws - v2.w))
    hit1 = np.nonzero(d1 <= DELTA_LAND)[0]
    hit2 = np.nonzero(d2 <= DELTA_LAND)[0]
    if hit2.size and (not hit1.size or hit2[0] < hit1[0]):
        return "to_v2"
    if hit1.size:
        return "to_v1"
    return "escape"


def find_r_star(p: ModelParams, bracket, config=None):
    """Viscosity ratio at which the undercompressive connection appears.

    Bisection on the probe-orbit classification over ``r = mu/tau`` (tau
    held fixed); the endpoint labels must be escape (low r) and landing at
    the attractor (high r).  Returns ``(r_star, uc_profile)``.
    """
    base_config = _config_for(p, config)
    if len(base_config) != 4:
        raise NoConnectionError("undercompressive search needs four rest "
                                "points")

    def probe(r):
        q = p.with_viscosity(mu=r * p.tau, tau=p.tau)
        return _uc_probe(q, base_config, max_step=FINE_STEP)

    lo, hi = bracket
    lab_lo, _, _ = probe(lo)
    lab_hi, _, _ = probe(hi)
    if lab_lo == "to_v2":
        lo_hit = lo
    elif lab_hi == "to_v2":
        lo_hit = hi
    else:
        if lab_lo != "escape" or lab_hi != "to_v1":
            raise NoConnectionError(
                f"bracket does not straddle the transition: "
                f"labels ({lab_lo}, {lab_hi})")
        lo_hit = None
    r_star = None
    result = None
    if lo_hit is None:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            lab, raw, _ = probe(mid)
            if lab == "to_v2":
                r_star, result = mid, raw
                break
            if lab == "escape":
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-13 * max(1.0, hi):
                break
        if r_star is None:
            raise NoConnectionError(
                "bisection exhausted without an undercompressive landing")
    else:
        r_star = lo_hit
        _, result, _ = probe(r_star)

    q = p.with_viscosity(mu=r_star * p.tau, tau=p.tau)
    saddles = sorted((rp for rp in base_config if rp.dyn_type == "saddle"),
                     key=lambda rp: rp.v)
    v2, v3 = saddles[0], saddles[1]
    kind = classify_shock(v3, v2, base_config)
    xs, ys = result
    raw = RawOrbit(xs, ys[:, 0].real, ys[:, 1].real)
    profile = truncate_and_center(raw, v3, v2, q, kind, base_config)
    return r_star, profile


def profile_diagnostics(pr: Profile, config=None):
    """Monotonicity flags, composite proximity, and the transverse-skip
    decision (monotone decreasing volume implies transverse stability)."""
    decreasing = bool(np.all(pr.vp <= 1e-14))
    transverse_skip = decreasing
    near_composite = pr.composite_proximity < 10.0 * PROFILE_TOL
    return {
        "monotone_v": pr.monotone_v,
        "monotone_w": pr.monotone_w,
        "composite_proximity": pr.composite_proximity,
        "transverse_skip": transverse_skip,
        "near_composite": near_composite,
    }
