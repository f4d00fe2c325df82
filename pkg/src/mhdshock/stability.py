"""Contour construction, winding counts, radius calibration, verdicts.

The stability contour is the boundary of a half-disk in the right half
plane; only the upper half is evaluated, the lower half follows from
conjugation symmetry.  Adaptive node insertion keeps the per-step argument
change small, a curve fit against the high-frequency growth law calibrates
the radius, and the winding number delivers the verdict appropriate to
the shock class.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InconclusiveError
from .evans import (COPLANAR, TRANSVERSE, SpectralSystem, evans_eval,
                    kato_basis, kato_transport, projector_fn)
from .model import ShockType

from .profiles import Profile, profile_diagnostics

GAP_RADIUS = 1e-4
DETOUR_RADIUS = 1e-3
ARG_STEP_LIMIT = 0.2
ROUCHE_LIMIT = 1.0
ROUNDING_GUARD = 0.1
DETOUR_NODES = 8


@dataclass
class Contour:
    """Half-disk boundary with origin policy and a refinable upper path.

    ``upper`` lists the evaluated upper-half nodes in continuation order:
    the real seed R first, along the arc to iR, down the imaginary axis,
    then the detour waypoints when active.  ``tags`` records each node's
    geometric coordinate so refinement inserts exact midpoints; corner
    nodes (iR, i*gap) belong to one segment but pair with both.  The
    closed loop is the conjugate closure; only the gap jump across the
    origin is non-refinable (it is closed by symmetry).
    """

    R: float
    origin_policy: str      # 'gap' | 'detour'
    upper: list             # complex nodes in path order
    tags: list              # ('arc', theta) | ('axis', m) | ('detour', theta)

    @property
    def gap(self) -> float:
        return GAP_RADIUS if self.origin_policy == "gap" else DETOUR_RADIUS

    def path(self):
        """Continuation path (seeded at the real node R)."""
        return np.array(self.upper, dtype=complex)

    def loop(self):
        """Closed CCW loop as (upper_index, conjugate_flag) pairs.

        Order: from iR down the upper imaginary axis, around the origin
        (gap jump or detour), up the mirrored axis, along the lower arc,
        through the real seed, and up the upper arc back to iR.
        """
        arc = [i for i, t in enumerate(self.tags) if t[0] == "arc"]
        axis = [i for i, t in enumerate(self.tags) if t[0] == "axis"]
        det = [i for i, t in enumerate(self.tags) if t[0] == "detour"]
        arc.sort(key=lambda i: self.tags[i][1])       # theta ascending
        axis.sort(key=lambda i: -self.tags[i][1])     # modulus descending
        det.sort(key=lambda i: -self.tags[i][1])      # theta descending

        loop = [(arc[-1], False)]                         # iR
        loop += [(i, False) for i in axis]                # down to i*gap
        loop += [(i, False) for i in det]                 # detour upper half
        mirror_det = [i for i in det if self.upper[i].imag != 0.0]
        loop += [(i, True) for i in reversed(mirror_det)]
        loop += [(i, True) for i in reversed(axis)]       # -i*gap -> up
        loop += [(i, True) for i in reversed(arc[1:])]    # -iR -> near R
        loop += [(i, False) for i in arc[:-1]]            # R -> near iR
        return loop

    def node_value(self, entry):
        i, conj = entry
        z = self.upper[i]
        return np.conj(z) if conj else z

    def _effective(self, i, j):
        """Common segment of an adjacent pair, corner nodes resolved."""
        ki, kj = self.tags[i][0], self.tags[j][0]
        if ki == kj:
            return ki, self.tags[i][1], self.tags[j][1]
        pair = {ki, kj}
        if pair == {"arc", "axis"}:
            # corner at iR: the arc endpoint doubles as axis modulus R
            pi = self.R if ki == "arc" else self.tags[i][1]
            pj = self.R if kj == "arc" else self.tags[j][1]
            return "axis", pi, pj
        if pair == {"axis", "detour"}:
            # corner at i*gap: the axis endpoint doubles as detour pi/2
            pi = 0.5 * math.pi if ki == "axis" else self.tags[i][1]
            pj = 0.5 * math.pi if kj == "axis" else self.tags[j][1]
            return "detour", pi, pj
        return None, None, None

    def insert_midpoint(self, i, j):
        """Insert the geometric midpoint between path-adjacent nodes i, j.

        Returns the new node's index, or None for the non-refinable gap
        jump (i == j, closed by symmetry)."""
        if abs(i - j) != 1:
            return None
        kind, pi, pj = self._effective(i, j)
        if kind is None:
            return None
        param = 0.5 * (pi + pj)
        if kind == "arc":
            z = self.R * cmath.exp(1j * param)
        elif kind == "axis":
            z = 1j * param
        else:
            z = self.gap * cmath.exp(1j * param)
        pos = max(i, j)
        self.upper.insert(pos, z)
        self.tags.insert(pos, (kind, param))
        return pos

    @property
    def n_points(self) -> int:
        return len(self.loop())


def build_contour(R, n_min=40, origin_policy="gap") -> Contour:
    """Half-disk contour with quadratic modulus spacing near the origin.

    The gap policy leaves the arc between -i*1e-4 and +i*1e-4 uncovered
    (the uncovered step is closed by conjugation symmetry); the detour
    policy walks a half circle of radius 1e-3 to the right of the origin,
    excluding it from the enclosed region.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if origin_policy not in ("gap", "detour"):
        raise ConfigurationError(f"unknown origin policy {origin_policy!r}")
    g = GAP_RADIUS if origin_policy == "gap" else DETOUR_RADIUS
    quarter = max(n_min // 4, 5)
    n_arc = quarter
    n_ax = quarter

    upper = []
    tags = []
    for k in range(n_arc + 1):
        th = k * (0.5 * math.pi) / n_arc
        upper.append(complex(R) if k == 0 else R * cmath.exp(1j * th))
        tags.append(("arc", th))
    for j in range(1, n_ax + 1):
        m = g + (R - g) * ((n_ax - j) / n_ax) ** 2
        upper.append(1j * m)
        tags.append(("axis", m))
    if origin_policy == "detour":
        for k in range(1, DETOUR_NODES + 1):
            th = 0.5 * math.pi * (1.0 - k / DETOUR_NODES)
            upper.append(g * cmath.exp(1j * th) if th != 0.0 else complex(g))
            tags.append(("detour", th))
    return Contour(R=R, origin_policy=origin_policy, upper=upper, tags=tags)


class FrameSet:
    """Analytic frames over a growing node set for one phase-space side.

    Seeds on the real axis, continues along the contour path; refinement
    nodes are transported in a single projector step from a neighbor,
    leaving existing frames untouched.  Lookups at conjugated nodes return
    the conjugated frame (real-seed symmetry).
    """

    def __init__(self, sys: SpectralSystem, side: str, path):
        self.sys = sys
        self.side = side
        self.unstable = side == "minus_unstable"
        self.which = "minus" if self.unstable else "plus"
        self._proj = projector_fn(sys, side)
        basis = kato_basis(sys, path, side)
        self.k = basis.k
        self._frames = {complex(l): (F, s) for l, F, s in
                        zip(basis.contour, basis.frames, basis.shifts)}

    def add(self, lam_from, lam_new):
        F_from, _ = self._frames[complex(lam_from)]
        F_new, P_new = kato_transport(self._proj, F_from, lam_from, lam_new)
        A_new = self.sys.A_limit(self.which, lam_new)
        self._frames[complex(lam_new)] = (F_new, np.trace(A_new @ P_new))

    def at(self, lam):
        key = complex(lam)
        if key in self._frames:
            return self._frames[key]
        ckey = complex(np.conj(lam))
        if ckey in self._frames:
            F, s = self._frames[ckey]
            return np.conj(F), np.conj(s)
        raise KeyError(f"no frame at lambda = {lam}")


class _Evaluator:
    """Caching Evans evaluator; conjugate nodes reuse computed values."""

    def __init__(self, sys, frames_minus, frames_plus):
        self.sys = sys
        self.frames = (frames_minus, frames_plus)
        self.cache = {}

    def __call__(self, lam):
        key = complex(lam)
        if key not in self.cache:
            ckey = complex(np.conj(lam))
            if ckey in self.cache:
                self.cache[key] = np.conj(self.cache[ckey])
            else:
                self.cache[key] = evans_eval(self.sys, lam, self.frames)
        return self.cache[key]


def _frame_sets(sys, contour: Contour):
    path = contour.path()
    return (FrameSet(sys, "minus_unstable", path),
            FrameSet(sys, "plus_stable", path))


def winding_number(sys: SpectralSystem, contour: Contour,
                   refine_budget=400, frame_sets=None, growth_alpha=0.0):
    """Winding of the Evans image with adaptive node insertion.

    Nodes are inserted until every step satisfies the argument-change
    criterion (0.2) and the hard relative-variation bound (1.0, the
    Rouche guarantee); an argument sum farther than a tenth of a turn
    from an integer reports as inconclusive.  Returns
    ``(winding, max_rel_step, n_points)``.

    ``growth_alpha`` divides the Evans values by the high-frequency model
    ``exp(alpha sqrt(lambda))``; that factor is analytic and nonvanishing
    on the half-disk, so the count is unchanged while the argument
    variation along the contour collapses to the nontrivial part.
    """
    fm, fp = frame_sets if frame_sets is not None \
        else _frame_sets(sys, contour)
    raw_ev = _Evaluator(sys, fm, fp)
    if growth_alpha:
        def ev(lam):
            return raw_ev(lam) * cmath.exp(-growth_alpha * cmath.sqrt(lam))
    else:
        ev = raw_ev

    spent = 0
    while True:
        loop = contour.loop()
        vals = [ev(contour.node_value(e)) for e in loop]
        for v, e in zip(vals, loop):
            if abs(v) < 1e-13:
                raise InconclusiveError(
                    f"Evans value vanishes at node "
                    f"{contour.node_value(e):.6g}; root on contour")
        pairs = set()
        worst = 0.0
        for idx in range(len(loop)):
            a, b = vals[idx], vals[(idx + 1) % len(loop)]
            darg = abs(cmath.phase(b / a))
            rel_sym = abs(b - a) / max(abs(a), abs(b))
            rel = abs(b - a) / min(abs(a), abs(b))
            worst = max(worst, darg, rel_sym)
            if (darg > ARG_STEP_LIMIT or rel_sym > ARG_STEP_LIMIT
                    or rel >= ROUCHE_LIMIT):
                i, j = loop[idx][0], loop[(idx + 1) % len(loop)][0]
                if abs(i - j) == 1 and contour.tags[i][0] == contour.tags[j][0]:
                    pairs.add((min(i, j), max(i, j)))
        if not pairs:
            break
        if spent + len(pairs) > refine_budget:
            raise InconclusiveError(
                f"refinement budget exhausted; worst |darg| = {worst:.3f}")
        for i, j in sorted(pairs, key=lambda ij: -ij[1]):
            pos = contour.insert_midpoint(i, j)
            if pos is None:
                continue
            lam_new = contour.upper[pos]
            anchor = contour.upper[pos - 1]
            fm.add(anchor, lam_new)
            fp.add(anchor, lam_new)
            spent += 1

    loop = contour.loop()
    vals = [ev(contour.node_value(e)) for e in loop]
    total = 0.0
    max_rel = 0.0
    for idx in range(len(loop)):
        a, b = vals[idx], vals[(idx + 1) % len(loop)]
        total += cmath.phase(b / a)
        # reported step error uses the symmetric convention; the Rouche
        # hard bound above is the conservative min-denominator form
        max_rel = max(max_rel, abs(b - a) / max(abs(a), abs(b)))
    turns = total / (2.0 * math.pi)
    if abs(turns - round(turns)) > ROUNDING_GUARD:
        raise InconclusiveError(
            f"argument sum {turns:.3f} turns is not near an integer; "
            "suspected root near the contour")
    return int(round(turns)), max_rel, len(loop)


def winding_of_samples(vals):
    """Winding number of an explicit closed sample loop (synthetic data)."""
    total = 0.0
    for idx in range(len(vals)):
        total += cmath.phase(vals[(idx + 1) % len(vals)] / vals[idx])
    return int(round(total / (2.0 * math.pi)))


def _sqrt_grid(r_lo, r_hi, per_doubling=16):
    """Real abscissae geometric in sqrt(lambda) from r_lo to r_hi."""
    q = 2.0 ** (1.0 / per_doubling)
    s = math.sqrt(r_lo)
    s_hi = math.sqrt(r_hi)
    out = [complex(s * s)]
    while s < s_hi * (1.0 - 1e-12):
        s = min(s * q, s_hi)
        out.append(complex(s * s))
    return out


def choose_radius(sys: SpectralSystem, R_init=2.0, R_cap=1024.0,
                  n_fit=9, origin_policy="gap"):
    """Smallest dyadic radius on which the high-frequency law converged.

    Fits ``log D = log C + alpha sqrt(lambda)`` on the real segment
    [R, 4R] and accepts R when the model matches the Evans values on the
    semicircle of radius R to relative error 0.1; otherwise the radius
    doubles.  The real-axis continuation is extended incrementally, so
    successive attempts reuse earlier evaluations (nested contours).
    C and alpha are real because the seeding is real.
    """
    seed_path = _sqrt_grid(R_init, 4.0 * R_init)
    fm = FrameSet(sys, "minus_unstable", np.array(seed_path))
    fp = FrameSet(sys, "plus_stable", np.array(seed_path))
    ev = _Evaluator(sys, fm, fp)
    known = list(seed_path)

    R = R_init
    while R <= R_cap:
        hi = 4.0 * R
        if hi > known[-1].real + 1e-12:
            ext = [z for z in _sqrt_grid(known[-1].real, hi)
                   if z.real > known[-1].real + 1e-12]
            for z in ext:
                fm.add(known[-1], z)
                fp.add(known[-1], z)
                known.append(z)
        window = [z for z in known if R - 1e-9 <= z.real <= hi + 1e-9]
        idx = np.linspace(0, len(window) - 1, min(n_fit, len(window)))
        lam_fit = [window[int(round(i))] for i in idx]
        fit_vals = np.array([ev(z) for z in lam_fit])
        if np.any(np.abs(fit_vals) < 1e-280) or \
                np.any(~np.isfinite(fit_vals)):
            R *= 2.0
            continue
        sign = 1.0 if fit_vals[0].real >= 0 else -1.0
        roots = np.sqrt([z.real for z in lam_fit])
        y = np.log(np.abs(fit_vals))
        M = np.column_stack([np.ones(len(roots)), roots])
        coef, *_ = np.linalg.lstsq(M, y, rcond=None)
        C = sign * math.exp(float(coef[0]))
        alpha = float(coef[1])

        # arc frames continue from the same analytic family as the fit
        probe = build_contour(R, n_min=40, origin_policy=origin_policy)
        arc_nodes = [z for z, t in zip(probe.upper, probe.tags)
                     if t[0] == "arc"]
        anchor = min(known, key=lambda z: abs(z - R))
        prev = anchor
        for z in arc_nodes:
            try:
                fm.at(z)
            except KeyError:
                fm.add(prev, z)
                fp.add(prev, z)
            prev = z
        rel_max = 0.0
        for z in arc_nodes:
            model = C * cmath.exp(alpha * cmath.sqrt(z))
            rel_max = max(rel_max, abs(ev(z) - model) / abs(model))
        if rel_max < 0.1:
            return R, C, alpha
        R *= 2.0
    raise InconclusiveError(f"no radius below {R_cap} satisfied the "
                            "high-frequency convergence test")


@dataclass
class StabilityReport:
    """Winding verdict with the diagnostics triple and radius fit."""

    variant: str
    shock_class: str
    winding: Optional[int]
    R: Optional[float]
    n_points: Optional[int]
    max_rel_step: Optional[float]
    fit_C: Optional[float]
    fit_alpha: Optional[float]
    verdict: str
    origin_policy: Optional[str] = None
    transverse_result: Optional[str] = None
    notes: dict = field(default_factory=dict)

    def diagnostics_triple(self) -> str:
        """(R, mesh points, relative step error) in survey-table format."""
        if self.R is None:
            return "(-,-,-)"
        if self.max_rel_step:
            exp = math.floor(math.log10(self.max_rel_step))
            mant = self.max_rel_step / 10.0 ** exp
            tail = f"{mant:.1f}({exp:+d})"
        else:
            tail = "0"
        return f"({self.R:g},{self.n_points},{tail})"


def verdict(shock: ShockType, coplanar_winding, transverse_result,
            origin_policy) -> str:
    """Verdict from windings per shock class.

    Lax and overcompressive classes are stable iff the gap-policy winding
    vanishes; the undercompressive class requires the detour policy (its
    origin root is excluded by the detour).  A skipped transverse check
    (monotone volume) counts as transverse-stable.
    """
    cls = shock.shock_class
    want = "detour" if cls == "undercompressive" else "gap"
    if origin_policy != want:
        raise ConfigurationError(
            f"{cls} verdict requires the {want} origin policy, got "
            f"{origin_policy}")
    coplanar_ok = coplanar_winding == 0
    trans_ok = transverse_result in (None, "stable", "skipped_monotone")
    if coplanar_ok and trans_ok:
        return "stable"
    if not coplanar_ok:
        return f"unstable({coplanar_winding})"
    return "unstable(transverse)"


def transverse_check(pr: Profile, R_init=2.0, n_min=40):
    """Transverse verdict: skipped for monotone-volume profiles, else a
    full winding run of the 3x3 system with the gap policy."""
    diag = profile_diagnostics(pr)
    if diag["transverse_skip"]:
        return "skipped_monotone", None
    sys3 = SpectralSystem(TRANSVERSE, pr)
    R, C, alpha = choose_radius(sys3, R_init=R_init)
    contour = build_contour(R, n_min=n_min, origin_policy="gap")
    w, max_rel, n_pts = winding_number(sys3, contour, growth_alpha=alpha)
    rep = StabilityReport(
        variant=TRANSVERSE, shock_class=pr.kind.shock_class, winding=w,
        R=R, n_points=n_pts, max_rel_step=max_rel, fit_C=C, fit_alpha=alpha,
        verdict="stable" if w == 0 else f"unstable({w})",
        origin_policy="gap")
    return rep.verdict, rep


def analyze_profile(pr: Profile, config=None, R_init=2.0, n_min=40,
                    skip_transverse=False) -> StabilityReport:
    """Full pipeline for one profile: policy, radius, windings, verdict.

    Near-composite profiles bypass the numerical computation and return
    the analytical verdict for their class: component stability for
    double-Lax structures, the at-most-one-root reduction when an
    undercompressive piece is involved.
    """
    diag = profile_diagnostics(pr, config)
    cls = pr.kind.shock_class
    if diag["near_composite"]:
        if cls == "undercompressive" or pr.kind.intermediate:
            verdict_tag = "analytical(at-most-one-root)"
            note = "composite_with_uc_piece"
        else:
            verdict_tag = "analytical(stable-by-components)"
            note = "composite_double_lax"
        if cls == "overcompressive":
            verdict_tag = "analytical(stable-by-components)"
            note = "composite_double_lax"
        return StabilityReport(
            variant=COPLANAR, shock_class=cls, winding=None, R=None,
            n_points=None, max_rel_step=None, fit_C=None, fit_alpha=None,
            verdict=verdict_tag, origin_policy=None, transverse_result=None,
            notes={"near_composite": note,
                   "composite_proximity": diag["composite_proximity"]})

    policy = "detour" if cls == "undercompressive" else "gap"
    sys6 = SpectralSystem(COPLANAR, pr)
    R, C, alpha = choose_radius(sys6, R_init=R_init, origin_policy=policy)
    contour = build_contour(R, n_min=n_min, origin_policy=policy)
    w, max_rel, n_pts = winding_number(sys6, contour, growth_alpha=alpha)
    if skip_transverse:
        trans = "skipped_monotone" if diag["transverse_skip"] else None
        trans_rep = None
    else:
        trans, trans_rep = transverse_check(pr, R_init=R_init, n_min=n_min)
    rep = StabilityReport(
        variant=COPLANAR, shock_class=cls, winding=w, R=R, n_points=n_pts,
        max_rel_step=max_rel, fit_C=C, fit_alpha=alpha,
        verdict=verdict(pr.kind, w, trans, policy),
        origin_policy=policy, transverse_result=trans,
        notes={"uc_origin_multiplicity":
               "corroborated-near-origin-not-certified"}
        if cls == "undercompressive" else {})
    if trans_rep is not None:
        rep.notes["transverse_triple"] = trans_rep.diagnostics_triple()
    return rep
