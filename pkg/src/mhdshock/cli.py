"""Batch driver: parameter sweeps, portraits, and stability tables.

Subcommands cover the survey protocols: rest-point enumeration, profile
construction, phase-portrait emission, single-case Evans analysis, grid
sweeps, the undercompressive transition search, and Mach numbers.  Sweep
results land in '#'-annotated CSV files whose bytes are reproducible run
to run; wall-clock timings go to a sidecar file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .errors import MhdShockError
from .evans import COPLANAR, TRANSVERSE, SpectralSystem
from .model import (ModelParams, classify_shock, four_point_region,
                    mach_number, relative_entropy, rest_points)
from .profiles import (connect_lax, connect_overcompressive, find_r_star,
                       nullclines, oc_seeds, profile_diagnostics)
from .stability import (StabilityReport, analyze_profile, build_contour,
                        transverse_check, winding_number, _Evaluator,
                        _frame_sets)

FMT = "%.17g"

EXIT_STABLE = 0
EXIT_UNSTABLE = 1
EXIT_INCONCLUSIVE = 2
EXIT_CONFIG = 3


# ---------------------------------------------------------------------------
# sweep configuration
# ---------------------------------------------------------------------------

@dataclass
class SweepConfig:
    parameterization: str = "primitive"     # 'primitive' | 'reduced'
    gamma: list = field(default_factory=lambda: [5 / 3])
    v_plus: list = field(default_factory=lambda: [0.1])
    I: list = field(default_factory=lambda: [0.7])
    B2_plus: list = field(default_factory=lambda: [0.7])
    K: list = field(default_factory=list)
    J: list = field(default_factory=list)
    a: list = field(default_factory=list)
    mu0: list = field(default_factory=lambda: [1.0])
    mu: float = 0.75
    tau: float = 1.0
    modes: list = field(default_factory=lambda: ["evans"])
    limit_study: bool = False
    oc_seed_count: int = 5
    n_min: int = 40
    R_init: float = 2.0
    extension_small_vplus: bool = False
    phase_out: str = "out/phase" 

    @staticmethod
    def from_json(doc: dict) -> "SweepConfig":
        cfg = SweepConfig()
        for key, val in doc.items():
            if not hasattr(cfg, key):
                raise MhdShockError(f"unknown sweep-config key {key!r}")
            setattr(cfg, key, val)
        if cfg.parameterization not in ("primitive", "reduced"):
            raise MhdShockError("parameterization must be primitive|reduced")
        for grid in (cfg.gamma, cfg.v_plus, cfg.I, cfg.B2_plus, cfg.K,
                     cfg.J, cfg.a, cfg.mu0):
            for x in grid:
                if not math.isfinite(x):
                    raise MhdShockError(f"non-finite grid value {x}")
        for v in cfg.v_plus:
            if not 0.0 < v <= 1.0:
                raise MhdShockError(f"v_plus {v} outside (0, 1]")
        return cfg

    def tuples(self):
        """Deterministic enumeration of parameter tuples."""
        out = []
        if self.parameterization == "primitive":
            for g in self.gamma:
                for v in self.v_plus:
                    for i_val in self.I:
                        for b in self.B2_plus:
                            for m0 in self.mu0:
                                out.append(dict(gamma=g, v_plus=v, I=i_val,
                                                B2_plus=b, mu0=m0))
            if self.extension_small_vplus:
                for g in self.gamma:
                    for i_val in [x for x in self.I if x > 1.0][:5]:
                        for b in (1.0, 2.0):
                            for v in (1e-3, 1e-4, 1e-5):
                                out.append(dict(gamma=g, v_plus=v, I=i_val,
                                                B2_plus=b, mu0=1.0,
                                                tag="small-vplus-extension"))
        else:
            thirds = self.a if self.a else self.v_plus
            key = "a" if self.a else "v_plus"
            for g in self.gamma:
                for K in self.K:
                    for J in self.J:
                        for t in thirds:
                            for m0 in self.mu0:
                                out.append({"gamma": g, "K": K, "J": J,
                                            key: t, "mu0": m0})
        return out


def _build_params(cfg: SweepConfig, tup):
    if cfg.parameterization == "primitive":
        return ModelParams.from_primitive(
            tup["gamma"], tup["v_plus"], tup["I"], tup["B2_plus"],
            mu0=tup["mu0"], mu=cfg.mu, tau=cfg.tau,
            limit_study=cfg.limit_study)
    return ModelParams.from_reduced(
        tup["gamma"], tup["K"], tup["J"], v_plus=tup.get("v_plus"),
        a=tup.get("a"), mu0=tup["mu0"], mu=cfg.mu, tau=cfg.tau,
        limit_study=cfg.limit_study)


# ---------------------------------------------------------------------------
# per-tuple pipeline
# ---------------------------------------------------------------------------

RESULT_COLUMNS = [
    "case", "tag", "gamma", "v_plus", "I", "B2_plus", "mu0", "mu", "tau",
    "a", "J", "K", "profile", "variant", "class_2d", "class_3d",
    "mach_lax1", "mach_lax2", "L_minus", "L_plus", "monotone_v",
    "monotone_w", "winding", "R", "n_points", "max_rel_step", "verdict",
    "error",
]


def _base_row(case_id, tup, p: ModelParams = None):
    row = {c: "" for c in RESULT_COLUMNS}
    row["case"] = case_id
    row["tag"] = tup.get("tag", "")
    for k in ("gamma", "v_plus", "I", "B2_plus", "mu0"):
        if k in tup:
            row[k] = tup[k]
    if p is not None:
        row.update(gamma=p.gamma, v_plus=p.v_plus, I=p.I,
                   B2_plus=p.B2_plus, mu0=p.mu0, mu=p.mu, tau=p.tau,
                   a=p.a, J=p.J, K=p.K)
        try:
            row["mach_lax1"] = mach_number(p, "lax1")
            row["mach_lax2"] = mach_number(p, "lax2")
        except MhdShockError:
            pass
    return row


def canonical_key(p: ModelParams, config):
    """Rescaling-invariant identity of a configuration.

    Normalizes the largest rest point to unit volume; tuples sharing a key
    describe the same configuration and are sweep duplicates.
    """
    v_max = max(rp.v for rp in config)
    if v_max <= 1.0 + 1e-9:
        return (round(p.gamma, 12), round(p.K, 9), round(p.J, 9),
                round(p.a, 9))
    top = max(config, key=lambda rp: rp.v)
    K_new = p.K / v_max
    J_new = top.B2 ** 2 / (2.0 * v_max * p.mu0)
    a_new = p.a * v_max ** (-p.gamma - 1.0)
    return (round(p.gamma, 12), round(K_new, 9), round(J_new, 9),
            round(a_new, 9))


def _profile_rows(case_id, tup, cfg: SweepConfig, skip_duplicate=False):
    """All result rows for one parameter tuple (pure worker function)."""
    rows = []
    try:
        p = _build_params(cfg, tup)
    except MhdShockError as exc:
        row = _base_row(case_id, tup)
        row["error"] = type(exc).__name__
        return [row]
    try:
        config = rest_points(p.gamma, p.a, p.J, p.K, mu0=p.mu0,
                             B2_minus=p.B2_minus)
    except MhdShockError as exc:
        row = _base_row(case_id, tup, p)
        row["error"] = type(exc).__name__
        return [row]

    if skip_duplicate:
        row = _base_row(case_id, tup, p)
        row["error"] = "skipped_rescale_duplicate"
        return [row]

    if "restpoints" in cfg.modes and not any(
            m in cfg.modes for m in ("profiles", "evans", "ucstar")):
        row = _base_row(case_id, tup, p)
        row["profile"] = f"config[{len(config)}]"
        rows.append(row)
        return rows
    if "mach" in cfg.modes and len(cfg.modes) == 1:
        row = _base_row(case_id, tup, p)
        rows.append(row)
        return rows

    if "phase" in cfg.modes:
        out_prefix = Path(cfg.phase_out) / f"case{case_id}"
        try:
            emit_phase_portrait(p, out_prefix, config=config)
        except MhdShockError:
            pass

    jobs = []
    saddles = [rp for rp in config if rp.dyn_type == "saddle"]
    if len(config) == 2:
        node = [rp for rp in config if rp.dyn_type != "saddle"][0]
        jobs.append(("lax", saddles[0], node))
    else:
        v1, v2, v3, v4 = config
        jobs.append(("lax1", v3, v4))
        jobs.append(("lax2", v2, v1))
        if "oc-family" in cfg.modes:
            jobs += [(f"oc{i}", None, i)
                     for i in range(cfg.oc_seed_count)]
        else:
            jobs.append(("oc", None, None))

    for name, s, n in jobs:
        row = _base_row(case_id, tup, p)
        row["profile"] = name
        try:
            if name.startswith("oc"):
                seeds = oc_seeds(config, cfg.oc_seed_count)
                seed = seeds[n if n is not None else len(seeds) // 2]
                pr = connect_overcompressive(seed, p, config)
            else:
                pr = connect_lax(s, n, p, config)
        except MhdShockError as exc:
            row["error"] = type(exc).__name__
            rows.append(row)
            continue
        row["class_2d"] = pr.kind.class_2d
        row["class_3d"] = pr.kind.class_3d
        row["L_minus"] = pr.L_minus
        row["L_plus"] = pr.L_plus
        row["monotone_v"] = int(pr.monotone_v)
        row["monotone_w"] = int(pr.monotone_w)
        if "evans" in cfg.modes:
            try:
                rep = analyze_profile(pr, config, R_init=cfg.R_init,
                                      n_min=cfg.n_min)
                row["variant"] = rep.variant
                row["winding"] = rep.winding if rep.winding is not None else ""
                row["R"] = rep.R if rep.R is not None else ""
                row["n_points"] = rep.n_points or ""
                row["max_rel_step"] = rep.max_rel_step or ""
                row["verdict"] = rep.verdict
                if rep.transverse_result:
                    row["verdict"] += f"|transverse:{rep.transverse_result}"
            except MhdShockError as exc:
                row["error"] = type(exc).__name__
        elif "transverse" in cfg.modes:
            try:
                result, trep = transverse_check(pr)
                row["variant"] = "transverse3"
                row["verdict"] = f"transverse:{result}"
                if trep is not None:
                    row["winding"] = trep.winding
                    row["R"] = trep.R
                    row["n_points"] = trep.n_points
                    row["max_rel_step"] = trep.max_rel_step
            except MhdShockError as exc:
                row["error"] = type(exc).__name__
        rows.append(row)

    if "ucstar" in cfg.modes and len(config) == 4:
        row = _base_row(case_id, tup, p)
        row["profile"] = "ucstar"
        try:
            r_star, uc = find_r_star(p, (0.05, 0.6), config)
            row["class_2d"] = uc.kind.class_2d
            row["class_3d"] = uc.kind.class_3d
            row["L_minus"] = uc.L_minus
            row["L_plus"] = uc.L_plus
            row["monotone_v"] = int(uc.monotone_v)
            row["monotone_w"] = int(uc.monotone_w)
            row["tag"] = f"r_star={r_star:.6g}"
            if "evans" in cfg.modes:
                rep = analyze_profile(uc, config, R_init=cfg.R_init,
                                      n_min=cfg.n_min)
                row["winding"] = rep.winding if rep.winding is not None else ""
                row["R"] = rep.R or ""
                row["n_points"] = rep.n_points or ""
                row["max_rel_step"] = rep.max_rel_step or ""
                row["verdict"] = rep.verdict
        except MhdShockError as exc:
            row["error"] = type(exc).__name__
        rows.append(row)
    return rows


def _fmt_cell(x):
    if isinstance(x, float):
        return FMT % x
    return str(x)


def run_sweep(cfg: SweepConfig, out_dir, workers=1):
    """Execute the sweep and write results.csv plus a timing sidecar.

    Rows are written in the deterministic tuple order regardless of worker
    completion order; failures become rows with an error code.  Returns
    ``(rows, exit_code)``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tuples = cfg.tuples()
    t_start = time.time()

    # duplicate detection: a tuple is dropped only when its rescaled
    # canonical form coincides with an earlier retained tuple's
    seen = {}
    skip_flags = []
    for tup in tuples:
        flag = False
        try:
            p = _build_params(cfg, tup)
            config = rest_points(p.gamma, p.a, p.J, p.K, mu0=p.mu0,
                                 B2_minus=p.B2_minus)
            key = canonical_key(p, config)
            if key in seen:
                flag = True
            else:
                seen[key] = True
        except MhdShockError:
            pass
        skip_flags.append(flag)

    work = [(i, tup, cfg, flag)
            for i, (tup, flag) in enumerate(zip(tuples, skip_flags))]
    if workers > 1:
        with Pool(workers) as pool:
            nested = pool.starmap(_profile_rows, work)
    else:
        nested = [_profile_rows(*w) for w in work]
    rows = [r for chunk in nested for r in chunk]

    path = out / "results.csv"
    with open(path, "w") as fh:
        fh.write("# mhdshock sweep results\n")
        fh.write(f"# parameterization {cfg.parameterization}\n")
        fh.write(f"# viscosity mu={FMT % cfg.mu} tau={FMT % cfg.tau} "
                 f"eta={FMT % (cfg.tau - 2 * cfg.mu)}\n")
        fh.write(f"# modes {' '.join(cfg.modes)}\n")
        fh.write(f"# limit_study {int(cfg.limit_study)}\n")
        fh.write(",".join(RESULT_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(row[c]) for c in RESULT_COLUMNS)
                     + "\n")
    with open(out / "timings.csv", "w") as fh:
        fh.write("# wall-clock sidecar (non-deterministic)\n")
        fh.write(f"total_s,{time.time() - t_start:.3f}\n")

    verdicts = [r["verdict"] for r in rows if r["verdict"]]
    errors = [r["error"] for r in rows if r["error"]]
    code = EXIT_STABLE
    if any("unstable" in v for v in verdicts):
        code = EXIT_UNSTABLE
    elif any(e == "InconclusiveError" for e in errors):
        code = EXIT_INCONCLUSIVE
    return rows, code


# ---------------------------------------------------------------------------
# portrait / contour emission
# ---------------------------------------------------------------------------

def _marching_squares(xs, ys, Z, level):
    """Level-set polyline segments of a scalar grid (linear interpolation)."""
    segs = []
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            corners = [(Z[j, i], xs[i], ys[j]),
                       (Z[j, i + 1], xs[i + 1], ys[j]),
                       (Z[j + 1, i + 1], xs[i + 1], ys[j + 1]),
                       (Z[j + 1, i], xs[i], ys[j + 1])]
            pts = []
            for (z1, x1, y1), (z2, x2, y2) in zip(
                    corners, corners[1:] + corners[:1]):
                if (z1 - level) * (z2 - level) < 0.0:
                    t = (level - z1) / (z2 - z1)
                    pts.append((x1 + t * (x2 - x1), y1 + t * (y2 - y1)))
            if len(pts) >= 2:
                segs.append((pts[0], pts[1]))
    return segs


def emit_phase_portrait(p: ModelParams, out_prefix, n_orbits=8,
                        n_levels=9, svg=False, config=None,
                        include_connections=True):
    """Write nullclines, rest points, orbit samples, and entropy levels.

    Everything is columnar CSV keyed by curve identifiers; the optional
    SVG renders the same polylines for quick inspection.
    """
    out_prefix = Path(out_prefix)
    out_prefix.parent.mkdir(parents=True, exist_ok=True)
    config = config if config is not None else rest_points(
        p.gamma, p.a, p.J, p.K, mu0=p.mu0, B2_minus=p.B2_minus)

    files = []
    curves = nullclines(p)
    path = Path(str(out_prefix) + "_nullclines.csv")
    with open(path, "w") as fh:
        fh.write("# nullclines: curve,v,w\n")
        for name, (vs, ws) in curves.items():
            for v, w in zip(vs, ws):
                if math.isfinite(w):
                    fh.write(f"{name},{FMT % v},{FMT % w}\n")
    files.append(path)

    path = Path(str(out_prefix) + "_restpoints.csv")
    with open(path, "w") as fh:
        fh.write("# rest points: v,u,w,B2,type,side,entropy\n")
        for rp in config:
            fh.write(f"{FMT % rp.v},{FMT % rp.u},{FMT % rp.w},"
                     f"{FMT % rp.B2},{rp.dyn_type},{rp.side},"
                     f"{FMT % rp.entropy}\n")
    files.append(path)

    orbit_rows = []
    if include_connections:
        orbit_rows += _connection_orbits(p, config)
    orbit_rows += _grid_orbits(p, config, n_orbits)
    path = Path(str(out_prefix) + "_orbits.csv")
    with open(path, "w") as fh:
        fh.write("# orbits: orbit,x,v,w\n")
        for name, xs, vs, ws in orbit_rows:
            for x, v, w in zip(xs, vs, ws):
                fh.write(f"{name},{FMT % x},{FMT % v},{FMT % w}\n")
    files.append(path)

    v_lo = max(1e-2, 0.25 * min(rp.v for rp in config))
    v_hi = 1.25 * max(rp.v for rp in config) + 0.5
    w_vals = [rp.w for rp in config]
    w_span = max(max(np.abs(w_vals)), 0.5)
    vs = np.linspace(v_lo, v_hi, 121)
    ws = np.linspace(-1.8 * w_span, 1.8 * w_span, 121)
    V, W = np.meshgrid(vs, ws)
    Z = relative_entropy(V, W, p)
    phis = sorted(rp.entropy for rp in config)
    levels = list(np.linspace(phis[0], phis[-1], n_levels))
    path = Path(str(out_prefix) + "_entropy_levels.csv")
    with open(path, "w") as fh:
        fh.write("# entropy level segments: level,v1,w1,v2,w2\n")
        for lev in levels:
            for (x1, y1), (x2, y2) in _marching_squares(vs, ws, Z, lev):
                fh.write(f"{FMT % lev},{FMT % x1},{FMT % y1},"
                         f"{FMT % x2},{FMT % y2}\n")
    files.append(path)

    if svg:
        files.append(_render_svg(out_prefix, curves, config, orbit_rows))
    return files


def _connection_orbits(p, config):
    rows = []
    saddles = [rp for rp in config if rp.dyn_type == "saddle"]
    nodes = [rp for rp in config if rp.dyn_type != "saddle"]
    pair_id = 0
    for s in saddles:
        for n in nodes:
            if s.side != n.side and len(config) == 4:
                continue
            try:
                pr = connect_lax(s, n, p, config)
            except MhdShockError:
                continue
            rows.append((f"lax{pair_id}", pr.xs, pr.v, pr.w))
            pair_id += 1
    if len(config) == 4:
        for i, seed in enumerate(oc_seeds(config, 5)):
            try:
                pr = connect_overcompressive(seed, p, config)
            except MhdShockError:
                continue
            rows.append((f"oc{i}", pr.xs, pr.v, pr.w))
    return rows


def _grid_orbits(p, config, n_orbits):
    from .numerics import integrate_adaptive
    from .profiles import rhs_planar, _escape_ceiling
    rows = []
    if n_orbits <= 0:
        return rows
    v_vals = [rp.v for rp in config]
    w_vals = [rp.w for rp in config]
    v_seeds = np.linspace(min(v_vals) * 0.8 + 0.02, max(v_vals) * 1.1,
                          n_orbits)
    w_mid = 0.5 * (min(w_vals) + max(w_vals))
    ceiling = _escape_ceiling(p)

    def fld(x, y):
        v = max(y[0].real, 1e-6)
        dv, dw = rhs_planar(v, y[1].real, p)
        return np.array([dv, dw], dtype=complex)

    for i, v0 in enumerate(v_seeds):
        y = np.array([v0, w_mid], dtype=complex)
        try:
            traj = integrate_adaptive(fld, (0.0, 6.0), y, max_step=0.25)
        except MhdShockError:
            continue
        vs = traj.ys[:, 0].real
        keep = vs < ceiling
        rows.append((f"grid{i}", traj.xs[keep], vs[keep],
                     traj.ys[keep, 1].real))
    return rows


def _render_svg(out_prefix, curves, config, orbit_rows):
    path = Path(str(out_prefix) + ".svg")
    pts = []
    for _, (vs, ws) in curves.items():
        pts += [(v, w) for v, w in zip(vs, ws) if math.isfinite(w)]
    for _, xs, vs, ws in orbit_rows:
        pts += list(zip(vs, ws))
    pts += [(rp.v, rp.w) for rp in config]
    if not pts:
        return path
    v_arr = np.array([q[0] for q in pts])
    w_arr = np.array([q[1] for q in pts])
    v0, v1 = v_arr.min(), v_arr.max()
    w0, w1 = w_arr.min(), w_arr.max()
    W, H = 640.0, 480.0

    def to_px(v, w):
        x = 40 + (v - v0) / max(v1 - v0, 1e-12) * (W - 80)
        y = H - 40 - (w - w0) / max(w1 - w0, 1e-12) * (H - 80)
        return x, y

    def polyline(seq, color, width=1.0):
        coords = " ".join(f"{x:.1f},{y:.1f}" for x, y in seq)
        return (f'<polyline fill="none" stroke="{color}" '
                f'stroke-width="{width}" points="{coords}"/>')

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" '
             f'height="{H:.0f}">']
    for name, (vs, ws) in curves.items():
        seq = [to_px(v, w) for v, w in zip(vs, ws) if math.isfinite(w)]
        if len(seq) > 1:
            parts.append(polyline(seq, "#888888"))
    for name, xs, vs, ws in orbit_rows:
        seq = [to_px(v, w) for v, w in zip(vs, ws)]
        color = "#0044cc" if name.startswith(("lax", "oc")) else "#77aadd"
        if len(seq) > 1:
            parts.append(polyline(seq, color,
                                  1.8 if name.startswith(("lax", "oc"))
                                  else 0.8))
    for rp in config:
        x, y = to_px(rp.v, rp.w)
        parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="4" '
                     f'fill="#cc2200"/>')
    parts.append("</svg>")
    path.write_text("\n".join(parts))
    return path


def evans_contour_samples(pr, variant=COPLANAR, R=2.0, n_min=40,
                          origin_policy=None):
    """Ordered (lambda, Evans value) samples over the full closed loop."""
    if origin_policy is None:
        origin_policy = ("detour" if pr.kind.shock_class ==
                         "undercompressive" else "gap")
    sys_ = SpectralSystem(variant, pr)
    contour = build_contour(R, n_min=n_min, origin_policy=origin_policy)
    fm, fp = _frame_sets(sys_, contour)
    ev = _Evaluator(sys_, fm, fp)
    loop = contour.loop()
    return [(contour.node_value(e), ev(contour.node_value(e)))
            for e in loop]


def emit_evans_contour(samples, out_path, report: StabilityReport = None):
    """CSV of the Evans image over the contour, orientation preserved."""
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w") as fh:
        fh.write("# evans contour image: Re(lam),Im(lam),Re(D),Im(D)\n")
        if report is not None:
            fh.write(f"# diagnostics {report.diagnostics_triple()} "
                     f"verdict={report.verdict}\n")
        for lam, val in samples:
            fh.write(f"{FMT % lam.real},{FMT % lam.imag},"
                     f"{FMT % val.real},{FMT % val.imag}\n")
    return out_path


# ---------------------------------------------------------------------------
# command-line front end
# ---------------------------------------------------------------------------

def _params_from_args(args):
    if args.K is not None:
        if args.J is None:
            raise MhdShockError("reduced parameterization needs --J")
        if args.v_plus is None and args.a is None:
            raise MhdShockError("reduced parameterization needs --v-plus "
                                "or --a")
        return ModelParams.from_reduced(
            args.gamma, args.K, args.J, v_plus=args.v_plus, a=args.a,
            mu0=args.mu0, mu=args.mu, tau=args.tau,
            limit_study=args.limit_study)
    v_plus = 0.1 if args.v_plus is None else args.v_plus
    return ModelParams.from_primitive(
        args.gamma, v_plus, args.I, args.B2_plus, mu0=args.mu0,
        mu=args.mu, tau=args.tau, limit_study=args.limit_study)


def _add_param_flags(sub):
    sub.add_argument("--gamma", type=float, default=5 / 3)
    sub.add_argument("--v-plus", dest="v_plus", type=float, default=None)
    sub.add_argument("--I", type=float, default=0.7)
    sub.add_argument("--B2-plus", dest="B2_plus", type=float, default=0.7)
    sub.add_argument("--K", type=float, default=None)
    sub.add_argument("--J", type=float, default=None)
    sub.add_argument("--a", type=float, default=None)
    sub.add_argument("--mu0", type=float, default=1.0)
    sub.add_argument("--mu", type=float, default=0.75)
    sub.add_argument("--tau", type=float, default=1.0)
    sub.add_argument("--limit-study", action="store_true")


def default_config(name: str) -> SweepConfig:
    """Built-in sweep configurations ('full', 'reduced', 'demo')."""
    if name == "full":
        return SweepConfig(
            parameterization="primitive",
            gamma=[7 / 5, 5 / 3],
            v_plus=[0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 1e-1, 1e-2],
            I=[0.2, 0.4, 0.6, 0.8, 1.2, 1.4, 1.6, 1.8, 2.0],
            B2_plus=[0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
            mu0=[1.0], modes=["evans"], extension_small_vplus=True,
            limit_study=True)
    if name == "reduced":
        return SweepConfig(
            parameterization="reduced",
            gamma=[7 / 5, 5 / 3],
            K=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95,
               1.05, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0],
            J=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0,
               1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9, 2.0],
            v_plus=[0.1], mu0=[1.0], modes=["evans"])
    if name == "demo":
        return SweepConfig(
            parameterization="primitive", gamma=[5 / 3],
            v_plus=[0.1, 0.4], I=[0.7, 1.2], B2_plus=[0.7],
            mu0=[1.0], modes=["evans"])
    raise MhdShockError(f"unknown built-in config {name!r}")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="mhdshock",
        description="Viscous MHD shock profiles and Evans-function "
                    "stability at infinite resistivity")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("restpoints", help="enumerate and type rest points")
    _add_param_flags(s)

    s = sub.add_parser("mach", help="Mach number, both branches")
    _add_param_flags(s)

    s = sub.add_parser("profile", help="compute one connection profile")
    _add_param_flags(s)
    s.add_argument("--kind", choices=["lax1", "lax2", "oc", "auto"],
                   default="auto")
    s.add_argument("--out", default="profile.txt")

    s = sub.add_parser("phase", help="emit phase-portrait data")
    _add_param_flags(s)
    s.add_argument("--out", default="out/phase")
    s.add_argument("--svg", action="store_true")
    s.add_argument("--orbits", type=int, default=8)

    s = sub.add_parser("evans", help="stability analysis of one profile")
    _add_param_flags(s)
    s.add_argument("--kind", choices=["lax1", "lax2", "oc", "auto"],
                   default="auto")
    s.add_argument("--out", default="out")
    s.add_argument("--n-min", type=int, default=40)

    s = sub.add_parser("ucstar", help="undercompressive transition search")
    _add_param_flags(s)
    s.add_argument("--bracket", type=float, nargs=2, default=(0.05, 0.6))
    s.add_argument("--evans", action="store_true")

    s = sub.add_parser("sweep", help="batch sweep over parameter grids")
    s.add_argument("--config", required=True,
                   help="path to JSON config, or full|reduced|demo")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out", default="out")
    s.add_argument("--mode", default=None,
                   help="comma list overriding config modes")
    s.add_argument("--tol-overrides", default=None,
                   help="JSON object of tolerance knobs (n_min, R_init)")
    s.add_argument("--limit-study", action="store_true")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (MhdShockError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _select_profile(p, config, kind):
    saddles = [rp for rp in config if rp.dyn_type == "saddle"]
    if kind in ("auto", "lax1", "lax2") and len(config) == 2:
        node = [rp for rp in config if rp.dyn_type != "saddle"][0]
        return connect_lax(saddles[0], node, p, config)
    if len(config) == 4:
        v1, v2, v3, v4 = config
        if kind in ("auto", "lax1"):
            return connect_lax(v3, v4, p, config)
        if kind == "lax2":
            return connect_lax(v2, v1, p, config)
        if kind == "oc":
            seeds = oc_seeds(config, 5)
            return connect_overcompressive(seeds[2], p, config)
    raise MhdShockError(f"no {kind} profile for this configuration")


def _dispatch(args):
    if args.command == "sweep":
        if args.config in ("full", "reduced", "demo"):
            cfg = default_config(args.config)
        else:
            cfg = SweepConfig.from_json(json.loads(
                Path(args.config).read_text()))
        if args.mode:
            cfg.modes = args.mode.split(",")
        if args.tol_overrides:
            for key, val in json.loads(args.tol_overrides).items():
                if key not in ("n_min", "R_init"):
                    raise MhdShockError(f"unknown tolerance knob {key!r}")
                setattr(cfg, key, val)
        if args.limit_study:
            cfg.limit_study = True
        cfg.phase_out = str(Path(args.out) / "phase")
        rows, code = run_sweep(cfg, args.out, workers=args.workers)
        n_err = sum(1 for r in rows if r["error"])
        print(f"{len(rows)} rows ({n_err} with error codes) -> "
              f"{Path(args.out) / 'results.csv'}")
        return code

    p = _params_from_args(args)
    config = rest_points(p.gamma, p.a, p.J, p.K, mu0=p.mu0,
                         B2_minus=p.B2_minus)

    if args.command == "restpoints":
        info = four_point_region(p.J, p.K, gamma=p.gamma) \
            if abs(p.K - 1.0) > 1e-9 else None
        print(f"a={p.a:.8g} J={p.J:.8g} K={p.K:.8g}"
              + (f"  region={info.region}" if info else ""))
        for rp in config:
            print(f"  v{rp.index_j}: v={rp.v:.8g} u={rp.u:.8g} "
                  f"w={rp.w:.8g} B2={rp.B2:.8g} {rp.dyn_type:9s} "
                  f"{rp.side:8s} phi={rp.entropy:.8g}")
        return EXIT_STABLE

    if args.command == "mach":
        print(f"fast branch  (family 1): {mach_number(p, 'lax1'):.6g}")
        print(f"slow branch  (family 2): {mach_number(p, 'lax2'):.6g}")
        return EXIT_STABLE

    if args.command == "profile":
        pr = _select_profile(p, config, args.kind)
        Path(args.out).write_text(pr.to_text())
        d = profile_diagnostics(pr, config)
        print(f"{pr.kind.label()}  L=({pr.L_minus:.2f},{pr.L_plus:.2f}) "
              f"monotone_v={d['monotone_v']} -> {args.out}")
        return EXIT_STABLE

    if args.command == "phase":
        files = emit_phase_portrait(p, args.out, n_orbits=args.orbits,
                                    svg=args.svg, config=config)
        for f in files:
            print(f)
        return EXIT_STABLE

    if args.command == "evans":
        pr = _select_profile(p, config, args.kind)
        rep = analyze_profile(pr, config, n_min=args.n_min)
        samples = None
        if rep.R is not None:
            samples = evans_contour_samples(
                pr, COPLANAR, R=rep.R, n_min=args.n_min,
                origin_policy=rep.origin_policy)
            out = Path(args.out) / "evans_contour.csv"
            emit_evans_contour(samples, out, rep)
            print(f"contour image -> {out}")
        print(f"class={pr.kind.label()} verdict={rep.verdict} "
              f"winding={rep.winding} triple={rep.diagnostics_triple()} "
              f"transverse={rep.transverse_result}")
        if rep.verdict.startswith("unstable"):
            return EXIT_UNSTABLE
        if rep.verdict == "inconclusive":
            return EXIT_INCONCLUSIVE
        return EXIT_STABLE

    if args.command == "ucstar":
        r_star, uc = find_r_star(p, tuple(args.bracket), config)
        print(f"r* = mu*/tau = {r_star:.6g} (tau={p.tau:g} -> "
              f"mu* = {r_star * p.tau:.6g})")
        print(f"UC profile: {uc.kind.label()} "
              f"L=({uc.L_minus:.2f},{uc.L_plus:.2f}) "
              f"monotone v down={bool(np.all(uc.vp <= 1e-14))} "
              f"w up={bool(np.all(uc.wp >= -1e-14))}")
        if args.evans:
            rep = analyze_profile(uc, config)
            print(f"verdict={rep.verdict} winding={rep.winding} "
                  f"triple={rep.diagnostics_triple()}")
            if rep.verdict.startswith("unstable"):
                return EXIT_UNSTABLE
        return EXIT_STABLE

    raise MhdShockError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
