"""Contour geometry, winding computation, radius calibration, verdicts."""

import cmath

import numpy as np
import pytest

from mhdshock.errors import ConfigurationError, InconclusiveError
from mhdshock.evans import COPLANAR, TRANSVERSE, SpectralSystem
from mhdshock.model import ModelParams, ShockType, rest_points
from mhdshock.profiles import connect_lax
from mhdshock.stability import (DETOUR_RADIUS, GAP_RADIUS, StabilityReport,
                                analyze_profile, build_contour, choose_radius,
                                transverse_check, verdict, winding_number,
                                winding_of_samples)


@pytest.fixture(scope="module")
def lax_case():
    p = ModelParams.from_primitive(5 / 3, 0.1, 0.7, 0.7, mu=1.0, tau=1.0)
    cfg = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
    pr = connect_lax(cfg[2], cfg[3], p, cfg)
    return p, cfg, pr


class TestContour:
    def test_gap_counts_and_gap(self):
        c = build_contour(2.0, 40, "gap")
        vals = [c.node_value(e) for e in c.loop()]
        assert 40 <= len(vals) <= 42
        assert min(abs(v) for v in vals) == GAP_RADIUS

    def test_detour_nodes(self):
        c = build_contour(2.0, 40, "detour")
        vals = [c.node_value(e) for e in c.loop()]
        det = [v for v in vals if abs(abs(v) - DETOUR_RADIUS) < 1e-15]
        assert det, "detour waypoints missing"
        angles = sorted(cmath.phase(v) for v in det)
        assert angles[0] >= -np.pi / 2 - 1e-12
        assert angles[-1] <= np.pi / 2 + 1e-12
        assert any(abs(v.imag) == 0.0 for v in det)

    def test_conjugate_closure(self):
        c = build_contour(2.0, 40, "gap")
        vals = [complex(c.node_value(e)) for e in c.loop()]
        pool = set(vals)
        assert all(complex(np.conj(v)) in pool for v in vals)

    def test_loop_consecutive_distinct(self):
        for policy in ("gap", "detour"):
            c = build_contour(2.0, 40, policy)
            vals = [c.node_value(e) for e in c.loop()]
            gaps = [abs(vals[(i + 1) % len(vals)] - vals[i])
                    for i in range(len(vals))]
            assert min(gaps) > 0.0

    def test_quadratic_concentration(self):
        c = build_contour(2.0, 40, "gap")
        ms = sorted(t[1] for t in c.tags if t[0] == "axis")
        diffs = np.diff(ms)
        assert diffs[0] < diffs[-1]

    def test_bad_policy(self):
        with pytest.raises(ConfigurationError):
            build_contour(2.0, 40, "straight-through")


class TestWindingSamples:
    def test_constant(self):
        c = build_contour(2.0, 40, "gap")
        vals = [1.0 + 0.0j for _ in c.loop()]
        assert winding_of_samples(vals) == 0

    def test_single_root_inside(self):
        c = build_contour(2.0, 80, "gap")
        z0 = 0.3 + 0.1j
        vals = [c.node_value(e) - z0 for e in c.loop()]
        assert winding_of_samples(vals) == 1

    def test_root_outside(self):
        c = build_contour(2.0, 80, "gap")
        z0 = -0.5 + 0.1j
        vals = [c.node_value(e) - z0 for e in c.loop()]
        assert winding_of_samples(vals) == 0

    def test_double_root(self):
        c = build_contour(2.0, 160, "gap")
        z0 = 0.3 + 0.1j
        vals = [(c.node_value(e) - z0) ** 2 for e in c.loop()]
        assert winding_of_samples(vals) == 2


class TestWindingNumber:
    def test_stable_lax(self, lax_case):
        _, _, pr = lax_case
        sys6 = SpectralSystem(COPLANAR, pr)
        c = build_contour(2.0, 40, "gap")
        w, max_rel, n = winding_number(sys6, c)
        assert w == 0
        assert n >= 40
        assert max_rel < 1.0

    def test_invariant_under_doubling(self, lax_case):
        _, _, pr = lax_case
        sys6 = SpectralSystem(COPLANAR, pr)
        w1 = winding_number(sys6, build_contour(2.0, 40, "gap"))[0]
        w2 = winding_number(sys6, build_contour(2.0, 80, "gap"))[0]
        assert w1 == w2 == 0


class TestChooseRadius:
    def test_table_row_moderate(self):
        # survey-table row at v+=0.4, B+=0.8, I=1.2: radius 2 accepted
        p = ModelParams.from_primitive(5 / 3, 0.4, 1.2, 0.8, mu=0.75,
                                       tau=1.0)
        cfg = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
        s = [rp for rp in cfg if abs(rp.v - 1.0) < 1e-9][0]
        n = [rp for rp in cfg if abs(rp.v - 0.4) < 1e-7][0]
        pr = connect_lax(s if s.dyn_type == "saddle" else n,
                         n if s.dyn_type == "saddle" else s, p, cfg)
        sys6 = SpectralSystem(COPLANAR, pr)
        R, C, alpha = choose_radius(sys6)
        assert R == 2.0
        assert C != 0.0


class TestVerdict:
    def _shock(self, cls):
        jk = {"lax": (1, 1), "overcompressive": (1, 2),
              "undercompressive": (2, 1)}[cls]
        return ShockType(jk, jk, jk[1] - jk[0] + 1, jk[1] - jk[0] + 1,
                         cls, cls, cls != "lax")

    def test_lax_stable(self):
        assert verdict(self._shock("lax"), 0, "skipped_monotone",
                       "gap") == "stable"

    def test_oc_stable(self):
        assert verdict(self._shock("overcompressive"), 0, None,
                       "gap") == "stable"

    def test_uc_policy(self):
        assert verdict(self._shock("undercompressive"), 0, "stable",
                       "detour") == "stable"
        with pytest.raises(ConfigurationError):
            verdict(self._shock("undercompressive"), 0, "stable", "gap")

    def test_unstable_count(self):
        assert verdict(self._shock("lax"), 1, None, "gap") == "unstable(1)"

    def test_pure_function(self):
        s = self._shock("lax")
        assert verdict(s, 0, None, "gap") == verdict(s, 0, None, "gap")


class TestPipeline:
    def test_monotone_lax_report(self, lax_case):
        _, cfg, pr = lax_case
        rep = analyze_profile(pr, cfg)
        assert rep.verdict == "stable"
        assert rep.winding == 0
        assert rep.transverse_result == "skipped_monotone"
        assert rep.origin_policy == "gap"
        triple = rep.diagnostics_triple()
        assert triple.startswith(f"({rep.R:g},{rep.n_points},")

    def test_transverse_skip(self, lax_case):
        _, _, pr = lax_case
        result, rep = transverse_check(pr)
        assert result == "skipped_monotone" and rep is None
