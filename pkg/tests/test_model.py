"""Jump-condition algebra, rest points, classification, entropy, Mach."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mhdshock.errors import (DegenerateBifurcationError,
                             EntropyViolationError, InvalidShockError,
                             NotPhysicalError)
from mhdshock.model import (ModelParams, RestPoint, amplitude_limits,
                            classify_shock, entropy_gradient, f_factored,
                            f_tilde, f_tilde_prime, four_point_region,
                            hessian_signature, mach_number,
                            mach_number_reduced, q_probe, relative_entropy,
                            rescale, rest_points, rh_residual, solve_rh)

PHASE_A = dict(gamma=2.0, v_plus=0.1, I=0.7, B2_plus=0.7)          # 4 points
PHASE_NULL = dict(gamma=5 / 3, v_plus=0.1, I=0.8, B2_plus=0.7)     # 4 points


def params(**kw):
    kw.setdefault("mu", 1.0)
    kw.setdefault("tau", 1.0)
    return ModelParams.from_primitive(**kw)


class TestSolveRH:
    def test_reference_values(self):
        u, B2m, w, a, J, K = solve_rh(5 / 3, 0.1, 0.7, 0.7)
        assert abs(K - 0.49) < 1e-14
        assert abs(B2m - (-0.535294117647059)) < 1e-12
        assert abs(J - 0.143269896193772) < 1e-12
        assert abs(a - 0.017576) < 1e-6
        assert rh_residual(5 / 3, a, 1.0, 0.7, 0.1, u, w, 0.7, B2m) < 1e-12

    def test_parallel_case(self):
        u, B2m, w, a, J, K = solve_rh(5 / 3, 0.3, 0.6, 0.0)
        assert B2m == 0.0 and w == 0.0 and J == 0.0
        assert abs(a - (1 - 0.3) / (0.3 ** (-5 / 3) - 1)) < 1e-14

    def test_zero_jump_rejected(self):
        with pytest.raises(InvalidShockError):
            solve_rh(5 / 3, 1.0, 0.7, 0.7)

    def test_near_unit_jump_symmetry(self):
        # B2- -> B2+ as the jump closes
        _, B2m, _, _, _, _ = solve_rh(5 / 3, 1.0 - 1e-9, 0.7, 0.7)
        assert abs(B2m - 0.7) < 1e-7

    def test_degenerate_K(self):
        with pytest.raises(DegenerateBifurcationError):
            solve_rh(5 / 3, 0.1, 1.0, 0.7)

    def test_not_physical(self):
        # K < 1/2 with a strong field forces a <= 0
        with pytest.raises(NotPhysicalError):
            solve_rh(5 / 3, 0.4, 0.3, 2.5)

    def test_limit_study_clamps(self):
        _, _, _, a, _, _ = solve_rh(5 / 3, 0.4, 0.3, 2.5, limit_study=True)
        assert a == 1e-12


class TestRestPoints:
    def test_phase_a_has_four(self):
        p = params(**PHASE_A)
        pts = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
        assert len(pts) == 4
        types = [rp.dyn_type for rp in pts]
        assert types == ["attractor", "saddle", "saddle", "repellor"]
        assert any(abs(rp.v - 0.1) < 1e-8 for rp in pts)
        assert any(abs(rp.v - 1.0) < 1e-12 for rp in pts)

    def test_gamma_one_parallel_root(self):
        a = 0.3
        pts = rest_points(1.0, a, 0.0, 2.0)
        vs = sorted(rp.v for rp in pts)
        assert abs(vs[0] - a) < 1e-10     # v* = a exactly for gamma = 1
        assert abs(vs[1] - 1.0) < 1e-12

    def test_recovers_v_plus_against_scan(self):
        u, B2m, w, a, J, K = solve_rh(5 / 3, 0.1, 0.7, 0.7)
        pts = rest_points(5 / 3, a, J, K, B2_minus=B2m)
        vs = np.array(sorted(rp.v for rp in pts))
        # independent dense scan of the factored function
        grid = np.concatenate([np.linspace(1e-3, K - 1e-6, 40000),
                               np.linspace(K + 1e-6, 3.0, 40000)])
        vals = f_factored(grid, 5 / 3, a, J, K)
        sign_flips = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
        scan_roots = sorted(0.5 * (grid[i] + grid[i + 1]) for i in sign_flips)
        scan_roots = sorted(set(scan_roots) | {1.0})
        assert len(vs) == len(scan_roots)
        for v, s in zip(vs, sorted(scan_roots)):
            assert abs(v - s) < 1e-4  # scan resolution
        assert any(abs(v - 0.1) < 1e-8 for v in vs)

    def test_rest_points_satisfy_rh(self):
        p = params(**PHASE_NULL)
        pts = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
        for rp in pts:
            B2p_equiv = rp.B2
            res = rh_residual(p.gamma, p.a, p.mu0, p.I, rp.v, rp.u, rp.w,
                              B2p_equiv, p.B2_minus)
            assert res < 1e-10

    def test_entropy_decreasing_in_rank(self):
        p = params(**PHASE_A)
        pts = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
        ent = [rp.entropy for rp in pts]
        assert all(e1 > e2 for e1, e2 in zip(ent, ent[1:]))

    def test_parallel_with_alfven_pair(self):
        # gamma=5/3, v+=0.1, I=0.7, B+=0 (typical parallel figure)
        p = params(gamma=5 / 3, v_plus=0.1, I=0.7, B2_plus=0.0)
        pts = rest_points(p.gamma, p.a, 0.0, p.K)
        assert len(pts) == 4
        saddles = [rp for rp in pts if rp.dyn_type == "saddle"]
        assert len(saddles) == 2
        assert all(abs(rp.v - p.K) < 1e-12 for rp in saddles)
        assert saddles[0].B2 == -saddles[1].B2 != 0.0

    def test_counts_two_or_four(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            gamma = rng.choice([7 / 5, 5 / 3])
            v_plus = rng.uniform(0.05, 0.9)
            I = rng.uniform(0.1, 2.0)
            B2p = rng.uniform(0.0, 2.0)
            try:
                p = params(gamma=gamma, v_plus=v_plus, I=I, B2_plus=B2p)
                pts = rest_points(p.gamma, p.a, p.J, p.K,
                                  B2_minus=p.B2_minus)
            except Exception:
                continue
            assert len(pts) in (2, 4)
            # per side of K: one saddle + one node when two roots share a side
            for side in ("below_K", "above_K"):
                group = [rp for rp in pts if rp.side == side]
                if len(group) == 2:
                    assert {g.dyn_type for g in group} != {"saddle"}


class TestFourPointRegion:
    def test_r1_example(self):
        assert abs(q_probe(0.143, 0.49) - (-0.23724)) < 1e-10
        info = four_point_region(0.143, 0.49)
        assert info.region == "R1" and info.four_point

    def test_r2_any_J(self):
        info = four_point_region(1.7, 0.7)
        assert info.region == "R2"

    def test_outside(self):
        # K < 1/2 and J(1-2K) > K^2
        info = four_point_region(1.0, 0.2)
        assert info.region == "outside" and info.a_interval is None

    def test_a_interval_consistent(self):
        info = four_point_region(0.5, 0.7, gamma=5 / 3)
        lo, hi = info.a_interval
        assert lo == 0.0 and 0.0 < hi < math.inf
        inside_pts = rest_points(5 / 3, 0.5 * hi, 0.5, 0.7)
        assert len(inside_pts) == 4
        outside_pts = rest_points(5 / 3, 2.0 * hi, 0.5, 0.7)
        assert len(outside_pts) == 2

    def test_K_above_one(self):
        info = four_point_region(4.4, 2.0)
        assert info.region == "R3"
        info2 = four_point_region(0.5, 2.0)
        assert info2.region == "outside"
        assert info2.a_interval[0] > 0.0


class TestClassifyShock:
    def _config(self):
        p = params(**PHASE_A)
        pts = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
        return p, pts

    def test_lax1_same_side(self):
        _, pts = self._config()
        st = classify_shock(pts[3], pts[2], pts)
        assert st.class_2d == "lax" and st.jk_2d == (1, 1)
        assert st.jk_3d == (1, 1) and not st.intermediate

    def test_overcompressive(self):
        _, pts = self._config()
        st = classify_shock(pts[3], pts[0], pts)
        assert st.class_2d == "overcompressive" and st.jk_2d == (1, 2)
        assert st.jk_3d == (1, 3) and st.ell_3d == 3 and st.intermediate

    def test_undercompressive_is_alfven_in_3d(self):
        _, pts = self._config()
        st = classify_shock(pts[2], pts[1], pts)
        assert st.class_2d == "undercompressive" and st.jk_2d == (2, 1)
        assert st.class_3d == "lax" and st.jk_3d == (2, 2)
        assert st.ell_2d == 0

    def test_lax2_below(self):
        _, pts = self._config()
        st = classify_shock(pts[1], pts[0], pts)
        assert st.class_2d == "lax" and st.jk_2d == (2, 2)
        assert st.jk_3d == (3, 3)

    def test_intermediate_lax(self):
        _, pts = self._config()
        st43 = classify_shock(pts[3], pts[1], pts)   # v4 -> v2
        assert st43.class_2d == "lax" and st43.jk_2d == (1, 1)
        assert st43.class_3d == "overcompressive" and st43.jk_3d == (1, 2)
        st31 = classify_shock(pts[2], pts[0], pts)   # v3 -> v1
        assert st31.class_2d == "lax" and st31.jk_2d == (2, 2)
        assert st31.jk_3d == (2, 3)

    def test_entropy_violation(self):
        _, pts = self._config()
        with pytest.raises(EntropyViolationError):
            classify_shock(pts[0], pts[3], pts)


class TestRelativeEntropy:
    def test_value_at_left_state(self):
        p = params(**PHASE_NULL)
        assert abs(relative_entropy(1.0, 0.0, p) - (-2.0 * p.J)) < 1e-12

    def test_gradient_matches_central_differences(self):
        p = params(**PHASE_A)
        rng = np.random.default_rng(1)
        h = 1e-6
        for _ in range(50):
            v = rng.uniform(0.05, 2.0)
            w = rng.uniform(-2.0, 2.0)
            gv, gw = entropy_gradient(v, w, p)
            num_v = (relative_entropy(v + h, w, p)
                     - relative_entropy(v - h, w, p)) / (2 * h)
            num_w = (relative_entropy(v, w + h, p)
                     - relative_entropy(v, w - h, p)) / (2 * h)
            assert abs(gv - num_v) < 1e-8 * max(1.0, abs(gv))
            assert abs(gw - num_w) < 1e-8 * max(1.0, abs(gw))

    def test_stationary_at_rest_points(self):
        p = params(**PHASE_A)
        pts = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
        for rp in pts:
            gv, gw = entropy_gradient(rp.v, rp.w, p)
            assert abs(gv) < 1e-8 and abs(gw) < 1e-8

    def test_domain_error(self):
        p = params(**PHASE_A)
        with pytest.raises(ValueError):
            relative_entropy(-0.5, 0.0, p)


class TestHessianSignature:
    def test_signs_at_phase_a(self):
        p = params(**PHASE_A)
        pts = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
        for rp in pts:
            det_sign, fp_sign, consistent = hessian_signature(rp, p)
            assert consistent
            if rp.dyn_type == "saddle":
                assert det_sign < 0
            else:
                assert det_sign > 0
        # repellor v4 > K: f' > 0 and v - K > 0 give det > 0
        v4 = pts[3]
        det_sign, fp_sign, _ = hessian_signature(v4, p)
        assert fp_sign > 0 and det_sign > 0

    def test_consistent_across_grid(self):
        for v_plus in (0.2, 0.4, 0.6):
            for B2p in (0.4, 0.8, 1.4):
                p = params(gamma=5 / 3, v_plus=v_plus, I=1.2, B2_plus=B2p)
                pts = rest_points(p.gamma, p.a, p.J, p.K,
                                  B2_minus=p.B2_minus)
                assert all(hessian_signature(rp, p)[2] for rp in pts)


class TestMach:
    def test_large2_anchor(self):
        M = mach_number_reduced(5 / 3, 1e-8, 1.0, 2.0, family="lax2")
        assert abs(M - 10954) <= 1.0

    def test_large4_anchor(self):
        M = mach_number_reduced(5 / 3, 1e-7, 0.5, 0.7, family="lax2")
        assert abs(M - 3817) <= 1.0

    def test_parallel_gas_dynamical(self):
        # J = 0 with K below the sound speed: fast branch is the gas value
        gamma, a, K = 5 / 3, 0.5, 0.1
        M = mach_number_reduced(gamma, a, 0.0, K, family="lax1")
        assert abs(M - (gamma * a) ** -0.5) < 1e-12

    def test_params_wrapper(self):
        p = params(**PHASE_NULL)
        assert mach_number(p, "lax1") < mach_number(p, "lax2")


class TestAmplitudeLimits:
    def test_quadratic_band(self):
        v_under, v_over, _, _ = amplitude_limits(0.5, 0.7, 5 / 3)
        assert abs(v_under - 0.489) < 1e-3
        assert abs(v_over - 1.411) < 1e-3
        for v in (v_under, v_over):
            assert abs((v - 0.7) ** 2 - 0.5 * (1 + v - 2 * 0.7)) < 1e-12

    def test_parallel_degenerate(self):
        v_under, v_over, _, _ = amplitude_limits(0.0, 0.3, 5 / 3)
        assert v_under == v_over == 0.3

    def test_a_star_closed_form(self):
        J, K, gamma = 0.1433, 0.49, 5 / 3
        _, _, a_star, _ = amplitude_limits(J, K, gamma)
        assert abs(a_star - (1 - K - 2 * J) / (gamma * (1 - K))) < 1e-14
        # cross-check: the reduced jump function is critical at v = 1
        assert abs(f_tilde_prime(1.0, gamma, a_star, J, K)) < 1e-12


class TestRescale:
    def test_identity_on_normalized(self):
        p = params(**PHASE_NULL)
        q = rescale(p.gamma, -1.0, 1.0, p.v_plus, p.I, p.B2_plus,
                    mu0=p.mu0, mu=p.mu, tau=p.tau)
        assert abs(q.a - p.a) < 1e-15 and abs(q.K - p.K) < 1e-15

    def test_K_halves(self):
        q = rescale(5 / 3, -1.0, 2.0, 0.2, 0.7, 0.7)
        assert abs(q.K - 0.49 / 2.0) < 1e-14

    def test_mach_invariant(self):
        # same physical shock seen in unscaled coordinates: s=-2, v-=0.5
        base = params(**PHASE_NULL)
        s, vm = -2.0, 0.5
        raw = rescale(5 / 3, s, vm, base.v_plus * vm, -s * base.I,
                      -s * base.B2_plus, mu0=base.mu0 / vm,
                      a=base.a * vm ** (5 / 3 + 1.0) * s ** 2)
        assert abs(mach_number(raw, "lax1")
                   - mach_number(base, "lax1")) < 1e-9

    def test_rejects_bad_speed(self):
        with pytest.raises(InvalidShockError):
            rescale(5 / 3, 0.0, 1.0, 0.1, 0.7, 0.7)

    @given(st.floats(min_value=0.1, max_value=5.0),
           st.floats(min_value=-4.0, max_value=-0.2))
    @settings(max_examples=25, deadline=None)
    def test_idempotent(self, vm, s):
        base = params(**PHASE_NULL)
        raw = rescale(5 / 3, s, vm, base.v_plus * vm, -s * base.I,
                      -s * base.B2_plus, mu0=base.mu0 / vm)
        again = rescale(5 / 3, -1.0, 1.0, raw.v_plus, raw.I, raw.B2_plus,
                        mu0=raw.mu0)
        assert abs(again.K - raw.K) < 1e-12
        assert abs(again.J - raw.J) < 1e-12
        assert abs(again.a - raw.a) < 1e-12


class TestFixedPointInvariant:
    def test_solve_rh_feeds_back(self):
        for kw in (PHASE_A, PHASE_NULL,
                   dict(gamma=7 / 5, v_plus=0.4, I=1.2, B2_plus=0.8)):
            p = params(**kw)
            pts = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
            assert any(abs(rp.v - p.v_plus) < 1e-8 for rp in pts)

    def test_entropy_sorting_matches_volume(self):
        p = params(**PHASE_A)
        pts = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
        by_v = [rp.v for rp in sorted(pts, key=lambda r: r.v)]
        by_phi = [rp.v for rp in sorted(pts, key=lambda r: -r.entropy)]
        assert by_v == by_phi
