"""Eigenvalue-system assembly, analytic continuation, Evans evaluation."""

import cmath

import numpy as np
import pytest

from mhdshock.evans import (COPLANAR, TRANSVERSE, AnalyticBasis,
                            SpectralSystem, assemble_A, coeff_h,
                            evans_direct, evans_eval,
                            evans_eval_conjugate_pair, kato_basis)
from mhdshock.model import ModelParams, rest_points
from mhdshock.numerics import eig_small
from mhdshock.profiles import connect_lax, connect_overcompressive, oc_seeds


@pytest.fixture(scope="module")
def setup():
    p = ModelParams.from_primitive(5 / 3, 0.1, 0.7, 0.7, mu=1.0, tau=1.0)
    cfg = rest_points(p.gamma, p.a, p.J, p.K, B2_minus=p.B2_minus)
    v1, v2, v3, v4 = cfg
    pr = connect_lax(v3, v4, p, cfg)
    return p, cfg, pr


@pytest.fixture(scope="module")
def sys6(setup):
    return SpectralSystem(COPLANAR, setup[2])


@pytest.fixture(scope="module")
def sys3(setup):
    return SpectralSystem(TRANSVERSE, setup[2])


@pytest.fixture(scope="module")
def bases(sys6):
    lams = np.array([1.0, 1.0 + 0.3j, 1.0 + 0.6j, 0.7 + 0.6j, 0.4 + 0.6j])
    return (kato_basis(sys6, lams, "minus_unstable"),
            kato_basis(sys6, lams, "plus_stable"))


class TestCoefficients:
    def test_h_at_endstates(self, setup):
        p, _, pr = setup
        for x in (-1e4, 1e4):
            assert abs(coeff_h(x, pr) - p.a * p.gamma) < 1e-14

    def test_f_at_endstates(self, setup):
        p, _, pr = setup
        for x, rp in ((-1e4, pr.end_minus), (1e4, pr.end_plus)):
            h = coeff_h(x, pr)
            f = (rp.v - rp.v ** -p.gamma * h) / p.tau
            expect = (rp.v - p.a * p.gamma * rp.v ** -p.gamma) / p.tau
            assert abs(f - expect) < 1e-14

    def test_volume_row_two_formulas(self, setup, sys6):
        # A33 via f(v) equals the direct combination with h
        p, _, pr = setup
        lam = 0.7 + 0.2j
        for x in np.linspace(-pr.L_minus, pr.L_plus, 23):
            v, w, vp, wp, B2 = pr.values_at(x)
            h = coeff_h(x, pr)
            direct = (-h / (p.tau * v ** p.gamma) - lam + v / p.tau
                      - B2 ** 2 / (p.mu0 * p.tau))
            A = sys6.A(x, lam)
            assert abs(A[2, 2] - direct) < 1e-12


class TestAssembly:
    def test_conjugation(self, sys6):
        lam = 0.5 + 0.8j
        for x in (-3.0, 0.0, 2.5):
            A1 = sys6.A(x, np.conj(lam))
            A2 = np.conj(sys6.A(x, lam))
            assert np.max(np.abs(A1 - A2)) == 0.0

    def test_transverse_zero_lambda(self, sys3):
        A = sys3.A_limit("minus", 0.0)
        eigs = np.linalg.eigvals(A)
        assert np.min(np.abs(eigs)) < 1e-14

    def test_affine_in_lambda(self, sys6):
        x = 0.3
        A0 = sys6.A(x, 0.0)
        A1 = sys6.A(x, 1.0)
        A_test = sys6.A(x, 0.35 + 0.2j)
        recon = A0 + (0.35 + 0.2j) * (A1 - A0)
        assert np.max(np.abs(A_test - recon)) < 1e-12

    def test_limit_matches_truncation_end(self, setup, sys6):
        _, _, pr = setup
        A_end = sys6.A(-pr.L_minus, 1.0)
        A_lim = sys6.A_limit("minus", 1.0)
        assert np.max(np.abs(A_end - A_lim)) < 10 * 1e-3 * 2
        e_end = sorted(np.linalg.eigvals(A_end).real)
        e_lim = sorted(np.linalg.eigvals(A_lim).real)
        assert np.max(np.abs(np.array(e_end) - e_lim)) < 1e-2
        assert [e > 0 for e in e_end] == [e > 0 for e in e_lim]

    def test_splitting_dims(self, sys6, sys3):
        k_m, k_p = sys6.splitting(1.0)
        assert k_m + k_p == 6
        k_m3, k_p3 = sys3.splitting(1.0)
        assert k_m3 + k_p3 == 3

    def test_splitting_constant_on_contour(self, sys6):
        for lam in (1e-3, 0.1, 1.0, 1j + 0.0, 2.0 + 2.0j, 4.0):
            k_m, k_p = sys6.splitting(lam)
            assert (k_m, k_p) == sys6.splitting(1.0)

    def test_assemble_wrapper(self, sys6):
        A = assemble_A(sys6, 0.0, 1.0)
        assert A.shape == (6, 6)


class _ConstantSystem:
    """Stub with a lambda-independent limiting matrix."""

    def __init__(self, M):
        self.M = np.asarray(M, dtype=complex)

    def A_limit(self, side, lam):
        return self.M


class TestKato:
    def test_constant_matrix_frames_constant(self):
        M = np.diag([-2.0, -1.0, 1.0, 3.0])
        stub = _ConstantSystem(M)
        lams = np.array([1.0, 1.0 + 0.5j, 0.5 + 0.5j, 0.2 + 0.3j])
        basis = kato_basis(stub, lams, "minus_unstable")
        for F in basis.frames[1:]:
            assert np.max(np.abs(F - basis.frames[0])) < 1e-13

    def test_closed_loop_return(self, sys6):
        theta = np.linspace(0.0, 2.0 * np.pi, 129)
        lams = 1.0 + 0.15 * np.exp(1j * theta)
        basis = kato_basis(sys6, lams, "minus_unstable")
        drift = np.max(np.abs(basis.frames[-1] - basis.frames[0]))
        assert drift < 1e-6

    def test_second_order_richardson(self, sys6):
        # circle dipping toward the origin, where projectors vary fast;
        # substepping off to expose the raw one-step order
        def drift(n):
            theta = np.linspace(0.0, 2.0 * np.pi, n + 1)
            lams = 0.3 + 0.25 * np.exp(1j * theta)
            basis = kato_basis(sys6, lams, "minus_unstable",
                               max_dlog=np.inf)
            return np.max(np.abs(basis.frames[-1] - basis.frames[0]))

        d1, d2 = drift(32), drift(64)
        assert d1 / d2 >= 3.5

    def test_real_seed_gives_real_frame(self, bases):
        for b in bases:
            assert np.max(np.abs(b.frames[0].imag)) == 0.0

    def test_subspace_residual(self, sys6, bases):
        # frames stay inside the analytic subspace
        from mhdshock.numerics import spectral_projector
        bm = bases[0]
        for lam, F in zip(bm.contour, bm.frames):
            P = spectral_projector(sys6.A_limit("minus", lam), True,
                                   center_tol=1e-12)
            assert np.linalg.norm(F - P @ F) < 1e-8


class TestEvansEval:
    def test_real_on_real_axis(self, sys6, bases):
        val = evans_eval(sys6, 1.0, bases)
        assert abs(val.imag) < 1e-12 * abs(val)

    def test_conjugate_symmetry(self, sys6, bases):
        lam = 1.0 + 0.6j
        val, val_conj = evans_eval_conjugate_pair(sys6, lam, bases)
        assert abs(val_conj - np.conj(val)) < 1e-10 * abs(val)

    def test_cross_validation_against_direct(self, sys6, bases):
        for lam in (1.0, 1.0 + 0.3j, 1.0 + 0.6j, 0.4 + 0.6j):
            v1 = evans_eval(sys6, lam, bases)
            v2 = evans_direct(sys6, lam, bases)
            darg = (cmath.phase(v1) - cmath.phase(v2) + np.pi) \
                % (2 * np.pi) - np.pi
            assert abs(darg) < 1e-3

    def test_direct_scaling_argument_invariant(self, sys6, bases):
        lam = 1.0 + 0.3j
        bm, bp = bases
        idx = 1
        scaled = AnalyticBasis(
            side=bm.side, contour=bm.contour,
            frames=[3.0 * F for F in bm.frames], shifts=bm.shifts, k=bm.k)
        v1 = evans_direct(sys6, lam, (bm, bp))
        v2 = evans_direct(sys6, lam, (scaled, bp))
        darg = (cmath.phase(v1) - cmath.phase(v2) + np.pi) \
            % (2 * np.pi) - np.pi
        assert abs(darg) < 1e-8

    def test_transverse_no_real_sign_change_monotone(self, setup):
        # monotone-volume profiles are transverse stable: no real root;
        # analytic continuation keeps the basis orientation consistent
        _, _, pr = setup
        sys3 = SpectralSystem(TRANSVERSE, pr)
        lams = np.linspace(0.05, 4.0, 24)
        b3 = (kato_basis(sys3, lams.astype(complex), "minus_unstable"),
              kato_basis(sys3, lams.astype(complex), "plus_stable"))
        vals = [evans_eval(sys3, lam, b3).real for lam in lams]
        assert all(v > 0 for v in vals) or all(v < 0 for v in vals)

    def test_direct_rejects_large_lambda(self, sys6, bases):
        with pytest.raises(Exception):
            evans_direct(sys6, 25.0, bases)


class TestPathIndependence:
    def test_refined_contour_agrees_at_shared_nodes(self, sys6):
        corners = np.array([1.0, 1.0 + 0.5j, 0.5 + 0.5j])

        def subdivide(n_sub):
            path = [corners[0]]
            for a, b in zip(corners[:-1], corners[1:]):
                for k in range(1, n_sub + 1):
                    path.append(a + (k / n_sub) * (b - a))
            return np.array(path)

        bc = (kato_basis(sys6, subdivide(16), "minus_unstable"),
              kato_basis(sys6, subdivide(16), "plus_stable"))
        bf = (kato_basis(sys6, subdivide(64), "minus_unstable"),
              kato_basis(sys6, subdivide(64), "plus_stable"))
        lam = corners[-1]
        v1 = evans_eval(sys6, lam, bc)
        v2 = evans_eval(sys6, lam, bf)
        assert abs(v1 - v2) < 1e-6 * abs(v1)
