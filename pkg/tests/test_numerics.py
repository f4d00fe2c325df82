"""Kernel tests: integrator, eigen routines, root finder, QR."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mhdshock.errors import (BracketError, ConsistentSplittingError,
                             RankDeficiencyError)
from mhdshock.numerics import (eig_small, find_root, integrate_adaptive,
                               invariant_basis, orthonormalize,
                               spectral_projector, split_subspaces)

# Planar traveling-wave field at the parameters of the typical
# four-rest-point phase portrait (gamma=5/3, v+=0.1, I=0.8, B+=0.7).
_GAMMA, _I, _MU0 = 5 / 3, 0.8, 1.0
_K = _I ** 2 / _MU0
_BM = (0.1 - _K) / (1.0 - _K) * 0.7
_J = _BM ** 2 / 2.0
_A = (0.9 / (0.1 ** -_GAMMA - 1.0)) * (
    1.0 - _J * (1.1 - 2 * _K) / (0.1 - _K) ** 2)


def _planar_field(x, y):
    v, w = y[0].real, y[1].real
    p = _A * v ** -_GAMMA
    dv = v * (v - 1.0) + v * (p - _A) + ((_BM + _I * w) ** 2
                                         - v ** 2 * _BM ** 2) / (2 * _MU0 * v)
    dw = v * w - (_I / _MU0) * (_BM * (1.0 - v) + _I * w)
    return np.array([dv, dw], dtype=complex)


class TestIntegrateAdaptive:
    def test_exponential_decay(self):
        traj = integrate_adaptive(lambda x, y: -y, (0.0, 1.0),
                                  np.array([1.0 + 0j]))
        assert abs(traj.ys[-1][0] - np.exp(-1.0)) < 1e-8

    def test_complex_rotation(self):
        traj = integrate_adaptive(lambda x, y: 1j * y, (0.0, np.pi),
                                  np.array([1.0 + 0j]))
        assert abs(traj.ys[-1][0] - (-1.0)) < 1e-7

    def test_planar_profile_field_richardson(self):
        # Oracle: same integration with tolerances tightened 100x.
        y0 = np.array([0.55, -0.3], dtype=complex)
        coarse = integrate_adaptive(_planar_field, (0.0, 2.0), y0)
        fine = integrate_adaptive(_planar_field, (0.0, 2.0), y0,
                                  abs_tol=1e-10, rel_tol=1e-8)
        assert np.max(np.abs(coarse.ys[-1] - fine.ys[-1])) < 1e-6

    def test_backward_integration(self):
        traj = integrate_adaptive(lambda x, y: -y, (1.0, 0.0),
                                  np.array([np.exp(-1.0) + 0j]))
        assert abs(traj.ys[-1][0] - 1.0) < 1e-7

    def test_deterministic(self):
        y0 = np.array([0.55, -0.3], dtype=complex)
        t1 = integrate_adaptive(_planar_field, (0.0, 3.0), y0)
        t2 = integrate_adaptive(_planar_field, (0.0, 3.0), y0)
        assert np.array_equal(t1.xs, t2.xs)
        assert np.array_equal(t1.ys, t2.ys)

    def test_dense_output_matches_nodes(self):
        traj = integrate_adaptive(lambda x, y: np.array([2 * x + 0j]),
                                  (0.0, 1.0), np.array([0.0 + 0j]))
        xq = np.linspace(0, 1, 37)
        assert np.max(np.abs(traj(xq)[:, 0] - xq ** 2)) < 1e-10

    def test_local_error_satisfied(self):
        traj = integrate_adaptive(lambda x, y: 1j * y, (0.0, 6.0),
                                  np.array([1.0 + 0j]),
                                  abs_tol=1e-8, rel_tol=1e-6)
        exact = np.exp(1j * traj.xs)
        assert np.max(np.abs(traj.ys[:, 0] - exact)) < 1e-5


class TestEigSmall:
    def test_identity(self):
        pairs = eig_small(np.eye(3))
        assert len(pairs) == 3
        assert all(abs(lam - 1.0) < 1e-14 for lam, _ in pairs)

    def test_diagonal_complex(self):
        pairs = eig_small(np.diag([2.0, -1.0, 1j]))
        got = sorted((lam for lam, _ in pairs), key=lambda z: (z.real, z.imag))
        want = sorted([2.0, -1.0, 1j], key=lambda z: (z.real, z.imag))
        assert np.allclose(got, want, atol=1e-12)

    def test_char_poly_oracle(self):
        # Independent oracle: roots of the characteristic polynomial.
        rng = np.random.default_rng(7)
        M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        lams = np.array(sorted((lam for lam, _ in eig_small(M)),
                               key=lambda z: (z.real, z.imag)))
        coeffs = np.poly(M)
        roots = np.array(sorted(np.roots(coeffs),
                                key=lambda z: (z.real, z.imag)))
        assert np.max(np.abs(lams - roots)) < 1e-8

    def test_conjugate_spectrum(self):
        rng = np.random.default_rng(3)
        M = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        sa = sorted((lam for lam, _ in eig_small(M)),
                    key=lambda z: (z.real, z.imag))
        sb = sorted((np.conj(lam) for lam, _ in eig_small(np.conj(M))),
                    key=lambda z: (z.real, z.imag))
        assert np.max(np.abs(np.array(sa) - np.array(sb))) < 1e-10

    def test_rejects_large(self):
        with pytest.raises(ValueError):
            eig_small(np.eye(9))


class TestSplitSubspaces:
    def test_diagonal(self):
        stable, unstable = split_subspaces(np.diag([-1.0, 2.0]))
        assert abs(abs(stable[0, 0]) - 1.0) < 1e-14 and stable.shape == (2, 1)
        assert abs(abs(unstable[1, 0]) - 1.0) < 1e-14

    def test_dims_sum(self):
        rng = np.random.default_rng(11)
        M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        M = M + 0.3 * np.eye(6)  # push eigenvalues off the axis, typically
        try:
            stable, unstable = split_subspaces(M)
        except ConsistentSplittingError:
            pytest.skip("random draw landed near the axis")
        assert stable.shape[1] + unstable.shape[1] == 6

    def test_center_eigenvalue_rejected(self):
        with pytest.raises(ConsistentSplittingError):
            split_subspaces(np.diag([1e-13, 1.0]))

    def test_invariance(self):
        M = np.diag([-2.0, -0.5, 1.0, 3.0]).astype(complex)
        stable, _ = split_subspaces(M)
        MS = M @ stable
        # columns stay inside the stable subspace
        proj = stable @ (stable.conj().T @ MS)
        assert np.max(np.abs(MS - proj)) < 1e-12

    def test_projector_idempotent(self):
        rng = np.random.default_rng(5)
        M = rng.normal(size=(6, 6)) + 0.4 * np.eye(6)
        P = spectral_projector(M, unstable=True)
        assert np.max(np.abs(P @ P - P)) < 1e-10
        assert np.max(np.abs(P @ M - M @ P)) < 1e-10

    def test_invariant_basis_real_seed(self):
        M = np.array([[0.0, 1.0], [2.0, -0.3]])
        B = invariant_basis(M, unstable=True)
        assert np.max(np.abs(B.imag)) == 0.0


class TestFindRoot:
    def test_affine(self):
        assert abs(find_root(lambda v: v - 0.5, (0.0, 1.0)) - 0.5) < 1e-12

    def test_sqrt2(self):
        r = find_root(lambda v: v * v - 2.0, (1.0, 2.0), tol=1e-13)
        assert abs(r - np.sqrt(2.0)) < 1e-12

    def test_no_sign_change(self):
        with pytest.raises(BracketError):
            find_root(lambda v: v * v + 1.0, (0.0, 1.0))

    @given(st.floats(min_value=-5.0, max_value=5.0),
           st.floats(min_value=0.01, max_value=3.0))
    @settings(max_examples=40, deadline=None)
    def test_bracket_always_converges(self, root, width):
        f = lambda v: (v - root) * (1.0 + (v - root) ** 2)
        got = find_root(f, (root - width, root + width), tol=1e-12)
        assert abs(got - root) < 1e-10


class TestOrthonormalize:
    def test_identity(self):
        Q, R = orthonormalize(np.eye(3))
        assert np.allclose(Q, np.eye(3)) and np.allclose(R, np.eye(3))

    def test_hand_gram_schmidt(self):
        Q, R = orthonormalize([(1.0, 1.0), (0.0, 1.0)])
        assert np.max(np.abs(Q.conj().T @ Q - np.eye(2))) < 1e-14
        assert abs(np.linalg.det(R) - 1.0) < 1e-12

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(2)
        A = rng.normal(size=(6, 3)) + 1j * rng.normal(size=(6, 3))
        Q, R = orthonormalize(A)
        assert np.max(np.abs(Q @ R - A)) < 1e-12
        assert np.max(np.abs(Q.conj().T @ Q - np.eye(3))) < 1e-13
        assert np.all(np.diag(R).real > 0)
        assert np.max(np.abs(np.diag(R).imag)) < 1e-14

    def test_rank_deficient(self):
        A = np.array([[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(RankDeficiencyError):
            orthonormalize(A)
