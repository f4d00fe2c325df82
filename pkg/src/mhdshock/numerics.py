"""Foundational numerical kernels.

Adaptive embedded Runge-Kutta integration over complex state vectors with
cubic-Hermite dense output, small dense eigen/invariant-subspace routines,
a bracketed scalar root finder, and QR orthonormalization.  Everything here
is a pure function of its inputs; identical inputs give bit-identical
results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (BracketError, ConsistentSplittingError,
                     NonConvergenceError, RankDeficiencyError, StiffnessError)

DEFAULT_ABS_TOL = 1e-8
DEFAULT_REL_TOL = 1e-6

# Classic Fehlberg 4(5) tableau.  The 4th-order solution is propagated; the
# difference to the embedded 5th-order solution drives step control.
_RKF_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_RKF_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3554 / 2565, 1859 / 4104, -11 / 40),
)
_RKF_B4 = (25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0)
_RKF_ERR = (1 / 360, 0.0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55)

_MIN_STEP_FRACTION = 1e-14


@dataclass(frozen=True)
class Trajectory:
    """Accepted nodes of one adaptive integration plus dense output.

    ``xs`` is strictly monotone (increasing or decreasing with the
    direction of integration); ``ys``/``dys`` hold the state and its
    derivative at each node.  Evaluation between nodes uses the cubic
    Hermite interpolant, so one integration can be reused by any number
    of downstream queries.
    """

    xs: np.ndarray
    ys: np.ndarray
    dys: np.ndarray

    @property
    def start(self) -> float:
        return float(self.xs[0])

    @property
    def end(self) -> float:
        return float(self.xs[-1])

    def _locate(self, x):
        xs = self.xs
        if xs[-1] >= xs[0]:
            idx = np.searchsorted(xs, x, side="right") - 1
        else:
            idx = xs.size - 1 - np.searchsorted(xs[::-1], x, side="left")
        return np.clip(idx, 0, xs.size - 2)

    def __call__(self, x):
        """Dense-output state at ``x`` (scalar or array)."""
        x_arr = np.asarray(x, dtype=float)
        i = self._locate(x_arr)
        h = self.xs[i + 1] - self.xs[i]
        t = (x_arr - self.xs[i]) / h
        t = t[..., None] if self.ys.ndim > 1 else t
        h = h[..., None] if self.ys.ndim > 1 else h
        t2 = t * t
        t3 = t2 * t
        y = ((2 * t3 - 3 * t2 + 1) * self.ys[i]
             + (t3 - 2 * t2 + t) * h * self.dys[i]
             + (-2 * t3 + 3 * t2) * self.ys[i + 1]
             + (t3 - t2) * h * self.dys[i + 1])
        return y

    def derivative(self, x):
        """Dense-output derivative at ``x``."""
        x_arr = np.asarray(x, dtype=float)
        i = self._locate(x_arr)
        h = self.xs[i + 1] - self.xs[i]
        t = (x_arr - self.xs[i]) / h
        t = t[..., None] if self.ys.ndim > 1 else t
        h = h[..., None] if self.ys.ndim > 1 else h
        t2 = t * t
        dy = ((6 * t2 - 6 * t) * self.ys[i] / h
              + (3 * t2 - 4 * t + 1) * self.dys[i]
              + (-6 * t2 + 6 * t) * self.ys[i + 1] / h
              + (3 * t2 - 2 * t) * self.dys[i + 1])
        return dy


def integrate_adaptive(field, span, y0, abs_tol=DEFAULT_ABS_TOL,
                       rel_tol=DEFAULT_REL_TOL, max_step=np.inf) -> Trajectory:
    """Integrate ``y' = field(x, y)`` over ``span`` with RKF45 step control.

    Parameters
    ----------
    field : callable
        ``field(x, y) -> dy`` with ``y`` a complex vector.
    span : (x0, x1)
        Integration interval; ``x1 < x0`` integrates backward.
    y0 : array_like
        Initial state.
    abs_tol, rel_tol : float
        Embedded-pair local error is kept below
        ``abs_tol + rel_tol * |y|`` componentwise at every accepted step.
    max_step : float
        Optional cap on the step magnitude.

    Raises
    ------
    StiffnessError
        If step control drives the step below ``1e-14 * |span|``.
    """
    if abs_tol <= 0 or rel_tol <= 0:
        raise ValueError("tolerances must be positive")
    x0, x1 = float(span[0]), float(span[1])
    length = abs(x1 - x0)
    if length == 0.0:
        y = np.asarray(y0, dtype=complex)
        d = np.asarray(field(x0, y), dtype=complex)
        return Trajectory(np.array([x0]), y[None], d[None])
    direction = 1.0 if x1 > x0 else -1.0
    min_step = _MIN_STEP_FRACTION * length

    y = np.asarray(y0, dtype=complex).copy()
    x = x0
    h = direction * min(length / 64.0, max_step)

    xs = [x]
    ys = [y.copy()]
    k1 = np.asarray(field(x, y), dtype=complex)
    dys = [k1.copy()]

    ks = [None] * 6
    while (x1 - x) * direction > 0.0:
        if abs(h) > max_step:
            h = direction * max_step
        final = (x + h - x1) * direction > 0.0
        if final:
            h = x1 - x
        if abs(h) < min_step and not final:
            raise StiffnessError(x, abs(h))

        ks[0] = k1
        for s in range(1, 6):
            ya = y + h * sum(a * ks[j] for j, a in enumerate(_RKF_A[s]))
            ks[s] = np.asarray(field(x + _RKF_C[s] * h, ya), dtype=complex)

        y4 = y + h * sum(b * ks[j] for j, b in enumerate(_RKF_B4) if b)
        err = h * sum(e * ks[j] for j, e in enumerate(_RKF_ERR) if e)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y4))
        ratio = float(np.max(np.abs(err) / scale))

        if ratio <= 1.0:
            x = x + h
            y = y4
            k1 = np.asarray(field(x, y), dtype=complex)
            xs.append(x)
            ys.append(y.copy())
            dys.append(k1.copy())
            grow = 5.0 if ratio == 0.0 else min(5.0, 0.9 * ratio ** -0.2)
            h = h * grow
        else:
            h = h * max(0.2, 0.9 * ratio ** -0.2)

    return Trajectory(np.array(xs), np.array(ys), np.array(dys))


def eig_small(M):
    """Full eigen-decomposition of a small (<= 8x8) dense complex matrix.

    Returns a list of ``(eigenvalue, right_eigenvector)`` pairs with unit
    eigenvectors, phase-fixed so the largest component is real positive.
    Residuals ``|M v - lam v|`` are verified against ``1e-10 * |M|``.
    """
    M = np.asarray(M, dtype=complex)
    n, m = M.shape
    if n != m or n > 8:
        raise ValueError(f"expected square matrix of dim <= 8, got {M.shape}")
    try:
        lams, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NonConvergenceError(f"eigen-decomposition failed: {exc}") from exc

    norm_M = np.linalg.norm(M)
    pairs = []
    for lam, v in zip(lams, V.T):
        v = v / np.linalg.norm(v)
        pivot = v[np.argmax(np.abs(v))]
        v = v * (np.conj(pivot) / abs(pivot))
        res = np.linalg.norm(M @ v - lam * v)
        if res > 1e-10 * max(norm_M, 1.0):
            raise NonConvergenceError(
                f"eigenpair residual {res:.3e} exceeds tolerance for "
                f"eigenvalue {lam:.6g}")
        pairs.append((lam, v))
    return pairs


def _schur_split(M, center_tol):
    """Sorted complex Schur form with the unstable block leading."""
    M = np.asarray(M, dtype=complex)
    lams = np.linalg.eigvals(M)
    worst = lams[np.argmin(np.abs(lams.real))]
    if abs(worst.real) < center_tol:
        raise ConsistentSplittingError(worst)
    T, Z, k_unstable = sla.schur(M, output="complex",
                                 sort=lambda w: w.real > 0.0)
    return T, Z, int(k_unstable)


def split_subspaces(M, center_tol=1e-10):
    """Orthonormal bases of the stable / unstable invariant subspaces.

    Requires every eigenvalue to satisfy ``|Re| >= center_tol`` (consistent
    splitting); otherwise a ``ConsistentSplittingError`` carries the
    offending eigenvalue.
    """
    M = np.asarray(M, dtype=complex)
    _, Z_u, k_u = _schur_split(M, center_tol)
    unstable = Z_u[:, :k_u]
    T, Z, k_s = sla.schur(M, output="complex", sort=lambda w: w.real < 0.0)
    stable = Z[:, :k_s]
    return stable, unstable


def spectral_projector(M, unstable=True, center_tol=1e-10):
    """Spectral (Riesz) projector onto the unstable or stable eigengroup.

    Built from the sorted Schur form via a Sylvester solve, which stays
    accurate when eigenvalues inside the group are close to each other.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    T, Z, k = _schur_split(M, center_tol)
    if not unstable:
        # complementary projector: I - P_unstable
        return np.eye(n, dtype=complex) - spectral_projector(M, True, center_tol)
    if k == 0:
        return np.zeros((n, n), dtype=complex)
    if k == n:
        return np.eye(n, dtype=complex)
    Y = sla.solve_sylvester(T[:k, :k], -T[k:, k:], T[:k, k:])
    block = np.zeros((n, n), dtype=complex)
    block[:k, :k] = np.eye(k)
    block[:k, k:] = Y
    return Z @ block @ Z.conj().T


def invariant_basis(M, unstable=True, center_tol=1e-10):
    """Orthonormal basis of one invariant subspace (Schur vectors).

    For a real input matrix the basis is returned real, which seeds the
    analytic continuation with conjugation-symmetric data.
    """
    M = np.asarray(M)
    if np.isrealobj(M) or np.max(np.abs(M.imag)) == 0.0:
        Mr = np.asarray(M.real, dtype=float)
        lams = np.linalg.eigvals(Mr)
        worst = lams[np.argmin(np.abs(lams.real))]
        if abs(worst.real) < center_tol:
            raise ConsistentSplittingError(worst)
        sort = "rhp" if unstable else "lhp"
        _, Z, k = sla.schur(Mr, output="real", sort=sort)
        return Z[:, :int(k)].astype(complex)
    stable, unst = split_subspaces(M, center_tol)
    return unst if unstable else stable


def find_root(f, bracket, tol=1e-12, max_iter=200):
    """Bracketed root of a continuous scalar function.

    Bisection with secant acceleration; the bracket is maintained at every
    iteration, so convergence is guaranteed.  Terminates when either
    ``|f(root)| <= tol`` or the bracket width falls below ``tol``.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise BracketError(f"no sign change on [{lo:.6g}, {hi:.6g}]: "
                           f"f = {flo:.3e}, {fhi:.3e}")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        # secant proposal, clipped well inside the bracket
        denom = fhi - flo
        if denom != 0.0:
            x_sec = hi - fhi * (hi - lo) / denom
        else:
            x_sec = 0.5 * (lo + hi)
        margin = 0.1 * (hi - lo)
        x = x_sec if (lo + margin) < x_sec < (hi - margin) else 0.5 * (lo + hi)
        fx = f(x)
        if abs(fx) <= tol:
            return x
        if flo * fx < 0.0:
            hi, fhi = x, fx
        else:
            lo, flo = x, fx
    return lo if abs(flo) < abs(fhi) else hi


def orthonormalize(frame):
    """QR factorization with a positive-real triangular diagonal.

    ``frame`` holds the input vectors as columns (an ``(n, k)`` array or a
    sequence of vectors).  Returns ``(Q, R)`` with ``Q R`` reconstructing
    the input, ``Q`` orthonormal, and ``R`` upper triangular with positive
    real diagonal (making the factorization unique and deterministic).
    """
    if isinstance(frame, (list, tuple)):
        A = np.column_stack([np.asarray(v, dtype=complex) for v in frame])
    else:
        A = np.asarray(frame, dtype=complex)
        if A.ndim == 1:
            A = A[:, None]
    Q, R = np.linalg.qr(A)
    d = np.diag(R).copy()
    mags = np.abs(d)
    if mags.min() == 0.0 or mags.max() / mags.min() > 1e12:
        raise RankDeficiencyError(mags.min())
    phase = d / mags
    Q = Q * phase[None, :]
    R = R * np.conj(phase)[:, None]
    return Q, R
