"""Weighted L1-regularized least squares via feature-sign search.

Solves::

    min_s  sum_i w_i ((B s)_i - z_i)**2 + beta * ||s||_1

with ``w`` the (positive) diagonal of the weighting matrix.  The solver works on
the weighted Gram matrix ``A = B^T W B`` and correlation ``c = B^T W z``, so the
smooth part has gradient ``2 (A s - c)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

__all__ = [
    "LassoProblem",
    "LassoSolution",
    "solve_weighted_lasso",
    "lasso_objective",
    "kkt_residual",
    "soft_threshold",
    "default_max_steps",
]

DEFAULT_TOL = 1e-8
_EFFECTIVE_ZERO = 1e-14


def default_max_steps(n: int) -> int:
    return 10 * n + 100


@dataclass
class LassoProblem:
    """One weighted-lasso instance.  Arrays are validated and copied to float."""

    B: np.ndarray
    z: np.ndarray
    weights: np.ndarray
    beta: float
    warm_start: np.ndarray | None = None

    def __post_init__(self):
        B = np.array(self.B, dtype=float, ndmin=2)
        z = np.array(self.z, dtype=float).reshape(-1)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if B.ndim != 2:
            raise InputError(f"B must be a matrix, got shape {B.shape}")
        k, n = B.shape
        if k == 0 or n == 0:
            raise InputError(f"B must be nonempty, got shape {B.shape}")
        if z.shape != (k,):
            raise InputError(f"z has length {z.size}, expected {k} (rows of B)")
        if w.shape != (k,):
            raise InputError(f"weights have length {w.size}, expected {k}")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(z))):
            raise InputError("B and z must be finite")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InputError("weights must be strictly positive and finite")
        beta = float(self.beta)
        if not (beta > 0 and np.isfinite(beta)):
            raise InputError(f"beta must be positive and finite, got {self.beta!r}")
        if self.warm_start is None:
            s0 = np.zeros(n)
        else:
            s0 = np.array(self.warm_start, dtype=float).reshape(-1)
            if s0.shape != (n,):
                raise InputError(
                    f"warm_start has length {s0.size}, expected {n} (columns of B)"
                )
            if not np.all(np.isfinite(s0)):
                raise InputError("warm_start must be finite")
        self.B, self.z, self.weights, self.beta, self.warm_start = B, z, w, beta, s0

    @property
    def n(self) -> int:
        return self.B.shape[1]

    def gram(self) -> tuple[np.ndarray, np.ndarray]:
        WB = self.B * self.weights[:, None]
        return self.B.T @ WB, WB.T @ self.z


@dataclass
class LassoSolution:
    s: np.ndarray
    objective: float
    kkt_residual: float
    steps: int
    active_set: tuple[int, ...]
    converged: bool = True
    trace: list[float] = field(default_factory=list, repr=False)


def soft_threshold(v, t):
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _check_s(problem: LassoProblem, s) -> np.ndarray:
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape != (problem.n,):
        raise InputError(f"s has length {s.size}, expected {problem.n}")
    return s


def lasso_objective(problem: LassoProblem, s) -> float:
    s = _check_s(problem, s)
    r = problem.B @ s - problem.z
    return float(np.sum(problem.weights * r * r) + problem.beta * np.sum(np.abs(s)))


def _kkt(grad: np.ndarray, s: np.ndarray, beta: float) -> float:
    nz = s != 0
    viol = np.zeros_like(s)
    viol[nz] = np.abs(grad[nz] + beta * np.sign(s[nz]))
    viol[~nz] = np.maximum(np.abs(grad[~nz]) - beta, 0.0)
    return float(viol.max()) if viol.size else 0.0


def kkt_residual(problem: LassoProblem, s) -> float:
    """Largest violation of the subgradient optimality conditions at ``s``.

    With ``g = 2 B^T W (B s - z)``: active coordinates need
    ``g_j + beta * sign(s_j) = 0`` and zero coordinates need ``|g_j| <= beta``.
    """
    s = _check_s(problem, s)
    grad = 2.0 * problem.B.T @ (problem.weights * (problem.B @ s - problem.z))
    return _kkt(grad, s, problem.beta)


def _snap(p: np.ndarray) -> np.ndarray:
    # Rounding residue left where a coordinate should be exactly zero.
    p[np.abs(p) <= _EFFECTIVE_ZERO * max(1.0, np.abs(p).max())] = 0.0
    return p


def _candidates(cur: np.ndarray, new: np.ndarray):
    """Segment endpoint plus every point where a nonzero coordinate hits zero."""
    yield _snap(new.copy())
    cross = np.flatnonzero((cur != 0) & (np.sign(new) != np.sign(cur)))
    for i in cross:
        t = cur[i] / (cur[i] - new[i])
        p = cur + t * (new - cur)
        p[i] = 0.0
        yield _snap(p)


def _feature_sign(A, c, const, beta, s0, tol, max_steps):
    """Core active-set loop on the Gram form.  Returns (s, steps, converged, trace).

    ``const`` is ``z^T W z`` so the tracked values are the true objective.
    """

    def obj(v):
        return float(v @ A @ v - 2.0 * (v @ c) + const + beta * np.abs(v).sum())

    s = s0.copy()
    theta = np.sign(s)
    grad = 2.0 * (A @ s - c)
    trace = [obj(s)]
    steps = 0
    converged = False
    while True:
        active = theta != 0
        nz_viol = np.abs(grad[active] + beta * theta[active]).max() if active.any() else 0.0
        if nz_viol <= tol:
            zero_grad = np.where(active, 0.0, np.abs(grad))
            j = int(np.argmax(zero_grad))  # first index wins ties
            if active.all() or zero_grad[j] <= beta + tol:
                converged = True
                break
            theta[j] = -np.sign(grad[j])
        if steps >= max_steps:
            break
        steps += 1

        idx = np.flatnonzero(theta)
        Aa = A[np.ix_(idx, idx)]
        rhs = c[idx] - 0.5 * beta * theta[idx]
        cur = s[idx]
        new, *_ = np.linalg.lstsq(Aa, rhs, rcond=None)

        cur_obj = trace[-1]
        best, best_obj = None, cur_obj
        trial = s.copy()
        for p in _candidates(cur, new):
            trial[idx] = p
            val = obj(trial)
            if val < best_obj:
                best, best_obj = p, val
        if best is None:
            # Rank-deficient active set with rhs outside range(Aa): the sign-
            # restricted quadratic falls linearly along the residual direction,
            # so walk that direction to each zero crossing.
            r = rhs - Aa @ new
            opposing = (cur * r) < 0
            reach = 2.0 * np.max(-cur[opposing] / r[opposing]) if opposing.any() else 1.0
            for p in _candidates(cur, cur + reach * r):
                trial[idx] = p
                val = obj(trial)
                if val < best_obj:
                    best, best_obj = p, val
        if best is None:
            # No descent available at working precision.
            theta = np.sign(s)
            break

        s[idx] = best
        theta = np.sign(s)
        grad = 2.0 * (A @ s - c)
        trace.append(best_obj)
    return s, steps, converged, trace


def solve_weighted_lasso(
    problem: LassoProblem, tol: float = DEFAULT_TOL, max_steps: int | None = None
) -> LassoSolution:
    """Feature-sign search for ``min ||W^(1/2)(B s - z)||^2 + beta ||s||_1``.

    Starts from ``problem.warm_start``.  If ``max_steps`` runs out before the
    optimality conditions hold to ``tol``, the best iterate is returned with
    ``converged=False``.  ``trace`` lists the objective after each accepted
    feature-sign step (first entry: the warm start); it strictly decreases.
    """
    if not tol > 0:
        raise InputError(f"tol must be positive, got {tol!r}")
    if max_steps is None:
        max_steps = default_max_steps(problem.n)
    A, c = problem.gram()
    return _solve_gram(problem, A, c, tol, max_steps)


def _solve_gram(problem, A, c, tol, max_steps) -> LassoSolution:
    beta = problem.beta
    const = float(np.sum(problem.weights * problem.z**2))
    if np.abs(2.0 * c).max() <= beta:
        # Zero satisfies the optimality conditions exactly.
        s = np.zeros(problem.n)
        trace = [lasso_objective(problem, problem.warm_start)]
        if problem.warm_start.any():
            trace.append(const)
        steps, converged = 0, True
    else:
        s, steps, converged, trace = _feature_sign(
            A, c, const, beta, problem.warm_start, tol, max_steps
        )
    kkt = kkt_residual(problem, s)
    return LassoSolution(
        s=s,
        objective=lasso_objective(problem, s),
        kkt_residual=kkt,
        steps=steps,
        active_set=tuple(int(i) for i in np.flatnonzero(s)),
        converged=converged and kkt <= tol,
        trace=trace,
    )
