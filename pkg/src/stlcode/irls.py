"""Exponential-family sparse coding by iteratively reweighted lasso.

For observation ``x`` and basis ``B`` the activation ``s`` minimises::

    F(s) = 2 * sum_i [a((B s)_i) - x_i (B s)_i] + beta * ||s||_1

Each iteration replaces the smooth part by its second-order expansion at the
current ``s``, which is exactly the weighted lasso
``||W^(1/2)(B s' - z)||^2 + beta ||s'||_1`` with ``W = diag(a''(B s))`` and
``z = W^-1 (x - a'(B s)) + B s``.  The lasso solution gives a search direction
and a backtracking line search picks the step.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import expfam
from .errors import DivergenceError, InputError
from .expfam import FamilySpec
from .lasso import LassoProblem, _solve_gram, default_max_steps, solve_weighted_lasso

__all__ = [
    "EncodeConfig",
    "SparseCode",
    "IrlsStep",
    "master_objective",
    "irls_step",
    "encode",
    "encode_batch",
]

log = logging.getLogger(__name__)

# Floor for the curvature weights before they are inverted.
MIN_WEIGHT = 1e-12


@dataclass(frozen=True)
class EncodeConfig:
    beta: float = 0.1
    epsilon: float = 1e-6
    max_iter: int = 100
    ls_shrink: float = 0.5
    ls_max_halvings: int = 30
    lasso_tol: float = 1e-8

    def __post_init__(self):
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise InputError(f"beta must be positive, got {self.beta!r}")
        if not self.epsilon > 0:
            raise InputError(f"epsilon must be positive, got {self.epsilon!r}")
        if not 0 < self.ls_shrink < 1:
            raise InputError(f"ls_shrink must lie in (0, 1), got {self.ls_shrink!r}")
        if self.max_iter < 1:
            raise InputError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if self.ls_max_halvings < 0:
            raise InputError("ls_max_halvings must be nonnegative")


@dataclass
class SparseCode:
    s: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0


class IrlsStep(NamedTuple):
    weights: np.ndarray
    target: np.ndarray
    s_hat: np.ndarray
    t: float
    s_next: np.ndarray
    accepted: bool


def _check_inputs(family, B, x, s=None):
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] == 0 or B.shape[1] == 0:
        raise InputError(f"B must be a nonempty matrix, got shape {B.shape}")
    if not np.all(np.isfinite(B)):
        raise InputError("B must be finite")
    x = expfam.check_domain(family, np.asarray(x, dtype=float).reshape(-1))
    if x.shape != (B.shape[0],):
        raise InputError(f"x has length {x.size}, expected {B.shape[0]}")
    if s is None:
        return B, x
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape != (B.shape[1],):
        raise InputError(f"s has length {s.size}, expected {B.shape[1]}")
    if not np.all(np.isfinite(s)):
        raise InputError("s must be finite")
    return B, x, s


def _objective(family, B, x, s, beta) -> float:
    eta = B @ s
    if not np.all(np.isfinite(eta)):
        return np.inf
    return float(
        2.0 * np.sum(expfam.log_partition(family, eta) - x * eta)
        + beta * np.abs(s).sum()
    )


def master_objective(family: FamilySpec, B, x, s, beta: float) -> float:
    """Penalised negative log-likelihood ``F(s)`` (up to an s-free constant).

    For the gaussian family ``F(s) = ||B s - x||^2 - ||x||^2 + beta ||s||_1``.
    """
    family = expfam.get_family(family)
    B, x, s = _check_inputs(family, B, x, s)
    return _objective(family, B, x, s, beta)


def _irls_step(family, B, x, s, f_cur, config: EncodeConfig):
    eta = B @ s
    w = np.maximum(np.atleast_1d(expfam.variance(family, eta)), MIN_WEIGHT)
    z = (x - np.atleast_1d(expfam.mean(family, eta))) / w + eta
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(z))):
        raise DivergenceError("non-finite curvature weights or working target")
    sol = solve_weighted_lasso(
        LassoProblem(B, z, w, config.beta, warm_start=s), tol=config.lasso_tol
    )
    s_hat = sol.s
    t = 1.0
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(config.ls_max_halvings + 1):
            cand = (1.0 - t) * s + t * s_hat
            f_new = _objective(family, B, x, cand, config.beta)
            if f_new < f_cur:
                return IrlsStep(w, z, s_hat, t, cand, True), f_new
            t *= config.ls_shrink
    return IrlsStep(w, z, s_hat, 0.0, s.copy(), False), f_cur


def irls_step(family: FamilySpec, B, x, s, config: EncodeConfig) -> IrlsStep:
    """One reweighting iteration from ``s``.

    Returns the curvature weights, working target, lasso solution ``s_hat``,
    step size ``t`` and the next iterate ``(1 - t) s + t s_hat``.  When no step
    size within ``ls_max_halvings`` shrinks the objective the step is rejected:
    ``t = 0``, ``accepted = False`` and the iterate is unchanged.
    """
    family = expfam.get_family(family)
    B, x, s = _check_inputs(family, B, x, s)
    f_cur = _objective(family, B, x, s, config.beta)
    step, _ = _irls_step(family, B, x, s, f_cur, config)
    return step


def encode(family: FamilySpec, B, x, config: EncodeConfig | None = None) -> SparseCode:
    """Sparse activation of ``x`` under ``family``, starting from ``s = 0``.

    Iterates until the objective decrease of a step is at most
    ``config.epsilon`` (or a step is rejected, i.e. decrease 0), or
    ``config.max_iter`` steps have run.
    """
    config = config or EncodeConfig()
    family = expfam.get_family(family)
    B, x = _check_inputs(family, B, x)
    s = np.zeros(B.shape[1])
    f_cur = _objective(family, B, x, s, config.beta)
    trace = [f_cur]
    converged = False
    it = 0
    while it < config.max_iter:
        it += 1
        try:
            step, f_new = _irls_step(family, B, x, s, f_cur, config)
        except DivergenceError as err:
            raise DivergenceError(f"iteration {it}: {err}") from None
        if not step.accepted:
            converged = True
            break
        decrease = f_cur - f_new
        s, f_cur = step.s_next, f_new
        trace.append(f_cur)
        if decrease <= config.epsilon:
            converged = True
            break
        if family.is_gaussian and step.t == 1.0:
            # Weights and target do not depend on s, so a full step lands on
            # the exact minimiser.
            converged = True
            break
    if not converged:
        log.debug("encode stopped at max_iter=%d without converging", config.max_iter)
    return SparseCode(s=s, objective_trace=trace, converged=converged, iterations=it)


def _thread_count(threads: int | None) -> int:
    if threads is None:
        raw = os.environ.get("STLCODE_THREADS", "").strip()
        try:
            threads = int(raw) if raw else 0
        except ValueError:
            raise InputError(f"STLCODE_THREADS must be an integer, got {raw!r}") from None
    return max(int(threads), 0)


def encode_batch(
    family: FamilySpec,
    B,
    X,
    config: EncodeConfig | None = None,
    threads: int | None = None,
) -> list[SparseCode]:
    """Encode every row of ``X`` against a shared read-only ``B``.

    ``threads`` caps the worker count; ``None`` reads ``STLCODE_THREADS`` and
    0 means serial.  Output is identical regardless of the worker count.
    """
    config = config or EncodeConfig()
    family = expfam.get_family(family)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InputError(f"X must be a matrix, got shape {X.shape}")
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or X.shape[1] != B.shape[0]:
        raise InputError(
            f"X has {X.shape[1] if X.ndim == 2 else '?'} columns, B has {B.shape[0]} rows"
        )
    expfam.check_domain(family, X)

    if family.is_gaussian:
        # Lambda = I and z = x, so the Gram matrix is shared by every row.
        gram = B.T @ B
        ones = np.ones(B.shape[0])

        def one(x):
            prob = LassoProblem(B, x, ones, config.beta)
            sol = _solve_gram(
                prob, gram, B.T @ prob.z, config.lasso_tol, default_max_steps(prob.n)
            )
            f0 = _objective(family, B, prob.z, np.zeros(prob.n), config.beta)
            f1 = _objective(family, B, prob.z, sol.s, config.beta)
            trace = [f0] if f1 >= f0 else [f0, f1]
            return SparseCode(sol.s, trace, sol.converged, 1)

    else:

        def one(x):
            return encode(family, B, x, config)

    n_workers = min(_thread_count(threads), len(X))
    if n_workers <= 1:
        return [one(x) for x in X]
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(one, X))
