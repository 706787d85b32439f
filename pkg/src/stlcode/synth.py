"""Synthetic sparse-coding data and dictionary recovery scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import expfam
from .errors import InputError
from .expfam import FamilyId, FamilySpec

__all__ = [
    "SynthData",
    "synth_generate",
    "synth_classification",
    "dictionary_recovery_score",
]

# Code magnitudes are multiplied by this so B s stays in a useful eta range.
_CODE_SCALE = {
    FamilyId.GAUSSIAN: 1.0,
    FamilyId.BERNOULLI: 2.0,
    FamilyId.POISSON: 0.75,
}


@dataclass
class SynthData:
    B_true: np.ndarray  # k x n, unit-norm columns
    S_true: np.ndarray  # m x n
    X: np.ndarray  # m x k
    family_id: FamilyId
    seed: int


def _unit_columns(k, n, rng):
    B = rng.standard_normal((k, n))
    return B / np.linalg.norm(B, axis=0)


def _sparse_codes(m, n, sparsity, rng, support_pool=None):
    S = np.zeros((m, n))
    pool = np.arange(n) if support_pool is None else np.asarray(support_pool)
    for i in range(m):
        idx = rng.choice(pool, size=sparsity, replace=False)
        mags = rng.uniform(0.5, 1.5, size=sparsity)
        signs = rng.choice((-1.0, 1.0), size=sparsity)
        S[i, idx] = mags * signs
    return S


def _observe(family, eta, rng, noise, noiseless):
    if noiseless:
        if not family.is_gaussian:
            raise InputError("noiseless generation is only defined for gaussian data")
        return eta
    return np.asarray(expfam.sample(family, eta, rng, scale=noise))


def synth_generate(
    seed: int,
    k: int,
    n: int,
    m: int,
    sparsity: int,
    family: FamilySpec = expfam.GAUSSIAN,
    noise: float = 0.1,
    noiseless: bool = False,
) -> SynthData:
    """Draw a random unit-norm dictionary, sparse codes and observations.

    Each code row has ``sparsity`` nonzeros with magnitudes in [0.5, 1.5] and
    random signs (then scaled per family).  Observations are sampled around
    ``eta = B s``; ``noise`` is the gaussian standard deviation.
    """
    family = expfam.get_family(family)
    if not 0 <= sparsity <= n:
        raise InputError(f"sparsity must lie in [0, {n}], got {sparsity}")
    if min(k, n, m) < 1:
        raise InputError("k, n and m must all be >= 1")
    rng = np.random.default_rng(seed)
    B = _unit_columns(k, n, rng)
    S = _sparse_codes(m, n, sparsity, rng) * _CODE_SCALE[family.family_id]
    X = _observe(family, S @ B.T, rng, noise, noiseless)
    return SynthData(B, S, X, family.family_id, seed)


def synth_classification(
    seed: int,
    k: int = 16,
    n: int = 8,
    m_labeled: int = 200,
    m_unlabeled: int = 500,
    m_test: int = 200,
    sparsity: int = 2,
    num_classes: int = 2,
    family: FamilySpec = expfam.GAUSSIAN,
    noise: float = 0.1,
):
    """Labeled task whose classes use disjoint blocks of dictionary atoms.

    Class ``c`` (1-based) draws its code supports from the c-th block of
    ``n // num_classes`` atoms.  Unlabeled rows come from a uniformly random
    class, without their labels.

    Returns ``(B_true, (X_u,), (X_l, y_l), (X_test, y_test))``.
    """
    family = expfam.get_family(family)
    block = n // num_classes
    if num_classes < 2 or block < sparsity:
        raise InputError("need num_classes >= 2 and n // num_classes >= sparsity")
    rng = np.random.default_rng(seed)
    B = _unit_columns(k, n, rng)
    scale = _CODE_SCALE[family.family_id]

    def draw(count):
        y = rng.integers(1, num_classes + 1, size=count)
        S = np.zeros((count, n))
        for c in range(1, num_classes + 1):
            rows = np.flatnonzero(y == c)
            pool = np.arange((c - 1) * block, c * block)
            S[rows] = _sparse_codes(rows.size, n, sparsity, rng, pool)
        X = _observe(family, scale * S @ B.T, rng, noise, False)
        return X, y

    X_u, _ = draw(m_unlabeled)
    X_l, y_l = draw(m_labeled)
    X_t, y_t = draw(m_test)
    return B, (X_u,), (X_l, y_l), (X_t, y_t)


def dictionary_recovery_score(B_true, B_learned) -> float:
    """Mean |cosine| between true atoms and learned atoms under greedy matching.

    Pairs are matched one-to-one in decreasing order of |cosine|.  True atoms
    left unmatched, and zero-norm columns, contribute 0.
    """
    T = np.asarray(B_true, dtype=float)
    L = np.asarray(B_learned, dtype=float)
    if T.ndim != 2 or L.ndim != 2 or T.shape[0] != L.shape[0]:
        raise InputError("dictionaries must be matrices with the same row count")
    if T.shape[1] == 0:
        raise InputError("B_true has no columns")

    def unit(M):
        norms = np.linalg.norm(M, axis=0)
        out = np.zeros_like(M)
        ok = norms > 0
        out[:, ok] = M[:, ok] / norms[ok]
        return out

    sim = np.abs(unit(T).T @ unit(L))
    total = 0.0
    for _ in range(min(sim.shape)):
        i, j = np.unravel_index(np.argmax(sim), sim.shape)
        if sim[i, j] < 0:
            break
        total += min(float(sim[i, j]), 1.0)
        sim[i, :] = -1.0
        sim[:, j] = -1.0
    return total / T.shape[1]
