"""Exponential-family observation models.

Each family is described by its log-partition ``a(eta)``; the mean is
``a'(eta)`` and the variance ``a''(eta)``.  The sufficient statistic is the
identity for all three families, so ``T(x) = x`` once the observation has been
checked against the family's data domain.

All functions accept a scalar or an array for ``eta``/``x`` and return the same
shape (a Python float for scalar input).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "FamilyId",
    "FamilySpec",
    "GAUSSIAN",
    "BERNOULLI",
    "POISSON",
    "get_family",
    "log_partition",
    "mean",
    "variance",
    "sufficient_stat",
    "check_domain",
    "sample",
]


class FamilyId(str, enum.Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    POISSON = "poisson"


_DOMAINS = {
    FamilyId.GAUSSIAN: "all real numbers",
    FamilyId.BERNOULLI: "{0, 1}",
    FamilyId.POISSON: "nonnegative integers",
}


@dataclass(frozen=True)
class FamilySpec:
    family_id: FamilyId

    @property
    def name(self) -> str:
        return self.family_id.value

    @property
    def data_domain(self) -> str:
        return _DOMAINS[self.family_id]

    @property
    def is_gaussian(self) -> bool:
        return self.family_id is FamilyId.GAUSSIAN

    def __str__(self) -> str:
        return self.name


GAUSSIAN = FamilySpec(FamilyId.GAUSSIAN)
BERNOULLI = FamilySpec(FamilyId.BERNOULLI)
POISSON = FamilySpec(FamilyId.POISSON)

_BY_NAME = {f.name: f for f in (GAUSSIAN, BERNOULLI, POISSON)}


def get_family(family: FamilySpec | FamilyId | str) -> FamilySpec:
    """Look up a family by FamilySpec, FamilyId or name string."""
    if isinstance(family, FamilySpec):
        return family
    if isinstance(family, FamilyId):
        return _BY_NAME[family.value]
    try:
        return _BY_NAME[str(family).lower()]
    except KeyError:
        raise InputError(
            f"unknown family {family!r}; expected one of {sorted(_BY_NAME)}"
        ) from None


def _as_eta(eta):
    arr = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InputError("natural parameter eta must be finite")
    return arr


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def _sigmoid(eta):
    # Split on sign so exp() never overflows.
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def log_partition(family: FamilySpec, eta):
    """Log-partition ``a(eta)``.

    gaussian: eta**2 / 2; bernoulli: log(1 + e**eta); poisson: e**eta.
    """
    fid = get_family(family).family_id
    eta = _as_eta(eta)
    if fid is FamilyId.GAUSSIAN:
        res = 0.5 * eta * eta
    elif fid is FamilyId.BERNOULLI:
        # log(1 + e^eta) = max(eta, 0) + log1p(e^-|eta|)
        res = np.maximum(eta, 0.0) + np.log1p(np.exp(-np.abs(eta)))
    else:
        with np.errstate(over="ignore"):
            res = np.exp(eta)
    return _out(res)


def mean(family: FamilySpec, eta):
    """Mean function ``a'(eta)``; the logistic sigmoid for bernoulli."""
    fid = get_family(family).family_id
    eta = _as_eta(eta)
    if fid is FamilyId.GAUSSIAN:
        res = eta.copy()
    elif fid is FamilyId.BERNOULLI:
        res = _sigmoid(np.atleast_1d(eta)).reshape(eta.shape)
    else:
        with np.errstate(over="ignore"):
            res = np.exp(eta)
    return _out(res)


def variance(family: FamilySpec, eta):
    """Variance function ``a''(eta)``.

    Positive everywhere in exact arithmetic; the bernoulli value underflows to
    zero in floating point once ``|eta|`` exceeds roughly 745.
    """
    fid = get_family(family).family_id
    eta = _as_eta(eta)
    if fid is FamilyId.GAUSSIAN:
        res = np.ones_like(eta)
    elif fid is FamilyId.BERNOULLI:
        p = _sigmoid(np.atleast_1d(eta)).reshape(eta.shape)
        # p * (1 - p) loses everything for large eta; use the symmetric form.
        q = _sigmoid(-np.atleast_1d(eta)).reshape(eta.shape)
        res = p * q
    else:
        with np.errstate(over="ignore"):
            res = np.exp(eta)
    return _out(res)


def check_domain(family: FamilySpec, x) -> np.ndarray:
    """Return ``x`` as a float array, raising DomainError if any entry is invalid."""
    fid = get_family(family).family_id
    arr = np.asarray(x, dtype=float)
    flat = arr.reshape(-1)
    bad = ~np.isfinite(flat)
    if fid is FamilyId.BERNOULLI:
        bad |= (flat != 0.0) & (flat != 1.0)
    elif fid is FamilyId.POISSON:
        with np.errstate(invalid="ignore"):
            bad |= (flat < 0) | (flat != np.floor(flat))
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise DomainError(
            f"value {flat[idx]!r} at flat index {idx} is outside the "
            f"{fid.value} data domain ({_DOMAINS[fid]})"
        )
    return arr


def sufficient_stat(family: FamilySpec, x):
    """Sufficient statistic ``T(x)``: the identity, after domain validation."""
    return _out(check_domain(family, x))


def sample(family: FamilySpec, eta, rng: np.random.Generator, scale: float = 1.0):
    """Draw one observation per entry of ``eta``.

    Parameters
    ----------
    family : FamilySpec
    eta : float or array
        Natural parameter(s).
    rng : numpy.random.Generator
        Explicit generator; the draw is a deterministic function of its state.
    scale : float
        Standard deviation of the gaussian noise (ignored for other families).
    """
    fid = get_family(family).family_id
    eta = _as_eta(eta)
    flat = eta.reshape(-1)
    if fid is FamilyId.GAUSSIAN:
        res = flat + scale * rng.standard_normal(flat.shape)
    elif fid is FamilyId.BERNOULLI:
        p = _sigmoid(flat)
        res = (rng.random(flat.shape) < p).astype(float)
    else:
        with np.errstate(over="ignore"):
            lam = np.exp(flat)
        if not np.all(np.isfinite(lam)):
            raise InputError("poisson rate overflows; eta too large")
        res = rng.poisson(lam).astype(float)
    return _out(res.reshape(eta.shape))
