"""Feed-forward neural classifier and PCA dimensionality reduction.

The network has one logistic hidden layer and a softmax output::

    h = sigmoid(W1 x + b1)
    p = softmax(W2 h + b2)

It is trained on mean cross-entropy with optional L2 decay on the weight
matrices (not the biases) by plain mini-batch gradient descent.  Class labels
are 1-based everywhere in the public API.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError

__all__ = [
    "NeuralNet",
    "TrainHyper",
    "PcaModel",
    "forward",
    "loss_and_grad",
    "train_nn",
    "predict_labels",
    "pca_fit",
    "pca_transform",
    "jacobi_eigh",
]


@dataclass(frozen=True)
class NeuralNet:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        W1, b1, W2, b2 = (np.array(a, dtype=float) for a in (self.W1, self.b1, self.W2, self.b2))
        if W1.ndim != 2 or W2.ndim != 2 or b1.shape != (W1.shape[0],):
            raise InputError("inconsistent hidden-layer shapes")
        if W2.shape[1] != W1.shape[0] or b2.shape != (W2.shape[0],):
            raise InputError("inconsistent output-layer shapes")
        if not all(np.all(np.isfinite(a)) for a in (W1, b1, W2, b2)):
            raise InputError("network parameters must be finite")
        for name, a in zip(("W1", "b1", "W2", "b2"), (W1, b1, W2, b2)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.W1.shape[1], self.W1.shape[0], self.W2.shape[0]

    @property
    def num_classes(self) -> int:
        return self.W2.shape[0]

    def params(self) -> tuple[np.ndarray, ...]:
        return self.W1, self.b1, self.W2, self.b2

    @classmethod
    def zeros(cls, d_in: int, d_hidden: int, n_classes: int) -> "NeuralNet":
        return cls(
            np.zeros((d_hidden, d_in)),
            np.zeros(d_hidden),
            np.zeros((n_classes, d_hidden)),
            np.zeros(n_classes),
        )


@dataclass(frozen=True)
class TrainHyper:
    learning_rate: float = 1.0
    epochs: int = 500
    batch_size: int = 32
    seed: int = 0
    init_scale: float = 0.1
    l2_decay: float = 0.0
    hidden: int = 32

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InputError(f"learning_rate must be positive, got {self.learning_rate!r}")
        if self.epochs < 1:
            raise InputError(f"epochs must be >= 1, got {self.epochs!r}")
        if self.batch_size < 1:
            raise InputError(f"batch_size must be >= 1, got {self.batch_size!r}")
        if not self.init_scale > 0:
            raise InputError(f"init_scale must be positive, got {self.init_scale!r}")
        if self.l2_decay < 0:
            raise InputError(f"l2_decay must be nonnegative, got {self.l2_decay!r}")
        if self.hidden < 1:
            raise InputError(f"hidden must be >= 1, got {self.hidden!r}")


def _sigmoid(v):
    return 0.5 * (1.0 + np.tanh(0.5 * v))


def _softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _inputs(net: NeuralNet, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (net.dims[0],) or x.ndim > 2:
        raise InputError(f"input has shape {x.shape}, expected trailing dim {net.dims[0]}")
    return x


def _forward(net, X):
    h = _sigmoid(X @ net.W1.T + net.b1)
    return h, _softmax(h @ net.W2.T + net.b2)


def forward(net: NeuralNet, x) -> np.ndarray:
    """Class probabilities for one input vector (or each row of a matrix)."""
    x = _inputs(net, x)
    return _forward(net, x)[1]


def predict_labels(net: NeuralNet, X) -> np.ndarray:
    """1-based argmax labels; ties go to the lowest class index."""
    return np.argmax(forward(net, X), axis=-1) + 1


def _batch(net, features, labels):
    X = _inputs(net, features)
    if X.ndim == 1:
        X = X[None, :]
    y = np.asarray(labels).reshape(-1)
    if X.shape[0] == 0 or y.shape != (X.shape[0],):
        raise InputError("batch must be nonempty with one label per row")
    if np.any(y != np.round(y)) or y.min() < 1 or y.max() > net.num_classes:
        raise InputError(f"labels must be integers in 1..{net.num_classes}")
    return X, y.astype(int) - 1


def loss_and_grad(net: NeuralNet, batch, l2_decay: float = 0.0):
    """Mean cross-entropy (+ ``l2_decay/2 * sum W**2``) and its gradient.

    Returns ``(loss, grads)`` where ``grads`` is a NeuralNet holding the partial
    derivatives in place of the parameters.
    """
    X, y = _batch(net, *batch)
    m = X.shape[0]
    h, p = _forward(net, X)
    loss = -np.mean(np.log(np.maximum(p[np.arange(m), y], 1e-300)))
    loss += 0.5 * l2_decay * (np.sum(net.W1**2) + np.sum(net.W2**2))

    d_logits = p.copy()
    d_logits[np.arange(m), y] -= 1.0
    d_logits /= m
    gW2 = d_logits.T @ h + l2_decay * net.W2
    gb2 = d_logits.sum(axis=0)
    d_h = (d_logits @ net.W2) * h * (1.0 - h)
    gW1 = d_h.T @ X + l2_decay * net.W1
    gb1 = d_h.sum(axis=0)
    return float(loss), NeuralNet(gW1, gb1, gW2, gb2)


def train_nn(
    features,
    labels,
    hyper: TrainHyper | None = None,
    num_classes: int | None = None,
    on_epoch: Callable[[int, NeuralNet], None] | None = None,
) -> NeuralNet:
    """Train a fresh network by mini-batch gradient descent.

    Weights start as seeded normals times ``init_scale``; biases start at zero.
    Rows are reshuffled every epoch with the same seeded generator, so the run
    is deterministic.  ``on_epoch(epoch, net)`` is called after every epoch.
    """
    hyper = hyper or TrainHyper()
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels).reshape(-1)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError(f"features must be a nonempty matrix, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise InputError("need exactly one label per feature row")
    C = int(num_classes if num_classes is not None else y.max())
    if C < 2:
        raise InputError("need at least two classes")
    missing = sorted(set(range(1, C + 1)) - set(int(v) for v in y))
    if missing:
        raise InputError(f"no training examples for class(es) {missing}")

    rng = np.random.default_rng(hyper.seed)
    d_in, d_h = X.shape[1], hyper.hidden
    W1 = hyper.init_scale * rng.standard_normal((d_h, d_in))
    W2 = hyper.init_scale * rng.standard_normal((C, d_h))
    params = [W1, np.zeros(d_h), W2, np.zeros(C)]
    net = NeuralNet(*params)
    m = X.shape[0]
    for epoch in range(hyper.epochs):
        order = rng.permutation(m)
        for start in range(0, m, hyper.batch_size):
            rows = order[start : start + hyper.batch_size]
            _, grads = loss_and_grad(net, (X[rows], y[rows]), hyper.l2_decay)
            net = NeuralNet(
                *(p - hyper.learning_rate * g for p, g in zip(net.params(), grads.params()))
            )
        if on_epoch is not None:
            on_epoch(epoch, net)
    return net


# --- PCA -------------------------------------------------------------------


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # r x d, orthonormal rows
    explained_variance: np.ndarray  # length r, descending

    @property
    def retained(self) -> int:
        return self.components.shape[0]

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]


def jacobi_eigh(M, tol: float = 1e-14, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with ``M = V diag(eigenvalues) V^T`` and the
    eigenvalues in descending order.
    """
    A = np.array(M, dtype=float)
    d = A.shape[0]
    if A.shape != (d, d):
        raise InputError("matrix must be square")
    V = np.eye(d)
    scale = max(np.abs(A).max(), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^T A J for the rotation J in the (p, q) plane
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], V[:, order]


def pca_fit(X, retained: int) -> PcaModel:
    """Top-``retained`` principal directions of the rows of ``X``.

    Uses the unbiased sample covariance.  Each component's sign is fixed so its
    largest-magnitude entry is positive.  Zero-variance data gives an arbitrary
    orthonormal basis with zero eigenvalues.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InputError("PCA needs a matrix with at least two rows")
    d = X.shape[1]
    if not 1 <= retained <= d:
        raise InputError(f"retained must lie in [1, {d}], got {retained}")
    mu = X.mean(axis=0)
    Xc = X - mu
    cov = Xc.T @ Xc / (X.shape[0] - 1)
    vals, vecs = jacobi_eigh(cov)
    comps = vecs[:, :retained].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mu, comps, np.maximum(vals[:retained], 0.0))


def pca_transform(model: PcaModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (model.input_dim,) or x.ndim > 2:
        raise InputError(f"input has shape {x.shape}, expected trailing dim {model.input_dim}")
    return (x - model.mean) @ model.components.T
