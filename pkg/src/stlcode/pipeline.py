"""Self-taught learning: unlabeled basis -> sparse features -> neural classifier."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import expfam
from .dictionary import Dictionary, learn_dictionary
from .errors import InputError, stage
from .expfam import FamilyId
from .irls import EncodeConfig, encode_batch
from .nnclf import NeuralNet, PcaModel, TrainHyper, forward, pca_fit, pca_transform, train_nn

__all__ = [
    "UnlabeledDataset",
    "LabeledDataset",
    "SelfTaughtConfig",
    "SelfTaughtModel",
    "encode_features",
    "self_taught_train",
    "predict",
    "predict_batch",
]


@dataclass
class UnlabeledDataset:
    X: np.ndarray
    family_id: FamilyId = FamilyId.GAUSSIAN

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.family_id = expfam.get_family(self.family_id).family_id
        if self.X.ndim != 2 or 0 in self.X.shape:
            raise InputError(f"unlabeled data must be a nonempty matrix, got {self.X.shape}")
        expfam.check_domain(self.family_id, self.X)

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def k(self) -> int:
        return self.X.shape[1]


@dataclass
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    num_classes: int | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y)
        if self.X.ndim != 2 or 0 in self.X.shape:
            raise InputError(f"labeled data must be a nonempty matrix, got {self.X.shape}")
        if y.shape != (self.X.shape[0],):
            raise InputError(f"got {y.size} labels for {self.X.shape[0]} rows")
        if np.any(y != np.round(y)):
            raise InputError("labels must be integers")
        y = y.astype(int)
        if self.num_classes is None:
            self.num_classes = int(y.max())
        if self.num_classes < 2:
            raise InputError("need at least two classes")
        bad = (y < 1) | (y > self.num_classes)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise InputError(f"label {y[i]} at row {i + 1} is outside 1..{self.num_classes}")
        self.y = y

    @property
    def m(self) -> int:
        return self.X.shape[0]

    def missing_classes(self) -> list[int]:
        return sorted(set(range(1, self.num_classes + 1)) - set(self.y.tolist()))


@dataclass(frozen=True)
class SelfTaughtConfig:
    """Every knob of a training run.  ``encode_beta=None`` reuses ``beta``."""

    family: str = "gaussian"
    n_basis: int = 8
    beta: float = 0.1
    encode_beta: float | None = None
    norm_bound: float = 1.0
    sweeps: int = 50
    dict_tol: float = 1e-5
    epsilon: float = 1e-6
    pca: int | None = None
    hidden: int = 32
    learning_rate: float = 1.0
    epochs: int = 500
    batch_size: int = 32
    init_scale: float = 0.1
    l2_decay: float = 0.0
    seed: int = 0

    @property
    def feature_beta(self) -> float:
        return self.beta if self.encode_beta is None else self.encode_beta

    def hyper(self) -> TrainHyper:
        return TrainHyper(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            init_scale=self.init_scale,
            l2_decay=self.l2_decay,
            hidden=self.hidden,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SelfTaughtConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class SelfTaughtModel:
    dictionary: Dictionary
    reducer: PcaModel | None
    classifier: NeuralNet
    config: SelfTaughtConfig = field(default_factory=SelfTaughtConfig)

    def __post_init__(self):
        d = self.dictionary.n_features
        if self.reducer is not None:
            if self.reducer.input_dim != d:
                raise InputError("reducer input does not match dictionary size")
            d = self.reducer.retained
        if self.classifier.dims[0] != d:
            raise InputError(
                f"classifier expects {self.classifier.dims[0]} inputs, feature chain gives {d}"
            )

    @property
    def num_classes(self) -> int:
        return self.classifier.num_classes


def encode_features(
    dictionary: Dictionary,
    X_l,
    beta: float | None = None,
    epsilon: float = 1e-6,
    threads: int | None = None,
) -> np.ndarray:
    """Sparse codes of each row of ``X_l`` against a learned dictionary.

    ``beta`` defaults to the dictionary's training penalty.  Rows are solved
    independently, so the result is the same at any thread count.
    """
    X = np.asarray(X_l, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != dictionary.n_inputs:
        raise InputError(
            f"inputs have shape {X.shape}, dictionary expects {dictionary.n_inputs} columns"
        )
    if X.shape[0] == 0:
        return np.zeros((0, dictionary.n_features))
    beta = dictionary.beta if beta is None else beta
    config = EncodeConfig(beta=beta, epsilon=epsilon)
    codes = encode_batch(dictionary.family, dictionary.B, X, config, threads=threads)
    return np.vstack([c.s for c in codes])


def _features_to_classifier_input(model: SelfTaughtModel, F: np.ndarray) -> np.ndarray:
    return F if model.reducer is None else pca_transform(model.reducer, F)


def self_taught_train(
    unlabeled: UnlabeledDataset,
    labeled: LabeledDataset,
    config: SelfTaughtConfig | None = None,
    threads: int | None = None,
) -> SelfTaughtModel:
    """Learn a basis from ``unlabeled``, encode ``labeled`` with it, fit the classifier.

    Errors from any stage carry the stage name (``learn_dictionary``,
    ``encode_features``, ``pca``, ``train_nn``).
    """
    config = config or SelfTaughtConfig()
    family = expfam.get_family(config.family)
    if unlabeled.family_id is not family.family_id:
        raise InputError(
            f"unlabeled data is {unlabeled.family_id.value} but config asks for {family.name}"
        )
    if labeled.X.shape[1] != unlabeled.k:
        raise InputError(
            f"labeled rows have {labeled.X.shape[1]} entries, unlabeled rows have {unlabeled.k}"
        )
    missing = labeled.missing_classes()
    if missing:
        raise InputError(f"no labeled examples for class(es) {missing}")

    with stage("learn_dictionary"):
        dictionary, _ = learn_dictionary(
            unlabeled.X,
            n_basis=config.n_basis,
            beta=config.beta,
            C=config.norm_bound,
            family=family,
            sweeps=config.sweeps,
            seed=config.seed,
            tol=config.dict_tol,
            encode_config=EncodeConfig(beta=config.beta, epsilon=config.epsilon),
            threads=threads,
        )
    with stage("encode_features"):
        expfam.check_domain(family, labeled.X)
        F = encode_features(dictionary, labeled.X, config.feature_beta, config.epsilon, threads)
    reducer = None
    if config.pca is not None:
        with stage("pca"):
            reducer = pca_fit(F, config.pca)
            F = pca_transform(reducer, F)
    with stage("train_nn"):
        net = train_nn(F, labeled.y, config.hyper(), num_classes=labeled.num_classes)
    return SelfTaughtModel(dictionary, reducer, net, config)


def predict_batch(model: SelfTaughtModel, X, threads: int | None = None):
    """Labels (1-based) and probability rows for every row of ``X``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    expfam.check_domain(model.dictionary.family, X)
    F = encode_features(
        model.dictionary, X, model.config.feature_beta, model.config.epsilon, threads
    )
    P = forward(model.classifier, _features_to_classifier_input(model, F))
    return np.argmax(P, axis=1) + 1, P


def predict(model: SelfTaughtModel, x):
    """Hypothesis for one observation: ``(label, probabilities)``.

    Ties in the probability vector resolve to the lowest class index.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError(f"predict takes one observation vector, got shape {x.shape}")
    labels, P = predict_batch(model, x[None, :], threads=0)
    return int(labels[0]), P[0]
