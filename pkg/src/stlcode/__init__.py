"""Exponential-family sparse coding and self-taught learning."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DivergenceError,
    DomainError,
    FormatVersionError,
    InputError,
    ModelFormatError,
    ParseError,
    StlcodeError,
)
from .expfam import BERNOULLI, GAUSSIAN, POISSON, FamilySpec, get_family  # noqa: E402
from .lasso import LassoProblem, LassoSolution, solve_weighted_lasso  # noqa: E402
from .irls import EncodeConfig, SparseCode, encode, encode_batch  # noqa: E402
from .dictionary import Dictionary, learn_dictionary  # noqa: E402
from .pipeline import (  # noqa: E402
    LabeledDataset,
    SelfTaughtConfig,
    SelfTaughtModel,
    UnlabeledDataset,
    encode_features,
    predict,
    self_taught_train,
)
