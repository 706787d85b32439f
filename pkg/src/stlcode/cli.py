"""Command-line interface.

Subcommands: ``synth``, ``train-dict``, ``encode``, ``train``, ``predict``,
``eval``.  Parameters resolve as command-line flag > ``--config`` file >
built-in default, and every output embeds the resolved run configuration.

Exit codes: 0 success, 2 input error (bad flags, unreadable or invalid data,
bad model file), 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, expfam
from .dictionary import learn_dictionary
from .errors import DivergenceError, InputError, ParseError, StlcodeError
from .irls import EncodeConfig
from .datafiles import atomic_write_text, parse_dataset, write_csv
from .metrics import run_eval
from .persist import load_dictionary, load_model, save_dictionary, save_model
from .pipeline import (
    SelfTaughtConfig,
    encode_features,
    predict_batch,
    self_taught_train,
)
from .synth import synth_classification, synth_generate

log = logging.getLogger("stlcode")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

# flag dest -> SelfTaughtConfig field
_FLAG_FIELDS = {
    "family": "family",
    "basis": "n_basis",
    "beta": "beta",
    "encode_beta": "encode_beta",
    "norm_bound": "norm_bound",
    "sweeps": "sweeps",
    "epsilon": "epsilon",
    "pca": "pca",
    "hidden": "hidden",
    "lr": "learning_rate",
    "epochs": "epochs",
    "batch_size": "batch_size",
    "seed": "seed",
}


def parse_config_file(path) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ParseError(f"cannot read config {path}: {err.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {raw!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(name: str, value):
    if not isinstance(value, str):
        return value
    low = value.strip().lower()
    if name in ("pca", "encode_beta") and low in ("off", "none", ""):
        return None
    if name == "family":
        return expfam.get_family(low).name
    ints = {"n_basis", "sweeps", "pca", "hidden", "epochs", "batch_size", "seed"}
    try:
        return int(value) if name in ints else float(value)
    except ValueError:
        raise InputError(f"bad value {value!r} for {name}") from None


def resolve_config(args) -> tuple[SelfTaughtConfig, set[str]]:
    """Merge defaults, the config file and flags; also return the explicitly set keys."""
    values = {f.name: f.default for f in dataclasses.fields(SelfTaughtConfig)}
    explicit = set()
    if getattr(args, "config", None):
        for key, value in parse_config_file(args.config).items():
            key = _FLAG_FIELDS.get(key, key)
            if key not in values:
                raise InputError(f"unknown config key {key!r} in {args.config}")
            values[key] = _coerce(key, value)
            explicit.add(key)
    for dest, name in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            values[name] = _coerce(name, value)
            explicit.add(name)
    return SelfTaughtConfig(**values), explicit


def _run_record(command: str, config: SelfTaughtConfig, **paths) -> dict:
    return {
        "command": command,
        "seed": config.seed,
        "config": config.to_dict(),
        "paths": {k: str(v) for k, v in paths.items() if v is not None},
        "version": __version__,
    }


def _label_column(value):
    return value if value in (None, "last") else int(value)


# --- subcommands -------------------------------------------------------------


def cmd_synth(args, config: SelfTaughtConfig) -> int:
    out = Path(args.out or "synth")
    run = _run_record("synth", config)
    run["synth"] = {
        "dim": args.dim,
        "count": args.count,
        "sparsity": args.sparsity,
        "noise": args.noise,
        "noiseless": args.noiseless,
        "classes": args.classes,
    }
    if args.classes:
        B, (Xu,), (Xl, yl), (Xt, yt) = synth_classification(
            config.seed,
            k=args.dim,
            n=config.n_basis,
            m_labeled=args.count,
            m_unlabeled=args.unlabeled,
            m_test=args.count,
            sparsity=args.sparsity,
            num_classes=args.classes,
            family=config.family,
            noise=args.noise,
        )
        write_csv(out / "unlabeled.csv", Xu, run=run)
        write_csv(out / "labeled.csv", np.column_stack([Xl, yl]), run=run)
        write_csv(out / "test.csv", np.column_stack([Xt, yt]), run=run)
        write_csv(out / "B_true.csv", B, run=run)
    else:
        data = synth_generate(
            config.seed,
            args.dim,
            config.n_basis,
            args.count,
            args.sparsity,
            config.family,
            noise=args.noise,
            noiseless=args.noiseless,
        )
        write_csv(out / "X.csv", data.X, run=run)
        write_csv(out / "B_true.csv", data.B_true, run=run)
        write_csv(out / "S_true.csv", data.S_true, run=run)
    print(f"wrote synthetic data to {out}")
    return EXIT_OK


def cmd_train_dict(args, config: SelfTaughtConfig) -> int:
    data = parse_dataset(args.data, args.header, None, config.family)
    dictionary, _ = learn_dictionary(
        data.X,
        n_basis=config.n_basis,
        beta=config.beta,
        C=config.norm_bound,
        family=config.family,
        sweeps=config.sweeps,
        seed=config.seed,
        tol=config.dict_tol,
        encode_config=EncodeConfig(beta=config.beta, epsilon=config.epsilon),
    )
    out = args.out or "dictionary.json"
    save_dictionary(dictionary, out, _run_record("train-dict", config, data=args.data))
    meta = dictionary.meta
    print(
        f"dictionary {dictionary.B.shape[0]}x{dictionary.B.shape[1]} "
        f"after {meta['iterations']} sweeps, objective {meta['final_objective']:.6g} -> {out}"
    )
    return EXIT_OK


def cmd_encode(args, config: SelfTaughtConfig) -> int:
    dictionary = load_dictionary(args.model)
    data = parse_dataset(args.data, args.header, None, dictionary.family_id)
    # Without an explicit penalty, encode with the one the dictionary was trained at.
    beta = config.feature_beta if {"beta", "encode_beta"} & args.explicit else None
    F = encode_features(dictionary, data.X, beta, config.epsilon)
    out = args.out or "features.csv"
    write_csv(out, F, run=_run_record("encode", config, model=args.model, data=args.data))
    print(f"encoded {F.shape[0]} rows into {F.shape[1]} features -> {out}")
    return EXIT_OK


def cmd_train(args, config: SelfTaughtConfig) -> int:
    unlabeled = parse_dataset(args.unlabeled, args.header, None, config.family)
    labeled = parse_dataset(args.labeled, args.header, _label_column(args.label_column))
    model = self_taught_train(unlabeled, labeled, config)
    out = args.out or "model.json"
    run = _run_record("train", config, unlabeled=args.unlabeled, labeled=args.labeled)
    save_model(model, out, run)
    print(f"trained {model.num_classes}-class model -> {out}")
    return EXIT_OK


def cmd_predict(args, config: SelfTaughtConfig) -> int:
    model = load_model(args.model)
    data = parse_dataset(args.data, args.header, None, model.dictionary.family_id)
    labels, P = predict_batch(model, data.X)
    out = args.out or "predictions.csv"
    header = ["label"] + [f"p{c + 1}" for c in range(P.shape[1])]
    run = _run_record("predict", model.config, model=args.model, data=args.data)
    write_csv(out, np.column_stack([labels, P]), header=header, run=run)
    print(f"predicted {len(labels)} rows -> {out}")
    return EXIT_OK


def cmd_eval(args, config: SelfTaughtConfig) -> int:
    model = load_model(args.model)
    data = parse_dataset(args.data, args.header, _label_column(args.label_column))
    report = run_eval(model, data)
    print(report.to_table())
    out = args.out or "metrics.json"
    doc = {
        "metrics": report.to_dict(),
        "run": _run_record("eval", model.config, model=args.model, data=args.data),
    }
    atomic_write_text(out, json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model parameters")
    g.add_argument("--seed", type=int)
    g.add_argument("--beta", type=float, help="L1 penalty")
    g.add_argument("--encode-beta", type=float, help="penalty for encoding labeled data")
    g.add_argument("--epsilon", type=float, help="encoder stop threshold")
    g.add_argument("--basis", type=int, help="number of dictionary atoms")
    g.add_argument("--norm-bound", type=float, help="bound C on squared atom norms")
    g.add_argument("--family", choices=["gaussian", "bernoulli", "poisson"])
    g.add_argument("--sweeps", type=int, help="max dictionary-learning sweeps")
    g.add_argument("--hidden", type=int, help="hidden units in the classifier")
    g.add_argument("--pca", help="PCA components before the classifier, or 'off'")
    g.add_argument("--lr", type=float, help="classifier learning rate")
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch-size", type=int)
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--out", help="output path")
    p.add_argument("--header", action="store_true", help="CSV inputs have a header row")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stlcode", description="Sparse coding and self-taught learning."
    )
    parser.add_argument("--version", action="version", version=f"stlcode {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic sparse-coding data")
    _common(p)
    p.add_argument("--dim", type=int, default=16, help="observation dimension k")
    p.add_argument("--count", type=int, default=500, help="rows (labeled rows with --classes)")
    p.add_argument("--unlabeled", type=int, default=500, help="unlabeled rows with --classes")
    p.add_argument("--sparsity", type=int, default=2)
    p.add_argument("--noise", type=float, default=0.1, help="gaussian noise std")
    p.add_argument("--noiseless", action="store_true")
    p.add_argument("--classes", type=int, default=0, help="emit a labeled task with this many classes")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train-dict", help="learn a dictionary from unlabeled CSV data")
    _common(p)
    p.add_argument("data")
    p.set_defaults(func=cmd_train_dict)

    p = sub.add_parser("encode", help="sparse-code CSV rows with a dictionary or model")
    _common(p)
    p.add_argument("--model", required=True, help="dictionary or model file")
    p.add_argument("data")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", help="full self-taught pipeline")
    _common(p)
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--labeled", required=True)
    p.add_argument("--label-column", default="last", help="1-based label column or 'last'")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels for CSV rows")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("data")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="accuracy, precision/recall and confusion matrix")
    _common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--label-column", default="last", help="1-based label column or 'last'")
    p.add_argument("data")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config, args.explicit = resolve_config(args)
        return args.func(args, config)
    except DivergenceError as err:
        print(f"stlcode: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, StlcodeError) as err:
        print(f"stlcode: error: {err}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
