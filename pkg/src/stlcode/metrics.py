"""Classification metrics for a trained model on a labeled set."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .pipeline import LabeledDataset, SelfTaughtModel, predict_batch

__all__ = ["EvalReport", "confusion_matrix", "report_from_predictions", "run_eval"]


@dataclass
class EvalReport:
    accuracy: float
    precision: list[float]
    recall: list[float]
    confusion: list[list[int]]  # rows: true class, columns: predicted class
    n: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "confusion": self.confusion,
            "n": self.n,
        }

    def to_table(self) -> str:
        C = len(self.precision)
        lines = [f"accuracy  {self.accuracy:.4f}  (n={self.n})", "", "class  precision  recall"]
        for c in range(C):
            lines.append(f"{c + 1:>5}  {self.precision[c]:>9.4f}  {self.recall[c]:>6.4f}")
        lines += ["", "confusion (rows=true, cols=predicted)"]
        width = max(len(str(v)) for row in self.confusion for v in row) + 1
        lines.append("      " + "".join(f"{c + 1:>{width}}" for c in range(C)))
        for c, row in enumerate(self.confusion):
            lines.append(f"{c + 1:>5} " + "".join(f"{v:>{width}}" for v in row))
        return "\n".join(lines)


def confusion_matrix(y_true, y_pred, num_classes: int) -> np.ndarray:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.shape != y_pred.shape:
        raise InputError("label vectors differ in length")
    M = np.zeros((num_classes, num_classes), dtype=int)
    np.add.at(M, (y_true - 1, y_pred - 1), 1)
    return M


def report_from_predictions(y_true, y_pred, num_classes: int) -> EvalReport:
    """Precision/recall of a class with no predicted/true members is reported as 0."""
    M = confusion_matrix(y_true, y_pred, num_classes)
    tp = np.diag(M).astype(float)
    pred_tot = M.sum(axis=0)
    true_tot = M.sum(axis=1)
    precision = np.divide(tp, pred_tot, out=np.zeros_like(tp), where=pred_tot > 0)
    recall = np.divide(tp, true_tot, out=np.zeros_like(tp), where=true_tot > 0)
    n = int(M.sum())
    return EvalReport(
        accuracy=float(tp.sum() / n) if n else 0.0,
        precision=precision.tolist(),
        recall=recall.tolist(),
        confusion=M.tolist(),
        n=n,
    )


def run_eval(model: SelfTaughtModel, dataset: LabeledDataset, threads: int | None = None) -> EvalReport:
    if dataset.X.shape[1] != model.dictionary.n_inputs:
        raise InputError(
            f"dataset has {dataset.X.shape[1]} features, model expects {model.dictionary.n_inputs}"
        )
    if dataset.num_classes > model.num_classes:
        raise InputError(
            f"dataset has labels up to {dataset.num_classes}, model knows {model.num_classes}"
        )
    pred, _ = predict_batch(model, dataset.X, threads)
    return report_from_predictions(dataset.y, pred, model.num_classes)
