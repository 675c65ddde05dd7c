"""Binary classification metrics used across training and evaluation."""

from __future__ import annotations

import numpy as np

from .validation import check_consistent_length


def confusion(y_true, y_pred) -> tuple[int, int, int, int]:
    """(TP, FP, FN, TN) for the +1 class."""
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    check_consistent_length(y_true, y_pred)
    pos_true = y_true > 0
    pos_pred = y_pred > 0
    tp = int(np.sum(pos_true & pos_pred))
    fp = int(np.sum(~pos_true & pos_pred))
    fn = int(np.sum(pos_true & ~pos_pred))
    tn = int(np.sum(~pos_true & ~pos_pred))
    return tp, fp, fn, tn


def f1(y_true, y_pred) -> float:
    """f1 of the positive class: 2TP / (2TP + FP + FN); 0 when the denominator is 0."""
    tp, fp, fn, _ = confusion(y_true, y_pred)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0
