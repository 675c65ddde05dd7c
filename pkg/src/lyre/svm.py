"""L2-regularized hinge-loss linear SVM trained by dual coordinate descent.

The solver optimizes the box-constrained dual of

    min_w  (1/2)||w||^2 + C * sum_i max(0, 1 - y_i (w.x_i + b))

one dual variable at a time, maintaining the primal vector incrementally.
The bias is an augmented constant-1 feature, so it is regularized along
with the weights. Dense and sparse feature matrices share the same update
rule through per-row dot/axpy helpers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .embedding import CentroidTransform
from .errors import DimensionMismatchError, StratificationError
from .metrics import f1
from .seeding import derive_seed, make_rng
from .validation import check_binary_labels, check_feature_matrix


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameter search and solver settings for one-vs-all training."""

    c_grid: tuple[float, ...] = (0.01, 0.1, 1.0, 10.0)
    folds: int = 5
    max_epochs: int = 1000
    tolerance: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not self.c_grid or any(c <= 0 for c in self.c_grid):
            raise ValueError("c_grid must be non-empty and strictly positive")
        if self.folds < 2:
            raise ValueError("folds must be >= 2")


def _solve_dense(Xy, Q, C, tol, max_epochs, rng, objective=None):
    """Dual coordinate descent with a shrinking active set.

    Coordinates pinned at a box bound whose gradient lies beyond the previous
    epoch's extremes are skipped; once the active set converges, it is reset
    to the full problem for a verification pass, so termination always means
    the full-set maximal projected-gradient violation fell below `tol`.
    """
    n = Xy.shape[0]
    w = np.zeros(Xy.shape[1])
    alpha = [0.0] * n
    q = Q.tolist()
    rows = list(Xy)
    history = []
    dual_history = []
    converged = False
    violation = np.inf
    epochs = 0
    active = list(range(n))
    upper_bound, lower_bound = np.inf, -np.inf
    for epoch in range(max_epochs):
        order = rng.permutation(len(active)).tolist()
        max_viol = 0.0
        pg_max, pg_min = -np.inf, np.inf
        kept: list[int] = []
        for j in order:
            i = active[j]
            xy = rows[i]
            G = float(xy @ w) - 1.0
            a = alpha[i]
            if a <= 0.0:
                if G > upper_bound:
                    continue  # shrink: stuck at 0 with strongly positive gradient
                PG = G if G < 0.0 else 0.0
            elif a >= C:
                if G < lower_bound:
                    continue  # shrink: stuck at C with strongly negative gradient
                PG = G if G > 0.0 else 0.0
            else:
                PG = G
            kept.append(i)
            if PG > pg_max:
                pg_max = PG
            if PG < pg_min:
                pg_min = PG
            if PG != 0.0:
                apg = -PG if PG < 0.0 else PG
                if apg > max_viol:
                    max_viol = apg
                qi = q[i]
                if qi > 0.0:
                    na = a - G / qi
                    if na < 0.0:
                        na = 0.0
                    elif na > C:
                        na = C
                else:
                    na = C if G < 0.0 else 0.0
                if na != a:
                    alpha[i] = na
                    w += (na - a) * xy
        epochs = epoch + 1
        if objective is not None:
            history.append(objective(w))
            dual_history.append(0.5 * float(w @ w) - sum(alpha))
        if max_viol < tol:
            if len(active) == n and len(kept) == len(active):
                violation = max_viol
                converged = True
                break
            active = list(range(n))
            upper_bound, lower_bound = np.inf, -np.inf
        else:
            active = kept if kept else list(range(n))
            upper_bound = pg_max if pg_max > 0.0 else np.inf
            lower_bound = pg_min if pg_min < 0.0 else -np.inf
        violation = max_viol
    return w, np.array(alpha), epochs, converged, violation, history, dual_history


def _solve_sparse(X, y, C, tol, max_epochs, rng, fit_intercept, objective=None):
    """Sparse-row twin of `_solve_dense`; same update and shrinking rules."""
    X = X.tocsr()
    indptr, indices, data = X.indptr, X.indices, X.data
    n, d = X.shape
    w = np.zeros(d)
    bias_w = 0.0
    row_sq = np.asarray(X.multiply(X).sum(axis=1)).ravel()
    q = (row_sq + (1.0 if fit_intercept else 0.0)).tolist()
    y_list = y.tolist()
    alpha = [0.0] * n
    history = []
    dual_history = []
    converged = False
    violation = np.inf
    epochs = 0
    active = list(range(n))
    upper_bound, lower_bound = np.inf, -np.inf
    for epoch in range(max_epochs):
        order = rng.permutation(len(active)).tolist()
        max_viol = 0.0
        pg_max, pg_min = -np.inf, np.inf
        kept: list[int] = []
        for j in order:
            i = active[j]
            lo, hi = indptr[i], indptr[i + 1]
            idx = indices[lo:hi]
            vals = data[lo:hi]
            yi = y_list[i]
            margin_part = float(vals @ w[idx]) + (bias_w if fit_intercept else 0.0)
            G = yi * margin_part - 1.0
            a = alpha[i]
            if a <= 0.0:
                if G > upper_bound:
                    continue
                PG = G if G < 0.0 else 0.0
            elif a >= C:
                if G < lower_bound:
                    continue
                PG = G if G > 0.0 else 0.0
            else:
                PG = G
            kept.append(i)
            if PG > pg_max:
                pg_max = PG
            if PG < pg_min:
                pg_min = PG
            if PG != 0.0:
                apg = -PG if PG < 0.0 else PG
                if apg > max_viol:
                    max_viol = apg
                qi = q[i]
                if qi > 0.0:
                    na = a - G / qi
                    if na < 0.0:
                        na = 0.0
                    elif na > C:
                        na = C
                else:
                    na = C if G < 0.0 else 0.0
                if na != a:
                    alpha[i] = na
                    delta = (na - a) * yi
                    w[idx] += delta * vals
                    if fit_intercept:
                        bias_w += delta
        epochs = epoch + 1
        if objective is not None:
            history.append(objective(w, bias_w))
            w_sq = float(w @ w) + (bias_w * bias_w if fit_intercept else 0.0)
            dual_history.append(0.5 * w_sq - sum(alpha))
        if max_viol < tol:
            if len(active) == n and len(kept) == len(active):
                violation = max_viol
                converged = True
                break
            active = list(range(n))
            upper_bound, lower_bound = np.inf, -np.inf
        else:
            active = kept if kept else list(range(n))
            upper_bound = pg_max if pg_max > 0.0 else np.inf
            lower_bound = pg_min if pg_min < 0.0 else -np.inf
        violation = max_viol
    return w, bias_w, np.array(alpha), epochs, converged, violation, history, dual_history


def hinge_objective(w, b, X, y, C, regularize_bias=True) -> float:
    """Primal value (1/2)(||w||^2 [+ b^2]) + C * sum hinge."""
    margins = 1.0 - y * (X @ w + b)
    hinge = np.maximum(margins, 0.0).sum()
    reg = 0.5 * (float(w @ w) + (b * b if regularize_bias else 0.0))
    return reg + C * float(hinge)


class LinearSVC(BaseEstimator, ClassifierMixin):
    """Binary linear SVM with labels in {-1, +1}.

    Stops when the largest projected-gradient violation seen in an epoch
    drops below `tol`, or after `max_epochs` passes. Coordinate order is
    reshuffled every epoch from `random_state`, so results are bit-for-bit
    reproducible. Set `track_objective=True` to record, at every epoch
    boundary, the primal value in `objective_history_` and the dual
    minimization value in `dual_history_` (the quantity coordinate descent
    drives downward monotonically; the primal may overshoot on its way in).
    """

    def __init__(self, C: float = 1.0, tol: float = 1e-3, max_epochs: int = 1000,
                 fit_intercept: bool = True, random_state: int = 0,
                 track_objective: bool = False):
        self.C = C
        self.tol = tol
        self.max_epochs = max_epochs
        self.fit_intercept = fit_intercept
        self.random_state = random_state
        self.track_objective = track_objective

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_binary_labels(y, X.shape[0])
        rng = make_rng(self.random_state)
        C = float(self.C)

        if sp.issparse(X):
            objective = None
            if self.track_objective:
                objective = lambda w, b: hinge_objective(  # noqa: E731
                    w, b if self.fit_intercept else 0.0, X, y, C,
                    regularize_bias=self.fit_intercept)
            w, bias, alpha, epochs, converged, violation, history, dual_history = (
                _solve_sparse(X, y, C, self.tol, self.max_epochs, rng,
                              self.fit_intercept, objective)
            )
            self.coef_ = w
            self.intercept_ = bias if self.fit_intercept else 0.0
        else:
            Xy = X * y[:, None]
            if self.fit_intercept:
                Xy = np.ascontiguousarray(np.hstack([Xy, y[:, None]]))
            Q = np.einsum("ij,ij->i", Xy, Xy)
            objective = None
            if self.track_objective:
                objective = lambda w_aug: hinge_objective(  # noqa: E731
                    w_aug[:-1] if self.fit_intercept else w_aug,
                    w_aug[-1] if self.fit_intercept else 0.0,
                    X, y, C, regularize_bias=self.fit_intercept)
            w_aug, alpha, epochs, converged, violation, history, dual_history = (
                _solve_dense(Xy, Q, C, self.tol, self.max_epochs, rng, objective)
            )
            if self.fit_intercept:
                self.coef_ = w_aug[:-1]
                self.intercept_ = float(w_aug[-1])
            else:
                self.coef_ = w_aug
                self.intercept_ = 0.0

        self.classes_ = np.array([-1, 1])
        self.alpha_ = alpha
        self.n_epochs_ = epochs
        self.converged_ = converged
        self.violation_ = violation
        self.objective_history_ = history
        self.dual_history_ = dual_history
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("this LinearSVC instance is not fitted yet")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_feature_matrix(X)
        if X.shape[1] != self.coef_.shape[0]:
            raise DimensionMismatchError(
                f"X has {X.shape[1]} features, model expects {self.coef_.shape[0]}"
            )
        return np.asarray(X @ self.coef_).ravel() + self.intercept_

    def predict(self, X) -> np.ndarray:
        scores = self.decision_function(X)
        return np.where(scores >= 0.0, 1, -1)

    def primal_objective(self, X, y) -> float:
        self._check_fitted()
        X = check_feature_matrix(X)
        y = np.asarray(y, dtype=np.float64).ravel()
        return hinge_objective(self.coef_, self.intercept_, X, y, float(self.C),
                               regularize_bias=self.fit_intercept)

    def dual_objective(self) -> float:
        """sum(alpha) - (1/2)||w_aug||^2 at the stored solution."""
        self._check_fitted()
        w_sq = float(self.coef_ @ self.coef_)
        if self.fit_intercept:
            w_sq += self.intercept_ ** 2
        return float(self.alpha_.sum()) - 0.5 * w_sq


@dataclass(frozen=True)
class LinearModel:
    """Serializable artifact for one (genre, representation) classifier."""

    weights: np.ndarray
    bias: float
    c: float
    genre: str = ""
    representation_tag: str = ""
    centroid: CentroidTransform | None = None
    seed: int = 0

    @property
    def dimension(self) -> int:
        return int(self.weights.shape[0])


def decision(model: LinearModel, x) -> float | np.ndarray:
    """w.x + b for a single vector or a matrix of rows."""
    x = np.asarray(x, dtype=np.float64) if not sp.issparse(x) else x
    if not sp.issparse(x) and x.ndim == 1:
        if x.shape[0] != model.dimension:
            raise DimensionMismatchError(
                f"input has dimension {x.shape[0]}, model expects {model.dimension}"
            )
        return float(x @ model.weights) + model.bias
    if x.shape[1] != model.dimension:
        raise DimensionMismatchError(
            f"input has {x.shape[1]} features, model expects {model.dimension}"
        )
    return np.asarray(x @ model.weights).ravel() + model.bias


def predict(model: LinearModel, x):
    """Sign of the decision value, with sign(0) = +1."""
    scores = decision(model, x)
    if np.isscalar(scores):
        return 1 if scores >= 0.0 else -1
    return np.where(np.asarray(scores) >= 0.0, 1, -1)


def train_binary(X, y, C: float, config: TrainConfig, genre: str = "",
                 representation_tag: str = "",
                 centroid: CentroidTransform | None = None) -> LinearModel:
    """Fit one binary classifier and package it as a LinearModel."""
    seed = derive_seed(config.seed, "train")
    clf = LinearSVC(C=C, tol=config.tolerance, max_epochs=config.max_epochs,
                    random_state=seed).fit(X, y)
    return LinearModel(weights=clf.coef_.copy(), bias=clf.intercept_, c=float(C),
                       genre=genre, representation_tag=representation_tag,
                       centroid=centroid, seed=seed)


def stratified_folds(y, folds: int, seed: int) -> list[np.ndarray]:
    """Deterministic stratified k-fold: per-class shuffle, then chunking."""
    y = np.asarray(y).ravel()
    out: list[list[int]] = [[] for _ in range(folds)]
    rng = make_rng(seed, "stratified-folds")
    for cls in (1, -1):
        idx = np.flatnonzero(y == cls)
        if idx.size < folds:
            raise StratificationError(
                f"class {cls:+d} has {idx.size} examples, cannot fill {folds} folds"
            )
        idx = idx[rng.permutation(idx.size)]
        for part, chunk in zip(out, np.array_split(idx, folds)):
            part.extend(chunk.tolist())
    return [np.array(sorted(part), dtype=np.intp) for part in out]


@dataclass(frozen=True)
class CvReport:
    """Fold-level f1 per C value and the selected C (ties go to the smaller C)."""

    per_c: Mapping[float, tuple[float, ...]]
    chosen_c: float

    def mean_f1(self, c: float) -> float:
        return float(np.mean(self.per_c[c]))


def cv_select_c(X, y, config: TrainConfig) -> CvReport:
    """Stratified k-fold grid search over C, maximizing mean held-out f1."""
    X = check_feature_matrix(X)
    y = check_binary_labels(y, X.shape[0])
    folds = stratified_folds(y, config.folds, derive_seed(config.seed, "cv-folds"))
    all_idx = np.arange(X.shape[0])
    per_c: dict[float, tuple[float, ...]] = {}
    for c in config.c_grid:
        scores = []
        for fold_index, test_idx in enumerate(folds):
            train_mask = np.ones(X.shape[0], dtype=bool)
            train_mask[test_idx] = False
            train_idx = all_idx[train_mask]
            clf = LinearSVC(
                C=c, tol=config.tolerance, max_epochs=config.max_epochs,
                random_state=derive_seed(config.seed, "cv-train", fold_index),
            ).fit(X[train_idx], y[train_idx])
            scores.append(f1(y[test_idx], clf.predict(X[test_idx])))
        per_c[float(c)] = tuple(scores)

    chosen_c = None
    best = -np.inf
    for c in sorted(per_c):
        mean = float(np.mean(per_c[c]))
        if mean > best:
            best = mean
            chosen_c = c
    return CvReport(per_c=per_c, chosen_c=chosen_c)


def train_one_vs_all(views: Mapping[str, tuple], config: TrainConfig,
                     representation_tag: str = "") -> dict[str, LinearModel]:
    """CV-select C and train one model per genre, independently seeded.

    Each genre's randomness derives from (config.seed, genre), so adding or
    removing genres never perturbs the others' models.
    """
    models: dict[str, LinearModel] = {}
    for genre in sorted(views):
        X, y = views[genre]
        genre_config = replace(config, seed=derive_seed(config.seed, "genre", genre))
        try:
            report = cv_select_c(X, y, genre_config)
            models[genre] = train_binary(
                X, y, report.chosen_c, genre_config, genre=genre,
                representation_tag=representation_tag,
            )
        except Exception as exc:
            exc.args = (f"genre {genre!r}: {exc}",)
            raise
    return models


# --- model persistence -------------------------------------------------------

_MODEL_VERSION = 1


def save_model(path: str | Path, model: LinearModel) -> None:
    """Versioned JSON model file; floats keep full round-trip precision."""
    weights = np.asarray(model.weights, dtype=np.float64)
    nonzero = np.flatnonzero(weights)
    if nonzero.size * 2 < weights.size:
        encoded = {
            "kind": "sparse",
            "indices": nonzero.tolist(),
            "values": weights[nonzero].tolist(),
        }
    else:
        encoded = {"kind": "dense", "values": weights.tolist()}
    payload = {
        "version": _MODEL_VERSION,
        "genre": model.genre,
        "representation_tag": model.representation_tag,
        "dimension": model.dimension,
        "c": model.c,
        "bias": model.bias,
        "seed": model.seed,
        "weights": encoded,
        "centroid": (
            None if model.centroid is None
            else {"source": model.centroid.source,
                  "mean": np.asarray(model.centroid.mean, dtype=np.float64).tolist()}
        ),
    }
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != _MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {payload.get('version')!r}")
    encoded = payload["weights"]
    dimension = int(payload["dimension"])
    if encoded["kind"] == "dense":
        weights = np.array(encoded["values"], dtype=np.float64)
    else:
        weights = np.zeros(dimension)
        weights[np.array(encoded["indices"], dtype=np.intp)] = encoded["values"]
    if weights.shape[0] != dimension:
        raise ValueError(f"{path}: weight count does not match dimension")
    centroid = None
    if payload.get("centroid"):
        centroid = CentroidTransform(
            mean=np.array(payload["centroid"]["mean"], dtype=np.float64),
            source=payload["centroid"]["source"],
        )
    return LinearModel(
        weights=weights, bias=float(payload["bias"]), c=float(payload["c"]),
        genre=payload.get("genre", ""),
        representation_tag=payload.get("representation_tag", ""),
        centroid=centroid, seed=int(payload.get("seed", 0)),
    )
