"""Accuracy reports, fusion hyper-parameter search, baselines, and the component ablation."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import InsufficientDataError, ShapeError
from ..head import LinearHead, TrainConfig, batch_logits, class_text_features, fit_head
from ..observability.metrics import record_predictions
from ..reduction import ProjectionConfig
from .episode import Episode
from .inference import (
    AdapterModel,
    FusionConfig,
    Prediction,
    predict,
    prototype_cosines,
    scores_from_cosines,
    zero_shot_scores,
)
from .prototypes import build_prototypes, fit_episode_projection

logger = logging.getLogger(__name__)

ROW_MRN_NO_INIT = "MRN w/o init"
ROW_MRN_INIT = "MRN w/ init"
ROW_MRN_BDC = "MRN+BDC"
ABLATION_ROWS = (ROW_MRN_NO_INIT, ROW_MRN_INIT, ROW_MRN_BDC)


@dataclass
class AccuracyReport:
    class_names: List[str]
    query_ids: List[str]
    true_labels: np.ndarray
    predictions: List[Prediction]
    confusion: np.ndarray
    zero_shot_accuracy: Optional[float] = None

    @property
    def total(self) -> int:
        return len(self.query_ids)

    @property
    def correct(self) -> int:
        return int(np.trace(self.confusion))

    @property
    def overall(self) -> float:
        return self.correct / self.total

    @property
    def per_class(self) -> List[Optional[float]]:
        """Per-class accuracy; None for classes without queries."""
        out: List[Optional[float]] = []
        for c in range(len(self.class_names)):
            n = int(self.confusion[c].sum())
            out.append(int(self.confusion[c, c]) / n if n else None)
        return out


def confusion_matrix(true: np.ndarray, pred: np.ndarray, num_classes: int) -> np.ndarray:
    """Rows are true classes, columns predicted classes."""
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(true, dtype=np.int64), np.asarray(pred, dtype=np.int64)), 1)
    return cm


def _as_episodes(episodes: Union[Episode, Sequence[Episode]]) -> List[Episode]:
    if isinstance(episodes, Episode):
        return [episodes]
    return list(episodes)


def evaluate(
    episodes: Union[Episode, Sequence[Episode]],
    model: AdapterModel,
    cfg: FusionConfig,
    workers: int = 1,
) -> AccuracyReport:
    """Predict every query; results are merged in query order whatever ``workers`` is."""
    eps = _as_episodes(episodes)
    if not eps or sum(e.num_queries for e in eps) == 0:
        raise ShapeError("evaluation needs a non-empty query set")
    class_names = eps[0].class_names
    if any(e.class_names != class_names for e in eps):
        raise ShapeError("episodes disagree on class names")

    ids: List[str] = []
    labels: List[np.ndarray] = []
    preds: List[Prediction] = []
    zs_correct = 0
    has_text = all(e.text_templates for e in eps)
    for ep in eps:

        def _one(i: int, ep: Episode = ep) -> Prediction:
            return predict(
                ep.query_embeddings[i],
                ep.query_maps[i],
                model.head,
                model.prototypes,
                model.projection,
                cfg,
            )

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                preds.extend(pool.map(_one, range(ep.num_queries)))
        else:
            preds.extend(_one(i) for i in range(ep.num_queries))
        ids.extend(ep.query_ids)
        labels.append(ep.query_labels)
        if has_text:
            zs_correct += _zero_shot_correct(ep, cfg.tau)

    true = np.concatenate(labels)
    pred = np.array([p.label for p in preds], dtype=np.int64)
    record_predictions(len(preds), cfg.alpha)
    report = AccuracyReport(
        class_names=list(class_names),
        query_ids=ids,
        true_labels=true,
        predictions=preds,
        confusion=confusion_matrix(true, pred, len(class_names)),
        zero_shot_accuracy=zs_correct / len(ids) if has_text else None,
    )
    logger.info("Evaluated %d queries: accuracy %.4f", report.total, report.overall)
    return report


def score_tables(episode: Episode, model: AdapterModel) -> Tuple[np.ndarray, np.ndarray]:
    """Prototype cosines and head logits for every query, shape (Q, N) each."""
    cos = np.stack(
        [
            prototype_cosines(episode.query_maps[i], model.prototypes, model.projection)
            for i in range(episode.num_queries)
        ]
    )
    return cos, batch_logits(model.head, episode.query_embeddings)


def _accuracy(scores: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(scores, axis=1) == labels))


def grid_search(
    alpha_grid: Sequence[float],
    delta_grid: Sequence[float],
    episode: Episode,
    model: AdapterModel,
    tau: float = 0.01,
) -> Tuple[FusionConfig, List[Dict[str, float]]]:
    """Exhaustive (alpha, delta) search by validation accuracy.

    Ties go to the smaller alpha, then the smaller delta.
    """
    if not alpha_grid or not delta_grid:
        raise ShapeError("alpha and delta grids must be non-empty")
    if episode.num_queries == 0:
        raise ShapeError("grid search needs validation queries")
    cos, logits = score_tables(episode, model)

    table: List[Dict[str, float]] = []
    best: Optional[Tuple[float, float, float]] = None
    for alpha in sorted(alpha_grid):
        for delta in sorted(delta_grid):
            fused = alpha * scores_from_cosines(cos, delta) + logits
            acc = _accuracy(fused, episode.query_labels)
            table.append({"alpha": float(alpha), "delta": float(delta), "accuracy": acc})
            if best is None or acc > best[2]:
                best = (float(alpha), float(delta), acc)

    assert best is not None
    logger.info("Grid search best alpha=%s delta=%s accuracy=%.4f", *best)
    return FusionConfig(alpha=best[0], delta=best[1], tau=tau), table


def bdc_only_accuracy(episode: Episode, model: AdapterModel) -> float:
    """The alpha -> infinity limit: argmax of the prototype scores alone."""
    cos, _ = score_tables(episode, model)
    return _accuracy(cos, episode.query_labels)


def _zero_shot_correct(episode: Episode, tau: float) -> int:
    text = class_text_features(episode.text_templates)
    return sum(
        int(np.argmax(zero_shot_scores(episode.query_embeddings[i], text, tau)))
        == int(episode.query_labels[i])
        for i in range(episode.num_queries)
    )


def zero_shot_accuracy(episode: Episode, tau: float = 0.01) -> float:
    """Zero-shot baseline: softmax over cosine / tau against class text features."""
    if episode.num_queries == 0:
        raise ShapeError("zero-shot accuracy needs queries")
    return _zero_shot_correct(episode, tau) / episode.num_queries


def mean_embedding_baseline(episode: Episode) -> float:
    """Cosine nearest-class-mean on per-channel feature-map means (first-order statistics only)."""
    support = episode.support_maps.mean(axis=-1)  # (N, M, k)
    protos = support.mean(axis=1)
    query = episode.query_maps.mean(axis=-1)
    protos = protos / np.maximum(np.linalg.norm(protos, axis=1, keepdims=True), 1e-300)
    query = query / np.maximum(np.linalg.norm(query, axis=1, keepdims=True), 1e-300)
    return _accuracy(query @ protos.T, episode.query_labels)


@dataclass
class AblationResult:
    shots: List[int]
    rows: Dict[str, List[float]] = field(default_factory=dict)
    bdc_only: List[float] = field(default_factory=list)
    mean_embedding: List[float] = field(default_factory=list)


def train_head(
    episode: Episode, train_cfg: TrainConfig, text_init: bool = True
) -> Tuple[LinearHead, List[float]]:
    if not episode.text_templates:
        raise InsufficientDataError("training the head needs class text embeddings")
    feats, labels = episode.support_features()
    return fit_head(
        feats, labels, episode.text_templates, train_cfg, episode.shots, text_init=text_init
    )


def build_model(
    episode: Episode,
    train_cfg: TrainConfig,
    proj_cfg: ProjectionConfig,
    text_init: bool = True,
) -> Tuple[AdapterModel, List[float]]:
    """Fit projection, prototypes and head for one episode."""
    projection = fit_episode_projection(episode.support_maps, proj_cfg)
    protos = build_prototypes(
        episode.support_maps, projection, class_names=episode.class_names
    )
    head, trace = train_head(episode, train_cfg, text_init=text_init)
    return AdapterModel(head=head, projection=projection, prototypes=protos), trace


def run_ablation(
    episodes_by_shots: Dict[int, Episode],
    train_cfg: TrainConfig,
    proj_cfg: ProjectionConfig,
    fusion: FusionConfig,
) -> AblationResult:
    """Head without init, head with init, and head + BDC fusion, per shot count."""
    shots = sorted(episodes_by_shots)
    result = AblationResult(shots=shots, rows={name: [] for name in ABLATION_ROWS})
    head_only = fusion.model_copy(update={"alpha": 0.0})
    for m in shots:
        ep = episodes_by_shots[m]
        with_init, _ = build_model(ep, train_cfg, proj_cfg, text_init=True)
        no_init = replace(with_init, head=train_head(ep, train_cfg, text_init=False)[0])
        result.rows[ROW_MRN_NO_INIT].append(evaluate(ep, no_init, head_only).overall)
        result.rows[ROW_MRN_INIT].append(evaluate(ep, with_init, head_only).overall)
        result.rows[ROW_MRN_BDC].append(evaluate(ep, with_init, fusion).overall)
        result.bdc_only.append(bdc_only_accuracy(ep, with_init))
        result.mean_embedding.append(mean_embedding_baseline(ep))
    return result
