"""Embedding-space math for contrastive scoring and evaluation.

Operates on externally produced embedding vectors: L2 normalization, cosine
similarity, the symmetric image/text batch alignment loss, zero-shot binary
decisions, and balanced accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import MetricUndefinedError

DEFAULT_TAU = 0.07


def _as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"embedding must be a non-empty 1D vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("embedding entries must be finite")
    return arr


def l2_normalize(v) -> np.ndarray:
    """Scale to unit Euclidean norm; the zero vector is rejected."""
    arr = _as_vector(v)
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return arr / norm


def similarity(v, t) -> float:
    """Cosine similarity: dot product of the L2-normalized vectors."""
    vn = l2_normalize(v)
    tn = l2_normalize(t)
    if vn.shape != tn.shape:
        raise ValueError(f"dimension mismatch: {vn.shape} vs {tn.shape}")
    return float(np.clip(vn @ tn, -1.0, 1.0))


@dataclass(frozen=True, eq=False)
class EmbeddingBatch:
    """Paired image/text embeddings; row i of each side belongs together."""

    image: np.ndarray
    text: np.ndarray

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.float64)
        txt = np.asarray(self.text, dtype=np.float64)
        if img.ndim != 2 or txt.ndim != 2:
            raise ValueError("embedding batches must be 2D (n rows x p dims)")
        if img.shape != txt.shape:
            raise ValueError(f"batch shape mismatch: {img.shape} vs {txt.shape}")
        if not (np.isfinite(img).all() and np.isfinite(txt).all()):
            raise ValueError("embedding entries must be finite")
        if np.any(np.linalg.norm(img, axis=1) == 0) or np.any(np.linalg.norm(txt, axis=1) == 0):
            raise ValueError("batch contains a zero embedding")
        object.__setattr__(self, "image", img)
        object.__setattr__(self, "text", txt)

    @property
    def n(self) -> int:
        return self.image.shape[0]


def _logsumexp(rows: np.ndarray) -> np.ndarray:
    m = rows.max(axis=1, keepdims=True)
    return (m + np.log(np.exp(rows - m).sum(axis=1, keepdims=True))).ravel()


def clip_loss(batch: EmbeddingBatch, tau: float = DEFAULT_TAU) -> float:
    """Symmetric softmax cross-entropy over cosine similarities / tau.

    Rows are matched with their own column: the loss is the average of the
    image->text and text->image cross-entropies against the diagonal targets.
    """
    if tau <= 0 or not np.isfinite(tau):
        raise ValueError(f"temperature must be positive, got {tau}")
    if batch.n < 2:
        raise ValueError("alignment loss needs at least two pairs")
    vn = batch.image / np.linalg.norm(batch.image, axis=1, keepdims=True)
    tn = batch.text / np.linalg.norm(batch.text, axis=1, keepdims=True)
    s = (vn @ tn.T) / tau
    diag = np.diag(s)
    row_ce = (_logsumexp(s) - diag).mean()
    col_ce = (_logsumexp(s.T) - diag).mean()
    return float(0.5 * (row_ce + col_ce))


def zero_shot_decide(v, t_pos, t_neg) -> tuple[str, float]:
    """Compare an image embedding against the two class-text embeddings.

    Returns ("positive"|"negative", margin) where margin = s_pos - s_neg;
    exact ties go to the negative class.
    """
    s_pos = similarity(v, t_pos)
    s_neg = similarity(v, t_neg)
    label = "positive" if s_pos > s_neg else "negative"
    return label, s_pos - s_neg


def balanced_accuracy(preds: Sequence, truth: Sequence) -> float:
    """Mean per-class recall over the two classes present in `truth`."""
    if len(preds) != len(truth):
        raise ValueError(f"length mismatch: {len(preds)} predictions vs {len(truth)} labels")
    classes = sorted(set(truth), key=repr)
    if len(classes) != 2:
        raise MetricUndefinedError(
            f"balanced accuracy needs both classes in the truth labels, got {classes}")
    recalls = []
    for cls in classes:
        idx = [i for i, t in enumerate(truth) if t == cls]
        hits = sum(1 for i in idx if preds[i] == cls)
        recalls.append(hits / len(idx))
    return float(np.mean(recalls))
