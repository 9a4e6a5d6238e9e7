"""Multi-class linear max-margin classifiers (Crammer-Singer hinge, no bias)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrameSequence, LabelSpace, Segment


@dataclass(frozen=True, eq=False)
class LinearModel:
    """One weight row per class; the score of class j is ``weights[j] @ x``."""

    weights: np.ndarray
    label_space: LabelSpace

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {w.shape}")
        if w.shape[0] != self.label_space.size:
            raise ValueError(
                f"{w.shape[0]} weight rows for {self.label_space.size} classes"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("weights contain non-finite values")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-3
    epochs: int = 50
    seed: int = 0
    # iterate averaging over the last ``average_fraction`` of updates; 0 disables
    average_fraction: float = 0.5

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0 <= self.average_fraction <= 1:
            raise ValueError("average_fraction must be in [0, 1]")


def _normalize_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    return np.divide(x, norms, out=np.array(x, dtype=np.float64), where=norms > 0)


def encode_segment(seq: FrameSequence, segment: Segment) -> np.ndarray:
    """Mean of the segment's frames, L2-normalized (zero mean stays zero)."""
    if segment.end > seq.n_frames:
        raise IndexError(f"segment [{segment.start}, {segment.end}) exceeds {seq.n_frames} frames")
    return _normalize_rows(seq.frames[segment.start:segment.end].mean(axis=0))


class SegmentEncoder:
    """Batched ``encode_segment`` over one sequence via cumulative sums."""

    def __init__(self, seq: FrameSequence):
        self.seq = seq
        self._csum = np.vstack([np.zeros((1, seq.dim)), np.cumsum(seq.frames, axis=0)])

    def encode(self, starts, ends) -> np.ndarray:
        starts = np.asarray(starts)
        ends = np.asarray(ends)
        if np.any(starts < 0) or np.any(ends > self.seq.n_frames) or np.any(ends <= starts):
            raise IndexError("segment out of bounds")
        means = (self._csum[ends] - self._csum[starts]) / (ends - starts)[..., None]
        return _normalize_rows(means)


def score_all_classes(model: LinearModel, feature) -> np.ndarray:
    x = np.asarray(feature, dtype=np.float64)
    if x.shape[-1] != model.input_dim:
        raise ValueError(f"feature has dimension {x.shape[-1]}, model expects {model.input_dim}")
    return x @ model.weights.T


def top_two(scores: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Winner index (lowest index on ties) and winner-minus-runner-up margin, along the last axis."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[-1] < 2:
        raise ValueError("need at least two classes to compute a margin")
    best = np.argmax(scores, axis=-1)
    top = np.take_along_axis(scores, best[..., None], axis=-1)[..., 0]
    rest = scores.copy()
    np.put_along_axis(rest, best[..., None], -np.inf, axis=-1)
    return best, top - rest.max(axis=-1)


def margin_of(scores) -> tuple[int, float]:
    best, margin = top_two(np.asarray(scores, dtype=np.float64))
    return int(best), float(margin)


def predict_with_margin(model: LinearModel, feature) -> tuple[int, float]:
    if model.n_classes < 2:
        raise ValueError("need at least two classes to compute a margin")
    return margin_of(score_all_classes(model, feature))


def hinge_losses(weights: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-example ``max(0, 1 + max_{k != y} w_k.x - w_y.x)``."""
    s = X @ weights.T
    idx = np.arange(len(y))
    true = s[idx, y]
    s[idx, y] = -np.inf
    return np.maximum(0.0, 1.0 + s.max(axis=1) - true)


def objective(weights: np.ndarray, X, y, lam: float) -> float:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    return 0.5 * lam * float(np.sum(weights**2)) + float(hinge_losses(weights, X, y).mean())


def train_multiclass_svm(
    features,
    labels,
    config: TrainConfig,
    label_space: LabelSpace | None = None,
) -> LinearModel:
    """Pegasos-style stochastic subgradient descent on the Crammer-Singer hinge.

    Minimizes ``lam/2 * ||W||^2 + mean_i hinge_i`` with step ``1 / (lam * t)``.
    Examples are visited in a seeded random order each epoch, so the result
    is a deterministic function of the inputs and ``config.seed``.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("empty training set")
    if len(y) != len(X):
        raise ValueError(f"{len(X)} features but {len(y)} labels")
    if not np.issubdtype(y.dtype, np.integer):
        raise ValueError("labels must be integer class indices")
    if label_space is None:
        label_space = LabelSpace.default(max(2, int(y.max()) + 1))
    m = label_space.size
    if y.min() < 0 or y.max() >= m:
        raise ValueError(f"labels must lie in [0, {m})")
    counts = np.bincount(y, minlength=m)
    if np.any(counts == 0):
        missing = [label_space.class_names[j] for j in np.flatnonzero(counts == 0)]
        raise ValueError(f"classes with zero training examples: {missing}")

    n, d = X.shape
    lam = config.lam
    rng = np.random.default_rng(config.seed)
    W = np.zeros((m, d))
    total = config.epochs * n
    avg_start = total - int(round(config.average_fraction * total)) if config.average_fraction else total
    W_avg = np.zeros_like(W)
    n_avg = 0
    t = 0
    for _ in range(config.epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            x, yi = X[i], y[i]
            s = W @ x
            true = s[yi]
            s[yi] = -np.inf
            r = int(np.argmax(s))
            W *= 1.0 - eta * lam
            if 1.0 + s[r] - true > 0:
                W[yi] += eta * x
                W[r] -= eta * x
            if t > avg_start:
                n_avg += 1
                W_avg += (W - W_avg) / n_avg
    return LinearModel(W_avg if n_avg else W, label_space)
