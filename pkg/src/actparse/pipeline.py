"""Two-layer training: a local first layer, then a context-aware second layer
trained on cross-fitted context features."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .context import assemble_context_features, build_context_cache
from .core import FrameSequence, LabelSpace, Parse, ParserConfig
from .linear import (
    LinearModel,
    SegmentEncoder,
    TrainConfig,
    score_all_classes,
    top_two,
    train_multiclass_svm,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingCorpus:
    examples: tuple[tuple[FrameSequence, Parse], ...]
    label_space: LabelSpace

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        if not self.examples:
            raise ValueError("empty training corpus")
        dims = {seq.dim for seq, _ in self.examples}
        if len(dims) != 1:
            raise ValueError(f"sequences have inconsistent feature dimensions {sorted(dims)}")
        m = self.label_space.size
        for i, (seq, truth) in enumerate(self.examples):
            if truth.n_frames != seq.n_frames:
                raise ValueError(f"sequence {i}: annotation covers {truth.n_frames} of {seq.n_frames} frames")
            if any(not 0 <= c < m for c in truth.labels):
                raise ValueError(f"sequence {i}: label outside the label space")

    @property
    def dim(self) -> int:
        return self.examples[0][0].dim


def training_segments(truth: Parse, l_min: int, l_max: int) -> list[tuple[int, int, int]]:
    """Ground-truth segments as ``(start, end, label)``, fitted to ``[l_min, l_max]``.

    Long segments are cut into ``l_max`` chunks with a short remainder merged
    into the last chunk; segments shorter than ``l_min`` are skipped.
    """
    out = []
    for seg, label in zip(truth.segments(), truth.labels):
        n = seg.length
        if n < l_min:
            log.warning("skipping segment [%d, %d): length %d < l_min %d", seg.start, seg.end, n, l_min)
            continue
        if n <= l_max:
            out.append((seg.start, seg.end, label))
            continue
        cuts = list(range(seg.start, seg.end, l_max)) + [seg.end]
        if cuts[-1] - cuts[-2] < l_min:
            del cuts[-2]
        out.extend((a, b, label) for a, b in zip(cuts, cuts[1:]))
    return out


def _local_features(seq: FrameSequence, segs) -> np.ndarray:
    starts = np.array([s[0] for s in segs])
    ends = np.array([s[1] for s in segs])
    return SegmentEncoder(seq).encode(starts, ends)


def context_features(
    seq: FrameSequence,
    segs,
    first_layer: LinearModel,
    scales,
) -> np.ndarray:
    """Context feature rows for ``(start, end, ...)`` segments of one sequence."""
    cache = build_context_cache(seq, first_layer, scales)
    starts = np.array([s[0] for s in segs])
    ends = np.array([s[1] for s in segs])
    v_center = score_all_classes(first_layer, SegmentEncoder(seq).encode(starts, ends))
    return assemble_context_features(cache, starts, ends, v_center)


def fold_assignment(n_sequences: int, folds: int, seed: int) -> np.ndarray:
    if folds > n_sequences:
        raise ValueError(f"{folds} folds for only {n_sequences} sequences")
    perm = np.random.default_rng(seed).permutation(n_sequences)
    out = np.empty(n_sequences, dtype=np.int64)
    out[perm] = np.arange(n_sequences) % folds
    return out


def train_pipeline(
    corpus: TrainingCorpus,
    config: ParserConfig,
    train_config: TrainConfig,
) -> tuple[LinearModel, LinearModel]:
    """Train the first layer on all segments and the second layer on cross-fitted context features."""
    ls = corpus.label_space
    m = ls.size
    per_seq = [training_segments(truth, config.l_min, config.l_max) for _, truth in corpus.examples]
    phi = [_local_features(seq, segs) if segs else np.zeros((0, corpus.dim))
           for (seq, _), segs in zip(corpus.examples, per_seq)]
    labels = [np.array([c for _, _, c in segs], dtype=np.int64) for segs in per_seq]

    all_labels = np.concatenate(labels)
    counts = np.bincount(all_labels, minlength=m)
    short = [ls.class_names[j] for j in range(m) if counts[j] < config.folds]
    if short:
        raise ValueError(f"classes with fewer than {config.folds} training segments: {short}")

    first = train_multiclass_svm(np.vstack(phi), all_labels, train_config, ls)

    fold_of = fold_assignment(len(corpus.examples), config.folds, train_config.seed)
    psi: list[np.ndarray | None] = [None] * len(corpus.examples)
    for k in range(config.folds):
        train_idx = np.flatnonzero(fold_of != k)
        held = np.flatnonzero(fold_of == k)
        y_k = np.concatenate([labels[i] for i in train_idx])
        missing = [ls.class_names[j] for j in np.flatnonzero(np.bincount(y_k, minlength=m) == 0)]
        if missing:
            raise ValueError(f"fold {k}: classes absent from the remaining folds: {missing}")
        first_k = train_multiclass_svm(np.vstack([phi[i] for i in train_idx]), y_k, train_config, ls)
        for i in held:
            seq = corpus.examples[i][0]
            if per_seq[i]:
                psi[i] = context_features(seq, per_seq[i], first_k, config.scales)
            else:
                psi[i] = np.zeros((0, (2 * len(config.scales) + 1) * m))
        log.debug("fold %d: %d held-out sequences", k, len(held))

    second = train_multiclass_svm(np.vstack(psi), all_labels, train_config, ls)
    return first, second


def classify_segments(
    seq: FrameSequence,
    truth: Parse,
    first_layer: LinearModel,
    second_layer: LinearModel | None = None,
    scales=(),
) -> np.ndarray:
    """Predicted labels of the ground-truth segments, by one layer or both."""
    segs = [(s.start, s.end) for s in truth.segments()]
    if second_layer is None:
        feats = _local_features(seq, segs)
        return top_two(score_all_classes(first_layer, feats))[0]
    feats = context_features(seq, segs, first_layer, scales)
    return top_two(score_all_classes(second_layer, feats))[0]
