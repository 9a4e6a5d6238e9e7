"""Comparison methods: sliding-window classification with greedy NMS, and
joint segmentation driven by local (context-free) margins."""

from __future__ import annotations

import numpy as np

from .core import FrameSequence, Parse, ParserConfig
from .dp import LocalScorer, MemoScorer, run_parser
from .linear import LinearModel, SegmentEncoder, score_all_classes, top_two


def window_starts(n_frames: int, window: int, stride: int) -> list[int]:
    """Starts ``0, stride, 2*stride, ...``; a final window is right-aligned to end at ``n_frames``."""
    if not 1 <= stride <= window:
        raise ValueError(f"need 1 <= stride <= window, got stride={stride}, window={window}")
    if window > n_frames:
        raise ValueError(f"window {window} longer than sequence of {n_frames} frames")
    starts = list(range(0, n_frames - window + 1, stride))
    if starts[-1] + window < n_frames:
        starts.append(n_frames - window)
    return starts


def nms_frame_labels(n_frames: int, starts, window: int, labels, margins) -> tuple[np.ndarray, list[int]]:
    """Greedy non-max suppression over equal-length windows, then a total frame labeling.

    Windows are accepted in order of decreasing margin (earlier window on ties)
    unless they overlap an accepted one. Frames not covered by an accepted
    window take the label of the nearest accepted window (earlier on ties).
    Returns the labels and the accepted window indices.
    """
    starts = np.asarray(starts)
    order = sorted(range(len(starts)), key=lambda i: (-margins[i], starts[i]))
    taken = np.zeros(n_frames, dtype=bool)
    accepted = []
    for i in order:
        s = starts[i]
        if not taken[s:s + window].any():
            taken[s:s + window] = True
            accepted.append(i)

    accepted.sort(key=lambda i: starts[i])
    frames = np.arange(n_frames)
    best_dist = np.full(n_frames, np.iinfo(np.int64).max)
    out = np.zeros(n_frames, dtype=np.int64)
    for i in accepted:  # increasing start, so '<' keeps the earlier window on ties
        s, e = starts[i], starts[i] + window
        dist = np.maximum(0, np.maximum(s - frames, frames - (e - 1)))
        closer = dist < best_dist
        out[closer] = labels[i]
        best_dist[closer] = dist[closer]
    return out, accepted


def sliding_window_labels(
    seq: FrameSequence,
    first_layer: LinearModel,
    window: int,
    stride: int | None = None,
) -> np.ndarray:
    """Per-frame labels from fixed-length windows scored by the first layer."""
    stride = max(1, window // 2) if stride is None else stride
    starts = np.array(window_starts(seq.n_frames, window, stride))
    feats = SegmentEncoder(seq).encode(starts, starts + window)
    labels, margins = top_two(score_all_classes(first_layer, feats))
    out, _ = nms_frame_labels(seq.n_frames, starts, window, labels, margins)
    return out


def no_context_parse(
    seq: FrameSequence,
    first_layer: LinearModel,
    config: ParserConfig,
) -> Parse:
    """Same DP as the full parser, scored by the first layer's margin on each candidate alone."""
    scorer = MemoScorer(
        LocalScorer(seq, first_layer, config.segment_penalty),
        seq.n_frames,
        config.l_min,
        config.l_max,
    )
    return run_parser(scorer, seq.n_frames, config.l_min, config.l_max)
