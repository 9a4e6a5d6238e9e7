"""Per-frame accuracy and confusion counts."""

from __future__ import annotations

import numpy as np

from .core import Parse


def parse_to_frame_labels(parse: Parse) -> np.ndarray:
    b = parse.breakpoints
    if len(b) < 2 or b[0] != 0 or any(x >= y for x, y in zip(b, b[1:])):
        raise ValueError(f"invalid parse breakpoints {b}")
    if len(parse.labels) != len(b) - 1:
        raise ValueError(f"{len(parse.labels)} labels for {len(b) - 1} segments")
    return np.repeat(np.asarray(parse.labels, dtype=np.int64), np.diff(b))


def frame_labels_to_breakpoints(labels) -> tuple[list[int], list[int]]:
    """Run-length decode: breakpoints at label changes, one label per run."""
    labels = np.asarray(labels)
    if labels.size == 0:
        raise ValueError("empty label array")
    change = np.flatnonzero(labels[1:] != labels[:-1]) + 1
    bps = [0, *change.tolist(), len(labels)]
    return bps, labels[bps[:-1]].tolist()


def _check_pair(predicted, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predicted)
    t = np.asarray(truth)
    if p.shape != t.shape or p.ndim != 1:
        raise ValueError(f"label arrays must be 1-D with equal length, got {p.shape} and {t.shape}")
    if p.size == 0:
        raise ValueError("empty label arrays")
    return p, t


def per_frame_accuracy(predicted, truth, ignore_label: int | None = None) -> float:
    """Fraction of frames whose predicted label equals the truth.

    With ``ignore_label`` set (e.g. the background class), frames whose truth
    is that label are left out of both numerator and denominator.
    """
    p, t = _check_pair(predicted, truth)
    if ignore_label is not None:
        keep = t != ignore_label
        if not keep.any():
            raise ValueError("no frames left after excluding the ignored label")
        p, t = p[keep], t[keep]
    return float(np.count_nonzero(p == t)) / p.size


def confusion_matrix(predicted, truth, m: int) -> np.ndarray:
    """Entry ``(t, p)`` counts frames with truth ``t`` predicted as ``p``."""
    p, t = _check_pair(predicted, truth)
    for name, a in (("predicted", p), ("truth", t)):
        if a.min() < 0 or a.max() >= m:
            raise ValueError(f"{name} labels must lie in [0, {m})")
    out = np.zeros((m, m), dtype=np.int64)
    np.add.at(out, (t, p), 1)
    return out
