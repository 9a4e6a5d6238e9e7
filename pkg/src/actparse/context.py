"""Multi-scale tile scores and max-pooled temporal context features.

Each scale ``l`` tiles the sequence into ``n_frames // l`` fixed, disjoint
tiles starting at frame 0 (tail frames are left untiled). Every tile is
scored once by the first-layer classifier. The context of a candidate
segment ``[start, end)`` is the per-class max over tiles lying entirely
before ``start`` and over tiles lying entirely at or after ``end``, one
``m``-block per scale. Scales without a qualifying tile contribute zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FrameSequence, Segment
from .linear import LinearModel, SegmentEncoder, score_all_classes


@dataclass(frozen=True, eq=False)
class ScaleTiles:
    scale: int
    tile_scores: np.ndarray  # (n_tiles, m)
    prefix_max: np.ndarray  # prefix_max[j] = max over tiles 0..j
    suffix_max: np.ndarray  # suffix_max[j] = max over tiles j..last

    @property
    def n_tiles(self) -> int:
        return self.tile_scores.shape[0]


def _scale_tiles(scale: int, tile_scores: np.ndarray) -> ScaleTiles:
    if len(tile_scores):
        prefix = np.maximum.accumulate(tile_scores, axis=0)
        suffix = np.maximum.accumulate(tile_scores[::-1], axis=0)[::-1]
    else:
        prefix = suffix = tile_scores
    for a in (tile_scores, prefix, suffix):
        a.setflags(write=False)
    return ScaleTiles(scale, tile_scores, prefix, suffix)


class ContextCache:
    """Tile scores for every scale plus padded running maxima for O(1) pooling."""

    def __init__(self, tiles: list[ScaleTiles], n_classes: int, n_frames: int):
        self.tiles = tuple(tiles)
        self.n_classes = n_classes
        self.n_frames = n_frames
        zero = np.zeros((1, n_classes))
        # index k of _before[i] = max over the first k tiles (row 0 is the empty sentinel)
        self._before = [np.vstack([zero, t.prefix_max]) for t in self.tiles]
        # index k of _after[i] = max over tiles k..last (row n_tiles is the empty sentinel)
        self._after = [np.vstack([t.suffix_max, zero]) for t in self.tiles]

    @classmethod
    def from_tile_scores(cls, scales, tile_scores, n_frames: int, n_classes: int | None = None) -> ContextCache:
        scores = [np.array(s, dtype=np.float64) for s in tile_scores]
        if n_classes is None:
            n_classes = max((s.shape[-1] for s in scores if s.ndim == 2), default=0)
        scores = [s if len(s) else np.zeros((0, n_classes)) for s in scores]
        if any(s.ndim != 2 or s.shape[1] != n_classes for s in scores):
            raise ValueError(f"tile scores must be (n_tiles, {n_classes}) arrays")
        m = n_classes
        for scale, s in zip(scales, scores):
            if len(s) != n_frames // scale:
                raise ValueError(f"scale {scale} needs {n_frames // scale} tiles, got {len(s)}")
        return cls([_scale_tiles(int(l), s) for l, s in zip(scales, scores)], m, n_frames)

    @property
    def scales(self) -> tuple[int, ...]:
        return tuple(t.scale for t in self.tiles)

    @property
    def context_dim(self) -> int:
        return (2 * len(self.tiles) + 1) * self.n_classes

    def pool_before(self, boundary) -> np.ndarray:
        """Per-class max over tiles ending at or before ``boundary``; vectorizes over boundaries."""
        b = np.asarray(boundary)
        blocks = []
        for t, table in zip(self.tiles, self._before):
            k = np.minimum(b // t.scale, t.n_tiles)
            blocks.append(table[k])
        return np.concatenate(blocks, axis=-1)

    def pool_after(self, boundary) -> np.ndarray:
        """Per-class max over tiles starting at or after ``boundary``; vectorizes over boundaries."""
        b = np.asarray(boundary)
        blocks = []
        for t, table in zip(self.tiles, self._after):
            k = np.minimum(-(-b // t.scale), t.n_tiles)
            blocks.append(table[k])
        return np.concatenate(blocks, axis=-1)


def build_context_cache(seq: FrameSequence, first_layer: LinearModel, scales) -> ContextCache:
    if first_layer.input_dim != seq.dim:
        raise ValueError(
            f"first layer expects dimension {first_layer.input_dim}, sequence has {seq.dim}"
        )
    encoder = SegmentEncoder(seq)
    n = seq.n_frames
    m = first_layer.n_classes
    tiles = []
    for scale in scales:
        scale = int(scale)
        count = n // scale
        if count:
            starts = np.arange(count) * scale
            scores = score_all_classes(first_layer, encoder.encode(starts, starts + scale))
        else:
            scores = np.zeros((0, m))
        tiles.append(_scale_tiles(scale, scores))
    return ContextCache(tiles, m, n)


def assemble_context_feature(cache: ContextCache, segment: Segment, v_center) -> np.ndarray:
    v_center = np.asarray(v_center, dtype=np.float64)
    if v_center.shape != (cache.n_classes,):
        raise ValueError(f"v_center must have dimension {cache.n_classes}, got {v_center.shape}")
    if segment.end > cache.n_frames:
        raise IndexError(f"segment [{segment.start}, {segment.end}) exceeds {cache.n_frames} frames")
    return np.concatenate(
        [cache.pool_before(segment.start), v_center, cache.pool_after(segment.end)]
    )


def assemble_context_features(cache: ContextCache, starts, ends, v_center) -> np.ndarray:
    """Row-wise ``assemble_context_feature`` for many segments at once."""
    return np.concatenate(
        [cache.pool_before(np.asarray(starts)), v_center, cache.pool_after(np.asarray(ends))],
        axis=-1,
    )
