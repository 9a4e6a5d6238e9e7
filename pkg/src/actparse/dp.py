"""Dynamic-programming parsing of a frame sequence into labeled segments.

A scorer maps a candidate segment ending at frame ``u`` with length ``l``
(frames ``[u - l, u)``) to a nonnegative confidence ``xi`` and a label.
The forward pass fills

    gamma[u] = max_{l_min <= l <= min(l_max, u)} xi(u, l) + gamma[u - l]

with ``gamma[0] = 0``; the backward pass follows the stored lengths from
``gamma[n_frames]`` back to 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .context import ContextCache, assemble_context_features, build_context_cache
from .core import FrameSequence, NoValidParseError, Parse, ParserConfig
from .linear import LinearModel, SegmentEncoder, score_all_classes, top_two

BRUTE_FORCE_MAX_FRAMES = 40


class SegmentScorer:
    """Base scorer. Subclasses implement ``_score_lengths``.

    ``calls`` counts candidate segments actually evaluated.
    """

    def __init__(self):
        self.calls = 0

    def _score_lengths(self, u: int, lengths: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def score_lengths(self, u: int, lengths) -> tuple[np.ndarray, np.ndarray]:
        lengths = np.asarray(lengths, dtype=np.int64)
        self.calls += len(lengths)
        xi, labels = self._score_lengths(u, lengths)
        return np.asarray(xi, dtype=np.float64), np.asarray(labels, dtype=np.int64)

    def __call__(self, u: int, l: int) -> tuple[float, int]:
        xi, labels = self.score_lengths(u, [l])
        return float(xi[0]), int(labels[0])


class TableScorer(SegmentScorer):
    """Lookup-table scorer: ``xi[u, l]`` and ``labels[u, l]`` arrays."""

    def __init__(self, xi, labels):
        super().__init__()
        self.xi = np.asarray(xi, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        if self.xi.shape != self.labels.shape:
            raise ValueError("xi and labels tables must have the same shape")
        if np.any(self.xi < 0):
            raise ValueError("confidence scores must be >= 0")

    def _score_lengths(self, u, lengths):
        return self.xi[u, lengths], self.labels[u, lengths]

    @classmethod
    def random(cls, rng: np.random.Generator, n_frames: int, l_max: int, m: int = 3):
        """Random table built from margins of random ``m``-class score vectors."""
        scores = rng.normal(size=(n_frames + 1, l_max + 1, m))
        labels, margins = top_two(scores)
        return cls(margins, labels)


class ContextScorer(SegmentScorer):
    """Two-layer scorer: local first-layer scores plus pooled context, fed to the second layer."""

    def __init__(
        self,
        seq: FrameSequence,
        first_layer: LinearModel,
        second_layer: LinearModel,
        cache: ContextCache,
        penalty: float = 0.0,
    ):
        super().__init__()
        if first_layer.input_dim != seq.dim:
            raise ValueError(
                f"first layer expects dimension {first_layer.input_dim}, sequence has {seq.dim}"
            )
        if second_layer.input_dim != cache.context_dim:
            raise ValueError(
                f"second layer expects dimension {second_layer.input_dim}, "
                f"context features have {cache.context_dim}"
            )
        self.n_frames = seq.n_frames
        self.encoder = SegmentEncoder(seq)
        self.first_layer = first_layer
        self.second_layer = second_layer
        self.cache = cache
        self.penalty = penalty

    def _score_lengths(self, u, lengths):
        starts = u - lengths
        v_center = score_all_classes(self.first_layer, self.encoder.encode(starts, np.full_like(starts, u)))
        psi = assemble_context_features(self.cache, starts, np.full_like(starts, u), v_center)
        labels, margins = top_two(score_all_classes(self.second_layer, psi))
        return np.maximum(0.0, margins - self.penalty), labels


class LocalScorer(SegmentScorer):
    """First-layer margin on the segment's own frames; no context."""

    def __init__(self, seq: FrameSequence, first_layer: LinearModel, penalty: float = 0.0):
        super().__init__()
        if first_layer.input_dim != seq.dim:
            raise ValueError(
                f"first layer expects dimension {first_layer.input_dim}, sequence has {seq.dim}"
            )
        self.n_frames = seq.n_frames
        self.encoder = SegmentEncoder(seq)
        self.first_layer = first_layer
        self.penalty = penalty

    def _score_lengths(self, u, lengths):
        starts = u - lengths
        scores = score_all_classes(self.first_layer, self.encoder.encode(starts, np.full_like(starts, u)))
        labels, margins = top_two(scores)
        return np.maximum(0.0, margins - self.penalty), labels


class MemoScorer(SegmentScorer):
    """Caches ``(xi, label)`` per ``(u, l)`` so each candidate reaches the wrapped scorer once."""

    def __init__(self, inner: SegmentScorer, n_frames: int, l_min: int, l_max: int):
        super().__init__()
        self.inner = inner
        self.l_min = l_min
        width = l_max - l_min + 1
        self._xi = np.full((n_frames + 1, width), np.nan)
        self._labels = np.zeros((n_frames + 1, width), dtype=np.int64)

    def _score_lengths(self, u, lengths):
        cols = lengths - self.l_min
        missing = np.isnan(self._xi[u, cols])
        if missing.any():
            xi, labels = self.inner.score_lengths(u, lengths[missing])
            self._xi[u, cols[missing]] = xi
            self._labels[u, cols[missing]] = labels
        return self._xi[u, cols].copy(), self._labels[u, cols].copy()


def score_candidate(
    seq: FrameSequence,
    u: int,
    l: int,
    first_layer: LinearModel,
    second_layer: LinearModel,
    cache: ContextCache,
    penalty: float = 0.0,
    l_min: int = 1,
    l_max: int | None = None,
) -> tuple[float, int]:
    """Confidence and label of the candidate ``[u - l, u)`` under the two-layer scorer."""
    l_max = seq.n_frames if l_max is None else l_max
    if not (l_min <= l <= l_max and l <= u <= seq.n_frames):
        raise ValueError(f"invalid candidate (u={u}, l={l}) for {seq.n_frames} frames")
    return ContextScorer(seq, first_layer, second_layer, cache, penalty)(u, l)


@dataclass(frozen=True, eq=False)
class DpTables:
    """Forward-pass tables indexed by end frame ``u`` in ``0..n_frames``.

    ``xi[u]`` is the confidence of the chosen last segment of the prefix
    ending at ``u``; ``gamma[u]`` is ``-inf`` where no valid prefix parse exists.
    """

    gamma: np.ndarray
    beta: np.ndarray
    rho: np.ndarray
    xi: np.ndarray
    l_min: int
    l_max: int

    @property
    def n_frames(self) -> int:
        return len(self.gamma) - 1


def parse_forward(scorer: SegmentScorer, n_frames: int, l_min: int, l_max: int) -> DpTables:
    if not 1 <= l_min <= l_max:
        raise ValueError(f"need 1 <= l_min <= l_max, got {l_min}, {l_max}")
    gamma = np.full(n_frames + 1, -np.inf)
    gamma[0] = 0.0
    beta = np.zeros(n_frames + 1, dtype=np.int64)
    rho = np.zeros(n_frames + 1, dtype=np.int64)
    xi_best = np.zeros(n_frames + 1)
    for u in range(l_min, n_frames + 1):
        lengths = np.arange(l_min, min(l_max, u) + 1)
        prev = gamma[u - lengths]
        ok = np.isfinite(prev)
        if not ok.any():
            continue
        lengths = lengths[ok]
        xi, labels = scorer.score_lengths(u, lengths)
        total = xi + prev[ok]
        k = int(np.argmax(total))  # first maximum -> smallest l
        gamma[u] = total[k]
        beta[u] = labels[k]
        rho[u] = lengths[k]
        xi_best[u] = xi[k]
    return DpTables(gamma, beta, rho, xi_best, l_min, l_max)


def parse_backward(tables: DpTables) -> Parse:
    n = tables.n_frames
    if not np.isfinite(tables.gamma[n]):
        raise NoValidParseError(n, tables.l_min, tables.l_max)
    breakpoints, labels, scores = [n], [], []
    i = n
    while i > 0:
        labels.append(int(tables.beta[i]))
        scores.append(float(tables.xi[i]))
        i -= int(tables.rho[i])
        breakpoints.append(i)
    breakpoints.reverse()
    labels.reverse()
    scores.reverse()
    return Parse(tuple(breakpoints), tuple(labels), float(tables.gamma[n]), tuple(scores))


def run_parser(scorer: SegmentScorer, n_frames: int, l_min: int, l_max: int) -> Parse:
    if n_frames < l_min:
        raise NoValidParseError(n_frames, l_min, l_max)
    return parse_backward(parse_forward(scorer, n_frames, l_min, l_max))


def parse(
    seq: FrameSequence,
    first_layer: LinearModel,
    second_layer: LinearModel,
    config: ParserConfig,
    memoize: bool = True,
    cache: ContextCache | None = None,
) -> Parse:
    """Optimal two-layer parse of ``seq``."""
    scorer = make_scorer(seq, first_layer, second_layer, config, memoize, cache)
    return run_parser(scorer, seq.n_frames, config.l_min, config.l_max)


def make_scorer(
    seq: FrameSequence,
    first_layer: LinearModel,
    second_layer: LinearModel,
    config: ParserConfig,
    memoize: bool = True,
    cache: ContextCache | None = None,
) -> SegmentScorer:
    """The scorer ``parse`` uses; the context cache is built once here."""
    if cache is None:
        cache = build_context_cache(seq, first_layer, config.scales)
    scorer = ContextScorer(seq, first_layer, second_layer, cache, config.segment_penalty)
    if memoize:
        scorer = MemoScorer(scorer, seq.n_frames, config.l_min, config.l_max)
    return scorer


def segmentations(n_frames: int, l_min: int, l_max: int):
    """Yield every breakpoint tuple tiling ``n_frames`` with lengths in ``[l_min, l_max]``, in lexicographic order."""

    def rest(start):
        if start == n_frames:
            yield (n_frames,)
            return
        for l in range(l_min, min(l_max, n_frames - start) + 1):
            for tail in rest(start + l):
                yield (start,) + tail

    yield from rest(0)


def _score_table(scorer: SegmentScorer, n_frames: int, l_min: int, l_max: int):
    xi = np.full((n_frames + 1, l_max + 1), np.nan)
    labels = np.zeros((n_frames + 1, l_max + 1), dtype=np.int64)
    for u in range(l_min, n_frames + 1):
        lengths = np.arange(l_min, min(l_max, u) + 1)
        xi[u, lengths], labels[u, lengths] = scorer.score_lengths(u, lengths)
    return xi, labels


def brute_force_search(
    scorer: SegmentScorer, n_frames: int, l_min: int, l_max: int, tol: float = 1e-12
) -> tuple[Parse, int]:
    """Enumerate every valid segmentation; return the best parse and how many totals lie within ``tol`` of it.

    Segmentations are expanded one segment at a time, keeping a parent index
    per level so tied candidates can be rebuilt. The best parse is the
    lexicographically smallest breakpoint list among exact maxima.
    """
    if n_frames > BRUTE_FORCE_MAX_FRAMES:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_FRAMES} frames, got {n_frames}")
    xi, labels = _score_table(scorer, n_frames, l_min, l_max)
    lengths = np.arange(l_min, l_max + 1)

    pos = np.zeros(1, dtype=np.int64)
    total = np.zeros(1)
    levels = []  # per level: (parent index, position) of every expanded row
    finished = []  # per level: (level, finished row indices, their totals)
    while len(pos):
        parent = np.repeat(np.arange(len(pos)), len(lengths))
        nxt = pos[parent] + np.tile(lengths, len(pos))
        ok = nxt <= n_frames
        parent, nxt = parent[ok], nxt[ok]
        # left-to-right accumulation, same order as summing a parse's scores
        tot = total[parent] + xi[nxt, nxt - pos[parent]]
        levels.append((parent, nxt))
        done = nxt == n_frames
        if done.any():
            finished.append((len(levels) - 1, np.flatnonzero(done), tot[done]))
        pos, total = nxt[~done], tot[~done]
        # keep parent indices pointing at rows of the previous level
        levels[-1] = (parent, nxt, np.flatnonzero(~done))

    if not finished:
        raise NoValidParseError(n_frames, l_min, l_max)
    totals = np.concatenate([t for _, _, t in finished])
    best = totals.max()

    def rebuild(level, row):
        bps = []
        while level >= 0:
            parent, nxt, _ = levels[level]
            bps.append(int(nxt[row]))
            row = parent[row]
            level -= 1
            if level >= 0:
                row = levels[level][2][row]
        return (0, *reversed(bps))

    ties = [rebuild(level, row) for level, rows, t in finished for row in rows[t == best]]
    bps = min(ties)
    segs = list(itertools.pairwise(bps))
    parse = Parse(bps, [labels[b1, b1 - b0] for b0, b1 in segs], float(best), [xi[b1, b1 - b0] for b0, b1 in segs])
    return parse, int(np.count_nonzero(totals >= best - tol))


def brute_force_parse(scorer: SegmentScorer, n_frames: int, l_min: int, l_max: int) -> Parse:
    """Exhaustive maximization over all valid segmentations (small inputs only)."""
    return brute_force_search(scorer, n_frames, l_min, l_max)[0]


def count_optima(scorer: SegmentScorer, n_frames: int, l_min: int, l_max: int, tol: float = 1e-12) -> int:
    """Number of segmentations whose total is within ``tol`` of the best."""
    return brute_force_search(scorer, n_frames, l_min, l_max, tol)[1]
