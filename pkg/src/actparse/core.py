"""Domain types shared across the parser, and structural checks on a parse.

Segments are half-open frame intervals ``[start, end)``. A parse of a
sequence with ``n`` frames is a breakpoint list ``0 = b_0 < ... < b_K = n``
plus one label per segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ActParseError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(ActParseError, ValueError):
    pass


class NoValidParseError(ActParseError):
    def __init__(self, n_frames: int, l_min: int, l_max: int):
        self.n_frames = n_frames
        self.l_min = l_min
        self.l_max = l_max
        msg = (
            f"no valid parse: {n_frames} frames cannot be split into "
            f"segments of length [{l_min}, {l_max}]"
        )
        if n_frames < l_min:
            msg += f" (sequence is shorter than l_min={l_min})"
        super().__init__(msg)


class FormatError(ActParseError, ValueError):
    """Malformed input file. ``where`` names the offending line or field."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


@dataclass(frozen=True, eq=False)
class FrameSequence:
    """Per-frame feature vectors, shape ``(n_frames, dim)``."""

    frames: np.ndarray

    def __post_init__(self):
        arr = np.array(self.frames, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"frames must be 2-D (n_frames, dim), got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"need at least one frame of dimension >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("frames contain non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def __len__(self) -> int:
        return self.n_frames


@dataclass(frozen=True)
class Segment:
    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"invalid segment [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class LabelSpace:
    class_names: tuple[str, ...]
    background_index: int = 0

    def __post_init__(self):
        names = tuple(str(n) for n in self.class_names)
        object.__setattr__(self, "class_names", names)
        if len(names) < 2:
            raise ValueError("need at least two classes")
        if len(set(names)) != len(names):
            raise ValueError(f"class names must be unique: {names}")
        if not 0 <= self.background_index < len(names):
            raise ValueError(f"background_index {self.background_index} out of range")

    @property
    def size(self) -> int:
        return len(self.class_names)

    @property
    def background(self) -> str:
        return self.class_names[self.background_index]

    def index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise KeyError(f"unknown class {name!r}") from None

    @classmethod
    def default(cls, m: int) -> LabelSpace:
        return cls(tuple(["background"] + [f"action{i}" for i in range(1, m)]), 0)


@dataclass(frozen=True)
class Parse:
    """A labeled segmentation.

    ``scores`` holds the per-segment confidence that produced the parse
    (all zero for ground truth); ``total_score`` is their sum.
    """

    breakpoints: tuple[int, ...]
    labels: tuple[int, ...]
    total_score: float = 0.0
    scores: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "breakpoints", tuple(int(b) for b in self.breakpoints))
        object.__setattr__(self, "labels", tuple(int(c) for c in self.labels))
        if self.scores is None:
            object.__setattr__(self, "scores", (0.0,) * len(self.labels))
        else:
            object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        object.__setattr__(self, "total_score", float(self.total_score))

    @property
    def n_segments(self) -> int:
        return len(self.labels)

    @property
    def n_frames(self) -> int:
        return self.breakpoints[-1]

    def segments(self) -> list[Segment]:
        b = self.breakpoints
        return [Segment(b[i], b[i + 1]) for i in range(len(b) - 1)]


@dataclass(frozen=True)
class ParserConfig:
    l_min: int = 40
    l_max: int = 400
    scales: tuple[int, ...] = (75, 150, 225, 300)
    segment_penalty: float = 0.0
    lam: float = 1e-3
    folds: int = 5

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        if not 1 <= self.l_min <= self.l_max:
            raise ConfigError(f"need 1 <= l_min <= l_max, got l_min={self.l_min}, l_max={self.l_max}")
        if self.l_max < 2 * self.l_min:
            raise ConfigError(
                f"l_max ({self.l_max}) must be at least 2*l_min ({2 * self.l_min}) "
                "so every sequence of >= l_min frames is parseable"
            )
        if not self.scales or any(s < 1 for s in self.scales):
            raise ConfigError(f"scales must be a non-empty list of positive lengths, got {self.scales}")
        if self.segment_penalty < 0:
            raise ConfigError("segment_penalty must be >= 0")
        if self.lam <= 0:
            raise ConfigError("lam must be > 0")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")


@dataclass(frozen=True)
class ValidityReport:
    endpoints_pinned: bool
    strictly_increasing: bool
    lengths_in_bounds: bool
    label_count_consistent: bool
    problems: tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return (
            self.endpoints_pinned
            and self.strictly_increasing
            and self.lengths_in_bounds
            and self.label_count_consistent
        )

    def __bool__(self) -> bool:
        return self.ok


def validate_parse(parse: Parse, n_frames: int, config: ParserConfig) -> ValidityReport:
    """Check a parse against the tiling and length constraints. Never raises."""
    b = list(parse.breakpoints)
    problems = []

    pinned = len(b) >= 2 and b[0] == 0 and b[-1] == n_frames
    if not pinned:
        first, last = (b[0], b[-1]) if b else (None, None)
        problems.append(f"breakpoints must run from 0 to {n_frames}, got {first}..{last}")

    increasing = all(b[i] < b[i + 1] for i in range(len(b) - 1))
    if not increasing:
        problems.append("breakpoints are not strictly increasing")

    lengths = [b[i + 1] - b[i] for i in range(len(b) - 1)]
    bad = [(i, n) for i, n in enumerate(lengths) if not config.l_min <= n <= config.l_max]
    in_bounds = not bad
    for i, n in bad:
        problems.append(f"segment {i} has length {n} outside [{config.l_min}, {config.l_max}]")

    consistent = len(parse.labels) == len(b) - 1 and len(parse.scores) == len(parse.labels)
    if not consistent:
        problems.append(f"{len(parse.labels)} labels for {len(b) - 1} segments")

    return ValidityReport(pinned, increasing, in_bounds, consistent, tuple(problems))
