"""Temporal action parsing with max-pooled context features."""

from .baselines import no_context_parse, sliding_window_labels
from .context import ContextCache, assemble_context_feature, build_context_cache
from .core import (
    ActParseError,
    ConfigError,
    FormatError,
    FrameSequence,
    LabelSpace,
    NoValidParseError,
    Parse,
    ParserConfig,
    Segment,
    ValidityReport,
    validate_parse,
)
from .datagen import ContextRule, GenSpec, coupled_spec, generate
from .dp import (
    ContextScorer,
    DpTables,
    LocalScorer,
    MemoScorer,
    SegmentScorer,
    TableScorer,
    brute_force_parse,
    parse,
    parse_backward,
    parse_forward,
    score_candidate,
)
from .evaluation import confusion_matrix, parse_to_frame_labels, per_frame_accuracy
from .linear import (
    LinearModel,
    TrainConfig,
    encode_segment,
    predict_with_margin,
    score_all_classes,
    train_multiclass_svm,
)
from .pipeline import TrainingCorpus, train_pipeline

__version__ = "0.1.0"
