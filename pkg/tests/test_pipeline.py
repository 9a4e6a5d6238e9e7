import numpy as np
import pytest

from actparse.core import FrameSequence, LabelSpace, Parse, ParserConfig
from actparse.datagen import GenSpec, generate
from actparse.linear import TrainConfig, encode_segment, score_all_classes
from actparse.pipeline import (
    TrainingCorpus,
    classify_segments,
    fold_assignment,
    train_pipeline,
    training_segments,
)

from conftest import SMALL_CONFIG, SMALL_TRAIN


def test_training_segments_chunking():
    truth = Parse((0, 5, 20, 145, 150), (0, 1, 2, 1))
    segs = training_segments(truth, l_min=10, l_max=50)
    # [0,5) and [145,150) too short; [5,20) kept; [20,145) -> 50, 50, 25
    assert segs == [(5, 20, 1), (20, 70, 2), (70, 120, 2), (120, 145, 2)]
    segs = training_segments(Parse((0, 105), (1,)), l_min=10, l_max=50)
    # remainder 5 < l_min merges into the last chunk
    assert segs == [(0, 50, 1), (50, 105, 1)]


def test_fold_assignment_balanced():
    folds = fold_assignment(11, 3, seed=0)
    assert sorted(np.bincount(folds).tolist()) == [3, 4, 4]
    np.testing.assert_array_equal(folds, fold_assignment(11, 3, seed=0))
    with pytest.raises(ValueError):
        fold_assignment(2, 3, seed=0)


def _segment_accuracy(data, first, second=None):
    hits = total = 0
    for seq, truth in data:
        pred = classify_segments(seq, truth, first, second, SMALL_CONFIG.scales)
        hits += int(np.sum(pred == np.array(truth.labels)))
        total += len(truth.labels)
    return hits / total


def test_second_layer_no_worse_without_coupling():
    spec = GenSpec(n_classes=4, dim=8, noise=0.5, length_range=(20, 40), segments_range=(6, 10),
                   n_sequences=30, seed=21)
    data = generate(spec)
    train, test = data[:20], data[20:]
    first, second = train_pipeline(TrainingCorpus(tuple(train), spec.label_space()), SMALL_CONFIG, SMALL_TRAIN)
    assert _segment_accuracy(train, first) == 1.0
    assert _segment_accuracy(test, first, second) >= _segment_accuracy(test, first)


def test_leave_one_sequence_out():
    spec = GenSpec(n_classes=3, dim=4, length_range=(10, 20), segments_range=(6, 6), n_sequences=4, seed=3)
    data = generate(spec)
    cfg = ParserConfig(l_min=10, l_max=30, scales=(10,), folds=4)
    first, second = train_pipeline(TrainingCorpus(tuple(data), spec.label_space()), cfg, TrainConfig(epochs=5))
    assert np.all(np.isfinite(first.weights)) and np.all(np.isfinite(second.weights))
    assert second.input_dim == 3 * 3


def test_context_helps_coupled_pair(coupled_data, coupled_models):
    spec, _, test = coupled_data
    first, second = coupled_models
    a, b = spec.context_rules[0].pair
    pair_hits = {1: [0, 0], 2: [0, 0]}
    for seq, truth in test:
        t = np.array(truth.labels)
        mask = np.isin(t, (a, b))
        p1 = classify_segments(seq, truth, first)
        p2 = classify_segments(seq, truth, first, second, SMALL_CONFIG.scales)
        pair_hits[1][0] += int(np.sum(p1[mask] == t[mask]))
        pair_hits[2][0] += int(np.sum(p2[mask] == t[mask]))
        pair_hits[1][1] += int(mask.sum())
        pair_hits[2][1] += int(mask.sum())
    acc1 = pair_hits[1][0] / pair_hits[1][1]
    acc2 = pair_hits[2][0] / pair_hits[2][1]
    assert acc2 - acc1 > 0


def test_returned_first_layer_uses_all_data(coupled_data, coupled_models):
    spec, train, _ = coupled_data
    first, _ = coupled_models
    seq, truth = train[0]
    seg = truth.segments()[0]
    assert score_all_classes(first, encode_segment(seq, seg)).shape == (spec.n_classes,)


def test_too_few_examples():
    ls = LabelSpace.default(3)
    seq = FrameSequence(np.random.default_rng(0).normal(size=(60, 2)))
    corpus = TrainingCorpus(((seq, Parse((0, 20, 40, 60), (0, 1, 2))),), ls)
    with pytest.raises(ValueError, match="fewer than"):
        train_pipeline(corpus, SMALL_CONFIG, SMALL_TRAIN)


def test_corpus_validation():
    ls = LabelSpace.default(2)
    rng = np.random.default_rng(0)
    a = FrameSequence(rng.normal(size=(20, 2)))
    b = FrameSequence(rng.normal(size=(20, 3)))
    with pytest.raises(ValueError, match="dimension"):
        TrainingCorpus(((a, Parse((0, 20), (0,))), (b, Parse((0, 20), (1,)))), ls)
    with pytest.raises(ValueError, match="covers"):
        TrainingCorpus(((a, Parse((0, 10), (0,))),), ls)
    with pytest.raises(ValueError, match="label"):
        TrainingCorpus(((a, Parse((0, 20), (5,))),), ls)
    with pytest.raises(ValueError, match="empty"):
        TrainingCorpus((), ls)
