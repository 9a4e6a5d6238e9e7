import numpy as np
import pytest

from actparse.core import ParserConfig, Segment, validate_parse
from actparse.datagen import ContextRule, GenSpec, coupled_spec, generate
from actparse.linear import encode_segment, score_all_classes, train_multiclass_svm
from actparse.pipeline import training_segments

from conftest import SMALL_CONFIG, SMALL_TRAIN


def test_noiseless_frames_equal_prototypes():
    protos = np.array([[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]])
    spec = GenSpec(n_classes=2, dim=3, noise=0.0, prototypes=protos, n_sequences=3, seed=1)
    for seq, truth in generate(spec):
        for seg, c in zip(truth.segments(), truth.labels):
            np.testing.assert_array_equal(seq.frames[seg.start:seg.end], np.tile(protos[c], (seg.length, 1)))


@pytest.mark.parametrize("spec", [GenSpec(n_sequences=20, seed=2), coupled_spec(n_sequences=20, seed=3)])
def test_ground_truth_is_valid(spec):
    cfg = ParserConfig(l_min=spec.length_range[0], l_max=2 * spec.length_range[1], scales=(5,))
    for seq, truth in generate(spec):
        assert validate_parse(truth, seq.n_frames, cfg).ok


def test_deterministic():
    a = generate(coupled_spec(n_sequences=5, seed=11))
    b = generate(coupled_spec(n_sequences=5, seed=11))
    for (sa, ta), (sb, tb) in zip(a, b):
        assert sa.frames.tobytes() == sb.frames.tobytes()
        assert ta == tb
    c = generate(coupled_spec(n_sequences=5, seed=12))
    assert a[0][0].frames.tobytes() != c[0][0].frames.tobytes()


def test_coupling_rules_hold():
    spec = coupled_spec(n_sequences=40, seed=5)
    rule = spec.context_rules[0]
    seen_variants = set()
    for _, truth in generate(spec):
        labels = list(truth.labels)
        present = {c for c in labels if c in rule.pair}
        assert len(present) <= 1
        for k, c in enumerate(labels):
            if c in rule.pair:
                v = rule.pair.index(c)
                assert k > 0 and labels[k - 1] == rule.before[v]
                seen_variants.add(v)
            if c in rule.before:
                assert labels[k + 1] == rule.pair[rule.before.index(c)]
        assert all(a != b for a, b in zip(labels, labels[1:]))
    assert seen_variants == {0, 1}


def test_coupled_pair_shares_prototype():
    spec = coupled_spec(n_sequences=2, seed=0, noise=0.0)
    data = generate(spec)
    means = {}
    for seq, truth in data:
        for seg, c in zip(truth.segments(), truth.labels):
            means[c] = seq.frames[seg.start]
    if 2 in means and 3 in means:
        np.testing.assert_array_equal(means[2], means[3])


@pytest.mark.parametrize("seed", [0, 1])
def test_local_classifier_cannot_separate_pair(seed):
    spec = coupled_spec(n_sequences=60, seed=seed)
    data = generate(spec)
    X, y = [], []
    for seq, truth in data[:40]:
        for s, e, c in training_segments(truth, SMALL_CONFIG.l_min, SMALL_CONFIG.l_max):
            X.append(encode_segment(seq, Segment(s, e)))
            y.append(c)
    first = train_multiclass_svm(np.array(X), np.array(y), SMALL_TRAIN, spec.label_space())
    a, b = spec.context_rules[0].pair
    pred, true = [], []
    for seq, truth in data[40:]:
        for seg, c in zip(truth.segments(), truth.labels):
            if c in (a, b):
                s = score_all_classes(first, encode_segment(seq, seg))
                pred.append(a if s[a] >= s[b] else b)
                true.append(c)
    true = np.array(true)
    acc = np.mean(np.array(pred) == true)
    majority = max(np.mean(true == a), np.mean(true == b))
    assert acc <= majority + 0.05


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(context_rules=(ContextRule(pair=(1, 2), before=(3, 7)),)),
        dict(context_rules=(ContextRule(pair=(1, 1), before=(3, 4)),)),
        dict(context_rules=(ContextRule(pair=(0, 1), before=(2, 3)), ContextRule(pair=(3, 4), before=(5, 0)))),
        dict(n_classes=4, context_rules=(ContextRule(pair=(0, 1), before=(2, 3)),)),
        dict(length_range=(5, 2)),
        dict(prototypes=np.zeros((2, 2))),
    ],
)
def test_infeasible_specs(kwargs):
    base = dict(n_classes=6, dim=4)
    with pytest.raises(ValueError):
        GenSpec(**{**base, **kwargs})


def test_after_neighbors():
    rule = ContextRule(pair=(1, 2), before=(3, 4), after=(5, 6))
    spec = GenSpec(n_classes=8, dim=4, context_rules=(rule,), n_sequences=10, seed=0, coupled_rate=0.7)
    for _, truth in generate(spec):
        labels = truth.labels
        for k, c in enumerate(labels):
            if c in rule.pair:
                v = rule.pair.index(c)
                assert labels[k - 1] == rule.before[v] and labels[k + 1] == rule.after[v]
