import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from actparse.baselines import nms_frame_labels, no_context_parse, sliding_window_labels, window_starts
from actparse.core import FrameSequence, LabelSpace, ParserConfig, validate_parse
from actparse.dp import LocalScorer, TableScorer, brute_force_parse, parse
from actparse.linear import LinearModel, encode_segment, predict_with_margin
from actparse.core import Segment


def test_window_starts():
    assert window_starts(10, 4, 2) == [0, 2, 4, 6]
    assert window_starts(11, 4, 2) == [0, 2, 4, 6, 7]
    assert window_starts(5, 5, 1) == [0]
    with pytest.raises(ValueError):
        window_starts(4, 5, 1)
    with pytest.raises(ValueError):
        window_starts(10, 4, 5)


def test_full_length_window(rng):
    seq = FrameSequence(rng.normal(size=(12, 3)))
    first = LinearModel(rng.normal(size=(3, 3)), LabelSpace.default(3))
    labels = sliding_window_labels(seq, first, 12)
    expected = predict_with_margin(first, encode_segment(seq, Segment(0, 12)))[0]
    np.testing.assert_array_equal(labels, np.full(12, expected))


def test_disjoint_windows_both_accepted():
    labels, accepted = nms_frame_labels(8, [0, 4], 4, [1, 2], [5.0, 3.0])
    assert sorted(accepted) == [0, 1]
    np.testing.assert_array_equal(labels, [1, 1, 1, 1, 2, 2, 2, 2])


def test_overlap_suppression_hand_trace():
    # windows [0,4) a=0 m=5, [3,7) b=1 m=4, [6,10) c=2 m=3
    # [0,4) accepted; [3,7) overlaps frame 3 -> suppressed; [6,10) disjoint -> accepted
    # orphans: frame 4 is 1 from [0,4) and 2 from [6,10); frame 5 is 2 and 1
    labels, accepted = nms_frame_labels(10, [0, 3, 6], 4, [0, 1, 2], [5.0, 4.0, 3.0])
    assert sorted(accepted) == [0, 2]
    np.testing.assert_array_equal(labels, [0, 0, 0, 0, 0, 2, 2, 2, 2, 2])


def test_overlapping_pair_only_winner():
    # [0,4) m=5 label 0 vs [2,6) m=4 label 1 over 6 frames; frames 4,5 inherit label 0
    labels, accepted = nms_frame_labels(6, [0, 2], 4, [0, 1], [5.0, 4.0])
    assert accepted == [0]
    np.testing.assert_array_equal(labels, [0] * 6)


def test_orphan_tie_goes_to_earlier_window():
    # [0,3) and [6,9); frame 4 is 2 frames from both
    labels, _ = nms_frame_labels(9, [0, 6], 3, [1, 2], [1.0, 2.0])
    np.testing.assert_array_equal(labels, [1, 1, 1, 1, 1, 2, 2, 2, 2])


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 80), st.data())
def test_nms_antichain_and_total_cover(n, data):
    window = data.draw(st.integers(1, n))
    stride = data.draw(st.integers(1, window))
    starts = window_starts(n, window, stride)
    margins = data.draw(st.lists(st.floats(0, 10), min_size=len(starts), max_size=len(starts)))
    labels_in = data.draw(st.lists(st.integers(0, 4), min_size=len(starts), max_size=len(starts)))
    labels, accepted = nms_frame_labels(n, starts, window, labels_in, margins)
    assert labels.shape == (n,)
    cover = np.zeros(n, dtype=int)
    for i in accepted:
        cover[starts[i]:starts[i] + window] += 1
        assert np.all(labels[starts[i]:starts[i] + window] == labels_in[i])
    assert cover.max() == 1
    assert set(labels.tolist()) <= {labels_in[i] for i in accepted}


def test_no_context_parse_valid(rng):
    cfg = ParserConfig(l_min=5, l_max=20, scales=(5,))
    seq = FrameSequence(rng.normal(size=(73, 4)))
    first = LinearModel(rng.normal(size=(3, 4)), LabelSpace.default(3))
    assert validate_parse(no_context_parse(seq, first, cfg), 73, cfg).ok


def test_no_context_matches_brute_force(rng):
    seq = FrameSequence(rng.normal(size=(26, 3)))
    first = LinearModel(rng.normal(size=(3, 3)), LabelSpace.default(3))
    cfg = ParserConfig(l_min=2, l_max=6, scales=(2,))
    xi = np.zeros((27, 7))
    lab = np.zeros((27, 7), dtype=int)
    local = LocalScorer(seq, first)
    for u in range(27):
        for l in range(2, min(6, u) + 1):
            xi[u, l], lab[u, l] = local(u, l)
    bf = brute_force_parse(TableScorer(xi, lab), 26, 2, 6)
    assert no_context_parse(seq, first, cfg).total_score == pytest.approx(bf.total_score, abs=1e-9)


def test_identity_second_layer_reduces_to_no_context(rng):
    cfg = ParserConfig(l_min=4, l_max=12, scales=(3, 7))
    m = 3
    seq = FrameSequence(rng.normal(size=(60, 5)))
    first = LinearModel(rng.normal(size=(m, 5)), LabelSpace.default(m))
    w = len(cfg.scales)
    embed = np.hstack([np.zeros((m, w * m)), np.eye(m), np.zeros((m, w * m))])
    second = LinearModel(embed, LabelSpace.default(m))
    a = parse(seq, first, second, cfg)
    b = no_context_parse(seq, first, cfg)
    assert a.breakpoints == b.breakpoints and a.labels == b.labels
    np.testing.assert_allclose(a.scores, b.scores, atol=1e-12)
