import random

import pytest

from elicitkit.core.exceptions import MetricError, NoProposalsError
from elicitkit.core.models import SpeechEntry, SpeechTable
from elicitkit.modules.speech import (
    consensus_distinct_ratio,
    max_consensus,
    score_speech,
    speech_summary,
)


def _table(utterances, referent="r"):
    return SpeechTable(referent=referent, entries=tuple(
        SpeechEntry(participant=f"p{i}", utterance=u) for i, u in enumerate(utterances)
    ))


def test_worked_example(speech_table):
    assert max_consensus(speech_table) == 60.0
    assert consensus_distinct_ratio(speech_table) == 75.0


def test_identical_utterances():
    table = _table(["go"] * 8)
    assert max_consensus(table) == 100.0
    assert consensus_distinct_ratio(table) == 100.0


def test_distinct_utterances():
    table = _table([f"word {i}" for i in range(8)])
    assert max_consensus(table) == pytest.approx(100 / 8)
    assert consensus_distinct_ratio(table) == 0.0


def test_normalization_merges_variants():
    table = _table(["Move left", "move  LEFT!", "left"])
    assert max_consensus(table) == pytest.approx(200 / 3)


def test_baseline_raises_bar(speech_table):
    # поддержка: 12, 5, 2, 1
    assert consensus_distinct_ratio(speech_table, baseline=2) == 50.0
    assert consensus_distinct_ratio(speech_table, baseline=12) == 0.0


def test_invalid_baseline(speech_table):
    with pytest.raises(MetricError):
        consensus_distinct_ratio(speech_table, baseline=0)


def test_empty_table():
    with pytest.raises(NoProposalsError):
        max_consensus(SpeechTable(referent="r"))


def test_score_and_summary(speech_table):
    score = score_speech(speech_table)
    assert score.modal_utterances == ("move left",)
    assert score.distinct_count == 4

    summary = speech_summary([speech_table, _table(["go"] * 4, referent="stop")])
    assert summary.mean_max_consensus == pytest.approx(80.0)
    assert summary.mean_consensus_distinct_ratio == pytest.approx(87.5)
    assert [s.referent for s in summary.referents] == ["swipe", "stop"]


@pytest.mark.parametrize("baseline", [1, 2, 3])
def test_invariant_to_relabeling_and_order(speech_table, baseline):
    renamed = {}
    entries = []
    for entry in speech_table.entries:
        utterance = renamed.setdefault(entry.utterance, f"phrase {len(renamed)}")
        entries.append(SpeechEntry(participant=entry.participant, utterance=utterance))
    random.Random(baseline).shuffle(entries)
    relabeled = SpeechTable(referent=speech_table.referent, entries=tuple(entries))

    assert max_consensus(relabeled) == max_consensus(speech_table)
    assert consensus_distinct_ratio(relabeled, baseline) == consensus_distinct_ratio(speech_table, baseline)
