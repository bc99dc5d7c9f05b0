import math
import unicodedata

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detoxkit import corpus
from detoxkit.cleaning import (
    CleaningConfig,
    CleaningPipeline,
    char_ngrams,
    dedup_identical,
    filter_hinglish_script,
    filter_lexical_divergence,
    filter_semantic_preservation,
    jaccard,
    run_pipeline,
)
from detoxkit.corpus import ParallelPair
from detoxkit.errors import CorpusValidationError
from detoxkit.scorers import FallbackScorer


def brute_force_ngrams(text, n):
    text = unicodedata.normalize("NFC", text).lower()
    if not text:
        return set()
    if len(text) < n:
        return {text}
    out = set()
    for i in range(len(text)):
        if i + n <= len(text):
            out.add(text[i : i + n])
    return out


def test_char_ngrams_examples():
    assert char_ngrams("abcdef", 5) == {"abcde", "bcdef"}
    assert char_ngrams("ab", 5) == {"ab"}
    assert char_ngrams("AbC", 2) == {"ab", "bc"}
    assert char_ngrams("", 5) == set()


def test_char_ngrams_rejects_bad_order():
    with pytest.raises(ValueError):
        char_ngrams("abc", 0)


def test_jaccard_examples():
    assert jaccard({"a", "b"}, {"a", "b"}) == 1.0
    assert jaccard({"a"}, {"b"}) == 0.0
    assert jaccard(set(), set()) == 1.0
    assert jaccard(char_ngrams("abcdef", 5), char_ngrams("bcdefg", 5)) == pytest.approx(1 / 3)


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=40), st.text(max_size=40), st.integers(min_value=1, max_value=6))
def test_ngram_jaccard_matches_brute_force(a, b, n):
    ga, gb = char_ngrams(a, n), char_ngrams(b, n)
    assert ga == brute_force_ngrams(a, n)
    assert gb == brute_force_ngrams(b, n)
    j = jaccard(ga, gb)
    assert j == jaccard(gb, ga)
    assert 0.0 <= j <= 1.0
    assert (j == 1.0) == (ga == gb)


def _pair(pid, toxic, neutral, lang="en", source="human"):
    return ParallelPair(id=pid, lang=lang, toxic=toxic, neutral=neutral, source=source)


# Distinct-character string: every 5-gram window is unique, so gram-set
# sizes and intersections can be dialed in exactly.
_DISTINCT = "".join(chr(0x4E00 + i) for i in range(1004))


def test_lexical_divergence_boundary():
    cfg = CleaningConfig()
    # toxic: windows 0..949 (950 grams); neutral: windows 50..999 -> J = 900/1000
    at_boundary = _pair("b1", _DISTINCT[0:954], _DISTINCT[50:1004])
    # neutral: windows 51..999 -> J = 899/1000
    below = _pair("b2", _DISTINCT[0:954], _DISTINCT[51:1004])
    retained, dropped = filter_lexical_divergence([at_boundary, below], cfg)
    assert [p.id for p in dropped] == ["b1"]
    assert [p.id for p in retained] == ["b2"]
    j_at = jaccard(char_ngrams(at_boundary.toxic, 5), char_ngrams(at_boundary.neutral, 5))
    j_below = jaccard(char_ngrams(below.toxic, 5), char_ngrams(below.neutral, 5))
    assert j_at == pytest.approx(0.900)
    assert j_below == pytest.approx(0.899)


def test_lexical_divergence_identical_and_divergent():
    cfg = CleaningConfig()
    same = _pair("s", "exactly the same text", "exactly the same text")
    diverse = _pair("d", "abcdef", "bcdefg")
    retained, dropped = filter_lexical_divergence([same, diverse], cfg)
    assert [p.id for p in dropped] == ["s"]
    assert [p.id for p in retained] == ["d"]


def test_lexical_divergence_skips_missing_neutral(caplog):
    cfg = CleaningConfig()
    pair = ParallelPair(id="x", lang="en", toxic="toxic only")
    with caplog.at_level("WARNING"):
        retained, dropped = filter_lexical_divergence([pair], cfg)
    assert retained == [pair] and dropped == []


def test_dedup_identical():
    case_fold = _pair("a", "FOO", "foo")
    nfc = _pair("b", "café time", "café time")
    different = _pair("c", "one thing", "another thing")
    retained, dropped = dedup_identical([case_fold, nfc, different])
    assert [p.id for p in dropped] == ["a", "b"]
    assert [p.id for p in retained] == ["c"]


def test_hinglish_script_filter():
    devanagari = _pair("h1", "kya kar raha hai क", "theek hai", lang="hin")
    latin = _pair("h2", "kya kar raha hai", "theek hai", lang="hin")
    hindi = _pair("h3", "तुम बुरे हो",
                  "तुम अच्छे हो", lang="hi")
    retained, dropped = filter_hinglish_script([devanagari, latin, hindi])
    assert [p.id for p in dropped] == ["h1"]
    assert [p.id for p in retained] == ["h2", "h3"]


class PresetEmbedScorer:
    """Backend returning fixed 2-d vectors per text, for exact cosines."""

    def __init__(self, table):
        self.table = table

    def embed(self, texts):
        return [np.asarray(self.table[t], dtype=float) for t in texts]


def test_semantic_filter_thresholds():
    cfg = CleaningConfig()
    angle = math.acos(0.82)
    scorer = PresetEmbedScorer({
        "base": [1.0, 0.0],
        "tilt": [math.cos(angle), math.sin(angle)],  # cosine vs base = 0.82
    })
    mt = _pair("mt", "base", "tilt", source="machine_translated")
    syn = _pair("syn", "base", "tilt", source="synthetic")
    retained, dropped = filter_semantic_preservation([mt, syn], cfg, scorer)
    assert [p.id for p in dropped] == ["mt"]
    assert [p.id for p in retained] == ["syn"]


def test_semantic_filter_identical_and_human():
    cfg = CleaningConfig()
    scorer = FallbackScorer()
    identical = _pair("i", "same words here", "same words here", source="machine_translated")
    human = _pair("h", "completely toxic words", "nothing in common at all", source="human")
    retained, dropped = filter_semantic_preservation([identical, human], cfg, scorer)
    assert dropped == []
    assert [p.id for p in retained] == ["i", "h"]


def test_config_validation():
    with pytest.raises(CorpusValidationError):
        CleaningConfig(ngram_order=0)
    with pytest.raises(CorpusValidationError):
        CleaningConfig(jaccard_discard_threshold=1.2)


def test_run_pipeline_empty():
    retained, report = run_pipeline([], CleaningConfig(), FallbackScorer())
    assert retained == []
    assert report.input_count == 0
    assert all(v == 0 for v in report.drops.values())


def test_run_pipeline_fixture_drop_vector(clean10_path):
    pairs = corpus.load_pairs(clean10_path)
    retained, report = run_pipeline(pairs, CleaningConfig(), FallbackScorer())
    assert report.drops == {
        "lexical_divergence": 2,
        "dedup_identical": 0,
        "hinglish_script": 1,
        "semantic_preservation": 1,
    }
    assert report.retained_count == 6
    assert [p.id for p in retained] == ["c01", "c04", "c06", "c08", "c09", "c10"]
    # accounting: every input pair lands exactly once
    dropped = [pid for ids in report.dropped_ids.values() for pid in ids]
    assert sorted(dropped + [p.id for p in retained]) == sorted(p.id for p in pairs)


def test_run_pipeline_idempotent(clean10_path):
    pairs = corpus.load_pairs(clean10_path)
    cfg = CleaningConfig()
    scorer = FallbackScorer()
    once, _ = run_pipeline(pairs, cfg, scorer)
    twice, report = run_pipeline(once, cfg, scorer)
    assert twice == once
    assert all(v == 0 for v in report.drops.values())


def test_no_retained_hinglish_devanagari(clean10_path):
    pairs = corpus.load_pairs(clean10_path)
    retained, _ = run_pipeline(pairs, CleaningConfig(), FallbackScorer())
    for pair in retained:
        if pair.lang == "hin":
            assert not any(0x0900 <= ord(c) <= 0x097F for c in pair.toxic)
            assert pair.neutral is None or not any(
                0x0900 <= ord(c) <= 0x097F for c in pair.neutral
            )


def test_cleaning_pipeline_transformer(clean10_path):
    pairs = corpus.load_pairs(clean10_path)
    pipeline = CleaningPipeline(scorer=FallbackScorer())
    assert pipeline.get_params()["ngram_order"] == 5
    pipeline.set_params(jaccard_discard_threshold=0.95)
    retained = pipeline.fit(pairs).transform(pairs)
    assert pipeline.report_.input_count == 10
    assert all(p in pairs for p in retained)
    with pytest.raises(ValueError):
        pipeline.set_params(bogus=1)
