import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detoxkit.corpus import ParallelPair
from detoxkit.embeddings import (
    FALLBACK_DIM,
    FallbackEmbedder,
    NeighborIndex,
    build_index,
    cosine,
    enrich_neighbors,
    fnv1a_64,
    hashed_ngram_vector,
    knn,
)
from detoxkit.errors import BackendError
from detoxkit.scorers import FallbackScorer


def test_fnv1a_reference_values():
    # published FNV-1a 64-bit test vectors
    assert fnv1a_64(b"") == 0xCBF29CE484222325
    assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a_64(b"foobar") == 0x85944171F73967E8


def test_embed_empty_is_zero_vector():
    vec = hashed_ngram_vector("")
    assert vec.shape == (FALLBACK_DIM,)
    assert np.all(vec == 0.0)


def test_embed_deterministic():
    a = hashed_ngram_vector("same string twice")
    b = hashed_ngram_vector("same string twice")
    assert np.array_equal(a, b)


def test_embed_short_text_unit_norm():
    vec = hashed_ngram_vector("abc")
    assert np.count_nonzero(vec) == 1
    assert np.linalg.norm(vec) == pytest.approx(1.0)


def test_embedder_transform_order_preserving():
    embedder = FallbackEmbedder()
    texts = ["one", "two", "three"]
    vecs = embedder.transform(texts)
    swapped = embedder.transform(texts[::-1])
    for a, b in zip(vecs, swapped[::-1]):
        assert np.array_equal(a, b)
    assert embedder.get_params() == {"dim": FALLBACK_DIM}


def test_cosine_examples():
    v = np.array([1.0, 2.0, 3.0])
    assert cosine(v, v) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    assert cosine(v, np.zeros(3)) == 0.0
    with pytest.raises(BackendError):
        cosine(np.zeros(2), np.zeros(3))


def test_self_cosine_is_one_for_nonempty_text():
    for text in ["a", "hello", "длинный текст", "短い"]:
        vec = hashed_ngram_vector(text)
        assert cosine(vec, vec) == pytest.approx(1.0)


def _pairs(langs):
    return [
        ParallelPair(id=f"p{i}", lang=lang, toxic=f"toxic sentence number {i}")
        for i, lang in enumerate(langs)
    ]


def test_build_index_partitions_by_language():
    scorer = FallbackScorer()
    assert build_index([], scorer) == {}
    indexes = build_index(_pairs(["en", "en", "en", "fr", "fr"]), scorer)
    assert set(indexes) == {"en", "fr"}
    assert len(indexes["en"]) == 3
    assert len(indexes["fr"]) == 2


def test_build_index_deterministic():
    scorer = FallbackScorer()
    pairs = _pairs(["en"] * 4)
    a = build_index(pairs, scorer)["en"]
    b = build_index(pairs, scorer)["en"]
    for va, vb in zip(a.vectors, b.vectors):
        assert np.array_equal(va, vb)


def test_index_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        NeighborIndex(lang="en", ids=("a", "a"), vectors=(np.zeros(2), np.zeros(2)))


def test_knn_exact_query_ranks_first():
    scorer = FallbackScorer()
    pairs = _pairs(["en"] * 5)
    index = build_index(pairs, scorer)["en"]
    query = index.vectors[2]
    assert knn(index, query, 1)[0] == "p2"


def test_knn_clamps_k():
    scorer = FallbackScorer()
    index = build_index(_pairs(["en"] * 3), scorer)["en"]
    assert len(knn(index, index.vectors[0], 10)) == 3
    assert len(knn(index, index.vectors[0], 10, exclude="p0")) == 2


def test_knn_rejects_bad_k():
    index = NeighborIndex(lang="en", ids=("a",), vectors=(np.ones(2),))
    with pytest.raises(ValueError):
        knn(index, np.ones(2), 0)


def brute_force_knn(index, query, k, exclude=None):
    scored = sorted(
        ((cosine(query, v), pid) for pid, v in zip(index.ids, index.vectors) if pid != exclude),
        key=lambda sv: (-sv[0], sv[1]),
    )
    return [pid for _, pid in scored[:k]]


def test_knn_matches_brute_force_oracle():
    rng = random.Random(7)
    ids = tuple(f"v{i:03d}" for i in range(100))
    vectors = tuple(
        np.array([rng.gauss(0, 1) for _ in range(8)]) for _ in ids
    )
    index = NeighborIndex(lang="en", ids=ids, vectors=vectors)
    for _ in range(20):
        query = np.array([rng.gauss(0, 1) for _ in range(8)])
        exclude = rng.choice(ids)
        got = knn(index, query, 3, exclude=exclude)
        assert got == brute_force_knn(index, query, 3, exclude=exclude)
        assert exclude not in got


def test_enrich_single_pair_per_language():
    scorer = FallbackScorer()
    pairs = _pairs(["en", "fr", "de"])
    enriched = enrich_neighbors(pairs, scorer)
    assert all(p.neighbor_ids == () for p in enriched)


def test_enrich_identical_sentences():
    scorer = FallbackScorer()
    pairs = [
        ParallelPair(id=f"p{i}", lang="en", toxic="the same toxic line") for i in range(4)
    ]
    enriched = enrich_neighbors(pairs, scorer, k=3)
    for pair in enriched:
        assert set(pair.neighbor_ids) == {p.id for p in pairs} - {pair.id}


def test_enrich_matches_per_pair_oracle():
    rng = random.Random(13)
    langs = ["en", "fr"]
    pairs = [
        ParallelPair(
            id=f"p{i:02d}",
            lang=rng.choice(langs),
            toxic=" ".join(rng.choice("abcdefgh") for _ in range(rng.randint(3, 12))),
        )
        for i in range(50)
    ]
    scorer = FallbackScorer()
    enriched = enrich_neighbors(pairs, scorer, k=3)
    indexes = build_index(pairs, scorer)
    for pair in enriched:
        index = indexes[pair.lang]
        vec = index.vectors[index.ids.index(pair.id)]
        assert list(pair.neighbor_ids) == brute_force_knn(index, vec, 3, exclude=pair.id)


@settings(max_examples=50, deadline=None)
@given(st.text(min_size=1, max_size=30))
def test_fallback_scorer_embed_self_similarity(text):
    scorer = FallbackScorer()
    vecs = scorer.embed([text, text])
    # exactly 1.0 for any non-empty text, 0.0 only for the zero vector
    assert cosine(vecs[0], vecs[1]) in (0.0, pytest.approx(1.0))


def test_fallback_scorer_rejects_empty_batch():
    with pytest.raises(BackendError):
        FallbackScorer().embed([])
