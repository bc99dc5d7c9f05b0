"""Deterministic fallback sentence embedder, cosine, and exact kNN.

The fallback embedder hashes character 3-grams (FNV-1a, 64-bit) of the
NFC-lowercased text into a 256-bin term-frequency vector and L2-normalizes
it.  It is language-agnostic and dependency-free, standing in for a real
multilingual encoder so the whole test suite runs offline.

Retrieval is an exact linear scan; corpus sizes here never justify an
approximate index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cleaning import normalize
from .errors import BackendError

FALLBACK_DIM = 256

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _gram_stream(text: str, n: int = 3):
    """Multiset of character n-grams; texts shorter than n contribute the
    whole text as a single gram, the empty text contributes nothing."""
    if not text:
        return
    if len(text) < n:
        yield text
        return
    for i in range(len(text) - n + 1):
        yield text[i : i + n]


def hashed_ngram_vector(text: str, dim: int = FALLBACK_DIM) -> np.ndarray:
    vec = np.zeros(dim, dtype=np.float64)
    for gram in _gram_stream(normalize(text)):
        vec[fnv1a_64(gram.encode("utf-8")) % dim] += 1.0
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


class FallbackEmbedder:
    """Offline hashed-3-gram embedder with a transform-style interface."""

    def __init__(self, dim: int = FALLBACK_DIM):
        self.dim = dim

    def get_params(self, deep=True):
        return {"dim": self.dim}

    def set_params(self, **params):
        for key, value in params.items():
            if key != "dim":
                raise ValueError(f"unknown parameter {key!r}")
            self.dim = value
        return self

    def fit(self, texts=None, y=None):
        return self

    def transform(self, texts) -> list[np.ndarray]:
        return [hashed_ngram_vector(t, self.dim) for t in texts]


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Standard cosine similarity; 0.0 when either vector has zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise BackendError(f"embedding dimension mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


@dataclass(frozen=True)
class NeighborIndex:
    """Per-language list of (pair id, embedding) with unique ids."""

    lang: str
    ids: tuple[str, ...]
    vectors: tuple  # aligned with ids

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise ValueError(f"duplicate pair ids in {self.lang} index")

    def __len__(self) -> int:
        return len(self.ids)


def build_index(pairs, scorer) -> dict[str, NeighborIndex]:
    """Embed every pair's toxic side and partition the index by language."""
    pairs = list(pairs)
    if not pairs:
        return {}
    vectors = scorer.embed([p.toxic for p in pairs])
    by_lang: dict[str, tuple[list, list]] = {}
    for pair, vec in zip(pairs, vectors):
        ids, vecs = by_lang.setdefault(pair.lang, ([], []))
        ids.append(pair.id)
        vecs.append(vec)
    return {
        lang: NeighborIndex(lang=lang, ids=tuple(ids), vectors=tuple(vecs))
        for lang, (ids, vecs) in by_lang.items()
    }


def knn(index: NeighborIndex, query: np.ndarray, k: int, exclude: str | None = None) -> list[str]:
    """Up to k ids sorted by descending cosine, ties broken by ascending id;
    ``exclude`` is never returned."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scored = [
        (cosine(query, vec), pid)
        for pid, vec in zip(index.ids, index.vectors)
        if pid != exclude
    ]
    scored.sort(key=lambda sv: (-sv[0], sv[1]))
    return [pid for _, pid in scored[:k]]


def enrich_neighbors(pairs, scorer, k: int = 3) -> list["ParallelPair"]:
    """Populate each pair's neighbor_ids with its k nearest same-language
    neighbors by toxic-side embedding."""
    pairs = list(pairs)
    indexes = build_index(pairs, scorer)
    out = []
    for pair in pairs:
        index = indexes[pair.lang]
        vec = index.vectors[index.ids.index(pair.id)]
        out.append(pair.with_neighbors(knn(index, vec, k, exclude=pair.id)))
    return out
