"""Scoring backends.

``StubBackend`` is fully deterministic and needs no model downloads; it
exists so protocol conformance can be tested anywhere.  ``ModelBackend``
is the slot for real models loaded from a models directory; until such
models are present it reports itself as not loaded and the service
answers 503.
"""

from __future__ import annotations

import math
import unicodedata

STUB_DIM = 768

# tiny built-in list so the stub's toxicity endpoint is directional:
# injecting one of these words into a sentence lowers its score
_STUB_TOXIC_WORDS = frozenset({
    "idiot", "stupid", "moron", "dumb", "jerk", "trash",
})

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_FNV_MASK = (1 << 64) - 1


def _fnv1a(data: bytes) -> int:
    value = _FNV_OFFSET
    for byte in data:
        value = ((value ^ byte) * _FNV_PRIME) & _FNV_MASK
    return value


class ModelNotLoaded(RuntimeError):
    pass


class StubBackend:
    """Deterministic constant-weight scorer for protocol tests."""

    dim = STUB_DIM
    loaded = True
    model_ids = {"embed": "stub", "toxicity": "stub", "fluency": "stub", "judge": "stub"}

    def embed(self, texts):
        return [self._vector(t) for t in texts]

    def _vector(self, text):
        text = unicodedata.normalize("NFC", text).lower()
        counts = [0.0] * self.dim
        grams = (
            [text[i : i + 3] for i in range(len(text) - 2)]
            if len(text) >= 3 else ([text] if text else [])
        )
        for gram in grams:
            counts[_fnv1a(gram.encode("utf-8")) % self.dim] += 1.0
        norm = math.sqrt(sum(c * c for c in counts))
        if norm == 0.0:
            return counts
        return [c / norm for c in counts]

    def non_toxicity(self, texts):
        probs = []
        for text in texts:
            tokens = [t.strip(".,!?;:\"'").lower() for t in text.split()]
            tokens = [t for t in tokens if t]
            if not tokens:
                probs.append(1.0)
                continue
            matched = sum(1 for t in tokens if t in _STUB_TOXIC_WORDS)
            probs.append(max(0.0, 1.0 - matched / len(tokens)))
        return probs

    def fluency(self, inputs, golds, gens):
        # bigram overlap with the gold rewrite: identical text scores 1.0
        # and any reordering can only lose adjacencies
        scores = []
        for gold, gen in zip(golds, gens):
            scores.append(0.5 + 0.5 * self._bigram_overlap(gold, gen))
        return scores

    @staticmethod
    def _bigram_overlap(a, b):
        def bigrams(text):
            tokens = text.lower().split()
            return {(x, y) for x, y in zip(tokens, tokens[1:])} or {(text.lower(), "")}

        ba, bb = bigrams(a), bigrams(b)
        return len(ba & bb) / len(ba | bb)

    def judge(self, inputs, golds, gens):
        # constant outputs by design: protocol tests need stability, not insight
        n = len(gens)
        return [0.5] * n, [0.5] * n


class ModelBackend:
    """Placeholder for real encoder/classifier models.

    Loading is attempted lazily from ``models_dir``; with no models on
    disk every scoring call raises ``ModelNotLoaded`` and the endpoints
    answer 503.
    """

    dim = STUB_DIM
    model_ids = {}

    def __init__(self, models_dir=None):
        self.models_dir = models_dir
        self.loaded = False

    def _unavailable(self):
        raise ModelNotLoaded(
            f"no scoring models loaded (models dir: {self.models_dir or 'unset'})"
        )

    def embed(self, texts):
        self._unavailable()

    def non_toxicity(self, texts):
        self._unavailable()

    def fluency(self, inputs, golds, gens):
        self._unavailable()

    def judge(self, inputs, golds, gens):
        self._unavailable()
