"""Pluggable scorer backends.

A scorer exposes four capabilities behind one object:

  * embed(texts) -> list of vectors
  * non_toxicity(texts, lang=None) -> probabilities in [0,1]
  * fluency(inputs, golds, gens) -> scores in [0,1]
  * judge(inputs, golds, gens) -> (sim, sta) lists in [0,1]

``FallbackScorer`` is a deterministic offline stand-in: hashed-n-gram
embeddings, lexicon-based non-toxicity (1 - toxic token share), constant
fluency 1.0, no judge.  ``RemoteScorer`` speaks the HTTP wire protocol of
the scorer bridge service (GET /manifest, POST /embed, /toxicity,
/fluency, /judge).
"""

from __future__ import annotations

import re

import requests

from .corpus import Lexicon, normalize_term
from .embeddings import FALLBACK_DIM, hashed_ngram_vector
from .errors import BackendError

_WORD_RE = re.compile(r"\S+")


class FallbackScorer:
    kind = "fallback"
    capabilities = frozenset({"embed", "toxicity", "fluency"})

    def __init__(self, lexicons: dict[str, Lexicon] | None = None, dim: int = FALLBACK_DIM):
        self.lexicons = lexicons or {}
        self.dim = dim

    def embed(self, texts):
        if not texts:
            raise BackendError("embed called with an empty batch")
        return [hashed_ngram_vector(t, self.dim) for t in texts]

    def non_toxicity(self, texts, lang=None):
        lexicon = self.lexicons.get(lang) if lang else None
        terms = lexicon.terms if lexicon is not None else frozenset()
        probs = []
        for text in texts:
            tokens = [normalize_term(t.strip(".,!?;:\"'")) for t in _WORD_RE.findall(text)]
            tokens = [t for t in tokens if t]
            if not tokens or not terms:
                probs.append(1.0)
                continue
            matched = sum(1 for t in tokens if t in terms)
            probs.append(max(0.0, 1.0 - matched / len(tokens)))
        return probs

    def fluency(self, inputs, golds, gens):
        if not (len(inputs) == len(golds) == len(gens)):
            raise BackendError("fluency called with misaligned batches")
        return [1.0] * len(gens)

    def judge(self, inputs, golds, gens):
        raise BackendError("fallback scorer has no judge capability")


class RemoteScorer:
    """Client for the scorer bridge wire protocol."""

    kind = "remote"

    def __init__(self, endpoint: str, timeout: float = 30.0, required=("embed",)):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        manifest = self._get("/manifest")
        self.capabilities = frozenset(manifest.get("capabilities", []))
        self.dim = int(manifest.get("dim", 0))
        missing = set(required) - self.capabilities
        if missing:
            raise BackendError(
                f"scorer at {self.endpoint} lacks required capabilities: {sorted(missing)}"
            )

    def _get(self, path):
        try:
            resp = requests.get(self.endpoint + path, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except requests.RequestException as exc:
            raise BackendError(f"scorer request {path} to {self.endpoint} failed: {exc}") from exc

    def _post(self, path, payload):
        try:
            resp = requests.post(self.endpoint + path, json=payload, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except requests.RequestException as exc:
            raise BackendError(f"scorer request {path} to {self.endpoint} failed: {exc}") from exc

    def embed(self, texts):
        import numpy as np

        vectors = self._post("/embed", {"texts": list(texts)})["vectors"]
        return [np.asarray(v, dtype=np.float64) for v in vectors]

    def non_toxicity(self, texts, lang=None):
        return self._post("/toxicity", {"texts": list(texts)})["non_toxicity"]

    def fluency(self, inputs, golds, gens):
        return self._post(
            "/fluency", {"inputs": list(inputs), "golds": list(golds), "gens": list(gens)}
        )["scores"]

    def judge(self, inputs, golds, gens):
        out = self._post(
            "/judge", {"inputs": list(inputs), "golds": list(golds), "gens": list(gens)}
        )
        return out["sim"], out["sta"]


def get_scorer(spec: str, lexicons=None, required=("embed",)):
    """"fallback" or an http(s) endpoint URL."""
    if spec == "fallback":
        return FallbackScorer(lexicons=lexicons)
    if spec.startswith("http://") or spec.startswith("https://"):
        return RemoteScorer(spec, required=required)
    raise BackendError(f"unknown scorer spec {spec!r}; expected 'fallback' or a URL")
