"""Four-step cleaning pipeline for candidate toxic-neutral pairs.

Order is fixed: (1) lexical-divergence filter on character 5-gram Jaccard,
(2) removal of pairs identical after NFC + lowercasing, (3) Devanagari
script filter for Hinglish, (4) semantic-preservation filter on embedding
cosine.  Step 4's threshold depends on the pair's source: machine
translated pairs must exceed the strict threshold, synthetic pairs the
looser one, human pairs pass unconditionally.

Pairs without a neutral side cannot be compared side-to-side and bypass
steps 1, 2 and 4.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass, field

from .corpus import ParallelPair
from .errors import CorpusValidationError

log = logging.getLogger(__name__)

STEP_NAMES = ("lexical_divergence", "dedup_identical", "hinglish_script", "semantic_preservation")

DEVANAGARI_LO = 0x0900
DEVANAGARI_HI = 0x097F


def normalize(text: str) -> str:
    """NFC-normalize and lowercase; the canonical form used everywhere."""
    return unicodedata.normalize("NFC", text).lower()


def char_ngrams(text: str, n: int) -> set[str]:
    """Character n-grams of the normalized text, whitespace included.

    A normalized text shorter than ``n`` yields the singleton set holding
    the whole text; empty text yields the empty set.
    """
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    text = normalize(text)
    if not text:
        return set()
    if len(text) < n:
        return {text}
    return {text[i : i + n] for i in range(len(text) - n + 1)}


def jaccard(a: set, b: set) -> float:
    """|a ∩ b| / |a ∪ b|, with the both-empty case defined as 1.0."""
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def has_devanagari(text: str) -> bool:
    return any(DEVANAGARI_LO <= ord(ch) <= DEVANAGARI_HI for ch in text)


@dataclass(frozen=True)
class CleaningConfig:
    ngram_order: int = 5
    jaccard_discard_threshold: float = 0.90
    sem_threshold_mt: float = 0.85
    sem_threshold_synthetic: float = 0.80

    def __post_init__(self):
        if self.ngram_order < 1:
            raise CorpusValidationError("ngram_order must be >= 1")
        for name in ("jaccard_discard_threshold", "sem_threshold_mt", "sem_threshold_synthetic"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise CorpusValidationError(f"{name} must lie in [0,1], got {value}")


@dataclass
class CleaningReport:
    input_count: int = 0
    retained_count: int = 0
    drops: dict[str, int] = field(default_factory=lambda: {name: 0 for name in STEP_NAMES})
    dropped_ids: dict[str, list[str]] = field(
        default_factory=lambda: {name: [] for name in STEP_NAMES}
    )

    def record_drop(self, step: str, pair_id: str):
        self.drops[step] += 1
        self.dropped_ids[step].append(pair_id)

    def to_json_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "retained_count": self.retained_count,
            "drops": dict(self.drops),
            "dropped_ids": {k: list(v) for k, v in self.dropped_ids.items()},
        }


def filter_lexical_divergence(pairs, cfg: CleaningConfig):
    """Drop pairs whose sides are lexically near-identical (J >= threshold)."""
    retained, dropped = [], []
    for pair in pairs:
        if pair.neutral is None:
            log.warning("pair %s has no neutral side; skipping lexical-divergence check", pair.id)
            retained.append(pair)
            continue
        j = jaccard(
            char_ngrams(pair.toxic, cfg.ngram_order),
            char_ngrams(pair.neutral, cfg.ngram_order),
        )
        if j >= cfg.jaccard_discard_threshold:
            dropped.append(pair)
        else:
            retained.append(pair)
    return retained, dropped


def dedup_identical(pairs):
    """Drop pairs whose sides are equal after NFC + lowercasing."""
    retained, dropped = [], []
    for pair in pairs:
        if pair.neutral is not None and normalize(pair.toxic) == normalize(pair.neutral):
            dropped.append(pair)
        else:
            retained.append(pair)
    return retained, dropped


def filter_hinglish_script(pairs):
    """Drop Hinglish pairs containing any Devanagari scalar value."""
    retained, dropped = [], []
    for pair in pairs:
        if pair.lang == "hin" and (
            has_devanagari(pair.toxic) or (pair.neutral is not None and has_devanagari(pair.neutral))
        ):
            dropped.append(pair)
        else:
            retained.append(pair)
    return retained, dropped


def filter_semantic_preservation(pairs, cfg: CleaningConfig, scorer):
    """Retain non-human pairs only when both sides stay semantically close.

    The similarity is cosine over the scorer's sentence embeddings; the
    boundary is strict (retain at > threshold).
    """
    from .embeddings import cosine  # local import to avoid a cycle

    comparable = [p for p in pairs if p.source != "human" and p.neutral is not None]
    retained, dropped = [], []
    if comparable:
        texts = []
        for pair in comparable:
            texts.extend([pair.toxic, pair.neutral])
        vectors = scorer.embed(texts)
        sims = {
            pair.id: cosine(vectors[2 * i], vectors[2 * i + 1])
            for i, pair in enumerate(comparable)
        }
    else:
        sims = {}
    for pair in pairs:
        if pair.id not in sims:
            retained.append(pair)
            continue
        threshold = (
            cfg.sem_threshold_mt
            if pair.source == "machine_translated"
            else cfg.sem_threshold_synthetic
        )
        if sims[pair.id] > threshold:
            retained.append(pair)
        else:
            dropped.append(pair)
    return retained, dropped


def run_pipeline(pairs, cfg: CleaningConfig, scorer):
    """Apply the four steps in order; every input pair lands in exactly one
    of retained or one step's dropped list."""
    pairs = list(pairs)
    report = CleaningReport(input_count=len(pairs))

    steps = [
        (STEP_NAMES[0], lambda ps: filter_lexical_divergence(ps, cfg)),
        (STEP_NAMES[1], dedup_identical),
        (STEP_NAMES[2], filter_hinglish_script),
        (STEP_NAMES[3], lambda ps: filter_semantic_preservation(ps, cfg, scorer)),
    ]
    current = pairs
    for name, step in steps:
        current, dropped = step(current)
        for pair in dropped:
            report.record_drop(name, pair.id)
    report.retained_count = len(current)
    return current, report


class CleaningPipeline:
    """Transformer-style wrapper around :func:`run_pipeline`.

    ``transform`` returns the retained pairs; the report for the last run
    is kept on ``report_``.
    """

    def __init__(self, scorer, ngram_order=5, jaccard_discard_threshold=0.90,
                 sem_threshold_mt=0.85, sem_threshold_synthetic=0.80):
        self.scorer = scorer
        self.ngram_order = ngram_order
        self.jaccard_discard_threshold = jaccard_discard_threshold
        self.sem_threshold_mt = sem_threshold_mt
        self.sem_threshold_synthetic = sem_threshold_synthetic

    def get_params(self, deep=True):
        return {
            "scorer": self.scorer,
            "ngram_order": self.ngram_order,
            "jaccard_discard_threshold": self.jaccard_discard_threshold,
            "sem_threshold_mt": self.sem_threshold_mt,
            "sem_threshold_synthetic": self.sem_threshold_synthetic,
        }

    def set_params(self, **params):
        for key, value in params.items():
            if key not in self.get_params():
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def _config(self) -> CleaningConfig:
        return CleaningConfig(
            ngram_order=self.ngram_order,
            jaccard_discard_threshold=self.jaccard_discard_threshold,
            sem_threshold_mt=self.sem_threshold_mt,
            sem_threshold_synthetic=self.sem_threshold_synthetic,
        )

    def fit(self, pairs=None, y=None):
        return self

    def transform(self, pairs) -> list[ParallelPair]:
        retained, self.report_ = run_pipeline(pairs, self._config(), self.scorer)
        return retained
