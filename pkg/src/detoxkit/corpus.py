"""Corpus data model: parallel pairs, lexicons, score tables and their IO.

The canonical interchange format is JSONL, one pair per line:

    {"id": str, "lang": str, "toxic": str, "neutral": str|null,
     "source": "human"|"machine_translated"|"synthetic",
     "neighbor_ids": [str], "toxic_spans": [{"start": int, "end": int, "term": str}]}

Span offsets are Unicode scalar-value indices, end-exclusive.  TSV
ingestion exists only for raw two-column (toxic, neutral) sources and
generates ids as "<lang>-<zero-padded index>".
"""

from __future__ import annotations

import json
import logging
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace

from .errors import CorpusValidationError

log = logging.getLogger(__name__)

#: The 15 task languages.  Anything else is a validation error.
LANGUAGES = frozenset(
    {"en", "es", "de", "zh", "ar", "hi", "uk", "ru", "am", "it", "fr", "he", "hin", "ja", "tt"}
)

SOURCE_KINDS = frozenset({"human", "machine_translated", "synthetic"})


def validate_lang(code: str) -> str:
    if code not in LANGUAGES:
        raise CorpusValidationError(
            f"unknown language code {code!r}; expected one of {sorted(LANGUAGES)}"
        )
    return code


@dataclass(frozen=True)
class ToxicSpan:
    start: int
    end: int
    term: str

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise CorpusValidationError(
                f"invalid span offsets ({self.start}, {self.end})"
            )


@dataclass(frozen=True)
class ParallelPair:
    """One toxic-neutral sentence pair.

    ``neutral`` is None for toxicity-only records; an empty neutral string
    is not the same thing as an absent one.
    """

    id: str
    lang: str
    toxic: str
    neutral: str | None = None
    source: str = "human"
    neighbor_ids: tuple[str, ...] = ()
    toxic_spans: tuple[ToxicSpan, ...] = ()

    def __post_init__(self):
        validate_lang(self.lang)
        if self.source not in SOURCE_KINDS:
            raise CorpusValidationError(
                f"pair {self.id!r}: unknown source kind {self.source!r}"
            )
        if not self.toxic.strip():
            raise CorpusValidationError(f"pair {self.id!r}: empty toxic field")
        if len(set(self.neighbor_ids)) != len(self.neighbor_ids):
            raise CorpusValidationError(f"pair {self.id!r}: duplicate neighbor ids")
        if self.id in self.neighbor_ids:
            raise CorpusValidationError(f"pair {self.id!r}: pair is its own neighbor")
        for span in self.toxic_spans:
            if span.end > len(self.toxic):
                raise CorpusValidationError(
                    f"pair {self.id!r}: span ({span.start}, {span.end}) exceeds text"
                )

    def with_neighbors(self, neighbor_ids) -> "ParallelPair":
        return replace(self, neighbor_ids=tuple(neighbor_ids))

    def with_spans(self, spans) -> "ParallelPair":
        return replace(self, toxic_spans=tuple(spans))

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "lang": self.lang,
            "toxic": self.toxic,
            "neutral": self.neutral,
            "source": self.source,
            "neighbor_ids": list(self.neighbor_ids),
            "toxic_spans": [
                {"start": s.start, "end": s.end, "term": s.term} for s in self.toxic_spans
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "ParallelPair":
        spans = tuple(
            ToxicSpan(s["start"], s["end"], s["term"]) for s in obj.get("toxic_spans", [])
        )
        return cls(
            id=obj["id"],
            lang=obj["lang"],
            toxic=obj["toxic"],
            neutral=obj.get("neutral"),
            source=obj.get("source", "human"),
            neighbor_ids=tuple(obj.get("neighbor_ids", [])),
            toxic_spans=spans,
        )


@dataclass(frozen=True)
class Lexicon:
    """Per-language set of toxic terms, NFC-normalized and lowercased."""

    lang: str
    terms: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        validate_lang(self.lang)
        for term in self.terms:
            if not term:
                raise CorpusValidationError("lexicon contains an empty term")

    def __contains__(self, term: str) -> bool:
        return term in self.terms

    def __len__(self) -> int:
        return len(self.terms)


def normalize_term(term: str) -> str:
    return unicodedata.normalize("NFC", term).lower()


def load_pairs(path, fmt: str = "jsonl", lang: str | None = None) -> list[ParallelPair]:
    """Load and validate parallel pairs from ``path``.

    ``fmt`` is "jsonl" (canonical) or "tsv" (two columns toxic/neutral;
    requires ``lang`` and generates ids).  Malformed lines are reported
    with their 1-based line number.
    """
    if fmt == "jsonl":
        return _load_jsonl(path)
    if fmt == "tsv":
        if lang is None:
            raise CorpusValidationError("TSV ingestion requires an explicit language")
        return _load_tsv(path, lang)
    raise CorpusValidationError(f"unknown corpus format {fmt!r}")


def _load_jsonl(path) -> list[ParallelPair]:
    pairs: list[ParallelPair] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                pair = ParallelPair.from_json_dict(obj)
            except (json.JSONDecodeError, KeyError, TypeError, CorpusValidationError) as exc:
                raise CorpusValidationError(f"{path}: line {lineno}: {exc}") from exc
            if pair.id in seen:
                raise CorpusValidationError(f"{path}: line {lineno}: duplicate id {pair.id!r}")
            seen.add(pair.id)
            pairs.append(pair)
    return pairs


def _load_tsv(path, lang: str) -> list[ParallelPair]:
    validate_lang(lang)
    pairs: list[ParallelPair] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) < 2:
                raise CorpusValidationError(
                    f"{path}: line {lineno}: expected 2 tab-separated columns, got {len(cols)}"
                )
            toxic, neutral = cols[0], cols[1]
            pair_id = f"{lang}-{len(pairs):06d}"
            try:
                pairs.append(ParallelPair(id=pair_id, lang=lang, toxic=toxic, neutral=neutral))
            except CorpusValidationError as exc:
                raise CorpusValidationError(f"{path}: line {lineno}: {exc}") from exc
    return pairs


def write_pairs(pairs, path) -> int:
    """Write pairs as JSONL.  Byte-stable for identical input order."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_json_dict(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
            count += 1
    return count


def load_lexicon(path, lang: str) -> Lexicon:
    """Load a one-term-per-line lexicon; "#"-prefixed comment lines ignored."""
    terms: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            terms.add(normalize_term(line))
    if not terms:
        log.warning("lexicon %s for %s contains no usable terms", path, lang)
    return Lexicon(lang=lang, terms=frozenset(terms))


def corpus_stats(pairs) -> dict[str, int]:
    """Per-language pair counts plus a "total" entry."""
    counts = Counter(pair.lang for pair in pairs)
    stats = {lang: counts.get(lang, 0) for lang in sorted(LANGUAGES)}
    stats["total"] = sum(counts.values())
    return stats


@dataclass(frozen=True)
class ScoreTable:
    """Scores in [0,1] keyed by (system name, language)."""

    rows: dict[tuple[str, str], float]

    def __post_init__(self):
        for (system, lang), score in self.rows.items():
            validate_lang(lang)
            if not (0.0 <= score <= 1.0):
                raise CorpusValidationError(
                    f"score {score} for ({system}, {lang}) outside [0,1]"
                )

    def for_system(self, system: str) -> dict[str, float]:
        return {lang: s for (sys_, lang), s in self.rows.items() if sys_ == system}


def load_scores_tsv(path) -> dict[str, float]:
    """Two-column TSV (language, score) -> language->score map."""
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise CorpusValidationError(
                    f"{path}: line {lineno}: expected (language, score) columns"
                )
            lang = validate_lang(cols[0].strip())
            try:
                value = float(cols[1])
            except ValueError as exc:
                raise CorpusValidationError(f"{path}: line {lineno}: bad score {cols[1]!r}") from exc
            if not (0.0 <= value <= 1.0):
                raise CorpusValidationError(f"{path}: line {lineno}: score outside [0,1]")
            scores[lang] = value
    return scores
