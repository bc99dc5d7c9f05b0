"""Rule-based toxic-span detection and the Delete/Duplicate detoxifiers.

Matching is case-insensitive on NFC-normalized text; no stemming, no
edit-distance fuzzing, no leetspeak handling.  Space-delimited scripts
match whole tokens (with leading/trailing punctuation stripped); Chinese
and Japanese match maximal substrings because those scripts lack
whitespace word boundaries.
"""

from __future__ import annotations

import re
import unicodedata

from .corpus import Lexicon, ParallelPair, ToxicSpan, normalize_term

SUBSTRING_LANGS = frozenset({"zh", "ja"})

_TOKEN_RE = re.compile(r"\S+")


def _strip_punctuation(token: str, offset: int) -> tuple[str, int, int]:
    """Strip leading/trailing punctuation; return (core, start, end) offsets
    relative to the full sentence."""
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end], offset + start, offset + end


def _normalized_chunks(text: str):
    """Split ``text`` at non-combining characters and NFC+lowercase each
    chunk, so substring matches on the normalized string can be mapped back
    to original scalar offsets."""
    starts = [i for i, ch in enumerate(text) if unicodedata.combining(ch) == 0]
    if not starts or starts[0] != 0:
        starts.insert(0, 0)
    bounds = list(zip(starts, starts[1:] + [len(text)]))
    norm_text = []
    norm_bounds = []  # (norm_start, norm_end, orig_start, orig_end)
    pos = 0
    for orig_start, orig_end in bounds:
        chunk = unicodedata.normalize("NFC", text[orig_start:orig_end]).lower()
        norm_text.append(chunk)
        norm_bounds.append((pos, pos + len(chunk), orig_start, orig_end))
        pos += len(chunk)
    return "".join(norm_text), norm_bounds


def _detect_substring(text: str, lexicon: Lexicon) -> list[ToxicSpan]:
    norm_text, norm_bounds = _normalized_chunks(text)
    chunk_starts = {nb[0]: nb[2] for nb in norm_bounds}
    chunk_ends = {nb[1]: nb[3] for nb in norm_bounds}

    candidates = []
    for term in sorted(lexicon.terms, key=lambda t: (-len(t), t)):
        at = 0
        while True:
            idx = norm_text.find(term, at)
            if idx < 0:
                break
            at = idx + 1
            # only matches aligned to normalization-stable boundaries map
            # cleanly back to the original string
            if idx in chunk_starts and (idx + len(term)) in chunk_ends:
                candidates.append(
                    ToxicSpan(chunk_starts[idx], chunk_ends[idx + len(term)], term)
                )
    accepted: list[ToxicSpan] = []
    for span in candidates:  # longest-first then leftmost, greedy non-overlap
        if all(span.end <= a.start or span.start >= a.end for a in accepted):
            accepted.append(span)
    return sorted(accepted, key=lambda s: s.start)


def _detect_tokens(text: str, lexicon: Lexicon) -> list[ToxicSpan]:
    spans = []
    for match in _TOKEN_RE.finditer(text):
        core, start, end = _strip_punctuation(match.group(), match.start())
        if not core:
            continue
        term = normalize_term(core)
        if term in lexicon:
            spans.append(ToxicSpan(start, end, term))
    return spans


def detect_spans(text: str, lexicon: Lexicon) -> list[ToxicSpan]:
    """Spans of explicit lexicon terms in ``text``, sorted, non-overlapping."""
    if lexicon.lang in SUBSTRING_LANGS:
        return _detect_substring(text, lexicon)
    return _detect_tokens(text, lexicon)


def _remove_spans(text: str, spans) -> str:
    out = []
    pos = 0
    for span in spans:
        out.append(text[pos : span.start])
        pos = span.end
    out.append(text[pos:])
    collapsed = re.sub(r"[ \t]{2,}", " ", "".join(out))
    return collapsed.strip()


def delete_detoxify(text: str, lexicon: Lexicon) -> str:
    """Delete every detected toxic span; re-scan until nothing matches, so
    removals that create new adjacencies cannot leave a term behind."""
    for _ in range(len(text) + 1):
        spans = detect_spans(text, lexicon)
        if not spans:
            return text
        text = _remove_spans(text, spans)
    return text


def duplicate_detoxify(text: str) -> str:
    """The trivial reference detoxifier: echo the input unchanged."""
    return text


def annotate_spans(pairs, lexicons: dict[str, Lexicon]) -> list[ParallelPair]:
    """Populate toxic_spans on each pair from its language's lexicon.
    Languages without a lexicon are left unannotated."""
    out = []
    for pair in pairs:
        lexicon = lexicons.get(pair.lang)
        if lexicon is None:
            out.append(pair)
        else:
            out.append(pair.with_spans(detect_spans(pair.toxic, lexicon)))
    return out
