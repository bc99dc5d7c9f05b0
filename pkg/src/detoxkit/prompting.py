"""Prompt construction, model-output parsing, training export and
best-of-n selection.

A prompt is rendered as a three-turn chat: the system message (the
language's instruction template plus the few-shot block), the user turn
carrying the language tag, the toxic sentence and its span annotations,
and, for training export only, the assistant turn with the target JSON.
System and user tokens are loss-masked; only the assistant span is
trained on.

The model's reply is expected to be a JSON object with a
"detoxified_text" field (code-fence wrapping tolerated); anything
unparseable falls back to the raw text with a diagnostic flag, never an
exception.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from importlib import resources

import requests

from .cleaning import char_ngrams, jaccard, normalize
from .corpus import ParallelPair, ToxicSpan, validate_lang
from .embeddings import knn
from .errors import BackendError, TemplateNotFoundError
from .metrics import (
    MetricWeights,
    joint,
    sim,
    sim_reference_free,
    sta,
    sta_reference_free,
)
from .spans import delete_detoxify

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChatTurn:
    role: str
    content: str
    loss_masked: bool

    def __post_init__(self):
        if self.role not in {"system", "user", "assistant"}:
            raise ValueError(f"unknown chat role {self.role!r}")
        expected = self.role != "assistant"
        if self.loss_masked != expected:
            raise ValueError(
                f"{self.role} turns must have loss_masked={expected}"
            )

    def to_json_dict(self) -> dict:
        return {"role": self.role, "content": self.content, "loss_masked": self.loss_masked}


def turn(role: str, content: str) -> ChatTurn:
    return ChatTurn(role=role, content=content, loss_masked=role != "assistant")


@dataclass(frozen=True)
class PromptBundle:
    lang: str
    system_prompt: str
    fewshot: tuple[tuple[str, str], ...]
    target_toxic: str
    toxic_spans: tuple[ToxicSpan, ...] = ()


@dataclass(frozen=True)
class CandidateSet:
    pair_id: str
    candidates: tuple[str, ...]
    scores: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("candidate set must hold at least one candidate")
        if self.scores is not None and len(self.scores) != len(self.candidates):
            raise ValueError("scores must align with candidates")


def load_templates(directory=None) -> dict[str, str]:
    """Load the 15 system-prompt templates, from ``directory`` if given,
    else from the package data files."""
    templates: dict[str, str] = {}
    if directory is not None:
        import pathlib

        for path in pathlib.Path(directory).glob("*.txt"):
            templates[path.stem] = path.read_text(encoding="utf-8")
    else:
        root = resources.files("detoxkit").joinpath("templates")
        for entry in root.iterdir():
            if entry.name.endswith(".txt"):
                templates[entry.name[:-4]] = entry.read_text(encoding="utf-8")
    return templates


def build_system_prompt(lang: str, templates: dict[str, str]) -> str:
    validate_lang(lang)
    if lang not in templates or not templates[lang].strip():
        raise TemplateNotFoundError(f"no system-prompt template for language {lang!r}")
    return templates[lang]


def build_prompt(pair: ParallelPair, corpus_by_id: dict[str, ParallelPair],
                 index=None, k: int = 3, templates: dict[str, str] | None = None) -> PromptBundle:
    """Assemble the bundle for one pair.

    Neighbor order comes from the index when available, else from the
    pair's stored neighbor_ids.  Neighbors lacking a neutral side are
    skipped and the next-nearest substituted.
    """
    templates = templates if templates is not None else load_templates()
    if index is not None and pair.id in index.ids and len(index) > 1:
        vec = index.vectors[index.ids.index(pair.id)]
        ordered = knn(index, vec, len(index), exclude=pair.id)
    else:
        ordered = list(pair.neighbor_ids)
    fewshot: list[tuple[str, str]] = []
    for nid in ordered:
        if len(fewshot) >= k:
            break
        neighbor = corpus_by_id.get(nid)
        if neighbor is None or neighbor.neutral is None:
            continue
        fewshot.append((neighbor.toxic, neighbor.neutral))
    return PromptBundle(
        lang=pair.lang,
        system_prompt=build_system_prompt(pair.lang, templates),
        fewshot=tuple(fewshot),
        target_toxic=pair.toxic,
        toxic_spans=tuple(pair.toxic_spans),
    )


def _fewshot_block(fewshot) -> str:
    lines = []
    for toxic, neutral in fewshot:
        lines.append(f"Toxic: {toxic}")
        lines.append(f"Neutral: {neutral}")
    return "\n".join(lines)


def render_chat(bundle: PromptBundle, target_neutral: str | None = None) -> list[ChatTurn]:
    """Two turns for inference; three (with the assistant target JSON)
    when ``target_neutral`` is supplied for training export."""
    system = bundle.system_prompt
    if bundle.fewshot:
        system = system + "\n\nExamples:\n" + _fewshot_block(bundle.fewshot)
    user_lines = [f"[{bundle.lang}] {bundle.target_toxic}"]
    if bundle.toxic_spans:
        annotated = ", ".join(
            f"{span.term} ({span.start}-{span.end})" for span in bundle.toxic_spans
        )
        user_lines.append(f"Toxic spans: {annotated}")
    turns = [turn("system", system), turn("user", "\n".join(user_lines))]
    if target_neutral is not None:
        payload = {
            "toxic_elements": [span.term for span in bundle.toxic_spans],
            "meaning": "",
            "detoxified_text": target_neutral,
        }
        turns.append(turn("assistant", json.dumps(payload, ensure_ascii=False)))
    return turns


_FENCE_RE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def _first_json_object(text: str):
    """First balanced {...} block that parses as JSON, or None."""
    start = text.find("{")
    while start >= 0:
        depth = 0
        in_string = False
        escape = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escape:
                    escape = False
                elif ch == "\\":
                    escape = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        return json.loads(text[start : i + 1])
                    except json.JSONDecodeError:
                        break
        start = text.find("{", start + 1)
    return None


def parse_model_output(raw: str) -> tuple[str, dict]:
    """Extract "detoxified_text" from the model reply; total function."""
    text = raw
    fence = _FENCE_RE.search(raw)
    if fence:
        text = fence.group(1)
    obj = _first_json_object(text)
    if isinstance(obj, dict) and isinstance(obj.get("detoxified_text"), str):
        return obj["detoxified_text"], {"fallback": False}
    return raw.strip(), {"fallback": True}


def export_training_instances(pairs, corpus_by_id, index_by_lang=None,
                              templates=None, k: int = 3,
                              overlap_max: float = 0.9) -> list[list[ChatTurn]]:
    """Three-turn instances for fine-tuning, with the high-overlap and
    identical-sides pairs filtered out."""
    templates = templates if templates is not None else load_templates()
    instances = []
    for pair in pairs:
        if pair.neutral is None:
            continue
        if normalize(pair.toxic) == normalize(pair.neutral):
            continue
        overlap = jaccard(char_ngrams(pair.toxic, 5), char_ngrams(pair.neutral, 5))
        if overlap > overlap_max:
            continue
        index = index_by_lang.get(pair.lang) if index_by_lang else None
        bundle = build_prompt(pair, corpus_by_id, index=index, k=k, templates=templates)
        instances.append(render_chat(bundle, target_neutral=pair.neutral))
    return instances


class EchoGenerator:
    """Offline stub: returns the toxic input unchanged, n times."""

    def generate(self, system, user, n, lang, target=None):
        text = target if target is not None else user
        return [json.dumps({"detoxified_text": text}, ensure_ascii=False)] * n


class DeleteGenerator:
    """Offline stub wrapping the Delete detoxifier."""

    def __init__(self, lexicons):
        self.lexicons = lexicons

    def generate(self, system, user, n, lang, target=None):
        text = target if target is not None else user
        lexicon = self.lexicons.get(lang)
        detoxified = delete_detoxify(text, lexicon) if lexicon is not None else text
        return [json.dumps({"detoxified_text": detoxified}, ensure_ascii=False)] * n


class HttpGenerator:
    """Chat-completion backend over the generation wire protocol."""

    def __init__(self, endpoint: str, timeout: float = 60.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def generate(self, system, user, n, lang, target=None):
        payload = {"system": system, "user": user, "n": n, "lang": lang}
        try:
            resp = requests.post(self.endpoint, json=payload, timeout=self.timeout)
            resp.raise_for_status()
            return list(resp.json()["candidates"])
        except requests.RequestException as exc:
            raise BackendError(f"generator at {self.endpoint} failed: {exc}") from exc


def get_generator(spec: str, lexicons=None):
    if spec == "echo":
        return EchoGenerator()
    if spec == "delete":
        return DeleteGenerator(lexicons or {})
    if spec.startswith("http://") or spec.startswith("https://"):
        return HttpGenerator(spec)
    raise BackendError(f"unknown generator spec {spec!r}")


def generate_candidates(bundle: PromptBundle, generator, n: int = 3,
                        pair_id: str = "") -> CandidateSet:
    turns = render_chat(bundle)
    raws = generator.generate(
        system=turns[0].content,
        user=turns[1].content,
        n=n,
        lang=bundle.lang,
        target=bundle.target_toxic,
    )
    if len(raws) < n:
        log.warning("generator returned %d of %d requested candidates", len(raws), n)
    candidates = tuple(parse_model_output(raw)[0] for raw in raws)
    return CandidateSet(pair_id=pair_id, candidates=candidates)


def select_best(candidates: CandidateSet, input_toxic: str, backend,
                output_gold: str | None = None, lang: str | None = None,
                weights: MetricWeights = MetricWeights()) -> tuple[str, int, list[float]]:
    """Argmax of the joint score over candidates; ties keep the lowest
    index.

    With a gold reference, J uses the reference-based SIM and STA (the
    gold's non-toxicity serves as the single reference probability);
    without one, SIM is input-only and STA reference-free.
    """
    texts = list(candidates.candidates)
    p_gens = backend.non_toxicity(texts, lang=lang)
    fluencies = backend.fluency([input_toxic] * len(texts),
                                [output_gold or ""] * len(texts), texts)
    if output_gold is not None:
        p_ref = backend.non_toxicity([output_gold], lang=lang)[0]
    scores = []
    for text, p_gen, fl in zip(texts, p_gens, fluencies):
        if output_gold is not None:
            sim_value = sim(backend, input_toxic, output_gold, text, weights)
            sta_value = sta(p_gen, [p_ref])
        else:
            sim_value = sim_reference_free(backend, input_toxic, text)
            sta_value = sta_reference_free(p_gen)
        scores.append(joint(fl, sim_value, sta_value))
    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    return texts[best], best, scores
