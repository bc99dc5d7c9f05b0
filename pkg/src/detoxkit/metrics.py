"""Shared-task evaluation metrics: STA, SIM and the joint score J.

STA averages the generated sentence's non-toxicity probability with its
rank against the human references:

    STA = (p_gen + (1/N) * sum_i 1[p_gen <= p_ref_i]) / 2

SIM is the weighted cosine similarity against the toxic input and the
gold rewrite (weights 0.4 / 0.6 by default), and J is the product
fluency * SIM * STA.  Raw cosines can be negative, so they are clamped to
[0,1] before weighting; every metric here stays inside [0,1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .embeddings import cosine
from .errors import DetoxkitError


class MetricInputError(DetoxkitError):
    """Metric called with inputs outside its contract."""


@dataclass(frozen=True)
class MetricWeights:
    w_input: float = 0.4
    w_gold: float = 0.6

    def __post_init__(self):
        if self.w_input < 0 or self.w_gold < 0:
            raise MetricInputError("similarity weights must be non-negative")
        if abs(self.w_input + self.w_gold - 1.0) > 1e-9:
            raise MetricInputError(
                f"similarity weights must sum to 1, got {self.w_input + self.w_gold}"
            )


@dataclass(frozen=True)
class MetricInputs:
    pair_id: str
    lang: str
    input_toxic: str
    output_gen: str
    output_gold: str | None = None
    p_gen: float = 1.0
    p_refs: tuple[float, ...] = ()
    fluency: float = 1.0


@dataclass(frozen=True)
class MetricRow:
    pair_id: str
    lang: str
    sta: float
    sim: float
    fluency: float
    joint: float

    def to_json_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "lang": self.lang,
            "sta": self.sta,
            "sim": self.sim,
            "fluency": self.fluency,
            "joint": self.joint,
        }


def sta(p_gen: float, p_refs) -> float:
    """Reference-based style transfer accuracy, implemented verbatim."""
    p_refs = list(p_refs)
    if not p_refs:
        raise MetricInputError(
            "sta requires at least one reference; use sta_reference_free instead"
        )
    _check_unit("p_gen", p_gen)
    for p in p_refs:
        _check_unit("p_ref", p)
    rank = sum(1 for p in p_refs if p_gen <= p) / len(p_refs)
    return (p_gen + rank) / 2.0


def sta_reference_free(p_gen: float) -> float:
    """Degenerate N=0 mode for unlabeled inference: just p_gen."""
    _check_unit("p_gen", p_gen)
    return p_gen


def _check_unit(name: str, value: float):
    if not (0.0 <= value <= 1.0):
        raise MetricInputError(f"{name} must lie in [0,1], got {value}")


def clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def weighted_sim(cos_input: float, cos_gold: float, weights: MetricWeights) -> float:
    """Weighted sum of the two cosines, each clamped to [0,1] first."""
    return weights.w_input * clamp01(cos_input) + weights.w_gold * clamp01(cos_gold)


def sim(backend, input_toxic: str, output_gold, output_gen: str,
        weights: MetricWeights = MetricWeights(), average_refs: bool = False) -> float:
    """Content preservation against the input and the gold rewrite.

    ``output_gold`` may be a list of references; by default the first one
    is used, with ``average_refs`` switching to the mean gold cosine.
    """
    golds = output_gold if isinstance(output_gold, (list, tuple)) else [output_gold]
    if not golds:
        raise MetricInputError("sim requires at least one gold reference")
    vectors = backend.embed([input_toxic, output_gen] + list(golds))
    cos_input = cosine(vectors[0], vectors[1])
    gold_cosines = [cosine(g, vectors[1]) for g in vectors[2:]]
    cos_gold = (sum(gold_cosines) / len(gold_cosines)) if average_refs else gold_cosines[0]
    return weighted_sim(cos_input, cos_gold, weights)


def sim_reference_free(backend, input_toxic: str, output_gen: str) -> float:
    """Input-only similarity (weight 1.0 on the input cosine)."""
    vectors = backend.embed([input_toxic, output_gen])
    return clamp01(cosine(vectors[0], vectors[1]))


def joint(fluency: float, sim_value: float, sta_value: float) -> float:
    """J = fluency * SIM * STA."""
    for name, value in (("fluency", fluency), ("sim", sim_value), ("sta", sta_value)):
        _check_unit(name, value)
    return fluency * sim_value * sta_value


def joint_llm(fluency: float, sim_llm: float, sta_llm: float) -> float:
    """Judge-variant J: same product shape with judge-sourced SIM and STA."""
    return joint(fluency, sim_llm, sta_llm)


def evaluate_row(inputs: MetricInputs, backend,
                 weights: MetricWeights = MetricWeights()) -> MetricRow:
    if inputs.p_refs:
        sta_value = sta(inputs.p_gen, inputs.p_refs)
    else:
        sta_value = sta_reference_free(inputs.p_gen)
    if inputs.output_gold is not None:
        sim_value = sim(backend, inputs.input_toxic, inputs.output_gold,
                        inputs.output_gen, weights)
    else:
        sim_value = sim_reference_free(backend, inputs.input_toxic, inputs.output_gen)
    return MetricRow(
        pair_id=inputs.pair_id,
        lang=inputs.lang,
        sta=sta_value,
        sim=sim_value,
        fluency=inputs.fluency,
        joint=joint(inputs.fluency, sim_value, sta_value),
    )


def evaluate_corpus(rows, backend, weights: MetricWeights = MetricWeights()):
    """Per-row metrics plus arithmetic-mean joint score per language and
    overall (key "avg")."""
    metric_rows = [evaluate_row(r, backend, weights) for r in rows]
    by_lang: dict[str, list[float]] = {}
    for row in metric_rows:
        by_lang.setdefault(row.lang, []).append(row.joint)
    averages = {lang: sum(js) / len(js) for lang, js in sorted(by_lang.items())}
    if metric_rows:
        averages["avg"] = sum(r.joint for r in metric_rows) / len(metric_rows)
    return metric_rows, averages
