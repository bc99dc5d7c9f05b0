"""detoxkit command line: every pipeline as one subcommand.

Exit codes: 0 success, 1 validation error (bad records, bad flags),
2 backend or IO error.  Configuration precedence is flags >
DETOXKIT_-prefixed environment variables > config file (key=value lines)
> defaults.  Human-readable summaries go to stderr; machine-readable
JSON goes to the paths named by the flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import pathlib
import sys

from . import anova as anova_mod
from . import cleaning, corpus, embeddings, metrics, prompting, spans
from .errors import BackendError, CorpusValidationError, DetoxkitError
from .scorers import get_scorer

log = logging.getLogger("detoxkit")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_BACKEND = 2

DEFAULTS = {
    "scorer": "fallback",
    "generator": "echo",
    "seed": "3407",
    "parallelism": "1",
    "log_level": "warning",
}


def _load_config_file(path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(open(path, encoding="utf-8"), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CorpusValidationError(f"{path}: line {lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def resolve_setting(key: str, flag_value, config: dict[str, str]):
    """flags > environment > config file > defaults."""
    if flag_value is not None:
        return flag_value
    env = os.environ.get(f"DETOXKIT_{key.upper()}")
    if env is not None:
        return env
    if key in config:
        return config[key]
    return DEFAULTS.get(key)


def _load_lexicons(lexicon_dir) -> dict[str, corpus.Lexicon]:
    lexicons = {}
    if lexicon_dir is None:
        return lexicons
    for path in sorted(pathlib.Path(lexicon_dir).glob("*.txt")):
        lang = path.stem
        if lang in corpus.LANGUAGES:
            lexicons[lang] = corpus.load_lexicon(path, lang)
    return lexicons


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def _scorer_from_args(args, lexicons=None):
    spec = resolve_setting("scorer", getattr(args, "scorer", None), args._config)
    return get_scorer(spec, lexicons=lexicons)


# ---------------------------------------------------------------- subcommands

def cmd_clean(args) -> int:
    pairs = corpus.load_pairs(args.input)
    cfg = cleaning.CleaningConfig(
        ngram_order=args.ngram,
        jaccard_discard_threshold=args.jaccard_max,
        sem_threshold_mt=args.sem_min_mt,
        sem_threshold_synthetic=args.sem_min_syn,
    )
    scorer = _scorer_from_args(args)
    retained, report = cleaning.run_pipeline(pairs, cfg, scorer)
    corpus.write_pairs(retained, args.output)
    if args.report:
        _write_json(args.report, report.to_json_dict())
    print(
        f"clean: {report.input_count} in, {report.retained_count} retained, "
        f"drops {report.drops}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_spans(args) -> int:
    pairs = corpus.load_pairs(args.input)
    lexicons = _load_lexicons(args.lexicon_dir)
    annotated = spans.annotate_spans(pairs, lexicons)
    corpus.write_pairs(annotated, args.output)
    total = sum(len(p.toxic_spans) for p in annotated)
    print(f"spans: annotated {total} spans over {len(annotated)} pairs", file=sys.stderr)
    return EXIT_OK


def cmd_baseline(args) -> int:
    pairs = corpus.load_pairs(args.input)
    lexicons = _load_lexicons(args.lexicon_dir)
    with open(args.output, "w", encoding="utf-8") as fh:
        for pair in pairs:
            if args.method == "duplicate":
                neutral = spans.duplicate_detoxify(pair.toxic)
            else:
                lexicon = lexicons.get(pair.lang)
                neutral = (
                    spans.delete_detoxify(pair.toxic, lexicon)
                    if lexicon is not None else pair.toxic
                )
            record = {"id": pair.id, "lang": pair.lang, "toxic": pair.toxic, "neutral": neutral}
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"baseline[{args.method}]: wrote {len(pairs)} records", file=sys.stderr)
    return EXIT_OK


def cmd_enrich(args) -> int:
    pairs = corpus.load_pairs(args.input)
    scorer = _scorer_from_args(args)
    enriched = embeddings.enrich_neighbors(pairs, scorer, k=args.k)
    corpus.write_pairs(enriched, args.output)
    print(f"enrich: populated neighbors for {len(enriched)} pairs (k={args.k})", file=sys.stderr)
    return EXIT_OK


def cmd_prompt(args) -> int:
    pairs = corpus.load_pairs(args.input)
    by_id = {p.id: p for p in pairs}
    templates = prompting.load_templates(args.templates)
    with open(args.output, "w", encoding="utf-8") as fh:
        for pair in pairs:
            bundle = prompting.build_prompt(pair, by_id, k=args.k, templates=templates)
            turns = prompting.render_chat(bundle)
            record = {"id": pair.id, "turns": [t.to_json_dict() for t in turns]}
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"prompt: rendered {len(pairs)} prompts", file=sys.stderr)
    return EXIT_OK


def cmd_export_train(args) -> int:
    pairs = corpus.load_pairs(args.input)
    by_id = {p.id: p for p in pairs}
    scorer = _scorer_from_args(args)
    index_by_lang = embeddings.build_index(pairs, scorer)
    templates = prompting.load_templates(args.templates)
    instances = prompting.export_training_instances(
        pairs, by_id, index_by_lang=index_by_lang, templates=templates,
        k=args.k, overlap_max=args.overlap_max,
    )
    with open(args.output, "w", encoding="utf-8") as fh:
        for turns in instances:
            record = {"turns": [t.to_json_dict() for t in turns]}
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"export-train: {len(instances)} instances from {len(pairs)} pairs", file=sys.stderr)
    return EXIT_OK


def cmd_infer(args) -> int:
    pairs = corpus.load_pairs(args.input)
    by_id = {p.id: p for p in pairs}
    lexicons = _load_lexicons(args.lexicon_dir)
    scorer = _scorer_from_args(args, lexicons=lexicons)
    generator_spec = resolve_setting("generator", args.generator, args._config)
    generator = prompting.get_generator(generator_spec, lexicons=lexicons)
    index_by_lang = embeddings.build_index(pairs, scorer)
    templates = prompting.load_templates(args.templates)
    with open(args.output, "w", encoding="utf-8") as fh:
        for pair in pairs:
            bundle = prompting.build_prompt(
                pair, by_id, index=index_by_lang.get(pair.lang), templates=templates
            )
            candidates = prompting.generate_candidates(
                bundle, generator, n=args.n, pair_id=pair.id
            )
            chosen, idx, scores = prompting.select_best(
                candidates, pair.toxic, scorer,
                output_gold=pair.neutral, lang=pair.lang,
            )
            record = {
                "id": pair.id,
                "lang": pair.lang,
                "toxic": pair.toxic,
                "neutral": chosen,
                "chosen_index": idx,
                "candidate_scores": [round(s, 12) for s in scores],
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    print(f"infer: detoxified {len(pairs)} inputs with {generator_spec}", file=sys.stderr)
    return EXIT_OK


def _load_text_by_id(path) -> dict[str, dict]:
    records = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                records[obj["id"]] = obj
    return records


def cmd_evaluate(args) -> int:
    inputs = corpus.load_pairs(args.inputs)
    gens = _load_text_by_id(args.gens)
    golds = _load_text_by_id(args.golds) if args.golds else {}
    lexicons = _load_lexicons(args.lexicon_dir)
    scorer = _scorer_from_args(args, lexicons=lexicons)

    rows = []
    for pair in inputs:
        gen = gens.get(pair.id)
        if gen is None:
            log.warning("no generated output for %s; skipped", pair.id)
            continue
        gen_text = gen["neutral"]
        gold_obj = golds.get(pair.id)
        gold_text = gold_obj.get("neutral") if gold_obj else pair.neutral
        p_gen = scorer.non_toxicity([gen_text], lang=pair.lang)[0]
        p_refs = (
            tuple(scorer.non_toxicity([gold_text], lang=pair.lang))
            if gold_text is not None else ()
        )
        fluency = scorer.fluency([pair.toxic], [gold_text or ""], [gen_text])[0]
        rows.append(metrics.MetricInputs(
            pair_id=pair.id,
            lang=pair.lang,
            input_toxic=pair.toxic,
            output_gen=gen_text,
            output_gold=gold_text,
            p_gen=p_gen,
            p_refs=p_refs,
            fluency=fluency,
        ))
    metric_rows, averages = metrics.evaluate_corpus(rows, scorer)
    with open(args.out, "w", encoding="utf-8") as fh:
        for row in metric_rows:
            payload = {k: (round(v, 12) if isinstance(v, float) else v)
                       for k, v in row.to_json_dict().items()}
            fh.write(json.dumps(payload, ensure_ascii=False, sort_keys=True) + "\n")
    if args.summary:
        _write_json(args.summary, {k: round(v, 12) for k, v in averages.items()})
    for lang, value in averages.items():
        print(f"evaluate: {lang} J={value:.4f}", file=sys.stderr)
    return EXIT_OK


def cmd_anova(args) -> int:
    scores = corpus.load_scores_tsv(args.scores)
    schemes = anova_mod.builtin_groupings()
    if args.scheme != "all":
        schemes = {args.scheme: schemes[args.scheme]}
    report = anova_mod.anova_report(scores, schemes.values())
    if args.out:
        _write_json(args.out, anova_mod.report_to_json(report))
    print(anova_mod.render_report(report), file=sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    pairs = corpus.load_pairs(args.input)
    stats = corpus.corpus_stats(pairs)
    if args.out:
        _write_json(args.out, stats)
    width = max(len(k) for k in stats)
    for key, value in stats.items():
        print(f"{key:<{width}} {value:>8}", file=sys.stderr)
    return EXIT_OK


# ------------------------------------------------------------------- parsing

class _Parser(argparse.ArgumentParser):
    # usage problems are validation errors (exit 1), not backend errors
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"detoxkit: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="detoxkit",
        description="Corpus curation and evaluation toolkit for multilingual text detoxification",
    )
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--parallelism", type=int, default=None)
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("clean", help="run the four-step cleaning pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--report")
    p.add_argument("--ngram", type=int, default=5)
    p.add_argument("--jaccard-max", type=float, default=0.90)
    p.add_argument("--sem-min-mt", type=float, default=0.85)
    p.add_argument("--sem-min-syn", type=float, default=0.80)
    p.add_argument("--scorer")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("spans", help="annotate toxic spans from lexicons")
    p.add_argument("--input", required=True)
    p.add_argument("--lexicon-dir", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_spans)

    p = sub.add_parser("baseline", help="delete/duplicate reference detoxifiers")
    p.add_argument("--method", choices=["delete", "duplicate"], required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--lexicon-dir")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("enrich", help="populate nearest-neighbor ids")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--scorer")
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("prompt", help="render inference prompts")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--templates")
    p.set_defaults(func=cmd_prompt)

    p = sub.add_parser("export-train", help="export masked training instances")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--overlap-max", type=float, default=0.9)
    p.add_argument("--templates")
    p.add_argument("--scorer")
    p.set_defaults(func=cmd_export_train)

    p = sub.add_parser("infer", help="generate candidates and keep the best")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--generator")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--scorer")
    p.add_argument("--lexicon-dir")
    p.add_argument("--templates")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("evaluate", help="score system outputs")
    p.add_argument("--inputs", required=True)
    p.add_argument("--gens", required=True)
    p.add_argument("--golds")
    p.add_argument("--scorer")
    p.add_argument("--lexicon-dir")
    p.add_argument("--out", required=True)
    p.add_argument("--summary")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("anova", help="grouped ANOVA over per-language scores")
    p.add_argument("--scores", required=True)
    p.add_argument("--scheme", default="all",
                   choices=["all", "genetic", "typology", "geography", "resource"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_anova)

    p = sub.add_parser("stats", help="per-language pair counts")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_VALIDATION
    try:
        config = _load_config_file(args.config) if args.config else {}
    except CorpusValidationError as exc:
        print(f"detoxkit: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"detoxkit: cannot read config: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    args._config = config
    level = resolve_setting("log_level", args.log_level, config)
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.WARNING))
    try:
        return args.func(args)
    except CorpusValidationError as exc:
        print(f"detoxkit: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (BackendError, OSError) as exc:
        print(f"detoxkit: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except DetoxkitError as exc:
        print(f"detoxkit: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
