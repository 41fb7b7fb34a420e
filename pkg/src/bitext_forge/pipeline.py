"""Stage orchestration: clean -> select -> synthesize -> merge -> evaluate.

Stages are independently runnable with file-based handoff (a 20M-sentence
input makes restartability essential). Every stage writes its outputs
under the run directory with fixed names, first to ``<name>.partial`` and
renamed into place only on success, so an interrupted run never leaves a
truncated file masquerading as a finished one. Each successful stage
appends exactly one manifest entry recording the digests of the files it
actually read.
"""

from __future__ import annotations

import logging
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from . import cleaning as cleaning_mod
from . import corpus_io, domain_selection, evaluation, synthesis
from .config import PipelineConfig
from .corpus_io import (
    RECORDED_MODEL_HYPERPARAMETERS,
    LanguageTag,
    ManifestEntry,
    PairOrigin,
    Sentence,
    append_manifest,
    file_digest,
    read_monolingual,
    read_parallel,
    write_monolingual,
    write_parallel,
)
from .synthesis import BackendUnreachableError, TranslationBackend

logger = logging.getLogger(__name__)

STAGES = ("clean", "select", "synthesize", "merge", "evaluate")


class StageError(Exception):
    """A stage could not run (missing inputs or a runtime failure)."""


@dataclass
class StageResult:
    status: int
    entry: ManifestEntry | None = None
    message: str = ""


def _new_run_id() -> str:
    return uuid.uuid4().hex[:12]


def _make_entry(run_id: str, step: str, inputs: list[Path]) -> ManifestEntry:
    return ManifestEntry(
        run_id=run_id,
        step=step,
        input_digests={str(p): file_digest(p) for p in inputs},
        parameters=dict(RECORDED_MODEL_HYPERPARAMETERS),
        timestamp=time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    )


def _require_inputs(paths: list[Path]) -> None:
    missing = [str(p) for p in paths if not p.is_file()]
    if missing:
        raise StageError(f"missing stage inputs: {', '.join(missing)}")


class _PartialOutputs:
    """Write to ``<final>.partial`` paths; commit renames them into place.

    Without a commit the .partial files stay behind, which is exactly the
    contract for a failed stage.
    """

    def __init__(self, *finals: Path):
        self.finals = finals
        self.partials = [p.with_name(p.name + ".partial") for p in finals]

    def __iter__(self):
        return iter(self.partials)

    def commit(self) -> None:
        for partial, final in zip(self.partials, self.finals):
            partial.replace(final)


def stage_clean(config: PipelineConfig, run_id: str) -> StageResult:
    """Clean every configured monolingual corpus into ``clean.<lang>``."""
    inputs = sorted(config.monolingual.values())
    _require_inputs(inputs)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    entry = _make_entry(run_id, "clean", inputs)
    entry.parameters.update(
        {
            "min_words": str(config.cleaning.min_words),
            "max_words": str(config.cleaning.max_words),
            "min_language_confidence": str(config.cleaning.min_language_confidence),
            "strip_markup": str(config.cleaning.strip_markup).lower(),
        }
    )
    for lang, path in sorted(config.monolingual.items(), key=lambda kv: kv[0].value):
        out = _PartialOutputs(config.output_dir / f"clean.{lang.value}")
        kept, report = cleaning_mod.clean_corpus(read_monolingual(path, lang), lang, config.cleaning)
        (partial,) = out
        write_monolingual(kept, partial)
        out.commit()
        for name, value in report.as_counts().items():
            entry.output_counts[f"{lang.value}.{name}"] = value
    append_manifest(config.manifest_path, entry)
    return StageResult(0, entry)


def _mono_lang(config: PipelineConfig) -> LanguageTag:
    # the side of the pair that comes verbatim from the monolingual corpus
    return config.synthesis.direction[0]


def _domain_reference(config: PipelineConfig, lang: LanguageTag) -> Path:
    if config.selection.df_source == "parallel":
        return config.parallel_side(lang)
    return config.output_dir / f"clean.{lang.value}"


def stage_select(config: PipelineConfig, run_id: str) -> StageResult:
    """Rank the cleaned monolingual corpus against the bitext domain, keep top k."""
    lang = _mono_lang(config)
    cleaned = config.output_dir / f"clean.{lang.value}"
    reference = _domain_reference(config, lang)
    domain_side = config.parallel_side(lang)
    _require_inputs([cleaned, reference, domain_side])
    config.output_dir.mkdir(parents=True, exist_ok=True)

    table = domain_selection.build_df_table(read_monolingual(reference, lang), lang)
    centroid = domain_selection.domain_centroid(read_monolingual(domain_side, lang), table)
    selected = domain_selection.select_top_k(
        read_monolingual(cleaned, lang), centroid, table, config.selection.k
    )

    out = _PartialOutputs(
        config.output_dir / f"selected.{lang.value}",
        config.output_dir / "selected.scores",
    )
    sentences_partial, scores_partial = out
    with scores_partial.open("w", encoding="utf-8", newline="\n") as fh:
        for scored in selected:
            fh.write(f"{scored.sentence.id}\t{scored.score:.6f}\n")
    write_monolingual((s.sentence for s in selected), sentences_partial)
    out.commit()

    entry = _make_entry(run_id, "select", [cleaned, reference, domain_side])
    entry.parameters.update({"k": str(config.selection.k), "df_source": config.selection.df_source})
    entry.output_counts["selected"] = len(selected)
    entry.output_counts["df_terms"] = len(table)
    append_manifest(config.manifest_path, entry)
    return StageResult(0, entry)


def _load_dictionary(path: Path) -> dict[str, str]:
    mapping = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                token, translation = line.split("\t", 1)
            except ValueError:
                raise StageError(f"dictionary line without a tab separator in {path}: {line!r}") from None
            mapping[token] = translation
    return mapping


def make_backend(config: PipelineConfig) -> TranslationBackend:
    mono, translated = config.synthesis.direction
    kind = config.backend.kind
    if kind == "http":
        return synthesis.http_backend(
            config.backend.endpoint or "",
            src_lang=mono,
            tgt_lang=translated,
            timeout=config.backend.timeout,
            auth_token=config.backend.auth_token,
        )
    if kind == "stub-dictionary":
        mapping = _load_dictionary(config.backend.dictionary)
        return synthesis.stub_backend("dictionary", mono, translated, mapping=mapping)
    stub_kind = {"stub-identity": "identity", "stub-reverse": "token_reverse"}[kind]
    return synthesis.stub_backend(stub_kind, mono, translated)


def stage_synthesize(config: PipelineConfig, run_id: str, backend: TranslationBackend | None = None) -> StageResult:
    """Back-translate the selected sentences into synthetic parallel data."""
    mono, translated = config.synthesis.direction
    selected_path = config.output_dir / f"selected.{mono.value}"
    _require_inputs([selected_path])
    backend = backend or make_backend(config)

    pairs, report = synthesis.back_translate(
        read_monolingual(selected_path, mono), backend, config.synthesis
    )
    # pair.source is the machine translation, pair.target the authentic
    # text; each goes to the file named for its language
    out = _PartialOutputs(
        config.output_dir / f"synthetic.{translated.value}",
        config.output_dir / f"synthetic.{mono.value}",
    )
    translation_partial, authentic_partial = out

    entry = _make_entry(run_id, "synthesize", [selected_path])
    entry.parameters.update(
        {
            "backend": config.backend.kind,
            "batch_size": str(config.synthesis.batch_size),
            "retry_limit": str(config.synthesis.retry_limit),
            "direction": f"{mono.value}->{translated.value}",
        }
    )
    try:
        counts = write_parallel(pairs, translation_partial, authentic_partial)
    except BackendUnreachableError as exc:
        entry.step = "synthesize.failed"
        entry.output_counts["pairs"] = report.emitted_pairs
        entry.output_counts["failed_batches"] = report.failed_batches
        append_manifest(config.manifest_path, entry)
        return StageResult(1, entry, message=f"translation backend unreachable: {exc}")
    out.commit()
    entry.output_counts["pairs"] = counts.written
    entry.output_counts["failed_batches"] = report.failed_batches
    entry.output_counts["dropped_sentences"] = report.dropped_sentences
    append_manifest(config.manifest_path, entry)
    return StageResult(0, entry)


def stage_merge(config: PipelineConfig, run_id: str) -> StageResult:
    """Combine the original bitext with the synthetic pairs."""
    src, tgt = config.source_lang, config.target_lang
    original_src = config.parallel_side(src)
    original_tgt = config.parallel_side(tgt)
    synthetic_src = config.output_dir / f"synthetic.{src.value}"
    synthetic_tgt = config.output_dir / f"synthetic.{tgt.value}"
    _require_inputs([original_src, original_tgt, synthetic_src, synthetic_tgt])

    merged = synthesis.merge_corpora(
        read_parallel(original_src, original_tgt, src, tgt, origin=PairOrigin.ORIGINAL),
        read_parallel(synthetic_src, synthetic_tgt, src, tgt, origin=PairOrigin.SYNTHETIC),
        strategy=config.merge_strategy,
        interleave_ratio=config.interleave_ratio,
    )
    out = _PartialOutputs(
        config.output_dir / f"train.merged.{src.value}",
        config.output_dir / f"train.merged.{tgt.value}",
    )
    src_partial, tgt_partial = out
    counts = write_parallel(merged, src_partial, tgt_partial)
    out.commit()

    entry = _make_entry(run_id, "merge", [original_src, original_tgt, synthetic_src, synthetic_tgt])
    entry.parameters.update({"strategy": config.merge_strategy})
    entry.output_counts["pairs"] = counts.written
    append_manifest(config.manifest_path, entry)
    return StageResult(0, entry)


def stage_evaluate(
    config: PipelineConfig,
    run_id: str,
    hyp: Path | None = None,
    ref: Path | None = None,
    lang: LanguageTag | None = None,
    smooth: bool | None = None,
) -> StageResult:
    """Score a hypothesis file against a reference and print the BLEU line."""
    hyp = hyp or config.evaluation.hyp
    ref = ref or config.evaluation.ref
    lang = lang or config.evaluation.lang
    smooth = config.evaluation.smooth if smooth is None else smooth
    if hyp is None or ref is None or lang is None:
        raise StageError("evaluate needs --hyp, --ref and --lang (flags or the evaluation config block)")
    _require_inputs([hyp, ref])
    config.output_dir.mkdir(parents=True, exist_ok=True)

    score = evaluation.bleu(hyp, ref, lang, smooth=smooth)
    print(score.format())

    entry = _make_entry(run_id, "evaluate", [hyp, ref])
    entry.parameters.update(
        {
            "lang": lang.value,
            "smooth": str(smooth).lower(),
            "bleu": f"{score.bleu:.2f}",
            "brevity_penalty": f"{score.brevity_penalty:.3f}",
            "precisions": "/".join(f"{p:.6f}" for p in score.precisions),
        }
    )
    entry.output_counts["hyp_length"] = score.hyp_length
    entry.output_counts["ref_length"] = score.ref_length
    append_manifest(config.manifest_path, entry)
    return StageResult(0, entry)


def run_stage(stage: str, config: PipelineConfig, run_id: str | None = None, **kwargs) -> StageResult:
    """Run one named stage; returns its exit status and manifest entry."""
    run_id = run_id or _new_run_id()
    handlers = {
        "clean": stage_clean,
        "select": stage_select,
        "synthesize": stage_synthesize,
        "merge": stage_merge,
        "evaluate": stage_evaluate,
    }
    if stage not in handlers:
        raise ValueError(f"unknown stage {stage!r}; expected one of {', '.join(STAGES)}")
    return handlers[stage](config, run_id, **kwargs)


def run_pipeline(config: PipelineConfig, run_id: str | None = None) -> list[StageResult]:
    """Run all stages in order; evaluation only if configured.

    Stops at the first failing stage; the results list holds everything
    that ran.
    """
    run_id = run_id or _new_run_id()
    stages = ["clean", "select", "synthesize", "merge"]
    if config.evaluation.hyp and config.evaluation.ref and config.evaluation.lang:
        stages.append("evaluate")
    results = []
    for stage in stages:
        logger.info("running stage %s", stage)
        result = run_stage(stage, config, run_id)
        results.append(result)
        if result.status != 0:
            logger.error("stage %s failed: %s", stage, result.message)
            break
    return results
