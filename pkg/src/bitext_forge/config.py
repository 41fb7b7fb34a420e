"""Run configuration: a single JSON file, strictly validated.

Unknown keys are rejected and every diagnostic names the offending key
with its dotted path: a silent typo in a multi-hour pipeline run is far
more expensive than a strict parser.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .cleaning import CleaningConfig
from .corpus_io import LanguageTag
from .domain_selection import DEFAULT_SELECTION_K
from .synthesis import SynthesisConfig


class ConfigError(Exception):
    """Configuration rejected; ``diagnostics`` lists every problem found."""

    def __init__(self, diagnostics: list[str]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(diagnostics))


@dataclass(frozen=True)
class SelectionSettings:
    k: int = DEFAULT_SELECTION_K
    df_source: str = "parallel"  # or "monolingual"


@dataclass(frozen=True)
class EvaluationSettings:
    hyp: Path | None = None
    ref: Path | None = None
    lang: LanguageTag | None = None
    smooth: bool = False


@dataclass(frozen=True)
class BackendSettings:
    kind: str = "stub-identity"  # stub-identity | stub-reverse | stub-dictionary | http
    endpoint: str | None = None
    auth_token: str | None = None
    dictionary: Path | None = None
    timeout: float = 60.0


@dataclass(frozen=True)
class PipelineConfig:
    source_lang: LanguageTag
    target_lang: LanguageTag
    parallel_stem: Path
    monolingual: dict[LanguageTag, Path]
    output_dir: Path
    cleaning: CleaningConfig = CleaningConfig()
    selection: SelectionSettings = SelectionSettings()
    synthesis: SynthesisConfig = SynthesisConfig()
    backend: BackendSettings = BackendSettings()
    evaluation: EvaluationSettings = EvaluationSettings()
    merge_strategy: str = "concat"
    interleave_ratio: int = 1

    def parallel_side(self, lang: LanguageTag) -> Path:
        return self.parallel_stem.parent / f"{self.parallel_stem.name}.{lang.value}"

    @property
    def manifest_path(self) -> Path:
        return self.output_dir / "manifest.jsonl"


_SCHEMA: dict[str, set[str]] = {
    "": {"source_lang", "target_lang", "paths", "cleaning", "selection", "synthesis", "evaluation", "merge"},
    "paths": {"parallel_stem", "monolingual", "output_dir"},
    "paths.monolingual": {"vi", "zh"},
    "cleaning": {"min_words", "max_words", "min_language_confidence", "strip_markup"},
    "selection": {"k", "df_source"},
    "synthesis": {
        "backend",
        "endpoint",
        "auth_token",
        "dictionary",
        "timeout",
        "batch_size",
        "max_in_flight_batches",
        "retry_limit",
        "direction",
    },
    "evaluation": {"hyp", "ref", "lang", "smooth"},
    "merge": {"strategy", "interleave_ratio"},
}


def _check_keys(obj: dict, prefix: str, diagnostics: list[str]) -> None:
    allowed = _SCHEMA[prefix]
    for key in obj:
        dotted = f"{prefix}.{key}" if prefix else key
        if key not in allowed:
            diagnostics.append(f"unknown key {dotted!r}")
        elif dotted in _SCHEMA and not isinstance(obj[key], dict):
            diagnostics.append(f"{dotted!r} must be an object")
        elif dotted in _SCHEMA:
            _check_keys(obj[key], dotted, diagnostics)


def _get_typed(obj: dict, key: str, expected: type, dotted: str, diagnostics: list[str], default):
    if key not in obj:
        return default
    value = obj[key]
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, expected) or (expected is int and isinstance(value, bool)):
        diagnostics.append(f"{dotted!r} must be {expected.__name__}, got {type(value).__name__}")
        return default
    return value


def _get_lang(obj: dict, key: str, dotted: str, diagnostics: list[str]) -> LanguageTag | None:
    raw = _get_typed(obj, key, str, dotted, diagnostics, None)
    if raw is None:
        if key not in obj:
            diagnostics.append(f"missing required key {dotted!r}")
        return None
    if raw not in ("vi", "zh"):
        diagnostics.append(f"{dotted!r} must be 'vi' or 'zh', got {raw!r}")
        return None
    return LanguageTag(raw)


def validate_config(path: str | Path) -> PipelineConfig:
    """Parse and fully resolve a pipeline config, applying defaults.

    Raises ConfigError listing every diagnostic (unknown keys, type
    mismatches, invariant violations, missing input files) by dotted key.
    """
    diagnostics: list[str] = []
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config is not valid JSON: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a JSON object"])

    _check_keys(raw, "", diagnostics)

    source_lang = _get_lang(raw, "source_lang", "source_lang", diagnostics)
    target_lang = _get_lang(raw, "target_lang", "target_lang", diagnostics)
    if source_lang and target_lang and source_lang == target_lang:
        diagnostics.append("'source_lang' and 'target_lang' must differ")

    paths = raw.get("paths")
    if not isinstance(paths, dict):
        diagnostics.append("missing required key 'paths'")
        paths = {}
    parallel_stem_raw = _get_typed(paths, "parallel_stem", str, "paths.parallel_stem", diagnostics, None)
    output_dir_raw = _get_typed(paths, "output_dir", str, "paths.output_dir", diagnostics, None)
    if parallel_stem_raw is None and "parallel_stem" not in paths:
        diagnostics.append("missing required key 'paths.parallel_stem'")
    if output_dir_raw is None and "output_dir" not in paths:
        diagnostics.append("missing required key 'paths.output_dir'")

    monolingual: dict[LanguageTag, Path] = {}
    mono_raw = paths.get("monolingual", {})
    if isinstance(mono_raw, dict):
        for code, p in mono_raw.items():
            if code in ("vi", "zh") and isinstance(p, str):
                monolingual[LanguageTag(code)] = Path(p)
            elif code in ("vi", "zh"):
                diagnostics.append(f"'paths.monolingual.{code}' must be str, got {type(p).__name__}")

    cleaning_raw = raw.get("cleaning", {}) if isinstance(raw.get("cleaning", {}), dict) else {}
    cleaning_kwargs = dict(
        min_words=_get_typed(cleaning_raw, "min_words", int, "cleaning.min_words", diagnostics, 2),
        max_words=_get_typed(cleaning_raw, "max_words", int, "cleaning.max_words", diagnostics, 100),
        min_language_confidence=_get_typed(
            cleaning_raw, "min_language_confidence", float, "cleaning.min_language_confidence", diagnostics, 0.8
        ),
        strip_markup=_get_typed(cleaning_raw, "strip_markup", bool, "cleaning.strip_markup", diagnostics, True),
    )
    try:
        cleaning = CleaningConfig(**cleaning_kwargs)
    except ValueError as exc:
        diagnostics.append(f"'cleaning': {exc}")
        cleaning = CleaningConfig()

    selection_raw = raw.get("selection", {}) if isinstance(raw.get("selection", {}), dict) else {}
    k = _get_typed(selection_raw, "k", int, "selection.k", diagnostics, DEFAULT_SELECTION_K)
    if k is not None and k < 1:
        diagnostics.append(f"'selection.k' must be >= 1, got {k}")
    df_source = _get_typed(selection_raw, "df_source", str, "selection.df_source", diagnostics, "parallel")
    if df_source not in ("parallel", "monolingual"):
        diagnostics.append(f"'selection.df_source' must be 'parallel' or 'monolingual', got {df_source!r}")
        df_source = "parallel"

    synthesis_raw = raw.get("synthesis", {}) if isinstance(raw.get("synthesis", {}), dict) else {}
    direction = None
    direction_raw = _get_typed(synthesis_raw, "direction", str, "synthesis.direction", diagnostics, None)
    if direction_raw is not None:
        parts = direction_raw.split("->")
        if len(parts) == 2 and parts[0] in ("vi", "zh") and parts[1] in ("vi", "zh") and parts[0] != parts[1]:
            direction = (LanguageTag(parts[0]), LanguageTag(parts[1]))
        else:
            diagnostics.append(f"'synthesis.direction' must look like 'zh->vi', got {direction_raw!r}")
    if direction is None and source_lang and target_lang:
        # standard back-translation: authentic target-language text,
        # machine-translated source side
        direction = (target_lang, source_lang)

    synthesis_kwargs = dict(
        batch_size=_get_typed(synthesis_raw, "batch_size", int, "synthesis.batch_size", diagnostics, 16),
        max_in_flight_batches=_get_typed(
            synthesis_raw, "max_in_flight_batches", int, "synthesis.max_in_flight_batches", diagnostics, 4
        ),
        retry_limit=_get_typed(synthesis_raw, "retry_limit", int, "synthesis.retry_limit", diagnostics, 2),
    )
    try:
        synthesis = SynthesisConfig(
            direction=direction or (LanguageTag.ZH, LanguageTag.VI), **synthesis_kwargs
        )
    except ValueError as exc:
        diagnostics.append(f"'synthesis': {exc}")
        synthesis = SynthesisConfig()

    backend_kind = _get_typed(synthesis_raw, "backend", str, "synthesis.backend", diagnostics, "stub-identity")
    if backend_kind not in ("stub-identity", "stub-reverse", "stub-dictionary", "http"):
        diagnostics.append(
            f"'synthesis.backend' must be one of stub-identity, stub-reverse, stub-dictionary, http; got {backend_kind!r}"
        )
        backend_kind = "stub-identity"
    endpoint = _get_typed(synthesis_raw, "endpoint", str, "synthesis.endpoint", diagnostics, None)
    if backend_kind == "http" and not endpoint:
        diagnostics.append("'synthesis.endpoint' is required when backend is 'http'")
    dictionary_raw = _get_typed(synthesis_raw, "dictionary", str, "synthesis.dictionary", diagnostics, None)
    if backend_kind == "stub-dictionary" and not dictionary_raw:
        diagnostics.append("'synthesis.dictionary' is required when backend is 'stub-dictionary'")
    backend = BackendSettings(
        kind=backend_kind,
        endpoint=endpoint,
        auth_token=_get_typed(synthesis_raw, "auth_token", str, "synthesis.auth_token", diagnostics, None),
        dictionary=Path(dictionary_raw) if dictionary_raw else None,
        timeout=_get_typed(synthesis_raw, "timeout", float, "synthesis.timeout", diagnostics, 60.0),
    )

    evaluation_raw = raw.get("evaluation", {}) if isinstance(raw.get("evaluation", {}), dict) else {}
    eval_lang = None
    eval_lang_raw = _get_typed(evaluation_raw, "lang", str, "evaluation.lang", diagnostics, None)
    if eval_lang_raw is not None:
        if eval_lang_raw in ("vi", "zh"):
            eval_lang = LanguageTag(eval_lang_raw)
        else:
            diagnostics.append(f"'evaluation.lang' must be 'vi' or 'zh', got {eval_lang_raw!r}")
    hyp_raw = _get_typed(evaluation_raw, "hyp", str, "evaluation.hyp", diagnostics, None)
    ref_raw = _get_typed(evaluation_raw, "ref", str, "evaluation.ref", diagnostics, None)
    evaluation = EvaluationSettings(
        hyp=Path(hyp_raw) if hyp_raw else None,
        ref=Path(ref_raw) if ref_raw else None,
        lang=eval_lang,
        smooth=_get_typed(evaluation_raw, "smooth", bool, "evaluation.smooth", diagnostics, False),
    )

    merge_raw = raw.get("merge", {}) if isinstance(raw.get("merge", {}), dict) else {}
    merge_strategy = _get_typed(merge_raw, "strategy", str, "merge.strategy", diagnostics, "concat")
    if merge_strategy not in ("concat", "interleave"):
        diagnostics.append(f"'merge.strategy' must be 'concat' or 'interleave', got {merge_strategy!r}")
        merge_strategy = "concat"
    interleave_ratio = _get_typed(merge_raw, "interleave_ratio", int, "merge.interleave_ratio", diagnostics, 1)
    if interleave_ratio < 1:
        diagnostics.append(f"'merge.interleave_ratio' must be >= 1, got {interleave_ratio}")
        interleave_ratio = 1

    # input paths must exist up front: a missing file should fail now, not
    # hours into a run
    if source_lang and target_lang and parallel_stem_raw is not None:
        stem = Path(parallel_stem_raw)
        for lang in (source_lang, target_lang):
            side = stem.parent / f"{stem.name}.{lang.value}"
            if not side.is_file():
                diagnostics.append(f"'paths.parallel_stem': file not found: {side}")
    for lang, p in monolingual.items():
        if not p.is_file():
            diagnostics.append(f"'paths.monolingual.{lang.value}': file not found: {p}")
    if backend.dictionary is not None and not backend.dictionary.is_file():
        diagnostics.append(f"'synthesis.dictionary': file not found: {backend.dictionary}")

    if diagnostics:
        raise ConfigError(diagnostics)

    assert source_lang and target_lang and parallel_stem_raw is not None and output_dir_raw is not None
    return PipelineConfig(
        source_lang=source_lang,
        target_lang=target_lang,
        parallel_stem=Path(parallel_stem_raw),
        monolingual=monolingual,
        output_dir=Path(output_dir_raw),
        cleaning=cleaning,
        selection=SelectionSettings(k=k, df_source=df_source),
        synthesis=synthesis,
        backend=backend,
        evaluation=evaluation,
        merge_strategy=merge_strategy,
        interleave_ratio=interleave_ratio,
    )
