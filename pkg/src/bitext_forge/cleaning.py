"""Corpus cleaning: markup stripping, language filtering, length bounds.

The language detector is a deterministic character-class classifier rather
than a learned model: Vietnamese and Chinese are script-separable, so Han
ideographs vote zh and Latin letters carrying Vietnamese-specific
diacritics confirm vi, with plain Latin neutral. That keeps every cleaning
decision reproducible with no model dependency; a model-based detector can
be swapped in behind ``detect_language``'s signature.

Rules are applied strip -> language -> length, in that order, because
stripping changes token counts.
"""

from __future__ import annotations

import html
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .corpus_io import LanguageTag, Sentence
from .tokenization import count_words, is_han

_TAG_RE = re.compile(r"<[^<>]*>")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class CleaningConfig:
    min_words: int = 2
    max_words: int = 100
    min_language_confidence: float = 0.8
    strip_markup: bool = True

    def __post_init__(self) -> None:
        if not 1 <= self.min_words <= self.max_words:
            raise ValueError(f"need 1 <= min_words <= max_words, got {self.min_words}..{self.max_words}")
        if not 0.0 <= self.min_language_confidence <= 1.0:
            raise ValueError(f"min_language_confidence must be in [0,1], got {self.min_language_confidence}")


def strip_markup(text: str) -> str:
    """Remove markup tags and entities, drop control characters, squeeze whitespace.

    Tag removal and entity decoding are iterated to a fixpoint so the
    result is stable under re-application (decoding "&amp;lt;b&amp;gt;"
    exposes a tag that must also go). Each pass strictly shrinks the
    string, so the loop terminates. Punctuation is preserved: it carries
    translation-relevant content.
    """
    prev = None
    while text != prev:
        prev = text
        text = html.unescape(_TAG_RE.sub(" ", text))
    text = "".join(" " if unicodedata.category(ch) == "Cc" else ch for ch in text)
    return _WS_RE.sub(" ", text).strip()


# Vietnamese-specific letters: the marked bases and their tone-marked
# forms. Tone marks on plain vowels (e.g. French-style "à", "é") are shared
# with other Latin languages and deliberately do not count.
_VI_BASES = "ăâêôơư"
_TONE_MARKS = ("", "́", "̀", "̉", "̃", "̣")  # none/acute/grave/hook/tilde/dot
_VI_LETTERS = frozenset(
    unicodedata.normalize("NFC", base + tone)
    for base in _VI_BASES + _VI_BASES.upper()
    for tone in _TONE_MARKS
) | frozenset("đĐ")


@dataclass(frozen=True)
class LanguageVerdict:
    """Classification of one sentence into {vi, zh, other}.

    ``han_ratio`` and ``viet_latin_ratio`` are fractions of the
    classifiable characters (Han ideographs plus alphabetic letters), so
    they sum to at most 1. ``confidence`` is the winning class score:
    han_ratio for zh; for vi it is the full Latin-letter ratio, provided at
    least one Vietnamese-specific letter is present (plain Latin on its own
    is neutral and never claims vi).
    """

    lang: LanguageTag
    confidence: float
    han_ratio: float
    viet_latin_ratio: float


class UndecidableTextError(ValueError):
    """Raised for empty or whitespace-only input to the language detector."""


def detect_language(text: str, min_confidence: float = 0.8) -> LanguageVerdict:
    """Classify ``text`` by character-class ratios.

    The verdict is ``other`` when neither the zh nor the vi score reaches
    ``min_confidence``; the reported confidence is then the best losing
    score.
    """
    if not text.strip():
        raise UndecidableTextError("cannot detect language of empty or whitespace-only text")
    text = unicodedata.normalize("NFC", text)

    han = latin = viet = classifiable = 0
    for ch in text:
        if is_han(ch):
            han += 1
            classifiable += 1
        elif ch.isalpha():
            classifiable += 1
            name = unicodedata.name(ch, "")
            if name.startswith("LATIN"):
                latin += 1
                if ch in _VI_LETTERS:
                    viet += 1

    if classifiable == 0:
        return LanguageVerdict(LanguageTag.OTHER, 0.0, 0.0, 0.0)

    han_ratio = han / classifiable
    viet_ratio = viet / classifiable
    zh_score = han_ratio
    vi_score = latin / classifiable if viet > 0 else 0.0

    if zh_score >= vi_score:
        lang, confidence = LanguageTag.ZH, zh_score
    else:
        lang, confidence = LanguageTag.VI, vi_score
    if confidence < min_confidence:
        lang = LanguageTag.OTHER
    return LanguageVerdict(lang, confidence, han_ratio, viet_ratio)


@dataclass(frozen=True)
class LengthDecision:
    keep: bool
    word_count: int
    reason: str  # "ok", "too_short", "too_long"


def length_filter(sentence: Sentence, config: CleaningConfig) -> LengthDecision:
    """Keep sentences with min_words..max_words words, bounds inclusive."""
    n = count_words(sentence.text, sentence.lang)
    if n < config.min_words:
        return LengthDecision(False, n, "too_short")
    if n > config.max_words:
        return LengthDecision(False, n, "too_long")
    return LengthDecision(True, n, "ok")


@dataclass
class CleaningReport:
    """Drop tallies for one cleaning run; input = kept + sum of drops."""

    input_count: int = 0
    kept_count: int = 0
    dropped_language: int = 0
    dropped_length: int = 0
    dropped_empty_after_strip: int = 0

    def merge(self, other: "CleaningReport") -> None:
        self.input_count += other.input_count
        self.kept_count += other.kept_count
        self.dropped_language += other.dropped_language
        self.dropped_length += other.dropped_length
        self.dropped_empty_after_strip += other.dropped_empty_after_strip

    def as_counts(self) -> dict[str, int]:
        return {
            "input": self.input_count,
            "kept": self.kept_count,
            "dropped_language": self.dropped_language,
            "dropped_length": self.dropped_length,
            "dropped_empty_after_strip": self.dropped_empty_after_strip,
        }


def clean_corpus(
    sentences: Iterable[Sentence],
    expected_lang: LanguageTag,
    config: CleaningConfig = CleaningConfig(),
) -> tuple[Iterator[Sentence], CleaningReport]:
    """Apply strip -> language -> length to a sentence stream.

    Returns a lazy stream of the kept sentences (input order preserved,
    text replaced by its stripped form) and a report whose tallies fill in
    as the stream is consumed.
    """
    report = CleaningReport()

    def gen() -> Iterator[Sentence]:
        for sentence in sentences:
            report.input_count += 1
            text = strip_markup(sentence.text) if config.strip_markup else sentence.text
            if not text:
                report.dropped_empty_after_strip += 1
                continue
            verdict = detect_language(text, min_confidence=config.min_language_confidence)
            if verdict.lang is not expected_lang:
                report.dropped_language += 1
                continue
            cleaned = Sentence(text=text, lang=sentence.lang, id=sentence.id)
            if not length_filter(cleaned, config).keep:
                report.dropped_length += 1
                continue
            report.kept_count += 1
            yield cleaned

    return gen(), report
