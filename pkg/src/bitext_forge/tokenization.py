"""Deterministic tokenization for Vietnamese and Chinese.

Vietnamese splits on whitespace, then peels leading/trailing punctuation
characters off each chunk into their own tokens. Chinese is character
level: every Han ideograph is one token, contiguous Latin/digit runs stay
single tokens, punctuation is split. Chinese is deliberately tokenized per
ideograph instead of through a word segmenter: it is fully reproducible,
needs no model, and character granularity is standard for zh TF-IDF and
BLEU. Swap in a segmenter by providing another callable with the same
shape if that trade-off changes.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum

from .corpus_io import LanguageTag

# Main Han ranges: URO, Extension A, Compatibility Ideographs.
_HAN_RANGES = ((0x4E00, 0x9FFF), (0x3400, 0x4DBF), (0xF900, 0xFAFF), (0x20000, 0x2A6DF))


def is_han(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _HAN_RANGES)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


class TokenKind(Enum):
    WORD = "word"
    HAN_CHAR = "han_char"
    NUMBER = "number"
    PUNCT = "punct"


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind


def _classify(text: str) -> TokenKind:
    if len(text) == 1:
        if is_han(text):
            return TokenKind.HAN_CHAR
        if _is_punct(text):
            return TokenKind.PUNCT
    if text.isdigit():
        return TokenKind.NUMBER
    return TokenKind.WORD


def _tokenize_vi(text: str) -> list[str]:
    out: list[str] = []
    for chunk in text.split():
        i, j = 0, len(chunk)
        while i < j and _is_punct(chunk[i]):
            out.append(chunk[i])
            i += 1
        trailing: list[str] = []
        while j > i and _is_punct(chunk[j - 1]):
            trailing.append(chunk[j - 1])
            j -= 1
        if i < j:
            out.append(chunk[i:j])
        out.extend(reversed(trailing))
    return out


def _tokenize_zh(text: str) -> list[str]:
    out: list[str] = []
    run: list[str] = []  # pending Latin/digit run
    for ch in text:
        if is_han(ch):
            if run:
                out.append("".join(run))
                run = []
            out.append(ch)
        elif ch.isspace():
            if run:
                out.append("".join(run))
                run = []
        elif _is_punct(ch):
            if run:
                out.append("".join(run))
                run = []
            out.append(ch)
        else:
            run.append(ch)
    if run:
        out.append("".join(run))
    return out


def token_texts(text: str, lang: LanguageTag, keep_case: bool = False) -> list[str]:
    """Token strings only, without Token objects; the hot path for scoring.

    Latin script is lowercased unless ``keep_case`` is set (BLEU wants the
    original casing, TF-IDF does not).
    """
    if not keep_case:
        text = text.lower()
    if lang is LanguageTag.ZH:
        return _tokenize_zh(text)
    return _tokenize_vi(text)


def tokenize(text: str, lang: LanguageTag, keep_case: bool = False) -> list[Token]:
    """Tokenize ``text``; empty input yields an empty sequence."""
    return [Token(t, _classify(t)) for t in token_texts(text, lang, keep_case)]


def count_words(text: str, lang: LanguageTag) -> int:
    """Number of word-like tokens; punctuation tokens are not words."""
    return sum(1 for t in token_texts(text, lang, keep_case=True) if _classify(t) is not TokenKind.PUNCT)
