"""Self-contained corpus-level BLEU-4, single reference.

bleu = 100 * BP * exp(1/4 * sum_n ln p_n) with the p_n clipped n-gram
precisions for n = 1..4 summed over the whole corpus, and
BP = 1 if hyp_len >= ref_len else exp(1 - ref_len/hyp_len).

No smoothing by default: any p_n = 0 zeroes the score. The optional
add-one smoothing adds 1 to matched and total for n >= 2 only, which keeps
tiny fixtures comparable without touching unigram precision. Chinese is
scored at character level and Vietnamese at whitespace-token level through
the shared tokenizer with case preserved, and the variant in use is
recorded in the run manifest so reported numbers stay interpretable.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .corpus_io import LanguageTag
from .tokenization import token_texts

MAX_NGRAM_ORDER = 4


class EvaluationInputError(ValueError):
    """Hypothesis/reference files unusable: mismatched line counts or empty."""


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Multiset of the contiguous n-grams of ``tokens``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def clipped_precision(
    hyps: Sequence[Sequence[str]],
    refs: Sequence[Sequence[str]],
    n: int,
) -> tuple[int, int]:
    """Corpus-wide (matched, total) n-gram counts with per-segment clipping.

    Each hypothesis n-gram count is capped at its count in the aligned
    reference before summing, so repetition cannot inflate precision.
    """
    if len(hyps) != len(refs):
        raise EvaluationInputError(f"segment count mismatch: {len(hyps)} hypotheses vs {len(refs)} references")
    if not hyps:
        raise EvaluationInputError("empty segment lists")
    matched = total = 0
    for hyp, ref in zip(hyps, refs):
        hyp_counts = ngram_counts(hyp, n)
        if not hyp_counts:
            continue
        ref_counts = ngram_counts(ref, n)
        total += sum(hyp_counts.values())
        matched += sum(min(count, ref_counts.get(gram, 0)) for gram, count in hyp_counts.items())
    return matched, total


@dataclass(frozen=True)
class BleuScore:
    bleu: float  # in [0, 100]
    precisions: tuple[float, float, float, float]  # each in [0, 1]
    brevity_penalty: float
    hyp_length: int
    ref_length: int

    def format(self) -> str:
        """One-line report, score at 2 decimals to match table conventions."""
        precisions = "/".join(f"{100 * p:.1f}" for p in self.precisions)
        return (
            f"BLEU = {self.bleu:.2f} ({precisions}, BP {self.brevity_penalty:.3f}, "
            f"hyp_len {self.hyp_length}, ref_len {self.ref_length})"
        )


def bleu_from_token_lists(
    hyps: Sequence[Sequence[str]],
    refs: Sequence[Sequence[str]],
    smooth: bool = False,
) -> BleuScore:
    """BLEU-4 over pre-tokenized segments; the file-level entry point wraps this."""
    if len(hyps) != len(refs):
        raise EvaluationInputError(f"segment count mismatch: {len(hyps)} hypotheses vs {len(refs)} references")
    if not hyps:
        raise EvaluationInputError("cannot score an empty corpus")

    hyp_len = sum(len(h) for h in hyps)
    ref_len = sum(len(r) for r in refs)

    precisions = []
    for n in range(1, MAX_NGRAM_ORDER + 1):
        matched, total = clipped_precision(hyps, refs, n)
        if smooth and n >= 2:
            matched, total = matched + 1, total + 1
        precisions.append(matched / total if total > 0 else 0.0)

    if hyp_len == 0:
        bp = 0.0
    elif hyp_len >= ref_len:
        bp = 1.0
    else:
        bp = math.exp(1.0 - ref_len / hyp_len)

    if any(p == 0.0 for p in precisions) or bp == 0.0:
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / MAX_NGRAM_ORDER)

    return BleuScore(
        bleu=score,
        precisions=tuple(precisions),
        brevity_penalty=bp,
        hyp_length=hyp_len,
        ref_length=ref_len,
    )


def bleu(
    hyp_file: str | Path,
    ref_file: str | Path,
    lang: LanguageTag,
    smooth: bool = False,
) -> BleuScore:
    """Corpus BLEU of two aligned line files, tokenized for ``lang`` with case kept."""
    hyp_lines = Path(hyp_file).read_text(encoding="utf-8").splitlines()
    ref_lines = Path(ref_file).read_text(encoding="utf-8").splitlines()
    if not hyp_lines or not ref_lines:
        raise EvaluationInputError(f"empty input: {hyp_file} has {len(hyp_lines)} lines, {ref_file} has {len(ref_lines)}")
    if len(hyp_lines) != len(ref_lines):
        raise EvaluationInputError(
            f"line count mismatch between {hyp_file} and {ref_file}: {len(hyp_lines)} vs {len(ref_lines)}"
        )
    hyps = [token_texts(line, lang, keep_case=True) for line in hyp_lines]
    refs = [token_texts(line, lang, keep_case=True) for line in ref_lines]
    return bleu_from_token_lists(hyps, refs, smooth=smooth)
