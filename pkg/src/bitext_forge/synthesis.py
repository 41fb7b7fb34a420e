"""Back-translation orchestration over a pluggable translation backend.

The real translation model lives behind the TranslationBackend contract
(an external serving process reached over HTTP, or a deterministic stub
for tests and dry runs). back_translate drives it batch by batch, keeps
the authentic monolingual text verbatim on the target side of each emitted
pair, and restores input order no matter how batches complete. Failed
batches are retried up to the configured limit, then dropped and tallied:
synthetic data is expendable, availability beats completeness.
"""

from __future__ import annotations

import hashlib
import itertools
import logging
from abc import ABC, abstractmethod
from collections import deque
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import requests

from .corpus_io import LanguageTag, PairOrigin, Sentence, SentencePair
from .tokenization import token_texts

logger = logging.getLogger(__name__)


class BackendError(Exception):
    """A translate_batch call failed; the batch may be retried."""


class BackendUnreachableError(BackendError):
    """The backend cannot be reached at all; retrying other batches is pointless."""


class ContractViolationError(BackendError):
    """The backend answered but broke the wire contract (e.g. length mismatch)."""


class TranslationBackend(ABC):
    """Batch text translation between two declared languages.

    translate_batch must return exactly one translation per input, in
    input order, and must tolerate concurrent calls.
    """

    src_lang: LanguageTag
    tgt_lang: LanguageTag

    @abstractmethod
    def translate_batch(self, texts: Sequence[str]) -> list[str]:
        raise NotImplementedError


class _StubBackend(TranslationBackend):
    def __init__(self, fn, src_lang: LanguageTag, tgt_lang: LanguageTag):
        self._fn = fn
        self.src_lang = src_lang
        self.tgt_lang = tgt_lang

    def translate_batch(self, texts: Sequence[str]) -> list[str]:
        return [self._fn(t) for t in texts]


def stub_backend(
    kind: str,
    src_lang: LanguageTag,
    tgt_lang: LanguageTag,
    mapping: dict[str, str] | None = None,
) -> TranslationBackend:
    """Deterministic test double: ``identity``, ``token_reverse`` or ``dictionary``.

    token_reverse reverses the token sequence of each sentence; dictionary
    maps tokens through ``mapping``, leaving unknown tokens unchanged.
    """
    if kind == "identity":
        return _StubBackend(lambda t: t, src_lang, tgt_lang)
    if kind == "token_reverse":
        return _StubBackend(
            lambda t: " ".join(reversed(token_texts(t, src_lang, keep_case=True))),
            src_lang,
            tgt_lang,
        )
    if kind == "dictionary":
        if mapping is None:
            raise ValueError("dictionary stub needs a token mapping")
        table = dict(mapping)
        return _StubBackend(
            lambda t: " ".join(table.get(tok, tok) for tok in token_texts(t, src_lang, keep_case=True)),
            src_lang,
            tgt_lang,
        )
    raise ValueError(f"unknown stub kind {kind!r} (expected identity, token_reverse or dictionary)")


class HttpBackend(TranslationBackend):
    """Client for an external translation service.

    Wire protocol: POST <endpoint>/translate with JSON
    {"src_lang": ..., "tgt_lang": ..., "texts": [...]} and a success
    response {"translations": [...]} of equal length. Optional bearer
    token. Timeouts and bad responses surface as batch errors; a refused
    connection surfaces as unreachable.
    """

    def __init__(
        self,
        endpoint_url: str,
        src_lang: LanguageTag,
        tgt_lang: LanguageTag,
        timeout: float = 60.0,
        auth_token: str | None = None,
    ):
        self.endpoint_url = endpoint_url.rstrip("/")
        self.src_lang = src_lang
        self.tgt_lang = tgt_lang
        self.timeout = timeout
        self._headers = {"Content-Type": "application/json"}
        if auth_token:
            self._headers["Authorization"] = f"Bearer {auth_token}"

    def translate_batch(self, texts: Sequence[str]) -> list[str]:
        body = {"src_lang": self.src_lang.value, "tgt_lang": self.tgt_lang.value, "texts": list(texts)}
        try:
            response = requests.post(
                f"{self.endpoint_url}/translate", json=body, headers=self._headers, timeout=self.timeout
            )
        except requests.exceptions.ConnectionError as exc:
            raise BackendUnreachableError(f"cannot reach {self.endpoint_url}: {exc}") from exc
        except requests.exceptions.Timeout as exc:
            raise BackendError(f"timeout after {self.timeout}s talking to {self.endpoint_url}") from exc
        if response.status_code < 200 or response.status_code >= 300:
            raise BackendError(f"backend returned HTTP {response.status_code}")
        try:
            translations = response.json()["translations"]
        except (ValueError, KeyError) as exc:
            raise ContractViolationError(f"malformed backend response: {exc}") from exc
        if not isinstance(translations, list) or len(translations) != len(texts):
            raise ContractViolationError(
                f"backend returned {len(translations) if isinstance(translations, list) else 'non-list'} "
                f"translations for {len(texts)} inputs"
            )
        return [str(t) for t in translations]


def http_backend(
    endpoint_url: str,
    src_lang: LanguageTag,
    tgt_lang: LanguageTag,
    timeout: float = 60.0,
    auth_token: str | None = None,
) -> TranslationBackend:
    return HttpBackend(endpoint_url, src_lang, tgt_lang, timeout=timeout, auth_token=auth_token)


@dataclass(frozen=True)
class SynthesisConfig:
    batch_size: int = 16
    max_in_flight_batches: int = 4
    retry_limit: int = 2
    direction: tuple[LanguageTag, LanguageTag] = (LanguageTag.ZH, LanguageTag.VI)  # mono -> translated

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_in_flight_batches < 1:
            raise ValueError(f"max_in_flight_batches must be >= 1, got {self.max_in_flight_batches}")
        if self.retry_limit < 0:
            raise ValueError(f"retry_limit must be >= 0, got {self.retry_limit}")


@dataclass
class SynthesisReport:
    emitted_pairs: int = 0
    failed_batches: int = 0
    dropped_sentences: int = 0


def _batched(stream: Iterable[Sentence], size: int) -> Iterator[list[Sentence]]:
    it = iter(stream)
    while batch := list(itertools.islice(it, size)):
        yield batch


def back_translate(
    selected: Iterable[Sentence],
    backend: TranslationBackend,
    config: SynthesisConfig = SynthesisConfig(),
) -> tuple[Iterator[SentencePair], SynthesisReport]:
    """Synthesize pairs: machine translation on the source side, the
    authentic monolingual text verbatim on the target side.

    Up to max_in_flight_batches requests run concurrently; a reordering
    window emits pairs strictly in input order, so two runs over the same
    input with a deterministic backend are byte-identical. Batches that
    still fail after retry_limit retries are dropped and tallied in the
    report; an unreachable backend aborts the stream after retries.

    Returns the lazy pair stream and a report whose counts fill in as the
    stream is consumed.
    """
    report = SynthesisReport()

    def attempt(texts: list[str]) -> list[str]:
        for remaining in range(config.retry_limit, -1, -1):
            try:
                return backend.translate_batch(texts)
            except BackendUnreachableError:
                if remaining == 0:
                    raise
                logger.warning("backend unreachable, retrying (%d retries left)", remaining)
            except BackendError as exc:
                if remaining == 0:
                    raise
                logger.warning("batch failed (%s), retrying (%d retries left)", exc, remaining)
        raise AssertionError("unreachable")

    def gen() -> Iterator[SentencePair]:
        if backend.src_lang not in (LanguageTag.VI, LanguageTag.ZH):
            raise ValueError(f"backend source language {backend.src_lang.value!r} is not a pipeline language")
        with ThreadPoolExecutor(max_workers=config.max_in_flight_batches) as pool:
            window: deque[tuple[list[Sentence], Future]] = deque()

            def drain_one() -> Iterator[SentencePair]:
                batch, future = window.popleft()
                try:
                    translations = future.result()
                except BackendUnreachableError:
                    for _, pending in window:
                        pending.cancel()
                    raise
                except BackendError as exc:
                    report.failed_batches += 1
                    report.dropped_sentences += len(batch)
                    logger.warning("dropping batch of %d after retries: %s", len(batch), exc)
                    return
                for sentence, translated in zip(batch, translations):
                    if sentence.lang != backend.src_lang:
                        raise ValueError(
                            f"sentence language {sentence.lang.value!r} does not match "
                            f"backend source language {backend.src_lang.value!r}"
                        )
                    pair = SentencePair(
                        source=Sentence(translated, backend.tgt_lang, sentence.id),
                        target=sentence,
                        origin=PairOrigin.SYNTHETIC,
                    )
                    report.emitted_pairs += 1
                    yield pair

            for batch in _batched(selected, config.batch_size):
                texts = [s.text for s in batch]
                window.append((batch, pool.submit(attempt, texts)))
                if len(window) >= config.max_in_flight_batches:
                    yield from drain_one()
            while window:
                yield from drain_one()

    return gen(), report


def _pair_key(pair: SentencePair) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    h.update(pair.source.text.encode("utf-8"))
    h.update(b"\x1f")
    h.update(pair.target.text.encode("utf-8"))
    return h.digest()


def _check_same_languages(a: SentencePair, b: SentencePair) -> None:
    if (a.source.lang, a.target.lang) != (b.source.lang, b.target.lang):
        raise ValueError(
            f"cannot merge streams with different language pairs: "
            f"{a.source.lang.value}-{a.target.lang.value} vs {b.source.lang.value}-{b.target.lang.value}"
        )


def merge_corpora(
    original: Iterable[SentencePair],
    synthetic: Iterable[SentencePair],
    strategy: str = "concat",
    interleave_ratio: int = 1,
) -> Iterator[SentencePair]:
    """Combine the authentic bitext with synthesized pairs.

    ``concat`` streams the original corpus first, then the synthetic one.
    ``interleave`` emits interleave_ratio synthetic pairs after each
    original pair until one stream runs dry, then the remainder; it holds
    the original corpus in memory (the bitext is the small side), while
    concat is fully streaming.

    A synthetic pair whose (source, target) texts exactly match an
    original pair is dropped: authentic data outranks synthetic. Origin
    tags are preserved.
    """
    if strategy not in ("concat", "interleave"):
        raise ValueError(f"unknown merge strategy {strategy!r}")
    if strategy == "interleave" and interleave_ratio < 1:
        raise ValueError(f"interleave_ratio must be >= 1, got {interleave_ratio}")

    synthetic_it = iter(synthetic)
    first_synthetic = next(synthetic_it, None)
    seen: set[bytes] = set()
    reference: SentencePair | None = None

    def synthetic_stream() -> Iterator[SentencePair]:
        head = [] if first_synthetic is None else [first_synthetic]
        for pair in itertools.chain(head, synthetic_it):
            if reference is not None:
                _check_same_languages(reference, pair)
            if _pair_key(pair) in seen:
                continue
            yield pair

    if strategy == "concat":

        def gen() -> Iterator[SentencePair]:
            nonlocal reference
            for pair in original:
                if first_synthetic is not None:
                    _check_same_languages(pair, first_synthetic)
                reference = pair
                seen.add(_pair_key(pair))
                yield pair
            yield from synthetic_stream()

        return gen()

    originals = list(original)
    for pair in originals:
        if first_synthetic is not None:
            _check_same_languages(pair, first_synthetic)
        seen.add(_pair_key(pair))
    reference = originals[0] if originals else None

    def gen_interleave() -> Iterator[SentencePair]:
        synth = synthetic_stream()
        for pair in originals:
            yield pair
            yield from itertools.islice(synth, interleave_ratio)
        yield from synth

    return gen_interleave()
