"""TF-IDF domain ranking: pick the monolingual sentences closest to the bitext.

Each sentence is one document. Document frequencies come from the
in-domain reference corpus (by default the same-language side of the
parallel training data, so idf measures domain salience and the table
stays small). A sentence's weight for term t is tf(t) * ln(n_docs/df(t)),
idf unsmoothed; df >= 1 by construction so the log is always defined, and
terms outside the table are ignored. Ranking is cosine similarity against
the mean of the reference corpus's L2-normalized vectors.

select_top_k streams: it keeps a bounded candidate heap of size k plus the
frozen table, never the whole corpus, so a 20M-line file costs the same
memory as a 20k-line one.
"""

from __future__ import annotations

import heapq
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .corpus_io import LanguageTag, Sentence
from .tokenization import token_texts

DEFAULT_SELECTION_K = 200_000

_DF_TABLE_FORMAT_VERSION = 1


class FrozenTableError(RuntimeError):
    """Scoring was attempted against an unfrozen table, or a frozen one was mutated."""


class EmptyCorpusError(ValueError):
    pass


class DfTable:
    """Term -> (term_id, document frequency) over a fixed document count.

    Built single-writer, then frozen; scoring operations require a frozen
    table, after which it is safely shareable read-only.
    """

    def __init__(self) -> None:
        self._terms: dict[str, tuple[int, int]] = {}
        self.n_docs = 0
        self.frozen = False
        self._idf: dict[str, tuple[int, float]] = {}

    def __len__(self) -> int:
        return len(self._terms)

    def __contains__(self, term: str) -> bool:
        return term in self._terms

    def add_document(self, terms: Iterable[str]) -> None:
        if self.frozen:
            raise FrozenTableError("cannot add documents to a frozen table")
        self.n_docs += 1
        for term in set(terms):
            entry = self._terms.get(term)
            if entry is None:
                self._terms[term] = (len(self._terms), 1)
            else:
                self._terms[term] = (entry[0], entry[1] + 1)

    def freeze(self) -> "DfTable":
        if self.n_docs == 0:
            raise EmptyCorpusError("df table built from an empty stream; idf is undefined")
        self.frozen = True
        n = self.n_docs
        self._idf = {term: (tid, math.log(n / df)) for term, (tid, df) in self._terms.items()}
        return self

    def df(self, term: str) -> int:
        entry = self._terms.get(term)
        return entry[1] if entry else 0

    def term_id(self, term: str) -> int | None:
        entry = self._terms.get(term)
        return entry[0] if entry else None

    def idf_map(self) -> dict[str, tuple[int, float]]:
        """term -> (term_id, idf); requires a frozen table."""
        self._require_frozen()
        return self._idf

    def _require_frozen(self) -> None:
        if not self.frozen:
            raise FrozenTableError("operation requires a frozen table; call freeze() first")

    def save(self, path: str | Path) -> None:
        self._require_frozen()
        payload = {
            "version": _DF_TABLE_FORMAT_VERSION,
            "n_docs": self.n_docs,
            "terms": [[term, tid, df] for term, (tid, df) in self._terms.items()],
        }
        Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DfTable":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("version") != _DF_TABLE_FORMAT_VERSION:
            raise ValueError(f"unsupported df table version {payload.get('version')!r}")
        table = cls()
        table.n_docs = int(payload["n_docs"])
        for term, tid, df in payload["terms"]:
            table._terms[term] = (int(tid), int(df))
        return table.freeze()


def build_df_table(sentences: Iterable[Sentence], lang: LanguageTag) -> DfTable:
    """Count in how many sentences each term appears (presence, not count)."""
    table = DfTable()
    for sentence in sentences:
        table.add_document(token_texts(sentence.text, lang))
    return table.freeze()


@dataclass(frozen=True)
class SparseVector:
    """term_id -> weight map with cached Euclidean norm; no zero entries stored."""

    entries: dict[int, float]
    norm: float

    @classmethod
    def from_weights(cls, weights: dict[int, float]) -> "SparseVector":
        entries = {tid: w for tid, w in weights.items() if w != 0.0}
        return cls(entries=entries, norm=math.sqrt(sum(w * w for w in entries.values())))

    def scaled(self, factor: float) -> "SparseVector":
        return SparseVector.from_weights({tid: w * factor for tid, w in self.entries.items()})

    def dot(self, other: "SparseVector") -> float:
        small, big = (self.entries, other.entries) if len(self.entries) <= len(other.entries) else (other.entries, self.entries)
        return sum(w * big[tid] for tid, w in small.items() if tid in big)


def tfidf_vector(sentence: Sentence, table: DfTable) -> SparseVector:
    """tf * ln(n_docs/df) weights for one sentence; out-of-table terms ignored."""
    idf_map = table.idf_map()
    weights: dict[int, float] = {}
    for term, tf in Counter(token_texts(sentence.text, sentence.lang)).items():
        entry = idf_map.get(term)
        if entry is None:
            continue
        tid, idf = entry
        if idf != 0.0:
            weights[tid] = tf * idf
    return SparseVector.from_weights(weights)


def domain_centroid(in_domain: Iterable[Sentence], table: DfTable) -> SparseVector:
    """Mean of the L2-normalized vectors of the reference sentences.

    Zero-norm sentences (nothing but out-of-table or zero-idf terms) carry
    no direction and are excluded from the mean.
    """
    table._require_frozen()
    sums: dict[int, float] = {}
    contributing = 0
    for sentence in in_domain:
        vec = tfidf_vector(sentence, table)
        if vec.norm == 0.0:
            continue
        contributing += 1
        inv = 1.0 / vec.norm
        for tid, w in vec.entries.items():
            sums[tid] = sums.get(tid, 0.0) + w * inv
    if contributing == 0:
        raise EmptyCorpusError("no domain signal: every reference sentence has a zero-norm vector")
    return SparseVector.from_weights({tid: s / contributing for tid, s in sums.items()})


def score_sentence(vec: SparseVector, centroid: SparseVector) -> float:
    """Cosine similarity in [0,1]; a zero-norm sentence vector scores 0."""
    if centroid.norm == 0.0:
        raise ValueError("centroid has zero norm; cannot score against it")
    if vec.norm == 0.0:
        return 0.0
    return vec.dot(centroid) / (vec.norm * centroid.norm)


@dataclass(frozen=True)
class ScoredSentence:
    sentence: Sentence
    score: float


def select_top_k(
    mono: Iterable[Sentence],
    centroid: SparseVector,
    table: DfTable,
    k: int,
) -> list[ScoredSentence]:
    """The k monolingual sentences most similar to the domain centroid.

    Descending score; ties broken by ascending sentence id (earlier wins).
    Exact-duplicate texts are deduplicated, keeping the earliest: web-crawl
    corpora repeat boilerplate, and identical text means identical score,
    so the dedup can live inside the bounded candidate set (any duplicate
    either ties with a live candidate or can no longer beat the heap
    minimum). Memory is O(k) candidates plus the table; the input stream is
    consumed once.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if centroid.norm == 0.0:
        raise ValueError("centroid has zero norm; cannot rank against it")

    idf_map = table.idf_map()
    centroid_entries = centroid.entries
    centroid_norm = centroid.norm

    # Min-heap of the current k best under (score desc, id asc): the heap
    # root is the weakest candidate, so the key inverts id.
    heap: list[tuple[float, int, int, str]] = []  # (score, -id, id, text)
    candidates: set[str] = set()  # texts of live candidates, for dedup
    lang = LanguageTag.OTHER

    for sentence in mono:
        text = sentence.text
        lang = sentence.lang
        tf = Counter(token_texts(text, sentence.lang))
        dot = 0.0
        norm_sq = 0.0
        for term, count in tf.items():
            entry = idf_map.get(term)
            if entry is None:
                continue
            tid, idf = entry
            if idf == 0.0:
                continue
            w = count * idf
            norm_sq += w * w
            c = centroid_entries.get(tid)
            if c is not None:
                dot += w * c
        score = dot / (math.sqrt(norm_sq) * centroid_norm) if norm_sq > 0.0 else 0.0

        if text in candidates:
            continue  # same text, same score; the earlier id wins
        item = (score, -sentence.id, sentence.id, text)
        if len(heap) < k:
            heapq.heappush(heap, item)
            candidates.add(text)
        elif item > heap[0]:
            evicted = heapq.heapreplace(heap, item)
            candidates.discard(evicted[3])
            candidates.add(text)

    ranked = sorted(heap, key=lambda item: (-item[0], item[2]))
    return [
        ScoredSentence(Sentence(text=text, lang=lang, id=sid), score)
        for score, _, sid, text in ranked
    ]
