"""Reading, writing, and streaming of monolingual and parallel corpora.

All corpus files are UTF-8 with LF line endings, one sentence per line.
A parallel corpus lives in two aligned line files named ``<stem>.<lang>``
(e.g. ``train.vi`` / ``train.zh``). Readers are generators and never hold
more than a constant number of lines in memory, so multi-million-line
corpora stream through untouched.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)


class LanguageTag(Enum):
    """Language identity used throughout the pipeline.

    Only ``vi`` and ``zh`` are accepted as pipeline source/target
    languages; ``other`` is a rejection class assigned by the detector.
    """

    VI = "vi"
    ZH = "zh"
    OTHER = "other"

    @classmethod
    def parse(cls, code: str) -> "LanguageTag":
        try:
            return cls(code)
        except ValueError:
            raise ValueError(f"unknown language tag {code!r} (expected vi, zh or other)") from None


PIPELINE_LANGS = (LanguageTag.VI, LanguageTag.ZH)


class PairOrigin(Enum):
    ORIGINAL = "original"
    SYNTHETIC = "synthetic"


class CorpusAlignmentError(Exception):
    """Two sides of a parallel corpus have different line counts."""


@dataclass(frozen=True)
class Sentence:
    """One line of a corpus: newline-free text, language tag, line ordinal.

    ``id`` is the 0-based line number in the originating file, so it is
    unique and monotonically increasing within a stream even when invalid
    lines are skipped.
    """

    text: str
    lang: LanguageTag
    id: int


@dataclass(frozen=True)
class SentencePair:
    source: Sentence
    target: Sentence
    origin: PairOrigin = PairOrigin.ORIGINAL

    def __post_init__(self) -> None:
        if self.source.lang == self.target.lang:
            raise ValueError(f"parallel pair needs two languages, got {self.source.lang.value} on both sides")
        for side in (self.source, self.target):
            if side.lang not in PIPELINE_LANGS:
                raise ValueError(f"pair side has non-pipeline language {side.lang.value!r}")


def read_monolingual(path: str | Path, lang: LanguageTag) -> Iterator[Sentence]:
    """Stream sentences from a one-per-line UTF-8 file.

    Lines that are not valid UTF-8 are logged and skipped; valid lines are
    yielded in file order with their 0-based line number as ``id``. A
    missing file raises the usual ``FileNotFoundError``.
    """
    path = Path(path)
    with path.open("rb") as fh:
        for lineno, raw in enumerate(fh):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                logger.warning("%s:%d: skipping undecodable line (%s)", path, lineno, exc)
                continue
            yield Sentence(text=text.rstrip("\r\n"), lang=lang, id=lineno)


def count_invalid_lines(path: str | Path) -> int:
    """Number of lines in ``path`` that are not valid UTF-8."""
    bad = 0
    with Path(path).open("rb") as fh:
        for raw in fh:
            try:
                raw.decode("utf-8")
            except UnicodeDecodeError:
                bad += 1
    return bad


def read_parallel(
    source_path: str | Path,
    target_path: str | Path,
    src_lang: LanguageTag,
    tgt_lang: LanguageTag,
    origin: PairOrigin = PairOrigin.ORIGINAL,
) -> Iterator[SentencePair]:
    """Stream aligned pairs from two line files, zipped line-by-line.

    Raises CorpusAlignmentError (reporting both line counts) as soon as one
    file ends before the other.
    """
    source_path, target_path = Path(source_path), Path(target_path)
    with source_path.open("r", encoding="utf-8") as src_fh, target_path.open("r", encoding="utf-8") as tgt_fh:
        lineno = 0
        while True:
            src_line = src_fh.readline()
            tgt_line = tgt_fh.readline()
            if not src_line and not tgt_line:
                return
            if not src_line or not tgt_line:
                # one side ended early: count the rest for the diagnostic
                longer = src_fh if not tgt_line else tgt_fh
                extra = 1 + sum(1 for _ in longer)
                src_count = lineno + (extra if not tgt_line else 0)
                tgt_count = lineno + (extra if not src_line else 0)
                raise CorpusAlignmentError(
                    f"line count mismatch between {source_path} and {target_path}: "
                    f"{src_count} vs {tgt_count}"
                )
            yield SentencePair(
                source=Sentence(src_line.rstrip("\r\n"), src_lang, lineno),
                target=Sentence(tgt_line.rstrip("\r\n"), tgt_lang, lineno),
                origin=origin,
            )
            lineno += 1


@dataclass
class WriteCounts:
    written: int = 0
    rejected: int = 0


def write_parallel(
    pairs: Iterable[SentencePair],
    source_path: str | Path,
    target_path: str | Path,
) -> WriteCounts:
    """Write a pair stream to two aligned line files.

    Pairs whose text contains a raw newline would break the one-sentence-
    per-line format; they are rejected with a diagnostic and counted, never
    written. Round-trip with read_parallel is identity on text fields.
    """
    source_path, target_path = Path(source_path), Path(target_path)
    counts = WriteCounts()
    with source_path.open("w", encoding="utf-8", newline="\n") as src_fh, target_path.open(
        "w", encoding="utf-8", newline="\n"
    ) as tgt_fh:
        for pair in pairs:
            if "\n" in pair.source.text or "\n" in pair.target.text:
                logger.warning("rejecting pair %d: text contains a raw newline", pair.target.id)
                counts.rejected += 1
                continue
            src_fh.write(pair.source.text + "\n")
            tgt_fh.write(pair.target.text + "\n")
            counts.written += 1
    return counts


def write_monolingual(sentences: Iterable[Sentence], path: str | Path) -> int:
    """Write sentences one per line; returns the number of lines written."""
    n = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for sentence in sentences:
            if "\n" in sentence.text:
                logger.warning("rejecting sentence %d: text contains a raw newline", sentence.id)
                continue
            fh.write(sentence.text + "\n")
            n += 1
    return n


def file_digest(path: str | Path) -> str:
    """Hex SHA-256 of the file's bytes, streamed in 1 MiB chunks."""
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# Model hyperparameters recorded as provenance metadata in every manifest
# entry. These describe the external translation model this toolkit feeds;
# nothing in the pipeline executes them.
RECORDED_MODEL_HYPERPARAMETERS = {
    "model.max_sequence_length": "100",
    "model.batch_size": "16",
    "model.epochs": "4",
    "model.learning_rate": "4e-5",
    "model.weight_decay": "1e-8",
    "model.beam_size": "4",
}


@dataclass
class ManifestEntry:
    """One provenance record: which step ran, on what, with what outcome."""

    run_id: str
    step: str
    input_digests: dict[str, str] = field(default_factory=dict)
    parameters: dict[str, str] = field(default_factory=dict)
    output_counts: dict[str, int] = field(default_factory=dict)
    timestamp: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "run_id": self.run_id,
                "step": self.step,
                "input_digests": self.input_digests,
                "parameters": self.parameters,
                "output_counts": self.output_counts,
                "timestamp": self.timestamp,
            },
            ensure_ascii=False,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> "ManifestEntry":
        obj = json.loads(line)
        return cls(
            run_id=obj["run_id"],
            step=obj["step"],
            input_digests=dict(obj.get("input_digests", {})),
            parameters=dict(obj.get("parameters", {})),
            output_counts={k: int(v) for k, v in obj.get("output_counts", {}).items()},
            timestamp=obj.get("timestamp", ""),
        )


def append_manifest(manifest_path: str | Path, entry: ManifestEntry) -> None:
    """Append one entry to a JSON-lines manifest. Prior entries are never touched."""
    with Path(manifest_path).open("a", encoding="utf-8", newline="\n") as fh:
        fh.write(entry.to_json() + "\n")


def read_manifest(manifest_path: str | Path) -> list[ManifestEntry]:
    entries = []
    with Path(manifest_path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(ManifestEntry.from_json(line))
    return entries


def export_tsv(
    source_path: str | Path,
    target_path: str | Path,
    out_path: str | Path,
) -> WriteCounts:
    """Export a two-file parallel corpus as TSV (source<TAB>target per line).

    TSV cannot represent tabs inside sentences, which is why it is only an
    interoperability export: embedded tabs are replaced by single spaces
    and counted in ``rejected``.
    """
    counts = WriteCounts()
    pairs = read_parallel(source_path, target_path, LanguageTag.VI, LanguageTag.ZH)
    with Path(out_path).open("w", encoding="utf-8", newline="\n") as out_fh:
        for pair in pairs:
            src, tgt = pair.source.text, pair.target.text
            if "\t" in src or "\t" in tgt:
                src, tgt = src.replace("\t", " "), tgt.replace("\t", " ")
                counts.rejected += 1
            out_fh.write(f"{src}\t{tgt}\n")
            counts.written += 1
    return counts
