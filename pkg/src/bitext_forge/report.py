"""Run reporting: a delimited summary plus figures rendered to files.

Reads whatever artifacts a run directory holds (manifest.jsonl,
selected.scores, evaluation entries) and writes a TSV summary next to PNG
figures: the selection score distribution, the cleaning drop breakdown,
and the BLEU n-gram precisions. Missing artifacts are skipped, so the
report works after any prefix of the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .corpus_io import ManifestEntry, read_manifest


@dataclass
class ReportArtifacts:
    summary_tsv: Path
    figures: list[Path] = field(default_factory=list)


def _read_scores(scores_path: Path) -> list[float]:
    scores = []
    with scores_path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                scores.append(float(line.split("\t")[1]))
    return scores


def _write_summary(entries: list[ManifestEntry], out_path: Path) -> None:
    with out_path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("run_id\tstep\ttimestamp\tcounts\tinputs\n")
        for entry in entries:
            counts = ",".join(f"{k}={v}" for k, v in sorted(entry.output_counts.items()))
            fh.write(
                f"{entry.run_id}\t{entry.step}\t{entry.timestamp}\t{counts}\t{len(entry.input_digests)}\n"
            )


def _plot_scores(scores: list[float], out_path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(scores, bins=50, color="steelblue", edgecolor="none")
    ax.set_xlabel("cosine similarity to domain centroid")
    ax.set_ylabel("selected sentences")
    ax.set_title(f"Selection scores (n={len(scores)})")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def _plot_cleaning(entry: ManifestEntry, out_path: Path) -> None:
    # counts are keyed "<lang>.<name>"; chart the drop reasons per language
    langs = sorted({key.split(".", 1)[0] for key in entry.output_counts if "." in key})
    reasons = ["kept", "dropped_language", "dropped_length", "dropped_empty_after_strip"]
    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.8 / max(len(langs), 1)
    for i, lang in enumerate(langs):
        values = [entry.output_counts.get(f"{lang}.{r}", 0) for r in reasons]
        positions = [j + i * width for j in range(len(reasons))]
        ax.bar(positions, values, width=width, label=lang)
    ax.set_xticks([j + width * (len(langs) - 1) / 2 for j in range(len(reasons))])
    ax.set_xticklabels(reasons, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("sentences")
    ax.set_title("Cleaning breakdown")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def _plot_bleu(entry: ManifestEntry, out_path: Path) -> None:
    precisions = [100 * float(p) for p in entry.parameters["precisions"].split("/")]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(1, len(precisions) + 1), precisions, color="darkseagreen")
    ax.set_xticks(range(1, len(precisions) + 1))
    ax.set_xlabel("n-gram order")
    ax.set_ylabel("clipped precision (%)")
    ax.set_title(f"BLEU = {entry.parameters['bleu']} (BP {entry.parameters['brevity_penalty']})")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def generate_report(run_dir: str | Path, out_dir: str | Path | None = None) -> ReportArtifacts:
    """Render the TSV summary and figures for ``run_dir``; returns their paths."""
    run_dir = Path(run_dir)
    out_dir = Path(out_dir) if out_dir else run_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest_path = run_dir / "manifest.jsonl"
    entries = read_manifest(manifest_path) if manifest_path.is_file() else []
    artifacts = ReportArtifacts(summary_tsv=out_dir / "report.tsv")
    _write_summary(entries, artifacts.summary_tsv)

    scores_path = run_dir / "selected.scores"
    if scores_path.is_file():
        scores = _read_scores(scores_path)
        if scores:
            fig_path = out_dir / "selection_scores.png"
            _plot_scores(scores, fig_path)
            artifacts.figures.append(fig_path)

    clean_entries = [e for e in entries if e.step == "clean"]
    if clean_entries:
        fig_path = out_dir / "cleaning_breakdown.png"
        _plot_cleaning(clean_entries[-1], fig_path)
        artifacts.figures.append(fig_path)

    eval_entries = [e for e in entries if e.step == "evaluate" and "precisions" in e.parameters]
    if eval_entries:
        fig_path = out_dir / "bleu_precisions.png"
        _plot_bleu(eval_entries[-1], fig_path)
        artifacts.figures.append(fig_path)

    return artifacts
