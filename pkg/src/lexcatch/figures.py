"""Static figures rendered next to the delimited report outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .rouge import METRICS, RougeReport
from .stats import DocStatsRow, PairStatsRow


def render_score_stats(doc_rows: Sequence[DocStatsRow], pair_rows: Sequence[PairStatsRow],
                       path: str | Path, dpi: int = 150) -> None:
    """Mean +- std intervals per document: catchwords vs sentence words.

    Top panel pairs each document's catchword scores with its own sentence
    words; bottom panel shows the sampled cross-document pairings (means
    only). Documents without catchphrases are skipped.
    """
    scored = [r for r in doc_rows if r.e_c is not None]
    fig, (ax_same, ax_cross) = plt.subplots(2, 1, figsize=(11, 7))

    xs = range(len(scored))
    for i, row in enumerate(scored):
        ax_same.plot([i - 0.12, i - 0.12], [row.e_c - row.std_c, row.e_c + row.std_c],
                     color="tab:red", lw=1.2)
        ax_same.plot([i + 0.12, i + 0.12], [row.e_s - row.std_s, row.e_s + row.std_s],
                     color="tab:blue", lw=1.2)
    ax_same.plot([i - 0.12 for i in xs], [r.e_c for r in scored], "^",
                 color="tab:red", ms=4, label="catchwords (mean$\\pm$std)")
    ax_same.plot([i + 0.12 for i in xs], [r.e_s for r in scored], "v",
                 color="tab:blue", ms=4, label="sentence words (mean$\\pm$std)")
    ax_same.set_title("Same-document score statistics")
    ax_same.set_xlabel("document")
    ax_same.set_ylabel("word score")
    ax_same.set_ylim(0.0, 1.0)
    ax_same.legend(loc="best", fontsize=8)

    if pair_rows:
        px = range(len(pair_rows))
        ax_cross.plot(px, [p.e_c_cross for p in pair_rows], "^", color="tab:red",
                      ms=4, label="catchwords vs other document (mean)")
        ax_cross.plot(px, [p.e_s_neg for p in pair_rows], "v", color="tab:blue",
                      ms=4, label="other document's sentence words (mean)")
        ax_cross.legend(loc="best", fontsize=8)
    ax_cross.set_title("Cross-document score statistics (sampled pairings)")
    ax_cross.set_xlabel("pairing")
    ax_cross.set_ylabel("word score")
    ax_cross.set_ylim(0.0, 1.0)

    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)


def render_rouge_report(report: RougeReport, path: str | Path, dpi: int = 150) -> None:
    """Grouped bars of corpus-average precision/recall/F per metric."""
    fig, ax = plt.subplots(figsize=(7, 4))
    width = 0.25
    for offset, (field, label) in enumerate(
            (("precision", "Pre"), ("recall", "Rec"), ("f_measure", "Fm"))):
        values = [getattr(report.averages[m], field) for m in METRICS]
        ax.bar([i + (offset - 1) * width for i in range(len(METRICS))], values,
               width=width, label=label)
    ax.set_xticks(range(len(METRICS)))
    ax.set_xticklabels(METRICS)
    ax.set_ylabel("corpus macro-average")
    ax.set_title(f"Extraction quality over {len(report.per_document)} documents")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
