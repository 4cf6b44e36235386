"""ROUGE-1, ROUGE-SU (bounded-gap skip bigrams + unigrams), and ROUGE-W
(weighted LCS), with per-document scores and corpus macro-averages.

All three metrics use clipped multiset matching and the harmonic F-measure.
ROUGE-W here computes the exact optimum over common subsequences: the
textbook recurrence that always extends a diagonal match is not optimal for
convex run weights, and these scores are verified against exhaustive
oracles, so the implementation enumerates run lengths at each match cell
(sound because l^w is strictly superadditive for w > 1).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

METRICS = ("ROUGE-1", "ROUGE-SU6", "ROUGE-W-1.2")

_BOS = "\x00bos"  # begin marker; NUL prefix cannot collide with real tokens


class EvaluationError(ValueError):
    """Candidate/reference document sets do not line up."""


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f_measure: float

    @classmethod
    def from_counts(cls, overlap: float, candidate_total: float, reference_total: float) -> "RougeScore":
        p = overlap / candidate_total if candidate_total > 0 else 0.0
        r = overlap / reference_total if reference_total > 0 else 0.0
        return cls(precision=p, recall=r, f_measure=_f_measure(p, r))


def _f_measure(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def rouge_1(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    """Clipped unigram overlap; empty sides score zero by convention."""
    c_counts = Counter(candidate)
    r_counts = Counter(reference)
    overlap = sum(min(n, r_counts[tok]) for tok, n in c_counts.items())
    return RougeScore.from_counts(overlap, len(candidate), len(reference))


def _su_units(tokens: Sequence[str], max_skip: int) -> Counter:
    """Skip bigrams of [BOS]+tokens with at most max_skip intervening tokens.

    The begin marker realizes the unigram units: (BOS, tok) pairs stand in
    for the unigrams within reach of the marker.
    """
    seq = [_BOS, *tokens]
    units: Counter = Counter()
    for i, first in enumerate(seq):
        for j in range(i + 1, min(len(seq), i + 2 + max_skip)):
            units[(first, seq[j])] += 1
    return units


def rouge_su(candidate: Sequence[str], reference: Sequence[str], max_skip: int = 6) -> RougeScore:
    """Skip-bigram-plus-unigram overlap with a bounded gap."""
    if max_skip < 1:
        raise ValueError(f"max_skip must be >= 1, got {max_skip}")
    if not candidate or not reference:
        return RougeScore(0.0, 0.0, 0.0)
    c_units = _su_units(candidate, max_skip)
    r_units = _su_units(reference, max_skip)
    overlap = sum(min(n, r_units[u]) for u, n in c_units.items())
    return RougeScore.from_counts(overlap, sum(c_units.values()), sum(r_units.values()))


def _weighted_lcs(x: Sequence[str], y: Sequence[str], weight: float) -> float:
    """Exact maximum of sum(len(run)^weight) over common subsequences."""
    m, n = len(x), len(y)
    # runlen[i][j): length of the exact diagonal match starting at (i, j).
    runlen = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        row = runlen[i]
        nxt = runlen[i + 1]
        xi = x[i]
        for j in range(n - 1, -1, -1):
            if xi == y[j]:
                row[j] = nxt[j + 1] + 1
    powers = [float(l) ** weight for l in range(min(m, n) + 1)]
    best = [[0.0] * (n + 1) for _ in range(m + 1)]
    for i in range(m - 1, -1, -1):
        brow = best[i]
        bnxt = best[i + 1]
        rrow = runlen[i]
        for j in range(n - 1, -1, -1):
            value = bnxt[j] if bnxt[j] >= brow[j + 1] else brow[j + 1]
            run = rrow[j]
            if run:
                # Stop the run at any length; continuing past it is covered
                # by longer l, and restarting adjacently is never optimal.
                for l in range(1, run + 1):
                    candidate_value = powers[l] + best[i + l][j + l]
                    if candidate_value > value:
                        value = candidate_value
            brow[j] = value
    return best[0][0]


def rouge_w(candidate: Sequence[str], reference: Sequence[str], weight: float = 1.2) -> RougeScore:
    """Weighted LCS score rewarding consecutive matches with f(l) = l^weight."""
    if weight <= 1.0:
        raise ValueError(f"weight must exceed 1, got {weight}")
    if not candidate or not reference:
        return RougeScore(0.0, 0.0, 0.0)
    wlcs = _weighted_lcs(candidate, reference, weight)
    inv = 1.0 / weight
    p = (wlcs / len(candidate) ** weight) ** inv
    r = (wlcs / len(reference) ** weight) ** inv
    return RougeScore(precision=p, recall=r, f_measure=_f_measure(p, r))


def score_pair(candidate: Sequence[str], reference: Sequence[str]) -> dict[str, RougeScore]:
    return {
        "ROUGE-1": rouge_1(candidate, reference),
        "ROUGE-SU6": rouge_su(candidate, reference, max_skip=6),
        "ROUGE-W-1.2": rouge_w(candidate, reference, weight=1.2),
    }


@dataclass
class RougeReport:
    per_document: dict[str, dict[str, RougeScore]]
    averages: dict[str, RougeScore]


def evaluate_corpus(extractions: Mapping[str, Sequence[Sequence[str]]],
                    golds: Mapping[str, Sequence[Sequence[str]]]) -> RougeReport:
    """Document-level scores plus macro-averages over the corpus.

    The candidate is the concatenation of a document's extracted phrases in
    output order; the reference concatenates its gold catchphrases in
    document order. Token comparison is case-insensitive (folded here, for
    metric purposes only).
    """
    missing = sorted(set(golds) - set(extractions))
    extra = sorted(set(extractions) - set(golds))
    if missing or extra:
        raise EvaluationError(
            f"document sets differ: missing from extractions {missing}, unknown to gold {extra}")
    per_document: dict[str, dict[str, RougeScore]] = {}
    for doc_id in sorted(golds):
        candidate = [tok.lower() for phrase in extractions[doc_id] for tok in phrase]
        reference = [tok.lower() for phrase in golds[doc_id] for tok in phrase]
        per_document[doc_id] = score_pair(candidate, reference)
    n = len(per_document)
    averages = {}
    for metric in METRICS:
        averages[metric] = RougeScore(
            precision=sum(s[metric].precision for s in per_document.values()) / n,
            recall=sum(s[metric].recall for s in per_document.values()) / n,
            f_measure=sum(s[metric].f_measure for s in per_document.values()) / n,
        ) if n else RougeScore(0.0, 0.0, 0.0)
    return RougeReport(per_document=per_document, averages=averages)


def write_report_text(report: RougeReport, path: str | Path,
                      header_lines: Sequence[str] = ()) -> None:
    """Aligned plain-text table: Pre/Rec/Fm columns per metric."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(f"{'':12s}" + "".join(f"{m:>30s}" for m in METRICS) + "\n")
        fh.write(f"{'':12s}" + "".join(f"{'Pre':>10s}{'Rec':>10s}{'Fm':>10s}" for _ in METRICS) + "\n")
        fh.write(f"{'Average':12s}" + "".join(
            f"{report.averages[m].precision:>10.4f}"
            f"{report.averages[m].recall:>10.4f}"
            f"{report.averages[m].f_measure:>10.4f}"
            for m in METRICS) + "\n")
        fh.write(f"(macro-average over {len(report.per_document)} documents)\n")


def write_report_csv(report: RougeReport, path: str | Path,
                     header_lines: Sequence[str] = ()) -> None:
    columns = []
    for metric in METRICS:
        tag = metric.lower().replace("-", "_").replace(".", "")
        columns += [f"{tag}_pre", f"{tag}_rec", f"{tag}_fm"]
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("doc_id," + ",".join(columns) + "\n")

        def row(name: str, scores: dict[str, RougeScore]) -> str:
            cells = []
            for metric in METRICS:
                s = scores[metric]
                cells += [repr(s.precision), repr(s.recall), repr(s.f_measure)]
            return name + "," + ",".join(cells) + "\n"

        fh.write(row("AVERAGE", report.averages))
        for doc_id in sorted(report.per_document):
            fh.write(row(doc_id, report.per_document[doc_id]))
