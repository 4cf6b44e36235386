"""Turning word scores into output phrases: top anchors, radius windows,
same-sentence merging, and the phrase-block file format."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import CaseDocument, TokenSeq
from .embeddings import EmbeddingTable
from .model import ModelParams, ScoreSheet, score_document


class SelectionError(ValueError):
    """Unusable selection input (empty document, bad indices)."""


@dataclass(frozen=True)
class Anchor:
    sentence_index: int
    token_index: int
    score: float


@dataclass(frozen=True)
class ExtractedPhrase:
    sentence_index: int
    begin: int                 # inclusive token span within the sentence
    end: int                   # inclusive
    tokens: TokenSeq
    anchor_scores: tuple[float, ...]

    @property
    def max_anchor_score(self) -> float:
        return max(self.anchor_scores)


def select_anchors(score_arrays: Sequence[np.ndarray] | ScoreSheet, t: int) -> list[Anchor]:
    """The t highest-scored sentence-word positions.

    Only sentence-word scores participate (catchwords are unknown at
    inference). Ties break toward lower sentence index, then lower token
    index; documents with fewer than t tokens yield every position.
    """
    if t < 1:
        raise SelectionError(f"anchor count must be >= 1, got {t}")
    if isinstance(score_arrays, ScoreSheet):
        score_arrays = score_arrays.sentence_score_arrays()
    positions = [
        (float(scores[j]), si, j)
        for si, scores in enumerate(score_arrays)
        for j in range(len(scores))
    ]
    if not positions:
        raise SelectionError("cannot select anchors from an empty document")
    positions.sort(key=lambda p: (-p[0], p[1], p[2]))
    return [Anchor(sentence_index=si, token_index=j, score=s) for s, si, j in positions[:t]]


def extract_phrases(doc: CaseDocument, anchors: Sequence[Anchor], r: int) -> list[ExtractedPhrase]:
    """Radius-r token spans around each anchor, clipped at sentence bounds.

    Spans in the same sentence that overlap or touch merge into one phrase
    that keeps every constituent anchor score. Output is ordered by
    (sentence_index, begin) regardless of anchor order.
    """
    if r < 0:
        raise SelectionError(f"radius must be >= 0, got {r}")
    spans: list[tuple[int, int, int, float]] = []
    for a in anchors:
        if not (0 <= a.sentence_index < len(doc.sentences)):
            raise SelectionError(f"anchor sentence index {a.sentence_index} out of range")
        sentence = doc.sentences[a.sentence_index]
        if not (0 <= a.token_index < len(sentence)):
            raise SelectionError(
                f"anchor token index {a.token_index} out of range in sentence {a.sentence_index}")
        begin = max(0, a.token_index - r)
        end = min(len(sentence) - 1, a.token_index + r)
        spans.append((a.sentence_index, begin, end, a.score))

    spans.sort(key=lambda s: (s[0], s[1], s[2]))
    merged: list[list] = []
    for si, begin, end, score in spans:
        if merged and merged[-1][0] == si and begin <= merged[-1][2] + 1:
            merged[-1][2] = max(merged[-1][2], end)
            merged[-1][3].append(score)
        else:
            merged.append([si, begin, end, [score]])

    return [
        ExtractedPhrase(
            sentence_index=si,
            begin=begin,
            end=end,
            tokens=tuple(doc.sentences[si][begin: end + 1]),
            anchor_scores=tuple(scores),
        )
        for si, begin, end, scores in merged
    ]


def extract_for_document(params: ModelParams, emb: EmbeddingTable, doc: CaseDocument,
                         t: int, r: int) -> list[ExtractedPhrase]:
    """Score -> anchors -> phrases for one document (gold catchphrases,
    even when present, are never consulted)."""
    _, sheet = score_document(params, doc, emb)
    anchors = select_anchors(sheet, t)
    return extract_phrases(doc, anchors, r)


def write_phrases_file(path: str | Path,
                       extractions: Sequence[tuple[str, int, list[ExtractedPhrase]]],
                       header_lines: Sequence[str] = ()) -> None:
    """One block per document: a doc line with the anchor count, then one
    phrase per line as `sentence begin end max_score tokens...`."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for doc_id, anchor_count, phrases in extractions:
            fh.write(f"doc {doc_id} anchors={anchor_count}\n")
            for p in phrases:
                tokens = " ".join(p.tokens)
                fh.write(f"{p.sentence_index} {p.begin} {p.end} {p.max_anchor_score!r} {tokens}\n")
            fh.write("\n")


def read_phrases_file(path: str | Path) -> dict[str, list[TokenSeq]]:
    """Phrase token sequences per document id, in file order."""
    out: dict[str, list[TokenSeq]] = {}
    current: str | None = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("doc "):
            current = line.split()[1]
            out.setdefault(current, [])
            continue
        if current is None:
            raise SelectionError(f"{path}:{lineno}: phrase line before any doc header")
        parts = line.split()
        if len(parts) < 5:
            raise SelectionError(f"{path}:{lineno}: malformed phrase line")
        out[current].append(tuple(parts[4:]))
    return out
