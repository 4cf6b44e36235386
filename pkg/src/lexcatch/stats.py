"""Per-document score statistics and constraint satisfaction reporting."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .config import substream
from .corpus import CaseDocument
from .embeddings import EmbeddingTable
from .model import ModelParams, score_catchwords_against, score_document

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DocStatsRow:
    doc_id: str
    e_s: float
    std_s: float
    e_c: float | None      # None when the document has no catchphrases
    std_c: float | None


@dataclass(frozen=True)
class PairStatsRow:
    doc_id: str
    neg_doc_id: str
    e_c_cross: float       # this doc's catchwords against the negative's feature
    e_s_neg: float         # the negative's own mean sentence-word score


@dataclass(frozen=True)
class SatisfactionRates:
    """Fraction of documents (pairs, for o2) meeting each constraint."""

    o1: float
    o2: float
    o3: float
    o4: float
    o5: float
    scored_docs: int
    scored_pairs: int
    variance_floor: float


def compute_corpus_stats(params: ModelParams, emb: EmbeddingTable,
                         docs: Sequence[CaseDocument], negative_set_size: int,
                         negatives_seed: int, variance_floor: float = 0.01,
                         ) -> tuple[list[DocStatsRow], list[PairStatsRow], SatisfactionRates]:
    """Score every document and a sampled set of cross-document pairings.

    Two passes keep memory flat: the first stores only each document's
    pooled feature, the second re-encodes one document at a time to score
    its catchwords against the sampled negatives' stored features.
    """
    rng = substream(negatives_seed, "stats-negatives")
    doc_rows: list[DocStatsRow] = []
    features: dict[str, np.ndarray] = {}
    for doc in docs:
        enc, sheet = score_document(params, doc, emb)
        features[doc.id] = enc.document_feature.data
        sent = sheet.all_sentence_scores().data
        e_s, std_s = float(sent.mean()), float(sent.std())
        if doc.catchphrases:
            catch = sheet.all_catchword_scores().data
            doc_rows.append(DocStatsRow(doc.id, e_s, std_s, float(catch.mean()), float(catch.std())))
        else:
            doc_rows.append(DocStatsRow(doc.id, e_s, std_s, None, None))

    own_mean = {row.doc_id: row.e_s for row in doc_rows}
    pair_rows: list[PairStatsRow] = []
    for i, doc in enumerate(docs):
        if not doc.catchphrases or len(docs) < 2:
            continue
        pool = [j for j in range(len(docs)) if j != i]
        take = min(negative_set_size, len(pool))
        chosen = rng.choice(len(pool), size=take, replace=False)
        enc, _ = score_document(params, doc, emb)
        for j in chosen:
            neg = docs[pool[int(j)]]
            cross = score_catchwords_against(params, enc, Tensor(features[neg.id]))
            e_c_cross = float(ag.concat(cross).data.mean())
            pair_rows.append(PairStatsRow(doc.id, neg.id, e_c_cross, own_mean[neg.id]))

    scored = [r for r in doc_rows if r.e_c is not None]
    n = len(scored)
    rates = SatisfactionRates(
        o1=sum(r.e_c > r.e_s for r in scored) / n if n else 0.0,
        o2=sum(p.e_c_cross < p.e_s_neg for p in pair_rows) / len(pair_rows) if pair_rows else 0.0,
        o3=sum(r.e_c + r.std_c > r.e_s + r.std_s for r in scored) / n if n else 0.0,
        o4=sum(r.e_c - r.std_c > r.e_s for r in scored) / n if n else 0.0,
        o5=sum(r.std_c > variance_floor and r.std_s > variance_floor for r in scored) / n if n else 0.0,
        scored_docs=n,
        scored_pairs=len(pair_rows),
        variance_floor=variance_floor,
    )
    return doc_rows, pair_rows, rates


def write_stats_csv(doc_rows: Sequence[DocStatsRow], pair_rows: Sequence[PairStatsRow],
                    path: str | Path, header_lines: Sequence[str] = ()) -> None:
    """Doc rows and pair rows in one CSV, distinguished by the `kind` column."""
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("kind,doc_id,neg_doc_id,e_c,std_c,e_s,std_s\n")
        for r in doc_rows:
            e_c = "" if r.e_c is None else repr(r.e_c)
            std_c = "" if r.std_c is None else repr(r.std_c)
            fh.write(f"doc,{r.doc_id},,{e_c},{std_c},{r.e_s!r},{r.std_s!r}\n")
        for p in pair_rows:
            fh.write(f"pair,{p.doc_id},{p.neg_doc_id},{p.e_c_cross!r},,{p.e_s_neg!r},\n")


def write_stats_summary(rates: SatisfactionRates, path: str | Path,
                        header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("constraint,satisfaction_rate,population\n")
        fh.write(f"o1,{rates.o1!r},{rates.scored_docs}\n")
        fh.write(f"o2,{rates.o2!r},{rates.scored_pairs}\n")
        fh.write(f"o3,{rates.o3!r},{rates.scored_docs}\n")
        fh.write(f"o4,{rates.o4!r},{rates.scored_docs}\n")
        fh.write(f"o5,{rates.o5!r},{rates.scored_docs}\n")
        fh.write(f"# o5 uses variance floor {rates.variance_floor!r}\n")
