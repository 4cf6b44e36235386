"""Synthetic legal-ish corpus for desk-scale tests.

Mimics the structure that makes real catchphrases learnable: subject areas
(topic bundles) recur across cases, each case draws its catchphrases from
its areas' vocabulary, and every catchphrase is echoed verbatim inside one
of the case's sentences (catchphrases summarize text that is actually
there). Sentence filler is drawn from a shared common vocabulary.
Everything is seeded.
"""

from __future__ import annotations

import numpy as np

from lexcatch.corpus import CaseDocument
from lexcatch.embeddings import EmbeddingTable

# The filler vocabulary is small enough to saturate every document, so the
# pooled document feature varies only through the recurring subject areas —
# like stopwords, filler carries no document identity.
COMMON = [f"c{i:03d}" for i in range(20)]
N_BUNDLES = 16
BUNDLE_SIZE = 6
TOPIC = [f"t{i:03d}" for i in range(N_BUNDLES * BUNDLE_SIZE)]
BUNDLES = [TOPIC[i * BUNDLE_SIZE:(i + 1) * BUNDLE_SIZE] for i in range(N_BUNDLES)]
PUNCT = ["-", ",", ";"]
VOCAB = COMMON + TOPIC + PUNCT


def build_embeddings(dim: int, seed: int = 2024, scale: float = 0.7) -> EmbeddingTable:
    """Topic words get well-separated vectors; filler and punctuation each
    cluster tightly around a shared direction (as frequent words do), so
    filler text carries almost no document identity."""
    rng = np.random.default_rng(seed)
    matrix = np.empty((len(VOCAB), dim))
    mu_common = rng.normal(0.0, scale, size=dim)
    mu_punct = rng.normal(0.0, scale, size=dim)
    for i, token in enumerate(VOCAB):
        if token in PUNCT:
            matrix[i] = mu_punct + rng.normal(0.0, 0.1 * scale, size=dim)
        elif token.startswith("c"):
            matrix[i] = mu_common + rng.normal(0.0, 0.1 * scale, size=dim)
        else:
            matrix[i] = rng.normal(0.0, scale, size=dim)
    return EmbeddingTable(dim, {t: i for i, t in enumerate(VOCAB)}, matrix)


def _common_run(rng: np.random.Generator, n: int) -> list[str]:
    out = []
    for i in rng.integers(0, len(COMMON), size=n):
        if rng.random() < 0.05:
            out.append(PUNCT[int(rng.integers(0, len(PUNCT)))])
        else:
            out.append(COMMON[int(i)])
    return out


def make_document(doc_id: str, year: int, rng: np.random.Generator) -> CaseDocument:
    area = int(rng.integers(0, N_BUNDLES))
    topic = BUNDLES[area]

    catchphrases = []
    for _ in range(int(rng.integers(2, 5))):
        length = int(rng.integers(2, 6))
        phrase = []
        for _ in range(length):
            roll = rng.random()
            if roll < 0.90:
                phrase.append(topic[int(rng.integers(0, len(topic)))])
            elif roll < 0.97:
                phrase.append(COMMON[int(rng.integers(0, len(COMMON)))])
            else:
                phrase.append(PUNCT[int(rng.integers(0, len(PUNCT)))])
        catchphrases.append(tuple(phrase))

    n_sentences = int(rng.integers(10, 17))
    sentences = [_common_run(rng, int(rng.integers(8, 15))) for _ in range(n_sentences)]
    # every catchphrase is echoed verbatim inside one sentence
    hosts = rng.choice(n_sentences, size=len(catchphrases), replace=False)
    for phrase, host in zip(catchphrases, hosts):
        sentence = sentences[int(host)]
        at = int(rng.integers(0, max(1, len(sentence) - len(phrase) + 1)))
        sentence[at: at + len(phrase)] = list(phrase)

    return CaseDocument(id=doc_id, year=year,
                        sentences=tuple(tuple(s) for s in sentences),
                        catchphrases=tuple(catchphrases))


def make_corpus(n_train: int, n_test: int, seed: int = 99,
                train_year: int = 2007, test_year: int = 2006) -> tuple[list[CaseDocument], list[CaseDocument]]:
    rng = np.random.default_rng(seed)
    train = [make_document(f"{train_year % 100:02d}_{i + 1}", train_year, rng) for i in range(n_train)]
    test = [make_document(f"{test_year % 100:02d}_{i + 1}", test_year, rng) for i in range(n_test)]
    return train, test
