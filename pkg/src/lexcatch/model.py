"""Word scoring model: windowed convolution, max pooling, two-layer MLP.

Every word of a sentence (or catchphrase) is encoded from its embedding
window, pooled into phrase and document features, and scored by a sigmoid
MLP over the concatenation [word; phrase; document]. One parameter set is
shared by all paths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import DimensionError, Tensor
from .corpus import CaseDocument, TokenSeq
from .embeddings import EmbeddingTable


@dataclass(frozen=True)
class ModelDims:
    d: int   # embedding size
    k: int   # window covers k neighbors on each side
    c: int   # convolution filters
    h: int   # MLP hidden width

    @property
    def window(self) -> int:
        return 2 * self.k + 1

    @property
    def window_dim(self) -> int:
        return self.window * self.d


@dataclass
class ModelParams:
    """All trainable tensors. Embeddings are frozen and live elsewhere."""

    conv_kernel: Tensor        # (c, (2k+1)*d)
    mlp_hidden_weight: Tensor  # (h, 3c)
    mlp_hidden_bias: Tensor    # (h,)
    mlp_out_weight: Tensor     # (1, h)
    mlp_out_bias: Tensor       # ()
    dims: ModelDims

    def named(self) -> list[tuple[str, Tensor]]:
        return [
            ("conv_kernel", self.conv_kernel),
            ("mlp_hidden_weight", self.mlp_hidden_weight),
            ("mlp_hidden_bias", self.mlp_hidden_bias),
            ("mlp_out_weight", self.mlp_out_weight),
            ("mlp_out_bias", self.mlp_out_bias),
        ]

    def tensors(self) -> list[Tensor]:
        return [t for _, t in self.named()]

    @property
    def dtype(self):
        return self.conv_kernel.dtype

    def count(self) -> int:
        return sum(t.data.size for t in self.tensors())


def _uniform_fan(rng: np.random.Generator, shape: tuple[int, ...], dtype) -> Tensor:
    fan_out, fan_in = shape
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(dtype), requires_grad=True)


def init_params(dims: ModelDims, rng: np.random.Generator, dtype=np.float64) -> ModelParams:
    """Seeded uniform init in +-sqrt(6/(fan_in+fan_out)); biases start at zero."""
    return ModelParams(
        conv_kernel=_uniform_fan(rng, (dims.c, dims.window_dim), dtype),
        mlp_hidden_weight=_uniform_fan(rng, (dims.h, 3 * dims.c), dtype),
        mlp_hidden_bias=Tensor(np.zeros(dims.h, dtype=dtype), requires_grad=True),
        mlp_out_weight=_uniform_fan(rng, (1, dims.h), dtype),
        mlp_out_bias=Tensor(np.zeros((), dtype=dtype), requires_grad=True),
        dims=dims,
    )


def embed_windows(tokens: TokenSeq, emb: EmbeddingTable, k: int, dtype=np.float64) -> np.ndarray:
    """(n, (2k+1)*d) matrix of concatenated embedding windows.

    Each word owns a full window: positions beyond the phrase boundary are
    padded with k zero vectors per side. Embeddings are frozen, so this is
    a plain constant matrix with no gradient bookkeeping.
    """
    n = len(tokens)
    if n == 0:
        raise DimensionError("cannot build windows for an empty token sequence")
    padded = np.zeros((n + 2 * k, emb.dim), dtype=dtype)
    for i, token in enumerate(tokens):
        padded[k + i] = emb.lookup(token)
    return np.hstack([padded[j: j + n] for j in range(2 * k + 1)])


def word_features(params: ModelParams, window: Tensor | np.ndarray) -> Tensor:
    """ReLU(kernel @ window) for one concatenated window vector."""
    window = ag.as_tensor(window, like=params.conv_kernel)
    if window.shape != (params.dims.window_dim,):
        raise DimensionError(
            f"window length {window.shape} does not match kernel input ({params.dims.window_dim},)"
        )
    return ag.relu(ag.matmul(params.conv_kernel, window))


def word_feature_matrix(params: ModelParams, windows: np.ndarray) -> Tensor:
    """Word features for a whole phrase at once: rows of ReLU(W windows^T)."""
    return ag.relu(ag.matmul(Tensor(windows), ag.transpose(params.conv_kernel)))


def phrase_features(word_feats: Tensor | list[Tensor]) -> Tensor:
    """Componentwise max over a phrase's word feature vectors."""
    if isinstance(word_feats, list):
        if not word_feats:
            raise DimensionError("phrase_features of an empty feature list")
        word_feats = ag.stack_rows(word_feats)
    return ag.max_over_rows(word_feats)


def document_features(sentence_feats: list[Tensor]) -> Tensor:
    """Componentwise max over sentence features only (never catchphrases)."""
    if not sentence_feats:
        raise DimensionError("document_features of an empty sentence list")
    return ag.max_over_rows(ag.stack_rows(sentence_feats))


def _mlp_scores(params: ModelParams, word_feats: Tensor, phrase_feat: Tensor, doc_feat: Tensor) -> Tensor:
    """Sigmoid MLP over [word; phrase; document] rows -> one score per word."""
    n = word_feats.shape[0]
    x = ag.concat([word_feats, ag.tile_rows(phrase_feat, n), ag.tile_rows(doc_feat, n)], axis=1)
    hidden = ag.tanh(ag.matmul(x, ag.transpose(params.mlp_hidden_weight)) + params.mlp_hidden_bias)
    out = ag.sigmoid(ag.matmul(hidden, ag.transpose(params.mlp_out_weight)) + params.mlp_out_bias)
    return ag.reshape(out, (n,))


def score_word(params: ModelParams, f_w: Tensor, f_phrase: Tensor, f_d: Tensor) -> Tensor:
    """Score a single word from its three context features -> scalar in (0,1)."""
    c = params.dims.c
    for name, vec in (("word", f_w), ("phrase", f_phrase), ("document", f_d)):
        if vec.shape != (c,):
            raise DimensionError(f"{name} feature has shape {vec.shape}, expected ({c},)")
    scores = _mlp_scores(params, ag.reshape(f_w, (1, c)), f_phrase, f_d)
    return ag.reshape(scores, ())


@dataclass
class DocumentEncoding:
    """Per-word feature matrices and the pooled phrase/document features."""

    sentence_word_features: list[Tensor]     # one (n_i, c) matrix per sentence
    catchphrase_word_features: list[Tensor]  # one (m_i, c) matrix per catchphrase
    sentence_features: list[Tensor]          # (c,) each
    catchphrase_features: list[Tensor]       # (c,) each
    document_feature: Tensor                 # (c,), sentences only


@dataclass
class ScoreSheet:
    """Scores for every sentence word and catchword of one document."""

    sentence_word_scores: list[Tensor]  # (n_i,) per sentence
    catchword_scores: list[Tensor]      # (m_i,) per catchphrase

    def all_sentence_scores(self) -> Tensor:
        return ag.concat(self.sentence_word_scores)

    def all_catchword_scores(self) -> Tensor:
        if not self.catchword_scores:
            raise DimensionError("document has no catchword scores")
        return ag.concat(self.catchword_scores)

    def sentence_score_arrays(self) -> list[np.ndarray]:
        return [t.data for t in self.sentence_word_scores]


def score_document(params: ModelParams, doc: CaseDocument, emb: EmbeddingTable) -> tuple[DocumentEncoding, ScoreSheet]:
    """Encode and score a whole document with shared parameters.

    Sentence words are scored against their sentence feature, catchwords
    against their catchphrase feature, both against the same document
    feature, which is pooled from sentences only.
    """
    if emb.dim != params.dims.d:
        raise DimensionError(f"embedding dim {emb.dim} does not match model d={params.dims.d}")
    dtype = params.dtype
    k = params.dims.k

    sent_word_feats = [
        word_feature_matrix(params, embed_windows(s, emb, k, dtype)) for s in doc.sentences
    ]
    sent_feats = [phrase_features(m) for m in sent_word_feats]
    doc_feat = document_features(sent_feats)

    catch_word_feats = [
        word_feature_matrix(params, embed_windows(cp, emb, k, dtype)) for cp in doc.catchphrases
    ]
    catch_feats = [phrase_features(m) for m in catch_word_feats]

    enc = DocumentEncoding(
        sentence_word_features=sent_word_feats,
        catchphrase_word_features=catch_word_feats,
        sentence_features=sent_feats,
        catchphrase_features=catch_feats,
        document_feature=doc_feat,
    )
    sheet = ScoreSheet(
        sentence_word_scores=[
            _mlp_scores(params, m, f, doc_feat) for m, f in zip(sent_word_feats, sent_feats)
        ],
        catchword_scores=[
            _mlp_scores(params, m, f, doc_feat) for m, f in zip(catch_word_feats, catch_feats)
        ],
    )
    return enc, sheet


def score_catchwords_against(params: ModelParams, enc: DocumentEncoding, other_doc_feature: Tensor) -> list[Tensor]:
    """Re-score this document's catchwords with another document's feature.

    Same scoring path as within-document catchwords, with the document
    feature swapped; word and phrase features are reused unchanged.
    """
    return [
        _mlp_scores(params, m, f, other_doc_feature)
        for m, f in zip(enc.catchphrase_word_features, enc.catchphrase_features)
    ]
