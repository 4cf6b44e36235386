"""Pretrained word-vector table: text loader, binary cache, frozen lookups."""

from __future__ import annotations

import io
import logging
import struct
from pathlib import Path
from typing import IO, Iterable

import numpy as np

log = logging.getLogger(__name__)

_CACHE_MAGIC = b"LEXCEMB1"


class EmbeddingFormatError(ValueError):
    """Vector file line with wrong arity or non-numeric component."""


class EmbeddingCacheError(ValueError):
    """Binary cache is missing, corrupt, or from another version."""


class EmbeddingTable:
    """token -> d-vector map, immutable after construction.

    Vectors are frozen: they receive no gradient updates during training,
    so rows are exposed as read-only views. Unknown tokens resolve to the
    all-zeros vector after a lowercase fallback.
    """

    def __init__(self, dim: int, vocab: dict[str, int], matrix: np.ndarray):
        if matrix.shape != (len(vocab), dim):
            raise EmbeddingFormatError(
                f"matrix shape {matrix.shape} does not match vocab size {len(vocab)} x dim {dim}"
            )
        if not np.all(np.isfinite(matrix)):
            raise EmbeddingFormatError("embedding matrix contains non-finite components")
        self.dim = dim
        self.vocab = vocab
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.oov_vector = np.zeros(dim, dtype=matrix.dtype)
        self.oov_vector.setflags(write=False)

    def __len__(self) -> int:
        return len(self.vocab)

    def lookup(self, token: str) -> np.ndarray:
        """Exact-case hit, else lowercase fallback, else the zero vector."""
        row = self.vocab.get(token)
        if row is None:
            row = self.vocab.get(token.lower())
        if row is None:
            return self.oov_vector
        return self.matrix[row]


def lookup(table: EmbeddingTable, token: str) -> np.ndarray:
    return table.lookup(token)


def load_embeddings(reader: IO[bytes], expected_dim: int,
                    restrict_vocab: set[str] | None = None) -> EmbeddingTable:
    """Parse `token v1 .. v_d` lines from a binary stream.

    The vector is taken from the rightmost ``expected_dim`` fields so that
    the handful of tokens containing spaces in the published vector files
    load correctly. Fewer fields than that, or a non-numeric component in
    an ingested line, raises with the offending line number.
    """
    text = io.TextIOWrapper(reader, encoding="utf-8", errors="replace")
    vocab: dict[str, int] = {}
    rows: list[np.ndarray] = []
    duplicates = 0
    for lineno, line in enumerate(text, 1):
        line = line.rstrip("\n")
        if not line:
            continue
        if restrict_vocab is not None:
            # Corpus tokens never contain spaces, so the cheap prefix test is
            # exact for restricted loads; non-matching lines still get the
            # arity check below.
            space = line.find(" ")
            token = line[:space] if space >= 0 else line
            if token not in restrict_vocab:
                if line.count(" ") < expected_dim:
                    raise EmbeddingFormatError(
                        f"line {lineno}: expected a token plus {expected_dim} components"
                    )
                continue
        fields = line.split(" ")
        if len(fields) < expected_dim + 1:
            raise EmbeddingFormatError(
                f"line {lineno}: expected a token plus {expected_dim} components, got {len(fields)} fields"
            )
        token = " ".join(fields[: -expected_dim])
        try:
            vector = np.array(fields[-expected_dim:], dtype=np.float64)
        except ValueError:
            raise EmbeddingFormatError(f"line {lineno}: non-numeric vector component") from None
        if token in vocab:
            duplicates += 1
            continue
        vocab[token] = len(rows)
        rows.append(vector)
    if duplicates:
        log.debug("skipped %d duplicate embedding tokens", duplicates)
    matrix = np.vstack(rows) if rows else np.zeros((0, expected_dim), dtype=np.float64)
    return EmbeddingTable(expected_dim, vocab, matrix)


def load_embeddings_file(path: str | Path, expected_dim: int,
                         restrict_vocab: set[str] | None = None) -> EmbeddingTable:
    with open(path, "rb") as fh:
        return load_embeddings(fh, expected_dim, restrict_vocab)


def corpus_restriction(token_iter: Iterable[str]) -> set[str]:
    """Restriction set covering both exact-case and lowercase fallback hits."""
    out: set[str] = set()
    for token in token_iter:
        out.add(token)
        out.add(token.lower())
    return out


def save_cache(table: EmbeddingTable, path: str | Path) -> None:
    """Binary cache: magic, dim, vocab size, vocab block, raw float64 matrix."""
    vocab_block = "\n".join(
        token for token, _ in sorted(table.vocab.items(), key=lambda kv: kv[1])
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<IIQ", table.dim, len(table.vocab), len(vocab_block)))
        fh.write(vocab_block)
        fh.write(np.ascontiguousarray(table.matrix, dtype=np.float64).tobytes())


def load_cache(path: str | Path) -> EmbeddingTable:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < len(_CACHE_MAGIC) + 16 or not data.startswith(_CACHE_MAGIC):
        raise EmbeddingCacheError(f"{path}: not a recognized embedding cache")
    dim, count, vocab_len = struct.unpack_from("<IIQ", data, len(_CACHE_MAGIC))
    body = len(_CACHE_MAGIC) + 16
    expected = body + vocab_len + count * dim * 8
    if len(data) != expected:
        raise EmbeddingCacheError(f"{path}: truncated or padded cache ({len(data)} bytes, expected {expected})")
    tokens = data[body: body + vocab_len].decode("utf-8").split("\n") if vocab_len else []
    if len(tokens) != count:
        raise EmbeddingCacheError(f"{path}: vocab block holds {len(tokens)} tokens, header says {count}")
    matrix = np.frombuffer(data[body + vocab_len:], dtype=np.float64).reshape(count, dim).copy()
    return EmbeddingTable(dim, {t: i for i, t in enumerate(tokens)}, matrix)
