"""Legal Case Reports corpus: per-case XML parsing, tokenization, year splits.

The distributed XML files carry two well-known defects — attribute syntax
like ``<catchphrase "id=c0">`` and unescaped ampersands — which a cleanup
pass repairs before strict parsing. Anything else malformed is an error.
"""

from __future__ import annotations

import logging
import re
import string
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from .config import ConfigError

log = logging.getLogger(__name__)

TokenSeq = tuple[str, ...]

VALID_YEARS = (2006, 2007, 2008, 2009)

# Tags whose subtrees carry citation data rather than case text.
_CITATION_TAGS = {"citation", "citations", "citphrase", "citphrases", "citance", "citances", "class"}

_PUNCT = set(string.punctuation) | set("‘’“”–—…")
_OPENERS = {"(": ")", "[": "]", "{": "}"}
_CLOSERS = {")": "(", "]": "[", "}": "{"}


class CorpusParseError(ValueError):
    """Malformed XML; message names the file and byte offset."""


class CaseStructureError(ValueError):
    """Structurally unusable case (e.g. no sentences)."""


@dataclass(frozen=True)
class CaseDocument:
    """One legal case: tokenized sentences plus its drafted catchphrases."""

    id: str
    year: int
    sentences: tuple[TokenSeq, ...]
    catchphrases: tuple[TokenSeq, ...]

    def sentence_token_count(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass(frozen=True)
class CorpusSplit:
    train: tuple[CaseDocument, ...]
    test: tuple[CaseDocument, ...]
    test_year: int


def tokenize(text: str) -> TokenSeq:
    """Whitespace split, then peel leading/trailing punctuation into tokens.

    A trailing (leading) bracket stays attached when its counterpart sits
    inside the chunk, which keeps section references like ``477(2B)`` whole.
    Case and internal hyphens are preserved; no stopword or punctuation
    filtering happens anywhere downstream.
    """
    tokens: list[str] = []
    for chunk in text.split():
        lead: list[str] = []
        while chunk:
            ch = chunk[0]
            if ch not in _PUNCT or (ch in _OPENERS and _OPENERS[ch] in chunk[1:]):
                break
            lead.append(ch)
            chunk = chunk[1:]
        trail: list[str] = []
        while chunk:
            ch = chunk[-1]
            if ch not in _PUNCT or (ch in _CLOSERS and _CLOSERS[ch] in chunk[:-1]):
                break
            trail.append(ch)
            chunk = chunk[:-1]
        tokens.extend(lead)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trail))
    return tuple(tokens)


_BAD_ATTR = re.compile(r'<(catchphrase|sentence)\s+"id=([^"<>]*)"\s*>')
_BARE_AMP = re.compile(r"&(?!(?:[a-zA-Z][a-zA-Z0-9]*|#[0-9]+|#x[0-9a-fA-F]+);)")


def _repair_known_defects(xml_text: str) -> str:
    repaired = _BAD_ATTR.sub(r'<\1 id="\2">', xml_text)
    return _BARE_AMP.sub("&amp;", repaired)


def _byte_offset(text: str, line: int, column: int) -> int:
    lines = text.splitlines(keepends=True)
    return sum(len(l.encode("utf-8")) for l in lines[: line - 1]) + column


def _element_text(element: ET.Element) -> str:
    """Text content with citation subtrees dropped and markup stripped."""
    parts: list[str] = [element.text or ""]
    for child in element:
        if child.tag.lower() not in _CITATION_TAGS:
            parts.append(_element_text(child))
        parts.append(child.tail or "")
    return " ".join(p for p in parts if p)


def _year_from_id(doc_id: str) -> int:
    prefix = doc_id.split("_", 1)[0]
    try:
        year = 2000 + int(prefix)
    except ValueError:
        raise CorpusParseError(f"{doc_id}: cannot derive year from filename prefix {prefix!r}") from None
    if year not in VALID_YEARS:
        raise CorpusParseError(f"{doc_id}: year {year} outside the corpus range {VALID_YEARS}")
    return year


def parse_case_document(xml_text: str, doc_id: str) -> CaseDocument:
    """Parse one case file's XML text into a tokenized CaseDocument.

    Unreadable (empty after markup stripping) catchphrase/sentence elements
    are skipped and counted in the log. Zero usable sentences is an error;
    zero catchphrases is allowed — such documents are kept for extraction
    but excluded from training.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as first_error:
        try:
            root = ET.fromstring(_repair_known_defects(xml_text))
        except ET.ParseError:
            line, column = first_error.position
            offset = _byte_offset(xml_text, line, column)
            raise CorpusParseError(
                f"{doc_id}: malformed XML at line {line}, column {column} (byte offset {offset})"
            ) from first_error

    skipped = 0
    catchphrases: list[TokenSeq] = []
    for el in root.iter("catchphrase"):
        seq = tokenize(_element_text(el))
        if seq:
            catchphrases.append(seq)
        else:
            skipped += 1
    sentences: list[TokenSeq] = []
    for el in root.iter("sentence"):
        seq = tokenize(_element_text(el))
        if seq:
            sentences.append(seq)
        else:
            skipped += 1
    if skipped:
        log.debug("%s: skipped %d empty/unreadable elements", doc_id, skipped)
    if not sentences:
        raise CaseStructureError(f"{doc_id}: case has no usable sentences")
    return CaseDocument(
        id=doc_id,
        year=_year_from_id(doc_id),
        sentences=tuple(sentences),
        catchphrases=tuple(catchphrases),
    )


def load_corpus_dir(corpus_dir: str | Path) -> list[CaseDocument]:
    """Parse every *.xml under corpus_dir, sorted by file name."""
    corpus_dir = Path(corpus_dir)
    if not corpus_dir.is_dir():
        raise ConfigError(f"corpus directory not found: {corpus_dir}")
    paths = sorted(corpus_dir.glob("*.xml"))
    if not paths:
        raise ConfigError(f"no .xml files in corpus directory: {corpus_dir}")
    docs = []
    for path in paths:
        text = path.read_text(encoding="utf-8", errors="replace")
        docs.append(parse_case_document(text, path.stem))
    log.info("loaded %d case documents from %s", len(docs), corpus_dir)
    return docs


def split_by_year(corpus: list[CaseDocument], test_year: int) -> CorpusSplit:
    """Partition docs into test (== test_year) and train (all other years)."""
    if test_year not in VALID_YEARS:
        raise ConfigError(f"test_year must be one of {VALID_YEARS}, got {test_year}")
    train = sorted((d for d in corpus if d.year != test_year), key=lambda d: d.id)
    test = sorted((d for d in corpus if d.year == test_year), key=lambda d: d.id)
    if not train:
        raise ConfigError(f"test_year={test_year} leaves an empty train side")
    return CorpusSplit(train=tuple(train), test=tuple(test), test_year=test_year)


def dump_corpus(docs: list[CaseDocument], path: str | Path) -> None:
    """Debug dump: one document per line, tab-separated sections."""
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            catch = " | ".join(" ".join(seq) for seq in doc.catchphrases)
            sents = " | ".join(" ".join(seq) for seq in doc.sentences)
            fh.write(f"{doc.id}\t{doc.year}\t{catch}\t{sents}\n")
