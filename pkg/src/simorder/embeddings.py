"""Word embedding matrices: loading, saving, lookup and row normalization.

Three on-disk formats are understood:

* ``vec``   -- text with a ``V D`` header line (word2vec text / fastText ``.vec``)
* ``glove`` -- the same rows without a header (GloVe)
* ``bin``   -- word2vec binary: ``V D\\n`` then, per word, the word bytes, a
  single space and ``D`` little-endian float32 values

File order is taken to be frequency order, so restricting the vocabulary
means keeping a prefix of the file.
"""
from __future__ import annotations

import io
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import BinaryIO, Iterator, Sequence

import numpy as np

logger = logging.getLogger(__name__)

FORMATS = ("vec", "glove", "bin")
LOOKUP_MODES = ("exact", "fold")

_FORMAT_ALIASES = {
    "text-with-header": "vec",
    "text-headerless": "glove",
    "binary": "bin",
    "txt": "vec",
}


class EmbeddingFormatError(ValueError):
    """A vector file does not conform to its declared format."""


def canonical_format(fmt: str) -> str:
    fmt = _FORMAT_ALIASES.get(fmt, fmt)
    if fmt not in FORMATS:
        raise ValueError(f"unknown embedding format {fmt!r}; expected one of {FORMATS}")
    return fmt


class Vocabulary:
    """Ordered list of unique words with a word -> row index."""

    def __init__(self, words: Sequence[str]):
        self.words: tuple[str, ...] = tuple(words)
        self.index: dict[str, int] = {}
        for i, w in enumerate(self.words):
            if w in self.index:
                raise ValueError(f"duplicate word {w!r} at rows {self.index[w]} and {i}")
            self.index[w] = i

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __contains__(self, word) -> bool:
        return word in self.index

    def __getitem__(self, i: int) -> str:
        return self.words[i]

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.words == other.words

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)})"

    @cached_property
    def folded_index(self) -> dict[str, int]:
        # lowest row id wins for each lowercased form
        folded: dict[str, int] = {}
        for i, w in enumerate(self.words):
            folded.setdefault(w.lower(), i)
        return folded

    def lookup(self, word: str, mode: str = "exact") -> int | None:
        i = self.index.get(word)
        if i is not None or mode == "exact":
            return i
        if mode != "fold":
            raise ValueError(f"unknown lookup mode {mode!r}")
        return self.folded_index.get(word.lower())


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """A vocabulary paired with a ``V x d`` float64 matrix, one row per word.

    ``zero_rows`` is only set by :func:`normalize_rows` and flags rows that
    had zero length and were left untouched.
    """

    vocab: Vocabulary
    data: np.ndarray
    zero_rows: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"embedding data must be 2-D, got shape {data.shape}")
        if data.shape[0] != len(self.vocab):
            raise ValueError(
                f"{data.shape[0]} rows but vocabulary has {len(self.vocab)} words")
        if data.shape[1] < 1 and data.shape[0] > 0:
            raise ValueError("embedding dimension must be positive")
        if not np.all(np.isfinite(data)):
            bad = int(np.argwhere(~np.isfinite(data))[0, 0])
            raise ValueError(f"non-finite value in row {bad} ({self.vocab[bad]!r})")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_words(cls, words: Sequence[str], data) -> "EmbeddingMatrix":
        return cls(Vocabulary(words), np.asarray(data, dtype=np.float64))

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def __len__(self) -> int:
        return len(self.vocab)

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(V={len(self)}, dim={self.dim})"

    def with_data(self, data) -> "EmbeddingMatrix":
        """Same vocabulary, new vectors."""
        return EmbeddingMatrix(self.vocab, data)

    def vector(self, word: str, mode: str = "exact") -> np.ndarray | None:
        i = self.vocab.lookup(word, mode)
        return None if i is None else self.data[i]


def lookup(emb: EmbeddingMatrix, word: str, fallback: str = "exact") -> int | None:
    """Row id of ``word``.

    ``fallback="fold"`` retries case-insensitively when there is no exact
    match, returning the lowest matching row id.
    """
    return emb.vocab.lookup(word, fallback)


def normalize_rows(emb: EmbeddingMatrix) -> EmbeddingMatrix:
    norms = np.linalg.norm(emb.data, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    return EmbeddingMatrix(emb.vocab, emb.data / safe[:, None], zero_rows=zero)


# -- reading -----------------------------------------------------------------


def _parse_header(line: bytes | str, where: str) -> tuple[int, int]:
    if isinstance(line, bytes):
        line = line.decode("ascii", errors="replace")
    parts = line.split()
    if len(parts) != 2:
        raise EmbeddingFormatError(f"{where}: malformed header {line.strip()!r}, expected 'V D'")
    try:
        v, d = int(parts[0]), int(parts[1])
    except ValueError:
        raise EmbeddingFormatError(f"{where}: malformed header {line.strip()!r}") from None
    if v < 0 or d <= 0:
        raise EmbeddingFormatError(f"{where}: malformed header {line.strip()!r}")
    return v, d


def _text_rows(fh: io.TextIOBase, fmt: str, path) -> Iterator[tuple[str, np.ndarray]]:
    dim = None
    expected_rows = None
    lineno = 0
    if fmt == "vec":
        header = fh.readline()
        lineno = 1
        if not header:
            raise EmbeddingFormatError(f"{path}: empty file, expected a 'V D' header")
        expected_rows, dim = _parse_header(header, f"{path}:1")
    count = 0
    for line in fh:
        lineno += 1
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        if fmt == "vec":
            tokens = line.rstrip(" ").split(" ")
            if len(tokens) != dim + 1:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim + 1} tokens, found {len(tokens)}")
            word, values = tokens[0], tokens[1:]
        else:
            tokens = line.rstrip(" ").split(" ")
            if dim is None:
                dim = len(tokens) - 1
                if dim < 1:
                    raise EmbeddingFormatError(f"{path}:{lineno}: row has no vector values")
            if len(tokens) < dim + 1:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim + 1} tokens, found {len(tokens)}")
            # GloVe 840B has a handful of words containing spaces
            word = " ".join(tokens[: len(tokens) - dim])
            values = tokens[len(tokens) - dim:]
        try:
            vec = np.array(values, dtype=np.float64)
        except ValueError:
            raise EmbeddingFormatError(f"{path}:{lineno}: unparseable number in row {word!r}") from None
        if not np.all(np.isfinite(vec)):
            raise EmbeddingFormatError(f"{path}:{lineno}: non-finite value in row {word!r}")
        yield word, vec
        count += 1
    if expected_rows is not None and count < expected_rows:
        raise EmbeddingFormatError(
            f"{path}: header announces {expected_rows} rows but file ends after {count}")


def _read_until_space(fh: BinaryIO, path, offset: int) -> bytes:
    word = bytearray()
    while True:
        ch = fh.read(1)
        if not ch:
            if word.strip():
                raise EmbeddingFormatError(f"{path}: short read at byte offset {offset}: word without vector")
            return b""
        if ch == b" ":
            return bytes(word)
        word += ch


def _binary_rows(fh: BinaryIO, path, encoding_errors: str) -> Iterator[tuple[str, np.ndarray]]:
    header = fh.readline()
    if not header:
        raise EmbeddingFormatError(f"{path}: empty file, expected a 'V D' header")
    n_rows, dim = _parse_header(header, f"{path}:header")
    nbytes = 4 * dim
    reader = fh
    for row in range(n_rows):
        offset = reader.tell() if reader.seekable() else -1
        raw = _read_until_space(reader, path, offset)
        # tolerate the optional '\n' that follows each vector
        raw = raw.lstrip(b"\n")
        if not raw:
            raise EmbeddingFormatError(
                f"{path}: short read at byte offset {offset}: expected {n_rows} rows, found {row}")
        try:
            word = raw.decode("utf-8", errors=encoding_errors)
        except UnicodeDecodeError as exc:
            raise EmbeddingFormatError(f"{path}: undecodable word at byte offset {offset}: {exc}") from None
        blob = reader.read(nbytes)
        if len(blob) != nbytes:
            raise EmbeddingFormatError(
                f"{path}: short read at byte offset {offset}: vector of {word!r} truncated")
        vec = np.frombuffer(blob, dtype="<f4").astype(np.float64)
        if not np.all(np.isfinite(vec)):
            raise EmbeddingFormatError(f"{path}: non-finite value in vector of {word!r} at byte offset {offset}")
        yield word, vec


def iter_rows(path, format: str = "vec", *, encoding_errors: str = "strict") -> Iterator[tuple[str, np.ndarray]]:
    """Yield ``(word, vector)`` for every row of a vector file, in file order.

    Duplicates are *not* removed here.
    """
    fmt = canonical_format(format)
    if fmt == "bin":
        with open(path, "rb") as fh:
            yield from _binary_rows(fh, path, encoding_errors)
    else:
        with open(path, "r", encoding="utf-8", errors=encoding_errors, newline="\n") as fh:
            yield from _text_rows(fh, fmt, path)


def iter_unique_chunks(path, format: str = "vec", *, max_vocab: int | None = None,
                       chunk_rows: int = 65536,
                       encoding_errors: str = "strict") -> Iterator[tuple[list[str], np.ndarray]]:
    """Stream the first ``max_vocab`` unique rows as ``(words, block)`` chunks.

    Later duplicates of a word are dropped; the number dropped is logged.
    """
    if max_vocab is not None and max_vocab < 1:
        raise ValueError("max_vocab must be a positive integer")
    seen: set[str] = set()
    dropped = 0
    words: list[str] = []
    rows: list[np.ndarray] = []
    kept = 0
    for word, vec in iter_rows(path, format, encoding_errors=encoding_errors):
        if max_vocab is not None and kept >= max_vocab:
            break
        if rows and vec.shape != rows[0].shape:
            raise EmbeddingFormatError(f"{path}: row {word!r} has dimension {vec.shape[0]}")
        if word in seen:
            dropped += 1
            continue
        seen.add(word)
        words.append(word)
        rows.append(vec)
        kept += 1
        if len(rows) == chunk_rows:
            yield words, np.vstack(rows)
            words, rows = [], []
    if rows:
        yield words, np.vstack(rows)
    if dropped:
        logger.warning("%s: dropped %d duplicate word(s), keeping first occurrences", path, dropped)


def load_embeddings(path, format: str = "vec", max_vocab: int | None = None, *,
                    encoding_errors: str = "strict") -> EmbeddingMatrix:
    """Read the first ``max_vocab`` unique words of a vector file."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    words: list[str] = []
    blocks: list[np.ndarray] = []
    for w, block in iter_unique_chunks(path, format, max_vocab=max_vocab,
                                        encoding_errors=encoding_errors):
        words.extend(w)
        blocks.append(block)
    if not words:
        raise EmbeddingFormatError(f"{path}: empty embedding set")
    return EmbeddingMatrix(Vocabulary(words), np.vstack(blocks))


# -- writing -----------------------------------------------------------------


def _format_row(values: np.ndarray) -> str:
    return " ".join(f"{x:.6g}" for x in values)


def save_embeddings(emb: EmbeddingMatrix, path, format: str = "vec") -> None:
    """Write ``emb``; text formats keep 6 significant digits, binary keeps float32."""
    fmt = canonical_format(format)
    if len(emb) == 0:
        raise ValueError("empty embedding set")
    for w in emb.vocab:
        if not w or " " in w or "\n" in w:
            raise ValueError(f"word {w!r} cannot be stored in {fmt} format")
    if fmt == "bin":
        with open(path, "wb") as fh:
            fh.write(f"{len(emb)} {emb.dim}\n".encode("ascii"))
            f32 = emb.data.astype("<f4")
            for w, row in zip(emb.vocab, f32):
                fh.write(w.encode("utf-8") + b" ")
                fh.write(row.tobytes())
                fh.write(b"\n")
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if fmt == "vec":
            fh.write(f"{len(emb)} {emb.dim}\n")
        for w, row in zip(emb.vocab, emb.data):
            fh.write(f"{w} {_format_row(row)}\n")


def text_precision_bound(emb: EmbeddingMatrix) -> float:
    """Largest absolute error a 6-significant-digit text round trip can add."""
    peak = float(np.max(np.abs(emb.data))) if emb.data.size else 0.0
    return 1e-5 * peak if peak > 0 else 0.0
