"""Parsers for the analogy, word-similarity and STS benchmark files."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

PAIR_FORMATS = ("simlex", "men", "generic-3col")
STS_SPLITS = ("train", "dev", "test")
_POS_SUFFIXES = ("-n", "-v", "-j")


class DatasetFormatError(ValueError):
    """A benchmark file could not be parsed."""


@dataclass(frozen=True)
class AnalogySection:
    name: str
    questions: tuple[tuple[str, str, str, str], ...]

    @property
    def category(self) -> str:
        return "syntactic" if self.name.startswith("gram") else "semantic"


@dataclass(frozen=True)
class AnalogyDataset:
    sections: tuple[AnalogySection, ...]
    name: str = "analogy"

    def count(self, category: str | None = None) -> int:
        return sum(len(s.questions) for s in self.sections
                   if category is None or s.category == category)

    def __len__(self) -> int:
        return self.count()


@dataclass(frozen=True)
class ScoredPairDataset:
    pairs: tuple[tuple[str, str, float], ...]
    name: str = "pairs"

    def __post_init__(self):
        if len(self.pairs) < 2:
            raise DatasetFormatError(f"{self.name}: need at least 2 scored pairs, got {len(self.pairs)}")
        for w1, w2, s in self.pairs:
            if not math.isfinite(s):
                raise DatasetFormatError(f"{self.name}: non-finite score for ({w1}, {w2})")

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class StsItem:
    score: float
    sentence1: str
    sentence2: str


@dataclass(frozen=True)
class StsDataset:
    items: tuple[StsItem, ...]
    split: str = "test"
    name: str = field(default="sts")

    def __len__(self) -> int:
        return len(self.items)


def _dataset_name(path) -> str:
    return Path(path).stem


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            yield lineno, line.rstrip("\r\n")


# -- analogy -------------------------------------------------------------------


def parse_analogy(path) -> AnalogyDataset:
    """Parse a questions-words file.

    ``: name`` lines open a section; every other non-blank line holds four
    space-separated words.  Sections named ``gram*`` are syntactic.
    """
    sections: list[AnalogySection] = []
    current: str | None = None
    questions: list[tuple[str, str, str, str]] = []
    for lineno, line in _read_lines(path):
        if not line.strip():
            continue
        if line.startswith(":"):
            if current is not None:
                sections.append(AnalogySection(current, tuple(questions)))
            current = line[1:].strip()
            if not current:
                raise DatasetFormatError(f"{path}:{lineno}: empty section name")
            questions = []
            continue
        words = line.split()
        if len(words) != 4:
            raise DatasetFormatError(f"{path}:{lineno}: expected 4 words, found {len(words)}")
        if current is None:
            raise DatasetFormatError(f"{path}:{lineno}: question before the first ': section' header")
        questions.append(tuple(words))
    if current is not None:
        sections.append(AnalogySection(current, tuple(questions)))
    return AnalogyDataset(tuple(sections), _dataset_name(path))


def format_analogy(ds: AnalogyDataset) -> str:
    out = []
    for sec in ds.sections:
        out.append(f": {sec.name}")
        out.extend(" ".join(q) for q in sec.questions)
    return "\n".join(out) + "\n"


# -- word pairs ----------------------------------------------------------------


def _score(text: str, path, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DatasetFormatError(f"{path}:{lineno}: non-numeric score {text!r}") from None
    if not math.isfinite(value):
        raise DatasetFormatError(f"{path}:{lineno}: non-finite score {text!r}")
    return value


def _strip_pos(word: str) -> str:
    for suf in _POS_SUFFIXES:
        if word.endswith(suf) and len(word) > len(suf):
            return word[: -len(suf)]
    return word


def _parse_simlex(path) -> list[tuple[str, str, float]]:
    lines = [(n, l) for n, l in _read_lines(path) if l.strip()]
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    header = lines[0][1].split("\t")
    try:
        i1, i2, ig = header.index("word1"), header.index("word2"), header.index("SimLex999")
    except ValueError:
        raise DatasetFormatError(
            f"{path}: header must name the columns word1, word2 and SimLex999") from None
    pairs = []
    for lineno, line in lines[1:]:
        cols = line.split("\t")
        if len(cols) <= max(i1, i2, ig):
            raise DatasetFormatError(f"{path}:{lineno}: missing expected column")
        pairs.append((cols[i1], cols[i2], _score(cols[ig], path, lineno)))
    return pairs


def _parse_columns(path, strip_pos: bool) -> list[tuple[str, str, float]]:
    pairs = []
    for lineno, line in _read_lines(path):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split()
        if len(cols) != 3:
            raise DatasetFormatError(f"{path}:{lineno}: expected 'word1 word2 score', found {len(cols)} fields")
        w1, w2 = cols[0], cols[1]
        if strip_pos:
            w1, w2 = _strip_pos(w1), _strip_pos(w2)
        pairs.append((w1, w2, _score(cols[2], path, lineno)))
    return pairs


def parse_scored_pairs(path, format: str = "generic-3col", strip_pos: bool = False) -> ScoredPairDataset:
    """Parse a word-similarity file.

    ``simlex`` is the tab-separated original with a header row (gold column
    ``SimLex999``); ``men`` and ``generic-3col`` are ``word1 word2 score``
    lines.  ``strip_pos`` removes MEN's ``-n``/``-v``/``-j`` lemma suffixes.
    """
    if format == "simlex":
        pairs = _parse_simlex(path)
    elif format in ("men", "generic-3col"):
        pairs = _parse_columns(path, strip_pos)
    else:
        raise ValueError(f"unknown pair format {format!r}; expected one of {PAIR_FORMATS}")
    return ScoredPairDataset(tuple(pairs), _dataset_name(path))


def format_scored_pairs(ds: ScoredPairDataset) -> str:
    return "".join(f"{w1}\t{w2}\t{s!r}\n" for w1, w2, s in ds.pairs)


# -- STS benchmark ---------------------------------------------------------------


def _guess_split(path) -> str:
    stem = Path(path).stem.lower()
    for split in STS_SPLITS:
        if split in stem:
            return split
    return "test"


def parse_sts(path, split: str | None = None) -> StsDataset:
    """Parse an STS Benchmark file (tab separated; score in field 4, sentences in 5 and 6)."""
    items = []
    for lineno, line in _read_lines(path):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 7:
            raise DatasetFormatError(f"{path}:{lineno}: expected at least 7 tab-separated fields, found {len(fields)}")
        score = _score(fields[4], path, lineno)
        if not 0.0 <= score <= 5.0:
            raise DatasetFormatError(f"{path}:{lineno}: score {score} outside [0, 5]")
        s1, s2 = fields[5], fields[6]
        if not s1.strip() or not s2.strip():
            raise DatasetFormatError(f"{path}:{lineno}: empty sentence")
        items.append(StsItem(score, s1, s2))
    if not items:
        raise DatasetFormatError(f"{path}: no items")
    return StsDataset(tuple(items), split or _guess_split(path), _dataset_name(path))


def format_sts(ds: StsDataset) -> str:
    return "".join(f"genre\tfile\tyear\t{i:04d}\t{it.score!r}\t{it.sentence1}\t{it.sentence2}\n"
                   for i, it in enumerate(ds.items))


def require_file(path) -> None:
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
