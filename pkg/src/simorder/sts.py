"""Unsupervised semantic textual similarity with sentence centroids.

A sentence is the mean of the vectors of its in-vocabulary non-stopword
tokens; a pair is scored by the cosine of the two centroids and the
benchmark by the Pearson correlation with the gold scores.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .datasets import StsDataset
from .embeddings import EmbeddingMatrix
from .evaluation import pearson


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]

    def __post_init__(self):
        for w in self.words:
            if not w or w != w.lower():
                raise ValueError(f"stopwords must be non-empty lowercase strings, got {w!r}")

    def __contains__(self, token: str) -> bool:
        return token in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def empty(cls) -> "StopwordList":
        return cls(frozenset())


def _parse_stopwords(text: str) -> StopwordList:
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return StopwordList(frozenset(words))


def load_stopwords(path=None) -> StopwordList:
    """Read a stopword file; without a path, the bundled English list."""
    if path is None:
        text = resources.files("simorder").joinpath("data/stopwords_en.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return _parse_stopwords(text)


def _strip_edges(token: str) -> str:
    start, end = 0, len(token)
    while start < end and not token[start].isalnum():
        start += 1
    while end > start and not token[end - 1].isalnum():
        end -= 1
    return token[start:end]


def tokenize(sentence: str) -> list[str]:
    """Lowercase, split on whitespace, trim punctuation off token edges."""
    tokens = (_strip_edges(t) for t in sentence.lower().split())
    return [t for t in tokens if t]


def content_ids(emb: EmbeddingMatrix, tokens, stop: StopwordList, lookup_mode: str = "fold") -> list[int]:
    ids = []
    for t in tokens:
        if t in stop:
            continue
        i = emb.vocab.lookup(t, lookup_mode)
        if i is not None:
            ids.append(i)
    return ids


def sentence_centroid(emb: EmbeddingMatrix, tokens, stop: StopwordList,
                      lookup_mode: str = "fold") -> tuple[np.ndarray, bool]:
    """Mean vector of the qualifying tokens and whether it is the zero fallback."""
    ids = content_ids(emb, tokens, stop, lookup_mode)
    if not ids:
        return np.zeros(emb.dim), True
    return emb.data[ids].mean(axis=0), False


def _cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v / (nu * nv))


@dataclass(frozen=True)
class StsResult:
    pearson: float
    items_scored: int
    zero_vector_items: int


def resolve_sts(emb: EmbeddingMatrix, ds: StsDataset, stop: StopwordList,
                lookup_mode: str = "fold") -> list[tuple[list[int], list[int]]]:
    return [(content_ids(emb, tokenize(it.sentence1), stop, lookup_mode),
             content_ids(emb, tokenize(it.sentence2), stop, lookup_mode)) for it in ds.items]


def sts_scores(emb: EmbeddingMatrix, resolved) -> tuple[np.ndarray, int]:
    """Centroid cosines for pre-resolved items, plus the count of zero-centroid items."""
    scores = np.zeros(len(resolved))
    zero_items = 0
    for k, (ids1, ids2) in enumerate(resolved):
        if not ids1 or not ids2:
            zero_items += 1
            continue
        scores[k] = _cosine(emb.data[ids1].mean(axis=0), emb.data[ids2].mean(axis=0))
    return scores, zero_items


def eval_sts(emb: EmbeddingMatrix, ds: StsDataset, stop: StopwordList | None = None,
             lookup_mode: str = "fold", resolved=None) -> StsResult:
    if len(ds) == 0:
        raise ValueError("empty STS dataset")
    if stop is None:
        stop = load_stopwords()
    if resolved is None:
        resolved = resolve_sts(emb, ds, stop, lookup_mode)
    scores, zero_items = sts_scores(emb, resolved)
    gold = np.array([it.score for it in ds.items])
    return StsResult(pearson(scores, gold), len(ds), zero_items)
