"""Intrinsic evaluation: analogy accuracy and word-similarity correlation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .datasets import AnalogyDataset, ScoredPairDataset
from .embeddings import EmbeddingMatrix, normalize_rows

logger = logging.getLogger(__name__)

ANALOGY_BATCH = 128


class UndefinedCorrelationError(ValueError):
    """Correlation of a constant sequence."""


# -- correlation ---------------------------------------------------------------


def _paired(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("correlation needs at least 2 observations")
    return x, y


def rankdata(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = np.asarray(x, dtype=np.float64).ravel()
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    # start index of each run of equal values
    starts = np.flatnonzero(np.r_[True, sorted_x[1:] != sorted_x[:-1]])
    ends = np.r_[starts[1:], x.size]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(x.size)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def _flat(v: np.ndarray, rel: float = 1e-12) -> bool:
    # spread at rounding level, e.g. cosines of identical vectors
    return float(np.ptp(v)) <= rel * float(np.max(np.abs(v)))


def pearson(x, y) -> float:
    x, y = _paired(x, y)
    if _flat(x) or _flat(y):
        raise UndefinedCorrelationError("zero variance: correlation is undefined")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance: correlation is undefined")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(min(1.0, max(-1.0, r)))


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    x, y = _paired(x, y)
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise UndefinedCorrelationError("constant input: rank correlation is undefined")
    return pearson(rankdata(x), rankdata(y))


# -- analogy -------------------------------------------------------------------


@dataclass
class SectionScore:
    category: str
    correct: int = 0
    answered: int = 0
    skipped: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.answered if self.answered else 0.0


@dataclass
class AnalogyResult:
    sections: dict[str, SectionScore] = field(default_factory=dict)

    def _total(self, category: str | None, attr: str) -> int:
        return sum(getattr(s, attr) for s in self.sections.values()
                   if category is None or s.category == category)

    def correct(self, category: str | None = None) -> int:
        return self._total(category, "correct")

    def answered(self, category: str | None = None) -> int:
        return self._total(category, "answered")

    def skipped(self, category: str | None = None) -> int:
        return self._total(category, "skipped")

    def accuracy(self, category: str | None = None) -> float:
        n = self.answered(category)
        return self.correct(category) / n if n else 0.0

    @property
    def semantic_accuracy(self) -> float:
        return self.accuracy("semantic")

    @property
    def syntactic_accuracy(self) -> float:
        return self.accuracy("syntactic")


def analogy_query(emb: EmbeddingMatrix, a: int, b: int, c: int) -> int:
    """3CosAdd on unit-length rows: argmax of cos(w,b) - cos(w,a) + cos(w,c).

    The query words are excluded; ties go to the lowest row id.
    """
    return int(analogy_batch(emb.data, np.array([[a, b, c]]))[0])


def analogy_batch(unit: np.ndarray, abc: np.ndarray, batch_size: int = ANALOGY_BATCH) -> np.ndarray:
    """Vectorised :func:`analogy_query` for an ``(n, 3)`` array of row ids."""
    abc = np.asarray(abc, dtype=np.int64).reshape(-1, 3)
    out = np.empty(len(abc), dtype=np.int64)
    for s in range(0, len(abc), batch_size):
        chunk = abc[s:s + batch_size]
        a, b, c = chunk[:, 0], chunk[:, 1], chunk[:, 2]
        target = unit[b] - unit[a] + unit[c]
        scores = unit @ target.T
        cols = np.arange(len(chunk))
        scores[a, cols] = -np.inf
        scores[b, cols] = -np.inf
        scores[c, cols] = -np.inf
        out[s:s + len(chunk)] = np.argmax(scores, axis=0)
    return out


def resolve_analogies(emb: EmbeddingMatrix, ds: AnalogyDataset, lookup_mode: str = "exact"):
    """Row ids for every in-vocabulary question, grouped by section.

    Returns ``[(section, ids (n, 4) array, n_skipped), ...]``.
    """
    out = []
    for sec in ds.sections:
        rows = []
        skipped = 0
        for q in sec.questions:
            ids = [emb.vocab.lookup(w, lookup_mode) for w in q]
            if any(i is None for i in ids):
                skipped += 1
            else:
                rows.append(ids)
        out.append((sec, np.array(rows, dtype=np.int64).reshape(-1, 4), skipped))
    return out


def eval_analogy(emb: EmbeddingMatrix, ds: AnalogyDataset, lookup_mode: str = "exact",
                 resolved=None) -> AnalogyResult:
    """Accuracy over in-vocabulary questions, per section and per category.

    Questions with any out-of-vocabulary word are skipped.  ``resolved`` may
    carry a precomputed :func:`resolve_analogies` result for this vocabulary.
    """
    unit = normalize_rows(emb).data
    if resolved is None:
        resolved = resolve_analogies(emb, ds, lookup_mode)
    result = AnalogyResult()
    for sec, ids, skipped in resolved:
        score = result.sections.setdefault(sec.name, SectionScore(sec.category))
        score.skipped += skipped
        if len(ids):
            pred = analogy_batch(unit, ids[:, :3])
            score.correct += int(np.sum(pred == ids[:, 3]))
            score.answered += len(ids)
    if result.answered() == 0:
        logger.warning("%s: every analogy question has an out-of-vocabulary word", ds.name)
    return result


# -- word similarity -------------------------------------------------------------


@dataclass(frozen=True)
class WordSimResult:
    spearman: float
    covered: int
    skipped: int


def resolve_pairs(emb: EmbeddingMatrix, ds: ScoredPairDataset, lookup_mode: str = "exact"):
    """``(ids (n, 2) array, gold scores)`` for pairs with both words in vocabulary."""
    ids, gold = [], []
    for w1, w2, s in ds.pairs:
        i, j = emb.vocab.lookup(w1, lookup_mode), emb.vocab.lookup(w2, lookup_mode)
        if i is not None and j is not None:
            ids.append((i, j))
            gold.append(s)
    return np.array(ids, dtype=np.int64).reshape(-1, 2), np.array(gold)


def pair_cosines(data: np.ndarray, ids: np.ndarray) -> np.ndarray:
    u, v = data[ids[:, 0]], data[ids[:, 1]]
    nu, nv = np.linalg.norm(u, axis=1), np.linalg.norm(v, axis=1)
    denom = nu * nv
    dots = np.einsum("ij,ij->i", u, v)
    return np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), 0.0)


def eval_wordsim(emb: EmbeddingMatrix, ds: ScoredPairDataset, lookup_mode: str = "exact",
                 resolved=None) -> WordSimResult:
    """Spearman correlation between pair cosines and gold scores."""
    ids, gold = resolved if resolved is not None else resolve_pairs(emb, ds, lookup_mode)
    if len(ids) < 2:
        raise ValueError(f"{ds.name}: only {len(ids)} pair(s) in vocabulary, need at least 2")
    rho = spearman(pair_cosines(emb.data, ids), gold)
    return WordSimResult(rho, len(ids), len(ds) - len(ids))
