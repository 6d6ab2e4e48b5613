"""Alpha sweeps over the evaluation tasks and the CSV/Markdown report.

A sweep decomposes the gram matrix once, rotates the embeddings once
(``X Q``), and then only rescales columns for each alpha on the grid.
"""
from __future__ import annotations

import csv
import datetime as _dt
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import parse_analogy, parse_scored_pairs, parse_sts
from .embeddings import EmbeddingMatrix, iter_unique_chunks, load_embeddings, normalize_rows
from .evaluation import eval_analogy, eval_wordsim, resolve_analogies, resolve_pairs
from .sts import eval_sts, load_stopwords, resolve_sts
from .transform import (DEFAULT_EIG_FLOOR, EigenBasis, gram, gram_streamed, load_basis,
                        make_transform, precompute_rotated, save_basis, scale_rotated, sym_eig)

logger = logging.getLogger(__name__)

TASKS = ("analogy", "wordsim", "sts")
CSV_FIELDS = ("alpha", "task", "dataset", "metric", "value", "covered", "skipped")
_DEFAULT_DATASET_FORMAT = {"analogy": "questions-words", "wordsim": "generic-3col", "sts": "stsbenchmark"}


def alpha_grid(start: float = -1.0, end: float = 1.0, step: float = 0.05) -> list[float]:
    """Grid points ``start + k*step <= end``, each rounded to 2 decimals."""
    if not (math.isfinite(start) and math.isfinite(end) and math.isfinite(step)):
        raise ValueError("alpha grid bounds must be finite")
    if step <= 0:
        raise ValueError("alpha step must be positive")
    if start > end:
        raise ValueError("alpha start must not exceed end")
    grid = []
    k = 0
    while start + k * step <= end + 1e-12:
        grid.append(round(start + k * step, 2) + 0.0)
        k += 1
    if len(set(grid)) != len(grid):
        raise ValueError("alpha step is finer than the 2-decimal grid resolution")
    return grid


def parse_alpha_range(text: str) -> tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected START:END:STEP, got {text!r}")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


@dataclass
class TaskSpec:
    task: str
    path: str
    dataset_format: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}; expected one of {TASKS}")
        if self.dataset_format is None:
            self.dataset_format = _DEFAULT_DATASET_FORMAT[self.task]


@dataclass
class SweepConfig:
    embeddings: str
    tasks: list[TaskSpec]
    format: str = "vec"
    max_vocab: int | None = 200000
    alpha_start: float = -1.0
    alpha_end: float = 1.0
    alpha_step: float = 0.05
    lookup_mode: str = "fold"
    pre_normalize: bool = False
    eig_floor: float = DEFAULT_EIG_FLOOR
    gram_vocab: str = "restricted"
    stopwords: str | None = None
    strip_pos: bool = False
    workers: int = 1

    def __post_init__(self):
        self.tasks = [t if isinstance(t, TaskSpec) else TaskSpec(**t) for t in self.tasks]
        if self.gram_vocab not in ("restricted", "full"):
            raise ValueError(f"gram_vocab must be 'restricted' or 'full', got {self.gram_vocab!r}")
        alpha_grid(self.alpha_start, self.alpha_end, self.alpha_step)

    @property
    def grid(self) -> list[float]:
        return alpha_grid(self.alpha_start, self.alpha_end, self.alpha_step)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        return cls(**d)


@dataclass(frozen=True, order=True)
class Record:
    alpha: float
    task: str
    dataset: str
    metric: str
    value: float
    covered: int
    skipped: int

    @property
    def key(self) -> tuple:
        return (self.alpha, self.task, self.dataset, self.metric)


@dataclass
class EvalReport:
    records: list[Record] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def sort(self) -> None:
        self.records.sort(key=lambda r: r.key)
        self.errors.sort(key=lambda e: (e["alpha"], e["task"], e["dataset"]))
        keys = [r.key for r in self.records]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (alpha, task, dataset, metric) records")

    def series(self) -> dict[tuple[str, str, str], list[Record]]:
        out: dict[tuple[str, str, str], list[Record]] = {}
        for r in sorted(self.records, key=lambda r: r.key):
            out.setdefault((r.task, r.dataset, r.metric), []).append(r)
        return out


# -- loaded resources --------------------------------------------------------------


@dataclass
class LoadedTask:
    spec: TaskSpec
    name: str
    dataset: object
    resolved: object = None
    stop: object = None


def load_task(spec: TaskSpec, stopwords=None, strip_pos: bool = False) -> LoadedTask:
    if spec.task == "analogy":
        ds = parse_analogy(spec.path)
        return LoadedTask(spec, ds.name, ds)
    if spec.task == "wordsim":
        ds = parse_scored_pairs(spec.path, spec.dataset_format, strip_pos=strip_pos)
        return LoadedTask(spec, ds.name, ds)
    ds = parse_sts(spec.path)
    return LoadedTask(spec, ds.name, ds, stop=load_stopwords(stopwords))


def resolve_task(task: LoadedTask, emb: EmbeddingMatrix, lookup_mode: str) -> LoadedTask:
    """Map dataset words to row ids once; the vocabulary is fixed across a sweep."""
    if task.spec.task == "analogy":
        task.resolved = resolve_analogies(emb, task.dataset, lookup_mode)
    elif task.spec.task == "wordsim":
        task.resolved = resolve_pairs(emb, task.dataset, lookup_mode)
    else:
        task.resolved = resolve_sts(emb, task.dataset, task.stop, lookup_mode)
    return task


def evaluate_task(emb: EmbeddingMatrix, task: LoadedTask, alpha: float,
                  lookup_mode: str = "fold") -> list[Record]:
    """Run one task on already-transformed embeddings; fractions/correlations in [0,1] / [-1,1]."""
    name = task.name
    if task.spec.task == "analogy":
        res = eval_analogy(emb, task.dataset, lookup_mode, resolved=task.resolved)
        return [Record(alpha, "analogy", name, cat, res.accuracy(None if cat == "all" else cat),
                       res.answered(None if cat == "all" else cat),
                       res.skipped(None if cat == "all" else cat))
                for cat in ("semantic", "syntactic", "all")]
    if task.spec.task == "wordsim":
        res = eval_wordsim(emb, task.dataset, lookup_mode, resolved=task.resolved)
        return [Record(alpha, "wordsim", name, "spearman", res.spearman, res.covered, res.skipped)]
    res = eval_sts(emb, task.dataset, task.stop, lookup_mode, resolved=task.resolved)
    return [Record(alpha, "sts", name, "pearson", res.pearson,
                   res.items_scored - res.zero_vector_items, res.zero_vector_items)]


def prepare_embeddings(path, format: str, max_vocab: int | None,
                       pre_normalize: bool) -> EmbeddingMatrix:
    emb = load_embeddings(path, format, max_vocab)
    return normalize_rows(emb) if pre_normalize else emb


def compute_basis(emb: EmbeddingMatrix, *, path=None, format: str = "vec",
                  gram_vocab: str = "restricted", pre_normalize: bool = False,
                  basis_cache=None, workers: int = 1) -> EigenBasis:
    """Eigenbasis of the gram matrix, optionally from the full file or a cache."""
    if basis_cache is not None and Path(basis_cache).exists():
        basis = load_basis(basis_cache)
        if basis.source_dim != emb.dim:
            raise ValueError(f"{basis_cache}: basis has d={basis.source_dim}, embeddings d={emb.dim}")
        return basis
    if gram_vocab == "full":
        blocks = iter_unique_chunks(path, format)
        if pre_normalize:
            blocks = (b / np.where(n == 0, 1.0, n)[:, None]
                      for b, n in ((blk, np.linalg.norm(blk, axis=1)) for _, blk in blocks))
        else:
            blocks = (blk for _, blk in blocks)
        g, rows = gram_streamed(blocks)
        logger.info("gram matrix over all %d rows of %s", rows, path)
    else:
        g = gram(emb, workers=workers)
    basis = sym_eig(g)
    if basis_cache is not None:
        save_basis(basis, basis_cache)
    return basis


def run_sweep(cfg: SweepConfig, basis_cache=None) -> EvalReport:
    grid = cfg.grid
    emb = prepare_embeddings(cfg.embeddings, cfg.format, cfg.max_vocab, cfg.pre_normalize)
    basis = compute_basis(emb, path=cfg.embeddings, format=cfg.format, gram_vocab=cfg.gram_vocab,
                          pre_normalize=cfg.pre_normalize, basis_cache=basis_cache,
                          workers=cfg.workers)
    rotated = precompute_rotated(emb, basis)
    del emb
    tasks = [resolve_task(load_task(t, cfg.stopwords, cfg.strip_pos), rotated, cfg.lookup_mode)
             for t in cfg.tasks]

    def one_alpha(alpha: float):
        records, errors = [], []
        x = scale_rotated(rotated, make_transform(basis, alpha, cfg.eig_floor))
        for task in tasks:
            try:
                records.extend(evaluate_task(x, task, alpha, cfg.lookup_mode))
            except (ValueError, ArithmeticError) as exc:
                logger.warning("alpha=%.2f %s/%s failed: %s", alpha, task.spec.task, task.name, exc)
                errors.append({"alpha": alpha, "task": task.spec.task, "dataset": task.name,
                               "error": str(exc)})
        return records, errors

    report = EvalReport(provenance={
        "embeddings": str(cfg.embeddings),
        "config": cfg.to_dict(),
        "lambda_max": basis.lam_max,
        "lambda_min": float(basis.lam[-1]),
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    })
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one_alpha, grid))
    else:
        results = [one_alpha(a) for a in grid]
    for recs, errs in results:
        report.records.extend(recs)
        report.errors.extend(errs)
    report.sort()
    return report


# -- serialization -----------------------------------------------------------------


def write_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in report.records:
            w.writerow([f"{r.alpha:.2f}", r.task, r.dataset, r.metric, repr(float(r.value)),
                        r.covered, r.skipped])


def read_csv(path) -> EvalReport:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CSV_FIELDS:
            raise ValueError(f"{path}: not a sweep report (header {header!r})")
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(CSV_FIELDS):
                raise ValueError(f"{path}:{lineno}: expected {len(CSV_FIELDS)} fields")
            try:
                rec = Record(float(row[0]) + 0.0, row[1], row[2], row[3], float(row[4]),
                             int(row[5]), int(row[6]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            if not math.isfinite(rec.value):
                raise ValueError(f"{path}:{lineno}: non-finite value")
            records.append(rec)
    report = EvalReport(records)
    side = provenance_path(path)
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        report.provenance = meta.get("provenance", {})
        report.errors = meta.get("errors", [])
    report.sort()
    return report


def provenance_path(report_path) -> Path:
    return Path(report_path).with_suffix(".provenance.json")


def write_report(report: EvalReport, path) -> tuple[Path, Path, Path]:
    """CSV at ``path`` plus ``.provenance.json`` and ``.md`` siblings."""
    path = Path(path)
    write_csv(report, path)
    side = provenance_path(path)
    side.write_text(json.dumps({"provenance": report.provenance, "errors": report.errors},
                               indent=2, sort_keys=True) + "\n", encoding="utf-8")
    md = path.with_suffix(".md")
    md.write_text(render_markdown(report), encoding="utf-8")
    return path, side, md


# -- derived values for plots and reports ---------------------------------------------


def baseline(series: list[Record]) -> Record:
    """The alpha=0 record, or the one closest to it."""
    return min(series, key=lambda r: (abs(r.alpha), r.alpha))


def derived_value(task: str, value: float, base: float) -> float:
    """Relative error reduction for analogy accuracy, absolute delta otherwise."""
    if task == "analogy":
        return 0.0 if base >= 1.0 else (value - base) / (1.0 - base)
    return value - base


def best(series: list[Record]) -> Record:
    # ties go to the alpha closest to 0
    return max(series, key=lambda r: (r.value, -abs(r.alpha), -r.alpha))


def plot_rows(report: EvalReport) -> list[dict]:
    rows = []
    for (task, dataset, metric), series in report.series().items():
        base = baseline(series)
        for r in series:
            rows.append({"alpha": r.alpha, "task": task, "dataset": dataset, "metric": metric,
                         "value": r.value, "baseline": base.value,
                         "derived": derived_value(task, r.value, base.value),
                         "derived_kind": "relative_error_reduction" if task == "analogy" else "delta"})
    return rows


def write_plot_csv(report: EvalReport, fh) -> None:
    fields = ["alpha", "task", "dataset", "metric", "value", "baseline", "derived", "derived_kind"]
    w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in plot_rows(report):
        row = dict(row, alpha=f"{row['alpha']:.2f}")
        w.writerow(row)


def render_markdown(report: EvalReport) -> str:
    lines = ["# Similarity-order sweep", ""]
    if report.provenance:
        lines += ["## Provenance", "", "```json",
                  json.dumps(report.provenance, indent=2, sort_keys=True), "```", ""]
    lines += ["## Best alpha", "",
              "| task | dataset | metric | original | best | alpha | gain |",
              "|---|---|---|---:|---:|---:|---:|"]
    series = report.series()
    for (task, dataset, metric), s in series.items():
        base, top = baseline(s), best(s)
        gain = derived_value(task, top.value, base.value)
        gain_txt = f"{100 * gain:.1f}% RER" if task == "analogy" else f"{100 * gain:+.2f}"
        lines.append(f"| {task} | {dataset} | {metric} | {100 * base.value:.2f} | "
                     f"{100 * top.value:.2f} | {top.alpha:.2f} | {gain_txt} |")
    lines.append("")
    for (task, dataset, metric), s in series.items():
        base = baseline(s)
        col = "relative error reduction (%)" if task == "analogy" else "delta vs original"
        lines += [f"## {task} / {dataset} / {metric}", "",
                  f"| alpha | value | {col} | covered | skipped |", "|---:|---:|---:|---:|---:|"]
        for r in s:
            d = derived_value(task, r.value, base.value)
            lines.append(f"| {r.alpha:.2f} | {100 * r.value:.2f} | {100 * d:.2f} | {r.covered} | {r.skipped} |")
        lines.append("")
    if report.errors:
        lines += ["## Errors", ""]
        lines += [f"- alpha={e['alpha']:.2f} {e['task']}/{e['dataset']}: {e['error']}" for e in report.errors]
        lines.append("")
    return "\n".join(lines)
