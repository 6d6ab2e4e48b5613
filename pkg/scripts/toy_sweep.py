#!/usr/bin/env python3
"""Sweep alpha on a synthetic model whose gold scores come from a known similarity order.

Gold similarities are cosines under (X X^T)^n, so the sweep should peak near
alpha = (n - 1) / 2. Nothing is downloaded.
"""
import argparse
import sys
import tempfile
from pathlib import Path

import numpy as np

from simorder.embeddings import EmbeddingMatrix, save_embeddings
from simorder.sweep import SweepConfig, TaskSpec, best, render_markdown, run_sweep


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--words", type=int, default=400)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--pairs", type=int, default=600)
    ap.add_argument("--order", type=int, default=2, help="similarity order used for the gold scores")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    # uneven spectrum so that the order matters
    x = rng.normal(size=(args.words, args.dim)) * np.geomspace(3.0, 0.3, args.dim)
    words = [f"w{i}" for i in range(args.words)]

    m = np.linalg.matrix_power(x @ x.T, args.order)
    norms = np.sqrt(np.diag(m))
    ij = rng.integers(0, args.words, size=(args.pairs, 2))
    ij = ij[ij[:, 0] != ij[:, 1]]
    gold = m[ij[:, 0], ij[:, 1]] / (norms[ij[:, 0]] * norms[ij[:, 1]])

    with tempfile.TemporaryDirectory() as tmp:
        vec, pairs = Path(tmp) / "toy.vec", Path(tmp) / "gold.txt"
        save_embeddings(EmbeddingMatrix.from_words(words, x), vec)
        pairs.write_text("".join(f"{words[a]} {words[b]} {float(g)!r}\n" for (a, b), g in zip(ij, gold)))
        cfg = SweepConfig(embeddings=str(vec), tasks=[TaskSpec("wordsim", str(pairs))],
                          max_vocab=None, lookup_mode="exact")
        report = run_sweep(cfg)

    print(render_markdown(report))
    top = best(report.records)
    print(f"best alpha {top.alpha:.2f} (expected {(args.order - 1) / 2:.2f}), spearman {top.value:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
