#!/usr/bin/env python3
"""Run the full alpha sweep for the pre-trained models and write one report per model.

Example:
    python scripts/reproduce.py --glove glove.840B.300d.txt \
        --word2vec GoogleNews-vectors-negative300.bin --fasttext wiki-news-300d-1M.vec \
        --sts sts-test.csv --out reports/
"""
import argparse
import logging
import sys
from pathlib import Path

from simorder.sweep import SweepConfig, TaskSpec, render_markdown, run_sweep, write_report

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
MODELS = {"glove": "glove", "word2vec": "bin", "fasttext": "vec"}


def tasks(data_dir: Path, sts: str | None) -> list[TaskSpec]:
    out = [TaskSpec("analogy", str(data_dir / "questions-words.txt")),
           TaskSpec("wordsim", str(data_dir / "simlex999.txt"), "generic-3col"),
           TaskSpec("wordsim", str(data_dir / "MEN_natural_full.txt"), "men")]
    if sts:
        out.append(TaskSpec("sts", sts))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name in MODELS:
        ap.add_argument(f"--{name}", help=f"{name} embedding file")
    ap.add_argument("--sts", help="STS Benchmark sts-test.csv")
    ap.add_argument("--data", type=Path, default=DATA)
    ap.add_argument("--max-vocab", type=int, default=200000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("reports"))
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    chosen = {n: getattr(args, n) for n in MODELS if getattr(args, n)}
    if not chosen:
        ap.error("give at least one of --glove/--word2vec/--fasttext")
    args.out.mkdir(parents=True, exist_ok=True)
    for name, path in chosen.items():
        cfg = SweepConfig(embeddings=path, format=MODELS[name], tasks=tasks(args.data, args.sts),
                          max_vocab=args.max_vocab, workers=args.workers)
        report = run_sweep(cfg, basis_cache=args.out / f"{name}.eig")
        write_report(report, args.out / f"{name}.csv")
        print(f"# {name}\n\n{render_markdown(report)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
