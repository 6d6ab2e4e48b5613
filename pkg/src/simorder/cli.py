"""Command line interface: ``simorder {transform,eval,sweep,report}``.

Exit codes: 0 success, 1 evaluation error, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .datasets import PAIR_FORMATS, DatasetFormatError
from .embeddings import EmbeddingFormatError, save_embeddings
from .evaluation import UndefinedCorrelationError
from .sweep import (TASKS, SweepConfig, TaskSpec, compute_basis, evaluate_task, load_task,
                    parse_alpha_range, prepare_embeddings, read_csv, render_markdown,
                    resolve_task, run_sweep, write_plot_csv, write_report)
from .transform import DEFAULT_EIG_FLOOR, apply_transform, make_transform

logger = logging.getLogger("simorder")

EXIT_OK, EXIT_EVAL, EXIT_USAGE = 0, 1, 2

_INPUT_ERRORS = (OSError, EmbeddingFormatError, DatasetFormatError)


class UsageError(Exception):
    pass


def _max_vocab(text: str) -> int | None:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("--max-vocab must be >= 0 (0 = no limit)")
    return n or None


def _embedding_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="inp", required=True, metavar="PATH", help="input embeddings")
    p.add_argument("--format", choices=("vec", "glove", "bin"), default="vec",
                   help="vec: text with 'V D' header; glove: headerless text; bin: word2vec binary")
    p.add_argument("--max-vocab", type=_max_vocab, default=200000, metavar="N",
                   help="keep the first N unique words (default 200000, 0 = all)")
    p.add_argument("--pre-normalize", action="store_true",
                   help="length-normalize rows before building the transform")
    p.add_argument("--eig-floor", type=float, default=DEFAULT_EIG_FLOOR, metavar="F",
                   help="relative eigenvalue floor applied before exponentiation")
    p.add_argument("--gram-vocab", choices=("restricted", "full"), default="restricted",
                   help="compute X^T X over the kept rows or over the whole file")
    p.add_argument("--basis", metavar="PATH",
                   help="eigenbasis cache file: read if present, written otherwise")


def _eval_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lookup", choices=("exact", "fold"), default="fold",
                   help="exact match only, or fall back to case-insensitive match (default)")
    p.add_argument("--stopwords", metavar="PATH", help="stopword file for sts (default: bundled English list)")
    p.add_argument("--strip-pos", action="store_true", help="strip -n/-v/-j suffixes from pair words")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simorder", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="apply W_alpha and write the transformed embeddings")
    _embedding_args(p)
    p.add_argument("--alpha", type=float, default=0.0, metavar="F")
    p.add_argument("--out", required=True, metavar="PATH")
    p.add_argument("--out-format", choices=("vec", "glove", "bin"),
                   help="output format (default: same as --format)")

    p = sub.add_parser("eval", help="evaluate one task at one alpha")
    _embedding_args(p)
    _eval_args(p)
    p.add_argument("--alpha", type=float, default=0.0, metavar="F")
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--dataset", required=True, metavar="PATH")
    p.add_argument("--dataset-format", choices=PAIR_FORMATS,
                   help="word-pair file layout for wordsim (default generic-3col)")

    p = sub.add_parser("sweep", help="evaluate tasks over an alpha grid and write a report")
    _embedding_args(p)
    _eval_args(p)
    p.add_argument("--alphas", default="-1:1:0.05", metavar="START:END:STEP")
    p.add_argument("--task", choices=TASKS, action="append", required=True,
                   help="repeatable; the k-th --task uses the k-th --dataset")
    p.add_argument("--dataset", action="append", required=True, metavar="PATH")
    p.add_argument("--dataset-format", choices=PAIR_FORMATS, action="append",
                   help="repeatable, matched to the wordsim datasets in order")
    p.add_argument("--report", required=True, metavar="PATH", help="CSV report path")
    p.add_argument("--workers", type=int, default=1, help="alphas evaluated concurrently")

    p = sub.add_parser("report", help="render a sweep report")
    p.add_argument("--report", required=True, metavar="PATH")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown",
                   help="markdown tables or plot-ready CSV with derived columns")
    p.add_argument("--out", metavar="PATH", help="write here instead of stdout")
    return parser


def _fix_negative_ranges(argv: list[str]) -> list[str]:
    # argparse reads "--alphas -1:1:0.05" as two options
    out = []
    it = iter(argv)
    for a in it:
        if a == "--alphas":
            nxt = next(it, None)
            out.append(a if nxt is None else f"--alphas={nxt}")
        else:
            out.append(a)
    return out


def cmd_transform(args) -> int:
    emb = prepare_embeddings(args.inp, args.format, args.max_vocab, args.pre_normalize)
    basis = compute_basis(emb, path=args.inp, format=args.format, gram_vocab=args.gram_vocab,
                          pre_normalize=args.pre_normalize, basis_cache=args.basis)
    t = make_transform(basis, args.alpha, args.eig_floor)
    out = apply_transform(emb, t)
    save_embeddings(out, args.out, args.out_format or args.format)
    print(f"V={len(out)} d={out.dim} alpha={args.alpha:g} order={t.order:g}")
    print(f"lambda_max={basis.lam_max:.6g} lambda_min={float(basis.lam[-1]):.6g} "
          f"clamped={t.n_clamped}")
    print(f"wrote {args.out}")
    return EXIT_OK


def _format_record(r) -> str:
    return (f"{r.task}\t{r.dataset}\t{r.metric}\t{100 * r.value:.2f}\t"
            f"covered={r.covered}\tskipped={r.skipped}")


def cmd_eval(args) -> int:
    if args.dataset_format and args.task != "wordsim":
        raise UsageError("--dataset-format only applies to --task wordsim")
    spec = TaskSpec(args.task, args.dataset, args.dataset_format)
    task = load_task(spec, args.stopwords, args.strip_pos)
    emb = prepare_embeddings(args.inp, args.format, args.max_vocab, args.pre_normalize)
    if args.alpha != 0.0:
        basis = compute_basis(emb, path=args.inp, format=args.format, gram_vocab=args.gram_vocab,
                              pre_normalize=args.pre_normalize, basis_cache=args.basis)
        emb = apply_transform(emb, make_transform(basis, args.alpha, args.eig_floor))
    resolve_task(task, emb, args.lookup)
    try:
        records = evaluate_task(emb, task, args.alpha, args.lookup)
    except (UndefinedCorrelationError, ValueError) as exc:
        print(f"simorder: evaluation failed: {exc}", file=sys.stderr)
        return EXIT_EVAL
    print(f"alpha={args.alpha:.2f}")
    for r in records:
        print(_format_record(r))
    return EXIT_OK


def _task_specs(args) -> list[TaskSpec]:
    if len(args.task) != len(args.dataset):
        raise UsageError(f"{len(args.task)} --task but {len(args.dataset)} --dataset given")
    formats = list(args.dataset_format or [])
    n_ws = sum(t == "wordsim" for t in args.task)
    if formats and len(formats) not in (1, n_ws):
        raise UsageError("give one --dataset-format, or one per wordsim dataset")
    specs = []
    k = 0
    for t, path in zip(args.task, args.dataset):
        fmt = None
        if t == "wordsim" and formats:
            fmt = formats[0] if len(formats) == 1 else formats[k]
            k += 1
        specs.append(TaskSpec(t, path, fmt))
    return specs


def cmd_sweep(args) -> int:
    try:
        start, end, step = parse_alpha_range(args.alphas)
        cfg = SweepConfig(embeddings=args.inp, tasks=_task_specs(args), format=args.format,
                          max_vocab=args.max_vocab, alpha_start=start, alpha_end=end,
                          alpha_step=step, lookup_mode=args.lookup, pre_normalize=args.pre_normalize,
                          eig_floor=args.eig_floor, gram_vocab=args.gram_vocab,
                          stopwords=args.stopwords, strip_pos=args.strip_pos, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    for t in cfg.tasks:
        if not Path(t.path).is_file():
            raise FileNotFoundError(t.path)
    report = run_sweep(cfg, basis_cache=args.basis)
    csv_path, side, md = write_report(report, args.report)
    print(f"{len(report.records)} records over {len(cfg.grid)} alphas -> {csv_path}")
    print(f"summary -> {md}; provenance -> {side}")
    if report.errors:
        print(f"{len(report.errors)} task evaluation(s) failed; see {md}", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = read_csv(args.report)
    except ValueError as exc:
        print(f"simorder: malformed report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    fh = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        if args.format == "csv":
            write_plot_csv(report, fh)
        else:
            fh.write(render_markdown(report))
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


COMMANDS = {"transform": cmd_transform, "eval": cmd_eval, "sweep": cmd_sweep, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    argv = _fix_negative_ranges(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"simorder: no such file: {exc.filename or exc.args[0]}", file=sys.stderr)
        return EXIT_USAGE
    except UsageError as exc:
        print(f"simorder: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _INPUT_ERRORS as exc:
        print(f"simorder: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UndefinedCorrelationError, ValueError, ArithmeticError) as exc:
        print(f"simorder: {exc}", file=sys.stderr)
        return EXIT_EVAL


if __name__ == "__main__":
    sys.exit(main())
