import csv
import io

import numpy as np
import pytest

from simorder.cli import main
from simorder.embeddings import EmbeddingMatrix, load_embeddings, save_embeddings
from simorder.sweep import (EvalReport, Record, SweepConfig, TaskSpec, alpha_grid, evaluate_task,
                            load_task, read_csv, render_markdown, resolve_task, run_sweep, write_csv,
                            write_plot_csv, write_report)
from simorder.transform import apply_transform, gram, make_transform, sym_eig

WORDS = ["man", "woman", "king", "queen", "boy", "girl", "big", "bigger", "small", "smaller",
         "dog", "cat", "runs", "sings", "dances", "car", "road", "house", "tree", "water"]


@pytest.fixture
def toy(tmp_path):
    rng = np.random.default_rng(7)
    x = rng.normal(size=(len(WORDS) + 40, 6))
    words = WORDS + [f"filler{i}" for i in range(40)]
    emb = EmbeddingMatrix.from_words(words, x)
    vec = tmp_path / "toy.vec"
    save_embeddings(emb, vec, "vec")
    analogy = tmp_path / "analogy.txt"
    analogy.write_text(": family\nman woman king queen\nboy girl man woman\nking queen boy unicorn\n"
                       ": gram3-comparative\nbig bigger small smaller\nsmall smaller big bigger\n")
    pairs = tmp_path / "pairs.txt"
    pairs.write_text("man woman 8\nking queen 7.5\ncar road 5\ndog cat 6\nhouse tree 2\n"
                     "water runs 1\nboy girl 7\nsings dances 6.5\n")
    sts = tmp_path / "sts-test.csv"
    sts.write_text("g\tf\t2012\t1\t4.0\tThe man sings.\tA woman sings\n"
                   "g\tf\t2012\t2\t1.0\tA dog runs\tThe house\n"
                   "g\tf\t2012\t3\t3.2\tbig car\tsmall car\n"
                   "g\tf\t2012\t4\t0.5\tthe tree\twater\n")
    return {"emb": load_embeddings(vec), "vec": vec, "analogy": analogy, "pairs": pairs, "sts": sts,
            "dir": tmp_path}


def toy_config(toy, **kw):
    tasks = [TaskSpec("analogy", str(toy["analogy"])), TaskSpec("wordsim", str(toy["pairs"])),
             TaskSpec("sts", str(toy["sts"]))]
    return SweepConfig(embeddings=str(toy["vec"]), tasks=tasks, **kw)


# -- grid ----------------------------------------------------------------------------------


def test_default_grid():
    g = alpha_grid()
    assert len(g) == 41 and g[0] == -1.0 and g[-1] == 1.0 and g[20] == 0.0
    assert all(round(a, 2) == a for a in g)
    assert str(g[20]) == "0.0"


@pytest.mark.parametrize("args", [(0, 1, 0), (1, 0, 0.1), (0, 1, 0.001)])
def test_grid_rejects(args):
    with pytest.raises(ValueError):
        alpha_grid(*args)


def test_degenerate_grid():
    assert alpha_grid(0, 0, 0.05) == [0.0]


# -- sweep ------------------------------------------------------------------------------------


def test_sweep_matches_direct_path(toy):
    cfg = toy_config(toy)
    report = run_sweep(cfg)
    emb = toy["emb"]
    basis = sym_eig(gram(emb))
    tasks = [resolve_task(load_task(t), emb, "fold") for t in cfg.tasks]
    by_key = {r.key: r for r in report.records}
    rng = np.random.default_rng(1)
    for alpha in rng.choice(cfg.grid, size=5, replace=False):
        x = apply_transform(emb, make_transform(basis, alpha))
        for task in tasks:
            for rec in evaluate_task(x, task, float(alpha)):
                got = by_key[rec.key]
                assert abs(got.value - rec.value) <= 1e-9
                assert (got.covered, got.skipped) == (rec.covered, rec.skipped)


def test_sweep_record_layout(toy):
    report = run_sweep(toy_config(toy))
    assert not report.errors
    keys = [r.key for r in report.records]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    assert len(report.records) == 41 * (3 + 1 + 1)
    sem = [r for r in report.records if r.metric == "semantic"][0]
    assert (sem.covered, sem.skipped) == (2, 1)


def test_sweep_reproducible_csv(toy, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_report(run_sweep(toy_config(toy, alpha_start=-0.5, alpha_end=0.5, alpha_step=0.25)), a)
    write_report(run_sweep(toy_config(toy, alpha_start=-0.5, alpha_end=0.5, alpha_step=0.25,
                                      workers=3)), b)
    assert a.read_bytes() == b.read_bytes()


def test_sweep_zero_equals_eval(toy, capsys):
    report = run_sweep(toy_config(toy, alpha_start=0, alpha_end=0))
    assert {r.alpha for r in report.records} == {0.0}
    for task, path in (("wordsim", toy["pairs"]), ("sts", toy["sts"]), ("analogy", toy["analogy"])):
        assert main(["eval", "--in", str(toy["vec"]), "--task", task, "--dataset", str(path)]) == 0
        out = capsys.readouterr().out.splitlines()[1:]
        for line in out:
            t, ds, metric, value = line.split("\t")[:4]
            rec = next(r for r in report.records if (r.task, r.dataset, r.metric) == (t, ds, metric))
            assert abs(float(value) - 100 * rec.value) <= 0.005 + 1e-9


def test_sweep_records_task_errors_and_continues(toy, tmp_path):
    bad = tmp_path / "flat-sts.csv"
    bad.write_text("g\tf\t2012\t1\t1.0\tman\tman\ng\tf\t2012\t2\t4.0\tdog\tdog\n")
    cfg = SweepConfig(embeddings=str(toy["vec"]), alpha_start=-0.1, alpha_end=0.1, alpha_step=0.1,
                      tasks=[TaskSpec("sts", str(bad)), TaskSpec("wordsim", str(toy["pairs"]))])
    report = run_sweep(cfg)
    assert len(report.errors) == 3 and "variance" in report.errors[0]["error"]
    assert len(report.records) == 3
    write_report(report, tmp_path / "r.csv")
    back = read_csv(tmp_path / "r.csv")
    assert back.errors == report.errors
    assert "## Errors" in render_markdown(back)


def test_gram_over_full_file(toy):
    cfg = toy_config(toy, max_vocab=10, gram_vocab="full", alpha_start=0.5, alpha_end=0.5)
    full = run_sweep(cfg)
    restricted = run_sweep(toy_config(toy, max_vocab=10, alpha_start=0.5, alpha_end=0.5))
    assert full.provenance["lambda_max"] > restricted.provenance["lambda_max"]


# -- report -----------------------------------------------------------------------------------


def test_csv_round_trip(tmp_path):
    recs = [Record(-0.65, "analogy", "q", "semantic", 0.81, 100, 3),
            Record(0.0, "analogy", "q", "semantic", 0.7649, 100, 3),
            Record(0.1, "wordsim", "simlex", "spearman", 1 / 3, 990, 9)]
    report = EvalReport(recs)
    write_csv(report, tmp_path / "r.csv")
    back = read_csv(tmp_path / "r.csv")
    assert back.records == sorted(recs, key=lambda r: r.key)
    with open(tmp_path / "r.csv") as fh:
        assert next(csv.reader(fh)) == ["alpha", "task", "dataset", "metric", "value", "covered", "skipped"]


def test_relative_error_reduction_display():
    report = EvalReport([Record(0.0, "analogy", "q", "semantic", 0.7649, 10, 0),
                         Record(-0.65, "analogy", "q", "semantic", 0.81, 10, 0)])
    buf = io.StringIO()
    write_plot_csv(report, buf)
    rows = list(csv.DictReader(io.StringIO(buf.getvalue())))
    rer = float(next(r for r in rows if r["alpha"] == "-0.65")["derived"])
    assert rer == pytest.approx((81.00 - 76.49) / (100 - 76.49), abs=1e-12)
    assert "19.2% RER" in render_markdown(report)


def test_single_alpha_report_has_zero_deltas():
    report = EvalReport([Record(0.3, "wordsim", "men", "spearman", 0.8, 10, 0),
                         Record(0.3, "analogy", "q", "syntactic", 0.6, 10, 0)])
    buf = io.StringIO()
    write_plot_csv(report, buf)
    assert all(float(r["derived"]) == 0.0 for r in csv.DictReader(io.StringIO(buf.getvalue())))


def test_best_row_selection():
    report = EvalReport([Record(a, "wordsim", "simlex", "spearman", v, 999, 0)
                         for a, v in ((-0.85, 0.5154), (0.0, 0.4070), (0.5, 0.30))])
    md = render_markdown(report)
    assert "| wordsim | simlex | spearman | 40.70 | 51.54 | -0.85 | +10.84 |" in md


# -- command line ---------------------------------------------------------------------------------


def test_cli_transform_alpha_zero(toy, capsys):
    out = toy["dir"] / "w.bin"
    assert main(["transform", "--in", str(toy["vec"]), "--alpha", "0", "--out", str(out),
                 "--out-format", "bin"]) == 0
    assert "lambda_max=" in capsys.readouterr().out
    x, y = toy["emb"].data, load_embeddings(out, "bin").data
    m = x @ x.T
    assert np.max(np.abs(y @ y.T - m)) <= 1e-6 * np.max(np.abs(m))


def test_cli_transform_second_order(toy):
    out = toy["dir"] / "w2.vec"
    assert main(["transform", "--in", str(toy["vec"]), "--alpha", "0.5", "--out", str(out)]) == 0
    x, y = toy["emb"].data, load_embeddings(out).data
    m = x @ x.T
    m2 = m @ m
    assert np.max(np.abs(y @ y.T - m2)) <= 1e-4 * np.max(np.abs(m2))


def test_cli_transform_negative_alpha_and_basis_cache(toy):
    cache = toy["dir"] / "toy.eig"
    args = ["transform", "--in", str(toy["vec"]), "--alpha", "-0.5", "--out", str(toy["dir"] / "n.vec"),
            "--basis", str(cache)]
    assert main(args) == 0 and cache.exists()
    first = (toy["dir"] / "n.vec").read_bytes()
    assert main(args) == 0
    assert (toy["dir"] / "n.vec").read_bytes() == first


def test_cli_missing_input(tmp_path, capsys):
    missing = tmp_path / "nope.vec"
    code = main(["transform", "--in", str(missing), "--alpha", "0", "--out", str(tmp_path / "o.vec")])
    assert code == 2
    assert str(missing) in capsys.readouterr().err


def test_cli_eval_wordsim_perfect(tmp_path, capsys):
    emb = EmbeddingMatrix.from_words(["base", "near", "mid", "far"],
                                     [[1.0, 0.0], [1.0, 0.1], [1.0, 1.0], [0.0, 1.0]])
    save_embeddings(emb, tmp_path / "e.vec")
    (tmp_path / "p.txt").write_text("base near 9\nbase mid 5\nbase far 1\n")
    code = main(["eval", "--in", str(tmp_path / "e.vec"), "--task", "wordsim",
                 "--dataset", str(tmp_path / "p.txt")])
    assert code == 0
    assert "\tspearman\t100.00\tcovered=3\tskipped=0" in capsys.readouterr().out


def test_cli_eval_constant_sts(toy, tmp_path, capsys):
    bad = tmp_path / "flat.csv"
    bad.write_text("g\tf\t2012\t1\t1.0\tman\tman\ng\tf\t2012\t2\t4.0\tdog\tdog\n")
    code = main(["eval", "--in", str(toy["vec"]), "--task", "sts", "--dataset", str(bad)])
    assert code == 1
    assert "zero variance" in capsys.readouterr().err


def test_cli_eval_with_alpha(toy, capsys):
    assert main(["eval", "--in", str(toy["vec"]), "--task", "wordsim", "--dataset", str(toy["pairs"]),
                 "--alpha", "-0.5"]) == 0
    assert capsys.readouterr().out.startswith("alpha=-0.50")


def test_cli_sweep_and_report(toy, capsys):
    report = toy["dir"] / "sweep.csv"
    code = main(["sweep", "--in", str(toy["vec"]), "--alphas", "-1:1:0.5",
                 "--task", "analogy", "--dataset", str(toy["analogy"]),
                 "--task", "wordsim", "--dataset", str(toy["pairs"]), "--dataset-format", "generic-3col",
                 "--report", str(report)])
    assert code == 0
    assert report.exists() and report.with_suffix(".md").exists()
    assert report.with_suffix(".provenance.json").exists()
    assert len(read_csv(report).records) == 5 * 4
    capsys.readouterr()
    assert main(["report", "--report", str(report)]) == 0
    assert "## Best alpha" in capsys.readouterr().out
    assert main(["report", "--report", str(report), "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 20 and {r["derived_kind"] for r in rows} == {"relative_error_reduction", "delta"}


def test_cli_usage_errors(toy, tmp_path, capsys):
    assert main(["sweep", "--in", str(toy["vec"]), "--task", "wordsim", "--report", "r.csv"]) == 2
    assert main(["sweep", "--in", str(toy["vec"]), "--task", "wordsim", "--task", "sts",
                 "--dataset", str(toy["pairs"]), "--report", str(tmp_path / "r.csv")]) == 2
    assert main(["sweep", "--in", str(toy["vec"]), "--alphas", "1:0:0.1", "--task", "wordsim",
                 "--dataset", str(toy["pairs"]), "--report", str(tmp_path / "r.csv")]) == 2
    assert main(["bogus"]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,report\n")
    assert main(["report", "--report", str(bad)]) == 2
