import pytest
from hypothesis import given, strategies as st

from simorder.datasets import (AnalogyDataset, AnalogySection, DatasetFormatError, ScoredPairDataset,
                               StsDataset, StsItem, format_analogy, format_scored_pairs, format_sts,
                               parse_analogy, parse_scored_pairs, parse_sts)


def test_canonical_questions_words(data_dir):
    ds = parse_analogy(data_dir / "questions-words.txt")
    assert ds.count("semantic") == 8869
    assert ds.count("syntactic") == 10675
    assert len(ds) == 19544
    syn = [s.name for s in ds.sections if s.category == "syntactic"]
    assert len(syn) == 9 and all(n.startswith("gram") for n in syn)


def test_single_question(tmp_path):
    p = tmp_path / "q.txt"
    p.write_text(": family\nboy girl brother sister\n")
    ds = parse_analogy(p)
    assert ds.count("semantic") == 1 and ds.count("syntactic") == 0
    assert ds.sections[0].questions[0] == ("boy", "girl", "brother", "sister")


def test_gram_prefix_is_syntactic(tmp_path):
    p = tmp_path / "q.txt"
    p.write_text(": gram1-adjective-to-adverb\ncalm calmly quick quickly\n")
    assert parse_analogy(p).sections[0].category == "syntactic"


@pytest.mark.parametrize("content,line", [
    (": s\na b c\n", 2),
    (": s\na b c d e\n", 2),
    ("a b c d\n", 1),
])
def test_analogy_errors(tmp_path, content, line):
    p = tmp_path / "q.txt"
    p.write_text(content)
    with pytest.raises(DatasetFormatError, match=f":{line}:"):
        parse_analogy(p)


def test_simlex_bundled_copy(data_dir):
    # 3-column rendering with '#' comment lines
    ds = parse_scored_pairs(data_dir / "simlex999.txt", "generic-3col")
    assert len(ds) == 999
    assert ds.pairs[0] == ("old", "new", 1.58)


def test_simlex_original_layout(tmp_path):
    p = tmp_path / "SimLex-999.txt"
    p.write_text("word1\tword2\tPOS\tSimLex999\tconc(w1)\n"
                 "old\tnew\tA\t1.58\t2.72\n"
                 "smart\tintelligent\tA\t9.2\t1.75\n")
    ds = parse_scored_pairs(p, "simlex")
    assert ds.pairs == (("old", "new", 1.58), ("smart", "intelligent", 9.2))


def test_simlex_missing_column(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("word1\tword2\tscore\na\tb\t1\nc\td\t2\n")
    with pytest.raises(DatasetFormatError, match="SimLex999"):
        parse_scored_pairs(p, "simlex")


def test_men_natural(data_dir):
    ds = parse_scored_pairs(data_dir / "MEN_natural_full.txt", "men")
    assert len(ds) == 3000
    assert ds.pairs[0] == ("sun", "sunlight", 50.0)


def test_men_lemma_suffixes(tmp_path):
    p = tmp_path / "men.txt"
    p.write_text("sun-n sunlight-n 50.0\nrun-v jog-v 40\nbig-j large-j 45\n")
    assert parse_scored_pairs(p, "men", strip_pos=True).pairs[1] == ("run", "jog", 40.0)
    assert parse_scored_pairs(p, "men").pairs[1] == ("run-v", "jog-v", 40.0)


def test_generic_line(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("cat dog 7.5\nfoo bar 1\n")
    assert parse_scored_pairs(p).pairs[0] == ("cat", "dog", 7.5)


def test_pair_errors(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("cat dog high\nfoo bar 1\n")
    with pytest.raises(DatasetFormatError, match="non-numeric"):
        parse_scored_pairs(p)
    p.write_text("cat dog 1\n")
    with pytest.raises(DatasetFormatError, match="at least 2"):
        parse_scored_pairs(p)
    p.write_text("cat 1\nfoo bar 1\n")
    with pytest.raises(DatasetFormatError, match=":1:"):
        parse_scored_pairs(p)


def test_sts_synthetic(tmp_path):
    p = tmp_path / "sts-test.csv"
    p.write_text("main-captions\tMSRvid\t2012\t0001\t5.000\ta man sings\ta man sings\n"
                 "main-news\tx\t2014\t0002\t1.2\tone\ttwo\textra\tfields\n")
    ds = parse_sts(p)
    assert ds.split == "test" and len(ds) == 2
    assert ds.items[0] == StsItem(5.0, "a man sings", "a man sings")


def test_sts_errors(tmp_path):
    p = tmp_path / "sts.csv"
    p.write_text("g\tf\t2012\t0001\t5.0\tonly one\n")
    with pytest.raises(DatasetFormatError, match=":1: expected at least 7"):
        parse_sts(p)
    p.write_text("g\tf\t2012\t0001\t5.5\ta\tb\n")
    with pytest.raises(DatasetFormatError, match="outside"):
        parse_sts(p)


words = st.text(alphabet="abcdefghij", min_size=1, max_size=6)


@given(st.lists(st.tuples(st.sampled_from(["family", "gram2-opposite", "capital"]),
                          st.lists(st.tuples(words, words, words, words), max_size=4)),
                min_size=1, max_size=4))
def test_analogy_reserialize(tmp_path_factory, sections):
    ds = AnalogyDataset(tuple(AnalogySection(n, tuple(qs)) for n, qs in sections), "q")
    p = tmp_path_factory.mktemp("a") / "q.txt"
    p.write_text(format_analogy(ds))
    assert parse_analogy(p) == ds


@given(st.lists(st.tuples(words, words, st.floats(-100, 100, allow_nan=False)), min_size=2, max_size=10))
def test_pairs_reserialize(tmp_path_factory, pairs):
    ds = ScoredPairDataset(tuple(pairs), "p")
    p = tmp_path_factory.mktemp("p") / "p.txt"
    p.write_text(format_scored_pairs(ds))
    assert parse_scored_pairs(p) == ds


@given(st.lists(st.tuples(st.floats(0, 5), st.text("ab .,", min_size=1).filter(str.strip),
                          st.text("cd !", min_size=1).filter(str.strip)), min_size=1, max_size=5))
def test_sts_reserialize(tmp_path_factory, items):
    ds = StsDataset(tuple(StsItem(*it) for it in items), "test", "sts-test")
    p = tmp_path_factory.mktemp("s") / "sts-test.csv"
    p.write_text(format_sts(ds))
    assert parse_sts(p) == ds
