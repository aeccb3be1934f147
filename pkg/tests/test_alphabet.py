import math
import random

import pytest

from authorship.alphabet import (
    CYRILLIC_COLLATIONS,
    LATIN,
    OrderingVerdict,
    accidental_probability,
    adjusted_count,
    adjusted_counts,
    check_corpus,
    check_order,
    dump_verdicts,
    load_verdicts,
    summarize,
    summarize_verdicts,
)
from authorship.ingest import Corpus, RawRecord
from authorship.nameproc import parse_name
from oracles import CAP, UA_RU, brute_verdict, random_lists

def paper(names, doi="10.6/x", indexed=False):
    return RawRecord(doi, 2020, "1234-5679", "P", "T", list(names), indexed_scopus=indexed)


def verdict(names, **kw):
    return check_order(paper(names), [parse_name(n) for n in names], **kw)


def test_martynenko_zamota():
    v = verdict(["MARTYNENKO V.", "ZAMOTA I."])
    assert v.latin_ordered and not v.cyrillic_ordered
    assert not v.definitely_non_alpha


def test_same_surname_uses_initials():
    assert verdict(["IVANOV A.", "IVANOV B."]).latin_ordered
    v = verdict(["IVANOV B.", "IVANOV A."])
    assert v.definitely_non_alpha


def test_identical_names_are_ordered():
    v = verdict(["KAFKA S.", "KAFKA S."])
    assert v.latin_ordered and v.cyrillic_ordered


def test_cyrillic_list():
    v = verdict(["ЗАМОТА І.", "МАРТИНЕНКО В."])
    assert v.cyrillic_ordered and not v.latin_ordered


def test_verdict_needs_two_authors():
    with pytest.raises(ValueError):
        OrderingVerdict("x", 1, True, True)
    with pytest.raises(ValueError):
        verdict(["KAFKA S."])


def test_collation_ranks():
    key = CYRILLIC_COLLATIONS["ukrainian_russian"].key
    assert key("Г") < key("Ґ") < key("Д")
    assert key("Е") < key("Є") < key("Ж")
    assert key("И") < key("І") < key("Ї") < key("Й")
    assert LATIN.key("ab-c") == LATIN.key("ABC")


@pytest.mark.parametrize("n, p", [(1, 1.0), (2, 0.5), (3, 1 / 6), (4, 1 / 24)])
def test_accidental_probability(n, p):
    assert accidental_probability(n) == pytest.approx(p)


def test_accidental_probability_domain():
    with pytest.raises(ValueError):
        accidental_probability(0)
    with pytest.raises(ValueError):
        adjusted_count(3, 0)


def test_adjusted_count_examples():
    # half-up rounding of count * (1 - 1/n!)
    assert adjusted_count(5194, 2) == 2597
    assert adjusted_count(1284, 3) == 1070
    assert adjusted_count(135, 4) == 129
    assert adjusted_count(3, 2) == 2
    assert adjusted_count(7, 1) == 0


def test_adjusted_counts_invariants():
    rng = random.Random(1)
    for _ in range(50):
        per_n = {n: rng.randint(0, 500) for n in range(1, rng.randint(2, 8))}
        out = adjusted_counts(per_n)
        assert out["alphabetical_total"] == sum(per_n.values())
        assert out["adjusted_total"] == sum(v["adjusted"] for v in out["per_n"].values())
        for n, v in out["per_n"].items():
            assert 0 <= v["adjusted"] <= v["alphabetical"]
            assert abs(v["adjusted"] - v["alphabetical"] * (1 - 1 / math.factorial(n))) <= 0.5


def test_summarize_half_non_alpha():
    papers = [paper(["BOND X.", "ZAMOTA X."], "d1"), paper(["ZAMOTA X.", "BOND X."], "d2"),
              paper(["KAFKA X.", "MARTYNENKO X."], "d3"), paper(["MARTYNENKO X.", "KAFKA X."], "d4")]
    verdicts, skips = check_corpus(Corpus(papers))
    assert not skips
    (s,) = summarize(papers, verdicts)
    assert s.collaborative_papers == 4
    assert s.definitely_non_alpha == 2 and s.definitely_non_alpha_share == 0.5
    assert s.alphabetical_total == 2 and s.adjusted_intentional == 1


def test_summarize_unknown_doi():
    papers = [paper(["A X.", "B X."], "d1")]
    verdicts, _ = check_corpus(papers)
    with pytest.raises(KeyError):
        summarize(papers, verdicts, {"entire": ["d1", "nope"]})


def test_partitions_tile():
    rng = random.Random(8)
    surnames = ["KAFKA", "ZAMOTA", "MARTYNENKO", "IVANOV", "PETRENKO", "ШЕВЧЕНКО", "КОВАЛЬ", "BOND"]
    papers = [paper([f"{s} {rng.choice('ABCD')}." for s in rng.sample(surnames, rng.randint(1, 4))],
                    f"d{i}", rng.random() < 0.4) for i in range(60)]
    verdicts, _ = check_corpus(papers)
    parts = {"indexed": [p.doi for p in papers if p.indexed], "not_indexed": [p.doi for p in papers if not p.indexed]}
    entire = summarize(papers, verdicts)[0]
    idx, nidx = summarize(papers, verdicts, parts)
    assert idx.collaborative_papers + nidx.collaborative_papers == entire.collaborative_papers
    assert idx.definitely_non_alpha + nidx.definitely_non_alpha == entire.definitely_non_alpha
    assert idx.alphabetical_total + nidx.alphabetical_total == entire.alphabetical_total


def test_latin_evidence_is_enough():
    rng = random.Random(3)
    pool = ["KAFKA", "ZAMOTA", "MARTYNENKO", "BOSOVSKA", "VERHUN", "DIBROVA", "YUSHCHENKO", "HAVRYLIUK"]
    for _ in range(30):
        names = sorted(f"{s} {rng.choice('ABS')}." for s in rng.sample(pool, rng.randint(2, 5)))
        v = verdict(names)
        assert v.latin_ordered and not v.definitely_non_alpha


def test_strictly_decreasing_lists():
    rng = random.Random(4)
    lat = ["BOND", "HAVRYLIUK", "KAFKA", "MARTYNENKO", "VERHUN", "ZAMOTA"]
    cyr = ["БОНД", "ГАВРИЛЮК", "ҐАВА", "ЄРМОЛЕНКО", "ЗАМОТА", "КАФКА", "ЯРЕМЧУК"]
    for _ in range(20):
        names = [f"{s} A." for s in sorted(rng.sample(lat, rng.randint(2, 5)), reverse=True)]
        assert not verdict(names).latin_ordered
        names = [f"{s} А." for s in sorted(rng.sample(cyr, rng.randint(2, 5)), key=lambda s: [UA_RU.index(c) for c in s],
                                            reverse=True)]
        assert not verdict(names).cyrillic_ordered


def test_verdicts_round_trip(tmp_path):
    verdicts, _ = check_corpus([paper(["A X.", "B X."], "d1"), paper(["B X.", "A X."], "d2")])
    p = tmp_path / "v.jsonl"
    dump_verdicts(verdicts, p)
    assert load_verdicts(p) == verdicts


def test_unreadable_names_are_skipped():
    verdicts, skips = check_corpus([paper(["ΑΛΦΑ B.", "KAFKA S."], "d1")])
    assert verdicts == [] and len(skips) == 1


def test_matches_brute_force():
    for raws in random_lists(30, 30, max_len=4):
        v = verdict(raws, cap=CAP)
        assert (v.latin_ordered, v.cyrillic_ordered) == brute_verdict(raws), raws
