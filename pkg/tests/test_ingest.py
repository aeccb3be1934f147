import json
from pathlib import Path

import pytest

from authorship.ingest import (
    Corpus,
    CorpusParseError,
    HarvestError,
    JournalConfig,
    RawRecord,
    dump_corpus,
    fetch_remote,
    filter_period,
    load_local,
    map_work,
)

FIXTURES = Path(__file__).parent / "fixtures" / "crossref"


class FakeResponse:
    def __init__(self, payload=None, text=None, status=200):
        self.payload, self.text, self.status = payload, text, status

    def raise_for_status(self):
        if self.status >= 400:
            raise OSError(f"HTTP {self.status}")

    def json(self):
        if self.payload is None:
            return json.loads(self.text)
        return self.payload


class ReplaySession:
    """Serves recorded pages keyed by cursor; can fail on a chosen request."""

    def __init__(self, pages, fail_on=None):
        self.pages = pages
        self.fail_on = fail_on
        self.calls = []

    def get(self, url, params=None, headers=None, timeout=None):
        self.calls.append((url, dict(params), dict(headers)))
        if self.fail_on is not None and len(self.calls) - 1 == self.fail_on:
            self.fail_on = None
            raise ConnectionError("connection reset")
        return self.pages[params["cursor"]]


def recorded_pages():
    load = lambda i: json.loads((FIXTURES / f"issn_1234-5679_page{i}.json").read_text(encoding="utf-8"))
    return {"*": FakeResponse(load(0)), "AoJ2abc": FakeResponse(load(1)), "AoJ2def": FakeResponse(load(2))}


def _work(doi, authors=("DOE JOHN",)):
    return {"DOI": doi, "ISSN": ["1234-5679"], "publisher": "P", "title": ["T"],
            "published-print": {"date-parts": [[2020]]},
            "author": [{"family": a.split()[0], "given": a.split()[1]} for a in authors]}


def _page(items, cursor=None):
    return FakeResponse({"message": {"items": items, "next-cursor": cursor}})


CONFIG = JournalConfig(["1234-5679"])


def test_three_works_pass_through():
    session = ReplaySession({"*": _page([_work("10.1/a"), _work("10.1/b"), _work("10.1/c")], "n"),
                             "n": _page([])})
    corpus = fetch_remote(CONFIG, "http://mock/works", session=session, delay=0)
    assert [r.doi for r in corpus] == ["10.1/a", "10.1/b", "10.1/c"]


def test_duplicate_doi_collapses():
    session = ReplaySession({"*": _page([_work("10.1/A"), _work("10.1/a")])})
    corpus = fetch_remote(CONFIG, "http://mock/works", session=session, delay=0)
    assert len(corpus) == 1
    assert [s.reason for s in corpus.skipped] == ["duplicate_doi"]


def test_recorded_replay():
    session = ReplaySession(recorded_pages())
    corpus = fetch_remote(CONFIG, "http://mock/works", session=session, delay=0, user_agent="test-agent")
    assert [r.doi for r in corpus] == ["10.1234/econ.2019.001", "10.1234/econ.2019.002", "10.1234/econ.2020.004"]
    reasons = sorted(s.reason for s in corpus.skipped)
    assert reasons == ["duplicate_doi", "missing_authors"]
    first = corpus.records[0]
    assert first.author_names == ["MARTYNENKO VALENTYNA", "ZAMOTA IRINA"]
    assert (first.year, first.issn, first.citation_count) == (2019, "1234-5679", 3)
    url, params, headers = session.calls[0]
    assert params["filter"] == "issn:1234-5679" and params["cursor"] == "*"
    assert headers["User-Agent"] == "test-agent"
    assert len(session.calls) == 3


def test_network_failure_checkpoint_and_resume():
    session = ReplaySession(recorded_pages(), fail_on=1)
    with pytest.raises(HarvestError) as info:
        fetch_remote(CONFIG, "http://mock/works", session=session, delay=0)
    cp = info.value.checkpoint
    assert info.value.retryable
    assert (cp.cursor, cp.page, len(cp.items)) == ("AoJ2abc", 1, 2)
    resumed = fetch_remote(CONFIG, "http://mock/works", session=session, delay=0, checkpoint=cp)
    fresh = fetch_remote(CONFIG, "http://mock/works", session=ReplaySession(recorded_pages()), delay=0)
    assert [r.to_json() for r in resumed] == [r.to_json() for r in fresh]


def test_malformed_page_names_location():
    session = ReplaySession({"*": FakeResponse({"message": {"oops": []}})})
    with pytest.raises(CorpusParseError) as info:
        fetch_remote(CONFIG, "http://mock/works", session=session, delay=0)
    assert "page=0" in info.value.location
    session = ReplaySession({"*": FakeResponse(text="<html>")})
    with pytest.raises(CorpusParseError, match="page=0"):
        fetch_remote(CONFIG, "http://mock/works", session=session, delay=0)


def test_remote_and_local_agree(tmp_path):
    remote = fetch_remote(CONFIG, "http://mock/works", session=ReplaySession(recorded_pages()), delay=0)
    raw = tmp_path / "works.jsonl"
    with open(raw, "w", encoding="utf-8") as fh:
        for i in range(2):
            for item in json.loads((FIXTURES / f"issn_1234-5679_page{i}.json").read_text())["message"]["items"]:
                fh.write(json.dumps(item, ensure_ascii=False) + "\n")
    local = load_local(raw, CONFIG)
    assert [r.to_json() for r in local] == [r.to_json() for r in remote]
    # the canonical dump loads back unchanged
    canon = tmp_path / "corpus.jsonl"
    dump_corpus(local, canon)
    assert [r.to_json() for r in load_local(canon)] == [r.to_json() for r in local]


def test_load_local_empty(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert len(load_local(p)) == 0


def test_load_local_order(tmp_path):
    p = tmp_path / "two.jsonl"
    p.write_text("\n".join(json.dumps(_work(d)) for d in ("10.1/z", "10.1/a")) + "\n")
    assert [r.doi for r in load_local(p)] == ["10.1/z", "10.1/a"]


def test_load_local_malformed(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text(json.dumps(_work("10.1/a")) + "\n{not json\n")
    with pytest.raises(CorpusParseError, match="line 2"):
        load_local(p)
    corpus = load_local(p, lenient=True)
    assert len(corpus) == 1
    assert corpus.skipped[0].reason == "malformed_line"
    assert corpus.skipped[0].source_location.endswith(":2")


def _rec(doi, year):
    return RawRecord(doi, year, "1234-5679", "P", "T", ["DOE J."])


def test_filter_period():
    c = Corpus([_rec("a", 2001), _rec("b", 2013), _rec("c", 2020), _rec("d", None)])
    out = filter_period(c, (2013, 2020))
    assert [r.year for r in out] == [2013, 2020]
    assert [s.reason for s in out.skipped] == ["missing_year"]
    assert filter_period(out, (2013, 2020)).records == out.records
    assert len(filter_period(c, (1990, 1995))) == 0


def test_journal_config_validation(tmp_path):
    with pytest.raises(ValueError):
        JournalConfig(["12345678"])
    with pytest.raises(ValueError):
        JournalConfig(["1234-5679"], (2020, 2013))
    assert JournalConfig(["2345-678x"]).issn_list == ["2345-678X"]
    f = tmp_path / "issns.txt"
    f.write_text("# journals\n1234-5679 1 0\n2345-678X\n")
    jc = JournalConfig.from_issn_file(f)
    assert jc.issn_list == ["1234-5679", "2345-678X"]
    assert jc.indexing_overrides["1234-5679"] == {"scopus": True, "wos": False}


def test_indexing_override():
    jc = JournalConfig(["1234-5679"], indexing_overrides={"1234-5679": {"wos": True}})
    rec = map_work(_work("10.1/a"), jc)
    assert rec.indexed_wos and rec.indexed
    assert map_work({"DOI": "10.1/x"}, jc) == "missing_authors"
    assert map_work({"author": [{"family": "A", "given": "B"}]}, jc) == "missing_doi"
