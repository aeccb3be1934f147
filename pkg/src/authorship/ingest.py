"""Harvesting and loading of Crossref-style publication metadata.

The canonical on-disk corpus is JSONL, one :class:`RawRecord` per line in a
fixed field order.  Raw Crossref work items (as served by ``/works``) are
accepted too and mapped with the same rules the harvester uses.
"""
from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

ISSN_RE = re.compile(r"^\d{4}-\d{3}[\dxX]$")

DEFAULT_ENDPOINT = "https://api.crossref.org/works"
DEFAULT_USER_AGENT = "authorship-harvester/0.1 (mailto:unknown@example.org)"


class CorpusParseError(ValueError):
    """A corpus line or an API page could not be parsed."""

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.location = location


class HarvestError(RuntimeError):
    """Network failure during harvesting; ``checkpoint`` allows resuming."""

    retryable = True

    def __init__(self, message: str, checkpoint: HarvestCheckpoint):
        super().__init__(message)
        self.checkpoint = checkpoint


@dataclass
class JournalConfig:
    issn_list: list[str]
    period: tuple[int, int] | None = None
    indexing_overrides: dict[str, dict[str, bool]] = field(default_factory=dict)

    def __post_init__(self):
        self.issn_list = [s.strip().upper() for s in self.issn_list]
        bad = [s for s in self.issn_list if not ISSN_RE.match(s)]
        if bad:
            raise ValueError(f"malformed ISSN(s): {bad}")
        if self.period is not None:
            start, end = self.period
            if start > end:
                raise ValueError(f"period start {start} after end {end}")
            self.period = (int(start), int(end))
        self.indexing_overrides = {k.upper(): v for k, v in self.indexing_overrides.items()}

    @classmethod
    def from_issn_file(cls, path, period=None, indexing_overrides=None) -> JournalConfig:
        """Read one ISSN per line; optional tab-separated ``scopus`` and ``wos`` flags (0/1)."""
        issns, overrides = [], dict(indexing_overrides or {})
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            issns.append(parts[0])
            if len(parts) >= 3:
                overrides[parts[0]] = {"scopus": parts[1] in ("1", "true", "yes"),
                                       "wos": parts[2] in ("1", "true", "yes")}
        return cls(issns, period, overrides)


@dataclass
class RawRecord:
    doi: str
    year: int | None
    issn: str
    publisher: str
    title: str
    author_names: list[str]
    citation_count: int | None = None
    indexed_scopus: bool = False
    indexed_wos: bool = False

    @property
    def indexed(self) -> bool:
        return self.indexed_scopus or self.indexed_wos

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)


@dataclass
class SkipEntry:
    reason: str
    source_location: str
    doi: str | None = None

    def to_dict(self) -> dict:
        return {"doi": self.doi, "reason": self.reason, "source_location": self.source_location}


@dataclass
class Corpus:
    records: list[RawRecord]
    provenance: dict = field(default_factory=dict)
    skipped: list[SkipEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[RawRecord]:
        return iter(self.records)

    def by_doi(self) -> dict[str, RawRecord]:
        return {r.doi.lower(): r for r in self.records}


@dataclass
class HarvestCheckpoint:
    issn_index: int = 0
    cursor: str = "*"
    page: int = 0
    items: list[dict] = field(default_factory=list)


# --------------------------------------------------------------------------
# mapping


def _first(value):
    if isinstance(value, list):
        return value[0] if value else ""
    return value or ""


def _work_year(item: dict) -> int | None:
    for key in ("published-print", "published-online", "issued", "published", "created"):
        parts = (item.get(key) or {}).get("date-parts") or []
        if parts and parts[0] and parts[0][0] is not None:
            return int(parts[0][0])
    return None


def _author_string(author: dict) -> str:
    if author.get("family"):
        return " ".join(p for p in (author["family"], author.get("given", "")) if p).strip()
    return (author.get("name") or "").strip()


def map_work(item: dict, config: JournalConfig | None = None) -> RawRecord | str:
    """Map one Crossref work item to a RawRecord, or return a skip reason."""
    if "author_names" in item:
        rec = RawRecord(**{k: item.get(k) for k in RawRecord.__dataclass_fields__})
        rec.author_names = list(rec.author_names or [])
    else:
        doi = (item.get("DOI") or "").strip()
        issns = [s.upper() for s in item.get("ISSN") or []]
        issn = ""
        if config:
            issn = next((s for s in issns if s in config.issn_list), "")
        issn = issn or (issns[0] if issns else "")
        count = item.get("is-referenced-by-count")
        rec = RawRecord(
            doi=doi,
            year=_work_year(item),
            issn=issn,
            publisher=item.get("publisher") or "",
            title=_first(item.get("title")),
            author_names=[s for s in (_author_string(a) for a in item.get("author") or []) if s],
            citation_count=int(count) if count is not None else None,
            indexed_scopus=bool(item.get("indexed_scopus", False)),
            indexed_wos=bool(item.get("indexed_wos", False)),
        )
    if not rec.doi:
        return "missing_doi"
    if not rec.author_names:
        return "missing_authors"
    if config and rec.issn.upper() in config.indexing_overrides:
        flags = config.indexing_overrides[rec.issn.upper()]
        rec.indexed_scopus = bool(flags.get("scopus", rec.indexed_scopus))
        rec.indexed_wos = bool(flags.get("wos", rec.indexed_wos))
    return rec


def _build_corpus(items: Iterable[tuple[dict, str]], config, provenance) -> Corpus:
    records, skipped, seen = [], [], set()
    for item, location in items:
        mapped = map_work(item, config)
        if isinstance(mapped, str):
            skipped.append(SkipEntry(mapped, location, item.get("DOI") or item.get("doi") or None))
            continue
        key = mapped.doi.lower()
        if key in seen:
            logger.warning("duplicate DOI %s at %s, keeping first", mapped.doi, location)
            skipped.append(SkipEntry("duplicate_doi", location, mapped.doi))
            continue
        seen.add(key)
        records.append(mapped)
    return Corpus(records, provenance, skipped)


# --------------------------------------------------------------------------
# local files


def load_local(path, config: JournalConfig | None = None, *, lenient: bool = False) -> Corpus:
    """Read a JSONL file of Crossref work items or canonical records.

    Malformed lines raise :class:`CorpusParseError` naming the line number,
    or are skipped with a warning when ``lenient`` is set.
    """
    path = Path(path)
    items, bad = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            location = f"{path.name}:{lineno}"
            try:
                item = json.loads(line)
                if not isinstance(item, dict):
                    raise ValueError("line is not a JSON object")
            except ValueError as exc:
                if not lenient:
                    raise CorpusParseError(f"line {lineno}: {exc}", location) from exc
                logger.warning("skipping malformed line %d of %s: %s", lineno, path, exc)
                bad.append(SkipEntry("malformed_line", location))
                continue
            items.append((item, location))
    corpus = _build_corpus(items, config, {"source": str(path), "fetched_at": None})
    corpus.skipped = bad + corpus.skipped
    return corpus


def dump_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in corpus.records:
            fh.write(rec.to_json() + "\n")


def dump_skips(skips: Iterable[SkipEntry], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in skips:
            fh.write(json.dumps(s.to_dict(), ensure_ascii=False) + "\n")


# --------------------------------------------------------------------------
# remote


def _page_items(payload, location: str) -> tuple[list[dict], str | None]:
    try:
        message = payload["message"]
        items = message["items"]
        if not isinstance(items, list):
            raise TypeError("items is not a list")
        return items, message.get("next-cursor")
    except (KeyError, TypeError) as exc:
        raise CorpusParseError(f"malformed response at {location}: {exc}", location) from exc


def fetch_remote(
    config: JournalConfig,
    endpoint: str = DEFAULT_ENDPOINT,
    *,
    session=None,
    rows: int = 1000,
    delay: float = 1.0,
    user_agent: str = DEFAULT_USER_AGENT,
    timeout: float = 60.0,
    checkpoint: HarvestCheckpoint | None = None,
) -> Corpus:
    """Harvest every work of the configured ISSNs with cursor pagination.

    ``session`` is anything with a requests-style ``get``.  On a network
    failure a :class:`HarvestError` carries a checkpoint; pass it back in to
    resume.
    """
    if session is None:
        import requests

        session = requests.Session()
    cp = checkpoint or HarvestCheckpoint()
    collected: list[tuple[dict, str]] = [(it, loc) for it, loc in cp.items]
    headers = {"User-Agent": user_agent}
    first_request = True
    for idx in range(cp.issn_index, len(config.issn_list)):
        issn = config.issn_list[idx]
        cursor = cp.cursor if idx == cp.issn_index else "*"
        page = cp.page if idx == cp.issn_index else 0
        while True:
            if not first_request and delay > 0:
                time.sleep(delay)
            first_request = False
            location = f"issn={issn} page={page} cursor={cursor}"
            params = {"filter": f"issn:{issn}", "rows": rows, "cursor": cursor}
            try:
                resp = session.get(endpoint, params=params, headers=headers, timeout=timeout)
                resp.raise_for_status()
            except Exception as exc:  # network layer; parse errors are handled below
                state = HarvestCheckpoint(idx, cursor, page, list(collected))
                raise HarvestError(f"request failed at {location}: {exc}", state) from exc
            try:
                payload = resp.json()
            except ValueError as exc:
                raise CorpusParseError(f"invalid JSON at {location}", location) from exc
            items, next_cursor = _page_items(payload, location)
            collected.extend((it, f"{location} item={i}") for i, it in enumerate(items))
            if not items or not next_cursor or next_cursor == cursor:
                break
            cursor, page = next_cursor, page + 1
    provenance = {
        "source": endpoint,
        "fetched_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return _build_corpus(collected, config, provenance)


# --------------------------------------------------------------------------
# filtering


def filter_period(corpus: Corpus, period: tuple[int, int]) -> Corpus:
    """Keep records published within the inclusive year range, in order."""
    start, end = period
    kept, skipped = [], list(corpus.skipped)
    for rec in corpus.records:
        if rec.year is None:
            skipped.append(SkipEntry("missing_year", "filter_period", rec.doi))
        elif start <= rec.year <= end:
            kept.append(rec)
    return Corpus(kept, dict(corpus.provenance), skipped)
