"""Alphabetical ordering of author lists under Latin and Cyrillic readings."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .ingest import Corpus, RawRecord, SkipEntry
from .nameproc import (
    DEFAULT_CANDIDATE_CAP,
    NameParseError,
    PersonName,
    TransliterationError,
    TransliterationTable,
    cyrillic_readings,
    default_confusables,
    default_transliteration,
    has_cyrillic,
    latin_reading,
    letter_script,
    parse_name,
    strip_diacritics,
)

LATIN_ALPHABET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
UKRAINIAN_ALPHABET = "АБВГҐДЕЄЖЗИІЇЙКЛМНОПРСТУФХЦЧШЩЬЮЯ"
# Ukrainian order with Ё, Ъ, Ы, Э placed where Russian has them
UKRAINIAN_RUSSIAN_ALPHABET = "АБВГҐДЕЁЄЖЗИІЇЙКЛМНОПРСТУФХЦЧШЩЪЫЬЭЮЯ"


@dataclass(frozen=True)
class Collation:
    name: str
    alphabet: str

    def key(self, s: str) -> tuple[int, ...]:
        """Rank tuple of the letters of ``s``; other characters are ignored.

        Letters outside the alphabet sort after it by code point.
        """
        ranks = {ch: i for i, ch in enumerate(self.alphabet)}
        out = []
        for ch in s.upper():
            if ch in ranks:
                out.append(ranks[ch])
            elif ch.isalpha():
                out.append(len(self.alphabet) + ord(ch))
        return tuple(out)


LATIN = Collation("latin", LATIN_ALPHABET)
CYRILLIC_COLLATIONS = {
    "ukrainian_russian": Collation("ukrainian_russian", UKRAINIAN_RUSSIAN_ALPHABET),
    "ukrainian": Collation("ukrainian", UKRAINIAN_ALPHABET + "ЁЪЫЭ"),
}


class UnorderableNameError(ValueError):
    """A name has no usable reading in one of the scripts."""


@dataclass
class OrderingVerdict:
    paper_doi: str
    n_authors: int
    latin_ordered: bool
    cyrillic_ordered: bool
    definitely_non_alpha: bool = field(init=False)

    def __post_init__(self):
        if self.n_authors < 2:
            raise ValueError("verdicts are only defined for collaborative papers")
        self.definitely_non_alpha = not (self.latin_ordered or self.cyrillic_ordered)

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# readings


def _latin_part(s: str, table) -> str:
    return strip_diacritics(latin_reading(s, table))


def latin_key(name: PersonName, table: TransliterationTable | None = None):
    table = table or default_transliteration()
    return (LATIN.key(_latin_part(name.surname, table)),
            tuple(LATIN.key(_latin_part(i, table)) for i in name.initials))


def _cyrillic_options(s: str, table, cap) -> list[str]:
    if not has_cyrillic(s) and not any(ch.isalpha() for ch in s):
        return [s]
    folded = "".join(default_confusables().to_cyrillic.get(ch, ch) for ch in s) if has_cyrillic(s) else s
    opts = cyrillic_readings(folded, table, cap)
    if not opts:
        raise UnorderableNameError(f"no Cyrillic reading for {s!r}")
    return opts


def cyrillic_components(name: PersonName, collation: Collation, table: TransliterationTable | None = None,
                        cap: int = DEFAULT_CANDIDATE_CAP) -> list[tuple[str, frozenset]]:
    """(source text, candidate sort keys) for the surname and each initial."""
    table = table or default_transliteration()
    parts = [name.surname, *name.initials]
    return [(p.upper(), frozenset(collation.key(c) for c in _cyrillic_options(p, table, cap))) for p in parts]


def _pair_ordered(a: list[tuple[str, frozenset]], b: list[tuple[str, frozenset]]) -> bool:
    """Whether some choice of readings puts ``a`` at or before ``b``.

    Parts with the same source text read the same way.  A part decides the
    pair when it can be made strictly smaller; otherwise it must be made
    equal and the next part decides.
    """
    for (sa, ca), (sb, cb) in zip(a, b):
        if sa == sb:
            continue
        if min(ca) < max(cb):
            return True
        if not ca & cb:
            return False
    return len(a) <= len(b)


# --------------------------------------------------------------------------
# verdicts


def check_order(
    paper: RawRecord,
    names: Sequence[PersonName],
    *,
    collation: Collation | str = "ukrainian_russian",
    table: TransliterationTable | None = None,
    cap: int = DEFAULT_CANDIDATE_CAP,
) -> OrderingVerdict:
    """Whether the author list is non-strictly sorted by surname, then initials.

    A Latin-script list counts as Cyrillic-ordered when every adjacent pair is
    ordered for some choice of candidate back-transliterations; each pair is
    judged on its own.
    """
    if len(names) < 2:
        raise ValueError("check_order needs at least two authors")
    if isinstance(collation, str):
        collation = CYRILLIC_COLLATIONS[collation]
    table = table or default_transliteration()
    for n in names:
        if any(letter_script(ch) == "Other" for ch in n.surname + "".join(n.initials)):
            raise UnorderableNameError(f"letters outside Latin and Cyrillic in {n.display!r}")
    try:
        lat = [latin_key(n, table) for n in names]
        cyr = [cyrillic_components(n, collation, table, cap) for n in names]
    except TransliterationError as exc:
        raise UnorderableNameError(str(exc)) from exc
    latin_ordered = all(a <= b for a, b in zip(lat, lat[1:]))
    cyrillic_ordered = all(_pair_ordered(a, b) for a, b in zip(cyr, cyr[1:]))
    return OrderingVerdict(paper.doi, len(names), latin_ordered, cyrillic_ordered)


def check_corpus(
    corpus: Corpus | Iterable[RawRecord],
    *,
    order: str = "surname_first",
    collation: Collation | str = "ukrainian_russian",
    table: TransliterationTable | None = None,
) -> tuple[list[OrderingVerdict], list[SkipEntry]]:
    """Verdicts for every collaborative paper, plus skips for unusable name lists."""
    verdicts, skips = [], []
    for paper in corpus:
        if len(paper.author_names) < 2:
            continue
        try:
            names = [parse_name(raw, order=order) for raw in paper.author_names]
            verdicts.append(check_order(paper, names, collation=collation, table=table))
        except (NameParseError, UnorderableNameError) as exc:
            skips.append(SkipEntry(f"order_unchecked: {exc}", "alphabetize", paper.doi))
    return verdicts, skips


# --------------------------------------------------------------------------
# chance correction


def accidental_probability(n: int) -> float:
    """Probability that n distinct names land in sorted order by chance."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return 1 / math.factorial(n)


def adjusted_count(count: int, n: int) -> int:
    """count * (1 - 1/n!), rounded half-up."""
    if n < 1:
        raise ValueError("n must be at least 1")
    exact = Fraction(count) * (1 - Fraction(1, math.factorial(n)))
    return math.floor(exact + Fraction(1, 2))


def adjusted_counts(per_n_alpha: Mapping[int, int]) -> dict:
    per_n = {n: {"alphabetical": c, "adjusted": adjusted_count(c, n)} for n, c in sorted(per_n_alpha.items())}
    return {
        "per_n": per_n,
        "alphabetical_total": sum(v["alphabetical"] for v in per_n.values()),
        "adjusted_total": sum(v["adjusted"] for v in per_n.values()),
    }


# --------------------------------------------------------------------------
# summaries


@dataclass
class AlphaSummary:
    partition: str
    collaborative_papers: int
    definitely_non_alpha: int
    definitely_non_alpha_share: float
    alphabetical_total: int
    adjusted_intentional: int
    adjusted_intentional_share: float
    per_n: dict[int, dict[str, int]]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_n"] = {str(k): v for k, v in self.per_n.items()}
        return d


def summarize_verdicts(name: str, verdicts: Sequence[OrderingVerdict]) -> AlphaSummary:
    total = len(verdicts)
    non_alpha = sum(v.definitely_non_alpha for v in verdicts)
    per_n_alpha: dict[int, int] = {}
    for v in verdicts:
        if not v.definitely_non_alpha:
            per_n_alpha[v.n_authors] = per_n_alpha.get(v.n_authors, 0) + 1
    adj = adjusted_counts(per_n_alpha)
    return AlphaSummary(
        partition=name,
        collaborative_papers=total,
        definitely_non_alpha=non_alpha,
        definitely_non_alpha_share=non_alpha / total if total else 0.0,
        alphabetical_total=adj["alphabetical_total"],
        adjusted_intentional=adj["adjusted_total"],
        adjusted_intentional_share=adj["adjusted_total"] / total if total else 0.0,
        per_n=adj["per_n"],
    )


def summarize(
    corpus: Corpus | Iterable[RawRecord],
    verdicts: Sequence[OrderingVerdict],
    partitions: Mapping[str, Iterable[str]] | None = None,
) -> list[AlphaSummary]:
    """One summary per partition; a partition is a set of DOIs.

    With no partitions a single ``"entire"`` summary is returned.  Papers in a
    partition without a verdict (solo papers, skipped lists) are ignored, but
    DOIs absent from the corpus are an error.
    """
    known = {p.doi.lower() for p in corpus}
    by_doi = {v.paper_doi.lower(): v for v in verdicts}
    if partitions is None:
        partitions = {"entire": known}
    out = []
    for name, dois in partitions.items():
        dois = {d.lower() for d in dois}
        missing = sorted(dois - known)
        if missing:
            raise KeyError(f"partition {name!r} references unknown papers: {missing[:5]}")
        out.append(summarize_verdicts(name, [by_doi[d] for d in sorted(dois) if d in by_doi]))
    return out


TABLE2_COLUMNS = ["partition", "collaborative_papers", "definitely_non_alpha_count",
                  "definitely_non_alpha_share", "adjusted_intentional_count", "adjusted_intentional_share"]


def table2_rows(summaries: Sequence[AlphaSummary]) -> list[dict]:
    return [{
        "partition": s.partition,
        "collaborative_papers": s.collaborative_papers,
        "definitely_non_alpha_count": s.definitely_non_alpha,
        "definitely_non_alpha_share": f"{s.definitely_non_alpha_share:.4f}",
        "adjusted_intentional_count": s.adjusted_intentional,
        "adjusted_intentional_share": f"{s.adjusted_intentional_share:.4f}",
    } for s in summaries]


def write_table2(summaries: Sequence[AlphaSummary], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TABLE2_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(table2_rows(summaries))


def dump_verdicts(verdicts: Iterable[OrderingVerdict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in verdicts:
            fh.write(json.dumps(v.to_dict(), ensure_ascii=False) + "\n")


def load_verdicts(path) -> list[OrderingVerdict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out.append(OrderingVerdict(d["paper_doi"], d["n_authors"], d["latin_ordered"], d["cyrillic_ordered"]))
    return out
