"""Paper gender categories, reshuffled baselines and per-author statistics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .disambig import AuthorRecord
from .gender import FEMALE, MALE, UNKNOWN, GenderLabel
from .ingest import Corpus, RawRecord

F_SOLO, F_COLL, MIX_COLL, M_COLL, M_SOLO = "FSolo", "FColl", "MixColl", "MColl", "MSolo"
UNCLASSIFIED = "Unclassified"
CATEGORIES = (F_SOLO, F_COLL, MIX_COLL, M_COLL, M_SOLO)
CATEGORY_LABELS = {F_SOLO: "F solo", F_COLL: "F coll", MIX_COLL: "MIX coll", M_COLL: "M coll", M_SOLO: "M solo"}

RNG_ALGORITHM = "numpy.random.Generator(PCG64)"

_CODES = {UNKNOWN: 0, FEMALE: 1, MALE: 2}


def _value(label) -> str:
    if label is None:
        return UNKNOWN
    return label.value if isinstance(label, GenderLabel) else str(label)


def classify_counts(n: int, n_female: int, n_male: int) -> str:
    if n == 1:
        if n_female == 1:
            return F_SOLO
        if n_male == 1:
            return M_SOLO
        return UNCLASSIFIED
    if n >= 2:
        if n_female == n:
            return F_COLL
        if n_male == n:
            return M_COLL
        if n_female and n_male:
            return MIX_COLL
    return UNCLASSIFIED


def classify_paper(paper: RawRecord, labels: Mapping[int, GenderLabel | str]) -> str:
    """Category of one paper from the labels of its author positions.

    Positions missing from ``labels`` count as Unknown.
    """
    n = len(paper.author_names)
    values = [_value(labels.get(pos)) for pos in range(n)]
    return classify_counts(n, values.count(FEMALE), values.count(MALE))


# --------------------------------------------------------------------------
# authorship table


@dataclass
class Authorship:
    """Papers, their author positions and author-level gender labels as arrays.

    ``position_author[k]`` is the author index of the k-th (paper, position)
    slot, or -1 when the name could not be attributed to a record.
    """

    papers: list[RawRecord]
    author_ids: list[str]
    author_codes: np.ndarray
    slot_paper: np.ndarray
    slot_position: np.ndarray
    position_author: np.ndarray
    n_authors: np.ndarray

    @classmethod
    def build(cls, corpus: Corpus | Sequence[RawRecord], records: Sequence[AuthorRecord],
              labels: Mapping[str, GenderLabel | str]) -> Authorship:
        papers = list(corpus.records if isinstance(corpus, Corpus) else corpus)
        paper_index = {p.doi.lower(): i for i, p in enumerate(papers)}
        author_ids = [r.id for r in records]
        author_index = {rid: i for i, rid in enumerate(author_ids)}
        owner: dict[tuple[int, int], int] = {}
        for r in records:
            for m in r.mentions:
                pi = paper_index.get(m.paper_doi.lower())
                if pi is not None:
                    owner[(pi, m.position)] = author_index[r.id]
        slot_paper, slot_pos, slot_author = [], [], []
        for pi, p in enumerate(papers):
            for pos in range(len(p.author_names)):
                slot_paper.append(pi)
                slot_pos.append(pos)
                slot_author.append(owner.get((pi, pos), -1))
        codes = np.array([_CODES[_value(labels.get(rid))] for rid in author_ids], dtype=np.int8)
        return cls(
            papers=papers,
            author_ids=author_ids,
            author_codes=codes,
            slot_paper=np.array(slot_paper, dtype=np.int64),
            slot_position=np.array(slot_pos, dtype=np.int64),
            position_author=np.array(slot_author, dtype=np.int64),
            n_authors=np.array([len(p.author_names) for p in papers], dtype=np.int64),
        )

    @property
    def n_papers(self) -> int:
        return len(self.papers)

    def slot_codes(self, author_codes: np.ndarray | None = None) -> np.ndarray:
        codes = self.author_codes if author_codes is None else author_codes
        out = np.zeros(len(self.position_author), dtype=np.int8)
        known = self.position_author >= 0
        out[known] = codes[self.position_author[known]]
        return out

    def categories(self, author_codes: np.ndarray | None = None) -> np.ndarray:
        """Category index per paper: 0..4 in CATEGORIES order, -1 unclassified."""
        slots = self.slot_codes(author_codes)
        nf = np.bincount(self.slot_paper, weights=(slots == 1), minlength=self.n_papers).astype(np.int64)
        nm = np.bincount(self.slot_paper, weights=(slots == 2), minlength=self.n_papers).astype(np.int64)
        n = self.n_authors
        cat = np.full(self.n_papers, -1, dtype=np.int64)
        solo = n == 1
        coll = n >= 2
        cat[solo & (nf == 1)] = 0
        cat[solo & (nm == 1)] = 4
        cat[coll & (nf > 0) & (nm > 0)] = 2
        cat[coll & (nf == n)] = 1
        cat[coll & (nm == n)] = 3
        return cat

    def category_names(self, author_codes: np.ndarray | None = None) -> list[str]:
        return [CATEGORIES[c] if c >= 0 else UNCLASSIFIED for c in self.categories(author_codes)]


# --------------------------------------------------------------------------
# breakdowns


@dataclass
class CategoryBreakdown:
    total_papers: int
    classified_papers: int
    counts: dict[str, int]
    shares: dict[str, float]
    subgroup: str | int | None = None

    def to_dict(self) -> dict:
        return {"subgroup": self.subgroup, "total_papers": self.total_papers,
                "classified_papers": self.classified_papers, "counts": self.counts, "shares": self.shares}


def _breakdown(cats: np.ndarray, subgroup=None) -> CategoryBreakdown:
    counts = {c: int(np.sum(cats == i)) for i, c in enumerate(CATEGORIES)}
    classified = sum(counts.values())
    shares = {c: (v / classified if classified else 0.0) for c, v in counts.items()}
    return CategoryBreakdown(len(cats), classified, counts, shares, subgroup)


def breakdown(authorship: Authorship, subgroup: str | None = None) -> list[CategoryBreakdown]:
    """Category counts and shares over classified papers.

    ``subgroup`` is None, ``"year"`` or ``"indexed"``; the indexed split
    yields ``"not_indexed"`` then ``"indexed"``.
    """
    cats = authorship.categories()
    if subgroup is None:
        return [_breakdown(cats)]
    if subgroup == "year":
        years = sorted({p.year for p in authorship.papers if p.year is not None})
        out = []
        for y in years:
            mask = np.array([p.year == y for p in authorship.papers])
            out.append(_breakdown(cats[mask], y))
        return out
    if subgroup == "indexed":
        mask = np.array([p.indexed for p in authorship.papers], dtype=bool)
        return [_breakdown(cats[~mask], "not_indexed"), _breakdown(cats[mask], "indexed")]
    raise ValueError(f"unknown subgroup {subgroup!r}")


# --------------------------------------------------------------------------
# null model


@dataclass
class NullModelResult:
    n_reshuffles: int
    mean_shares: dict[str, float]
    mean_classified: float
    seed: int | None
    rng: str = RNG_ALGORITHM
    round_counts: list[dict[str, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"n_reshuffles": self.n_reshuffles, "mean_shares": self.mean_shares,
                "mean_classified": self.mean_classified, "seed": self.seed, "rng": self.rng,
                "round_counts": self.round_counts}


def reshuffle_null(authorship: Authorship, n: int = 10, seed: int | None = 0) -> NullModelResult:
    """Average category shares after permuting gender labels across author records.

    Every author keeps exactly one label per round; F, M and Unknown labels
    are all permuted.  Rounds with no classified paper are left out of the
    share average.
    """
    if n < 1:
        raise ValueError("need at least one reshuffle")
    rng = np.random.default_rng(seed)
    base = authorship.author_codes
    base_hist = np.bincount(base, minlength=3)
    share_sum = np.zeros(len(CATEGORIES))
    share_rounds = 0
    classified_sum = 0
    rounds = []
    for _ in range(n):
        codes = rng.permutation(base)
        if not np.array_equal(np.bincount(codes, minlength=3), base_hist):
            raise RuntimeError("reshuffle changed the label multiset")
        cats = authorship.categories(codes)
        counts = np.bincount(cats[cats >= 0], minlength=len(CATEGORIES))
        classified = int(counts.sum())
        classified_sum += classified
        if classified:
            share_sum += counts / classified
            share_rounds += 1
        rounds.append({c: int(v) for c, v in zip(CATEGORIES, counts)})
    mean = share_sum / share_rounds if share_rounds else share_sum
    return NullModelResult(
        n_reshuffles=n,
        mean_shares={c: float(v) for c, v in zip(CATEGORIES, mean)},
        mean_classified=classified_sum / n,
        seed=seed,
        round_counts=rounds,
    )


# --------------------------------------------------------------------------
# per-author statistics


@dataclass
class AuthorStats:
    author_id: str
    gender: str
    papers_total: int
    papers_per_year: float
    solo_count: int
    solo_share: float
    collab_papers: int
    first_position_count: int
    first_position_share: float
    mean_coauthors_per_collab_paper: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _mean(values: Iterable[float]) -> float:
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) / len(vals) if vals else math.nan


def author_stats(
    authorship: Authorship,
    *,
    min_papers: int = 2,
    min_collab_papers: int = 3,
    year_mode: str = "active_years",
) -> tuple[list[AuthorStats], dict]:
    """Per-author productivity, solo share and first-position share.

    Gender aggregates are means over authors.  Papers per year is averaged
    over all genderized authors, solo share both over all of them and over
    those with at least ``min_papers`` papers, and first-position share over
    those with at least ``min_collab_papers`` collaborative papers.
    """
    if year_mode not in ("active_years", "span"):
        raise ValueError(f"unknown year_mode {year_mode!r}")
    per_author: dict[int, list[tuple[int, int]]] = {}
    for paper, pos, author in zip(authorship.slot_paper, authorship.slot_position, authorship.position_author):
        if author >= 0:
            per_author.setdefault(int(author), []).append((int(paper), int(pos)))

    code_to_value = {v: k for k, v in _CODES.items()}
    stats = []
    for ai, rid in enumerate(authorship.author_ids):
        slots = per_author.get(ai, [])
        papers = {}
        for pi, pos in slots:
            papers.setdefault(pi, pos)
        total = len(papers)
        years = [authorship.papers[pi].year for pi in papers if authorship.papers[pi].year is not None]
        if years:
            denom = len(set(years)) if year_mode == "active_years" else max(years) - min(years) + 1
            ppy = len(years) / denom
        else:
            ppy = math.nan
        sizes = {pi: int(authorship.n_authors[pi]) for pi in papers}
        solo = sum(1 for pi in papers if sizes[pi] == 1)
        collab = total - solo
        first = sum(1 for pi, pos in papers.items() if sizes[pi] >= 2 and pos == 0)
        coauthors = _mean(sizes[pi] - 1 for pi in papers if sizes[pi] >= 2)
        stats.append(AuthorStats(
            author_id=rid,
            gender=code_to_value[int(authorship.author_codes[ai])],
            papers_total=total,
            papers_per_year=ppy,
            solo_count=solo,
            solo_share=solo / total if total else math.nan,
            collab_papers=collab,
            first_position_count=first,
            first_position_share=first / collab if collab else math.nan,
            mean_coauthors_per_collab_paper=coauthors,
        ))

    aggregates = {}
    for group, members in (
        (FEMALE, [s for s in stats if s.gender == FEMALE]),
        (MALE, [s for s in stats if s.gender == MALE]),
        ("genderized", [s for s in stats if s.gender != UNKNOWN]),
    ):
        multi = [s for s in members if s.papers_total >= min_papers]
        firsts = [s for s in members if s.collab_papers >= min_collab_papers]
        aggregates[group] = {
            "n_authors": len(members),
            "mean_papers_per_year": _mean(s.papers_per_year for s in members),
            "mean_solo_share": _mean(s.solo_share for s in members),
            "n_authors_min_papers": len(multi),
            "mean_solo_share_min_papers": _mean(s.solo_share for s in multi),
            "n_authors_min_collab": len(firsts),
            "mean_first_position_share": _mean(s.first_position_share for s in firsts),
            "mean_coauthors_per_collab_paper": _mean(s.mean_coauthors_per_collab_paper for s in members),
        }
    aggregates["filters"] = {"min_papers": min_papers, "min_collab_papers": min_collab_papers,
                             "year_mode": year_mode}
    return stats, aggregates


# --------------------------------------------------------------------------
# report tables

TABLE1_COLUMNS = ["category", "entire_count", "entire_share", "reshuffled_share",
                  "not_indexed_count", "not_indexed_share", "indexed_count", "indexed_share"]


def _fmt(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.4f}"


def table1_rows(entire: CategoryBreakdown, null: NullModelResult, not_indexed: CategoryBreakdown,
                indexed: CategoryBreakdown) -> list[dict]:
    """Rows laid out like the gender-category table: all, classified, then each category."""
    rows = [
        {"category": "All papers", "entire_count": entire.total_papers, "entire_share": "",
         "reshuffled_share": "", "not_indexed_count": not_indexed.total_papers, "not_indexed_share": "",
         "indexed_count": indexed.total_papers, "indexed_share": ""},
        {"category": "Classified papers", "entire_count": entire.classified_papers,
         "entire_share": _fmt(1.0 if entire.classified_papers else 0.0),
         "reshuffled_share": f"{null.mean_classified:.2f}",
         "not_indexed_count": not_indexed.classified_papers,
         "not_indexed_share": _fmt(1.0 if not_indexed.classified_papers else 0.0),
         "indexed_count": indexed.classified_papers,
         "indexed_share": _fmt(1.0 if indexed.classified_papers else 0.0)},
    ]
    for c in CATEGORIES:
        rows.append({
            "category": CATEGORY_LABELS[c],
            "entire_count": entire.counts[c], "entire_share": _fmt(entire.shares[c]),
            "reshuffled_share": _fmt(null.mean_shares[c]),
            "not_indexed_count": not_indexed.counts[c], "not_indexed_share": _fmt(not_indexed.shares[c]),
            "indexed_count": indexed.counts[c], "indexed_share": _fmt(indexed.shares[c]),
        })
    return rows


def annual_rows(per_year: Sequence[CategoryBreakdown]) -> list[dict]:
    rows = []
    for b in per_year:
        row = {"year": b.subgroup, "total_papers": b.total_papers, "classified_papers": b.classified_papers}
        for c in CATEGORIES:
            row[f"{CATEGORY_LABELS[c]} count"] = b.counts[c]
            row[f"{CATEGORY_LABELS[c]} share"] = _fmt(b.shares[c])
        rows.append(row)
    return rows


def write_csv(rows: Sequence[dict], path, columns: Sequence[str] | None = None) -> None:
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
