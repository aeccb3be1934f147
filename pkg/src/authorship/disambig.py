"""Clustering of author mentions into author records.

Identical names across papers are merged first.  Further merges are proposed
for surname-compatible records whose given names are synonyms, whose
initials fit a single full name, or who share co-authors.  Proposals that
would create a contradiction are never applied automatically; they go to a
TSV review file an analyst can annotate and feed back in.
"""
from __future__ import annotations

import csv
import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

from .ingest import Corpus, SkipEntry
from .nameproc import (
    CYRILLIC,
    NameParseError,
    PersonName,
    TransliterationTable,
    _data_path,
    _read_tsv,
    cyrillic_readings,
    default_transliteration,
    letter_script,
    name_form,
    parse_name,
    strip_diacritics,
)

logger = logging.getLogger(__name__)

IDENTICAL_NAME = "IdenticalName"
SYNONYM_GIVEN = "SynonymGiven"
INITIALS_CONSISTENT = "InitialsConsistent"
COAUTHOR_EVIDENCE = "CoauthorEvidence"

REVIEW_COLUMNS = ["candidate_id", "left_display", "right_display", "rule", "score", "conflict", "decision"]


class ReviewFileError(ValueError):
    pass


# --------------------------------------------------------------------------
# data types


@dataclass(frozen=True)
class Mention:
    paper_doi: str
    position: int
    name: PersonName

    @property
    def mention_id(self) -> str:
        return f"{self.paper_doi.lower()}#{self.position}"

    def to_dict(self) -> dict:
        return {"paper_doi": self.paper_doi, "position": self.position, "name": self.name.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> Mention:
        return cls(d["paper_doi"], int(d["position"]), PersonName.from_dict(d["name"]))


@dataclass(frozen=True)
class SynonymGroup:
    canonical: str
    variants: frozenset[str]
    gender: str = "Unknown"


class SynonymDictionary:
    """Given-name groups with a manually assigned gender per group."""

    def __init__(self, groups: Iterable[SynonymGroup], table: TransliterationTable | None = None):
        self.groups: list[SynonymGroup] = []
        self._index: dict[str, SynonymGroup] = {}
        self.table = table or default_transliteration()
        for g in groups:
            variants = frozenset(name_form(v) for v in g.variants) | {name_form(g.canonical)}
            group = SynonymGroup(name_form(g.canonical), variants, g.gender)
            clash = [v for v in variants if v in self._index]
            if clash:
                raise ValueError(f"variants {sorted(clash)} appear in more than one group")
            for v in variants:
                self._index[v] = group
            self.groups.append(group)
        self._lookup = lru_cache(maxsize=None)(self._lookup_uncached)

    @classmethod
    def from_tsv(cls, path=None, table=None) -> SynonymDictionary:
        groups = []
        for row in _read_tsv(Path(path) if path else _data_path("given_names.tsv")):
            variants = [v for v in row[2].split("|") if v] if len(row) > 2 else []
            groups.append(SynonymGroup(row[0], frozenset(variants), row[1] if len(row) > 1 else "Unknown"))
        return cls(groups, table)

    def __len__(self) -> int:
        return len(self.groups)

    def __contains__(self, given: str) -> bool:
        return self.lookup(given) is not None

    def lookup(self, given: str | None) -> SynonymGroup | None:
        """Group of a given name; exact form first, then its transliterations."""
        if not given:
            return None
        return self._lookup(name_form(given))

    def _lookup_uncached(self, form: str) -> SynonymGroup | None:
        if form in self._index:
            return self._index[form]
        if any(letter_script(ch) == CYRILLIC for ch in form):
            alternatives = [self.table.romanize(form)]
        else:
            alternatives = cyrillic_readings(form, self.table)
        hits = {id(self._index[a]): self._index[a] for a in alternatives if a in self._index}
        return next(iter(hits.values())) if len(hits) == 1 else None


@lru_cache(maxsize=None)
def default_dictionary() -> SynonymDictionary:
    return SynonymDictionary.from_tsv()


@dataclass
class AuthorRecord:
    id: str
    mentions: list[Mention]
    display_name: PersonName
    merge_log: list[dict] = field(default_factory=list)
    aliases: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.aliases:
            self.aliases = frozenset({self.id})

    @property
    def papers(self) -> set[str]:
        return {m.paper_doi.lower() for m in self.mentions}

    def distinct_names(self) -> list[PersonName]:
        seen, out = set(), []
        for m in self.mentions:
            k = (m.name.normalized_key, m.name.patronymic)
            if k not in seen:
                seen.add(k)
                out.append(m.name)
        return out

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "display_name": self.display_name.to_dict(),
            "mentions": [m.to_dict() for m in self.mentions],
            "merge_log": self.merge_log,
            "aliases": sorted(self.aliases),
        }

    @classmethod
    def from_dict(cls, d: dict) -> AuthorRecord:
        return cls(
            id=d["id"],
            mentions=[Mention.from_dict(m) for m in d["mentions"]],
            display_name=PersonName.from_dict(d["display_name"]),
            merge_log=list(d.get("merge_log", [])),
            aliases=frozenset(d.get("aliases", [d["id"]])),
        )


@dataclass
class MergeCandidate:
    left: str
    right: str
    rule: str
    score: float
    conflict: str | None = None
    evidence: dict = field(default_factory=dict)

    @property
    def candidate_id(self) -> str:
        return f"{self.left}+{self.right}"


@dataclass
class MergeScores:
    """Calibration knobs for candidate scores."""

    synonym: float = 0.8
    initials: float = 0.5
    coauthor_base: float = 0.5
    per_coauthor: float = 0.15
    unique_initials_bonus: float = 0.3
    cap: float = 0.95


@dataclass
class MergePolicy:
    auto_threshold: float = 0.8
    review_file: str | Path | None = None


# --------------------------------------------------------------------------
# mentions and identity clustering


def build_mentions(corpus: Corpus, *, order: str = "surname_first", skips: list | None = None) -> list[Mention]:
    """One mention per (paper, author position); unparseable names go to ``skips``."""
    mentions = []
    for rec in corpus.records:
        if not rec.author_names:
            if skips is not None:
                skips.append(SkipEntry("empty_author_list", "build_mentions", rec.doi))
            continue
        for pos, raw in enumerate(rec.author_names):
            try:
                name = parse_name(raw, order=order)
            except NameParseError as exc:
                if skips is not None:
                    skips.append(SkipEntry(f"unparseable_name: {exc}", f"{rec.doi}#{pos}", rec.doi))
                continue
            mentions.append(Mention(rec.doi, pos, name))
    return mentions


def _info_rank(name: PersonName):
    return (name.given is not None, name.patronymic is not None, len(name.initials), len(name.raw))


def pick_display(mentions: Sequence[Mention]) -> PersonName:
    best = mentions[0].name
    for m in mentions[1:]:
        if _info_rank(m.name) > _info_rank(best):
            best = m.name
    return best


def _record_id(n: int) -> str:
    return f"A{n:06d}"


def cluster_identical(mentions: Sequence[Mention], *, identity_merge: bool = True) -> list[AuthorRecord]:
    """Group mentions by normalized key.

    When one key occurs more than once in a single paper, the k-th occurrence
    in every paper goes to the k-th record for that key.
    """
    groups: dict[tuple[str, int], list[Mention]] = {}
    order: list[tuple[str, int]] = []
    if identity_merge:
        per_paper: dict[tuple[str, str], int] = defaultdict(int)
        for m in mentions:
            k = m.name.normalized_key
            occ = per_paper[(m.paper_doi.lower(), k)]
            per_paper[(m.paper_doi.lower(), k)] += 1
            slot = (k, occ)
            if slot not in groups:
                groups[slot] = []
                order.append(slot)
            groups[slot].append(m)
    else:
        for i, m in enumerate(mentions):
            slot = (m.name.normalized_key, i)
            groups[slot] = [m]
            order.append(slot)

    records = []
    for n, slot in enumerate(order):
        ms = groups[slot]
        log = [
            {"rule": IDENTICAL_NAME, "score": 1.0, "evidence": {"key": slot[0]},
             "mentions": [ms[0].mention_id, m.mention_id]}
            for m in ms[1:]
        ]
        records.append(AuthorRecord(_record_id(n), list(ms), pick_display(ms), log))
    return records


# --------------------------------------------------------------------------
# name comparison

SAME, CONSISTENT, UNKNOWN, DIFFERENT = "same", "consistent", "unknown", "different"


class NameMatcher:
    """Surname compatibility and given-name relations across scripts."""

    def __init__(self, dictionary: SynonymDictionary | None = None, table: TransliterationTable | None = None,
                 surname_variants_path=None):
        self.dictionary = dictionary or default_dictionary()
        self.table = table or default_transliteration()
        rows = _read_tsv(Path(surname_variants_path) if surname_variants_path else _data_path("surname_variants.tsv"))
        self.suffix_rewrites = sorted(((r[0], r[1]) for r in rows), key=lambda r: -len(r[0]))
        self._letters = self._letter_map()
        self.surname_keys = lru_cache(maxsize=None)(self._surname_keys)
        self.readings = lru_cache(maxsize=None)(self._readings)

    def _letter_map(self) -> dict[str, frozenset[str]]:
        letters: dict[str, set[str]] = defaultdict(set)
        for lat, opts in self.table.lat_to_cyr_variants.items():
            for chunk, _ in opts:
                if chunk:
                    letters[chunk[0]].add(strip_diacritics(lat[0]))
        for cyr, (medial, initial) in self.table.cyr_to_lat.items():
            for s in (medial, initial):
                if s:
                    letters[cyr].add(s[0])
        return {k: frozenset(v) for k, v in letters.items()}

    def latin_letters(self, ch: str) -> frozenset[str]:
        ch = ch.upper()
        if letter_script(ch) == CYRILLIC:
            return self._letters.get(ch, frozenset({ch}))
        return frozenset({strip_diacritics(ch)})

    def _canonical(self, cyr: str) -> str:
        s = "".join(ch for ch in cyr if ch not in "Ь'’-")
        for sfx, canon in self.suffix_rewrites:
            if s.endswith(sfx):
                return s[: -len(sfx)] + canon
        return s

    def _readings(self, part: str) -> frozenset[str]:
        return frozenset("".join(ch for ch in r if ch not in "Ь'’") for r in cyrillic_readings(part, self.table))

    def _surname_keys(self, surname: str) -> frozenset[str]:
        return frozenset(self._canonical(r) for r in cyrillic_readings(surname, self.table))

    def surnames_compatible(self, a: str, b: str) -> bool:
        return a == b or bool(self.surname_keys(a) & self.surname_keys(b))

    def given_letters(self, given: str) -> frozenset[str]:
        group = self.dictionary.lookup(given)
        forms = group.variants if group else {given}
        out: set[str] = set()
        for f in forms:
            out |= self.latin_letters(f[0])
        return frozenset(out)

    def initial_sets(self, name: PersonName) -> list[frozenset[str]]:
        sets = [self.latin_letters(i) for i in name.initials]
        if name.given and sets:
            sets[0] = self.given_letters(name.given)
        return sets

    def initials_consistent(self, a: PersonName, b: PersonName) -> bool:
        return all(x & y for x, y in zip(self.initial_sets(a), self.initial_sets(b)))

    def given_relation(self, a: PersonName, b: PersonName) -> str:
        if a.given and b.given:
            ga, gb = self.dictionary.lookup(a.given), self.dictionary.lookup(b.given)
            if ga is not None and gb is not None:
                return SAME if ga is gb else DIFFERENT
            if self.readings(a.given) & self.readings(b.given):
                return SAME
            return UNKNOWN
        return CONSISTENT if self.initials_consistent(a, b) else DIFFERENT

    def gender_of(self, name: PersonName) -> str | None:
        group = self.dictionary.lookup(name.given)
        return group.gender if group and group.gender in ("F", "M") else None

    def contradiction(self, a: PersonName, b: PersonName) -> str | None:
        """Reason two names cannot denote one person, or None."""
        if not self.surnames_compatible(a.surname, b.surname):
            return "surname_mismatch"
        rel = self.given_relation(a, b)
        if rel == DIFFERENT:
            return "given_mismatch" if a.given and b.given else "initials_mismatch"
        if not self.initials_consistent(a, b):
            return "initials_mismatch"
        if a.patronymic and b.patronymic and not (self.readings(a.patronymic) & self.readings(b.patronymic)):
            return "patronymic_mismatch"
        ga, gb = self.gender_of(a), self.gender_of(b)
        if ga and gb and ga != gb:
            return "gender_mismatch"
        return None


# --------------------------------------------------------------------------
# proposing merges


def _coauthors(records: Sequence[AuthorRecord]) -> dict[str, set[str]]:
    by_paper: dict[str, set[str]] = defaultdict(set)
    for r in records:
        for doi in r.papers:
            by_paper[doi].add(r.id)
    return {r.id: set().union(*(by_paper[d] for d in r.papers)) - {r.id} for r in records}


def _blocks(records: Sequence[AuthorRecord], matcher: NameMatcher) -> set[tuple[int, int]]:
    index: dict[str, list[int]] = defaultdict(list)
    for i, r in enumerate(records):
        for key in matcher.surname_keys(r.display_name.surname):
            index[key].append(i)
    pairs = set()
    for members in index.values():
        for i, j in combinations(sorted(set(members)), 2):
            pairs.add((i, j))
    return pairs


def propose_merges(
    records: Sequence[AuthorRecord],
    dictionary: SynonymDictionary | None = None,
    *,
    scores: MergeScores | None = None,
    matcher: NameMatcher | None = None,
) -> list[MergeCandidate]:
    """Candidate merges between surname-compatible records, with conflicts marked."""
    scores = scores or MergeScores()
    matcher = matcher or NameMatcher(dictionary)
    coauthors = _coauthors(records)
    pairs = sorted(_blocks(records, matcher))
    names = [r.display_name for r in records]

    neighbours: dict[int, list[int]] = defaultdict(list)
    relation: dict[tuple[int, int], str] = {}
    for i, j in pairs:
        rel = matcher.given_relation(names[i], names[j])
        relation[(i, j)] = rel
        neighbours[i].append(j)
        neighbours[j].append(i)

    def rel_of(i, j):
        return relation[(i, j) if i < j else (j, i)]

    # For each initials-only record: how many distinct full-name identities fit it.
    identity_classes: dict[int, list[set[int]]] = {}
    for i, name in enumerate(names):
        if name.given:
            continue
        fits = [j for j in neighbours[i] if names[j].given and rel_of(i, j) == CONSISTENT]
        classes: list[set[int]] = []
        for j in fits:
            home = [c for c in classes if any(rel_of(j, k) == SAME for k in c)]
            merged = {j}.union(*home) if home else {j}
            classes = [c for c in classes if c not in home] + [merged]
        identity_classes[i] = classes
    tainted: set[int] = set()
    for i, classes in identity_classes.items():
        if len(classes) >= 2:
            tainted.add(i)
            tainted.update(*classes)

    def unique_class(i):
        classes = identity_classes.get(i)
        return classes[0] if classes and len(classes) == 1 else None

    candidates = []
    for i, j in pairs:
        a, b = records[i], records[j]
        rel = rel_of(i, j)
        shared = len(coauthors[a.id] & coauthors[b.id])
        if rel == DIFFERENT:
            continue
        if rel == UNKNOWN and shared == 0:
            continue
        evidence = {"shared_coauthors": shared}
        if rel == SAME:
            rule, score = SYNONYM_GIVEN, scores.synonym
        elif rel == CONSISTENT:
            rule, score = INITIALS_CONSISTENT, scores.initials
            ui, uj = unique_class(i), unique_class(j)
            if names[i].given:
                unique = uj is not None and i in uj
            elif names[j].given:
                unique = ui is not None and j in ui
            else:
                unique = ui is not None and uj is not None and ui == uj
            if unique:
                score += scores.unique_initials_bonus
                evidence["unique_full_name"] = True
        else:
            rule, score = COAUTHOR_EVIDENCE, scores.coauthor_base
        score = round(min(score + scores.per_coauthor * shared, scores.cap), 6)

        conflict = None
        if a.papers & b.papers:
            conflict = "same_paper"
        elif i in tainted or j in tainted:
            conflict = "ambiguous_initials"
        else:
            conflict = matcher.contradiction(names[i], names[j])
        left, right = sorted((a.id, b.id))
        candidates.append(MergeCandidate(left, right, rule, score, conflict, evidence))
    candidates.sort(key=lambda c: (-c.score, c.left, c.right))
    return candidates


# --------------------------------------------------------------------------
# applying merges


class _UnionFind:
    def __init__(self, ids: Iterable[str]):
        self.parent = {i: i for i in ids}

    def find(self, x: str) -> str:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: str, b: str) -> str:
        ra, rb = self.find(a), self.find(b)
        root, child = (ra, rb) if ra <= rb else (rb, ra)
        self.parent[child] = root
        return root


def read_review(path) -> dict[str, str]:
    """Analyst decisions from a review TSV: candidate_id -> accept/reject."""
    decisions = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        missing = set(REVIEW_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ReviewFileError(f"review file {path} lacks columns {sorted(missing)}")
        for row in reader:
            d = (row.get("decision") or "").strip().lower()
            if not d:
                continue
            if d not in ("accept", "reject"):
                raise ReviewFileError(f"bad decision {d!r} for {row['candidate_id']}")
            decisions[row["candidate_id"]] = d
    return decisions


def write_review(rows: Sequence[dict], path) -> None:
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=REVIEW_COLUMNS, delimiter="\t", lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    tmp.replace(path)


def plan_merges(
    records: Sequence[AuthorRecord],
    candidates: Sequence[MergeCandidate],
    policy: MergePolicy | None = None,
    *,
    decisions: dict[str, str] | None = None,
    matcher: NameMatcher | None = None,
) -> tuple[list[AuthorRecord], list[dict]]:
    """Apply merges and return ``(records, review_rows)``; see :func:`apply_merges`."""
    policy = policy or MergePolicy()
    matcher = matcher or NameMatcher()
    decisions = dict(decisions or {})
    known = {c.candidate_id for c in candidates}
    unknown = sorted(set(decisions) - known)
    if unknown:
        raise ReviewFileError(f"review decisions reference unknown candidates: {unknown}")

    by_alias = {alias: r for r in records for alias in r.aliases}
    uf = _UnionFind(r.id for r in records)
    papers = {r.id: set(r.papers) for r in records}
    members = {r.id: [r] for r in records}
    new_log: dict[str, list[dict]] = defaultdict(list)

    def names_of(root):
        out = []
        for rec in members[root]:
            out.extend(rec.distinct_names())
        return out

    review = []
    ordered = sorted(candidates, key=lambda c: (-c.score, c.left, c.right))
    for c in ordered:
        if c.left not in by_alias or c.right not in by_alias:
            raise ReviewFileError(f"candidate {c.candidate_id} references unknown records")
        decision = decisions.get(c.candidate_id, "")
        ra, rb = uf.find(by_alias[c.left].id), uf.find(by_alias[c.right].id)
        row = {"candidate_id": c.candidate_id,
               "left_display": by_alias[c.left].display_name.display,
               "right_display": by_alias[c.right].display_name.display,
               "rule": c.rule, "score": f"{c.score:.2f}", "conflict": c.conflict or "", "decision": decision}
        if ra == rb:
            if decision:
                review.append(row)
            continue
        if decision == "reject":
            review.append(row)
            continue
        if decision != "accept" and (c.conflict or c.score < policy.auto_threshold):
            review.append(row)
            continue
        veto = "same_paper" if papers[ra] & papers[rb] else None
        if veto is None and decision != "accept":
            for x in names_of(ra):
                for y in names_of(rb):
                    veto = matcher.contradiction(x, y)
                    if veto:
                        break
                if veto:
                    break
        if veto:
            row["conflict"] = row["conflict"] or veto
            review.append(row)
            continue
        root = uf.union(ra, rb)
        other = rb if root == ra else ra
        papers[root] |= papers.pop(other)
        members[root].extend(members.pop(other))
        new_log[root].extend(new_log.pop(other, []))
        new_log[root].append({
            "rule": c.rule,
            "score": c.score,
            "evidence": dict(c.evidence, candidate_id=c.candidate_id, manual=decision == "accept"),
            "mentions": sorted(m.mention_id for rec in members[root] for m in rec.mentions),
        })

    out = []
    for root in sorted(members):
        group = members[root]
        group.sort(key=lambda r: r.id)
        mentions = [m for r in group for m in r.mentions]
        log = [e for r in group for e in r.merge_log] + new_log.get(root, [])
        aliases = frozenset().union(*(r.aliases for r in group))
        out.append(AuthorRecord(root, mentions, pick_display(mentions), log, aliases))
    return out, review


def apply_merges(
    records: Sequence[AuthorRecord],
    candidates: Sequence[MergeCandidate],
    policy: MergePolicy | None = None,
    *,
    decisions: dict[str, str] | None = None,
    matcher: NameMatcher | None = None,
) -> list[AuthorRecord]:
    """Union conflict-free candidates scoring at least ``policy.auto_threshold``.

    Candidates are taken by descending score, then record ids.  Unions that
    would put two mentions of one paper, or two contradictory names, into one
    record are refused.  Everything not applied is written to
    ``policy.review_file``; ``decisions`` (from :func:`read_review`) force or
    deny specific candidates.
    """
    policy = policy or MergePolicy()
    merged, review = plan_merges(records, candidates, policy, decisions=decisions, matcher=matcher)
    if policy.review_file:
        write_review(review, policy.review_file)
    return merged


def disambiguate(
    corpus: Corpus,
    dictionary: SynonymDictionary | None = None,
    policy: MergePolicy | None = None,
    *,
    decisions: dict[str, str] | None = None,
    identity_merge: bool = True,
    scores: MergeScores | None = None,
    skips: list | None = None,
) -> list[AuthorRecord]:
    """Mentions -> identity clusters -> proposed merges -> applied merges."""
    dictionary = dictionary or default_dictionary()
    matcher = NameMatcher(dictionary)
    records = cluster_identical(build_mentions(corpus, skips=skips), identity_merge=identity_merge)
    candidates = propose_merges(records, dictionary, scores=scores, matcher=matcher)
    return apply_merges(records, candidates, policy, decisions=decisions, matcher=matcher)


def dump_authors(records: Iterable[AuthorRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), ensure_ascii=False) + "\n")


def load_authors(path) -> list[AuthorRecord]:
    with open(path, encoding="utf-8") as fh:
        return [AuthorRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
