"""Gender labels for author records.

Three sources, in fixed precedence: the given-name dictionary, an optional
external name-gender service (replayed from a cache), and gender-specific
Slavic surname endings.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .disambig import AuthorRecord, SynonymDictionary, default_dictionary
from .nameproc import _data_path, key_form

logger = logging.getLogger(__name__)

FEMALE, MALE, UNKNOWN = "F", "M", "Unknown"

DICTIONARY = "Dictionary"
EXTERNAL = "ExternalService"
ENDING = "SurnameEnding"
NO_SOURCE = "None"

STAGES = (DICTIONARY, EXTERNAL, ENDING)


@dataclass(frozen=True)
class GenderLabel:
    value: str = UNKNOWN
    source: str = NO_SOURCE
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if self.value not in (FEMALE, MALE, UNKNOWN):
            raise ValueError(f"bad gender value {self.value!r}")
        if (self.value == UNKNOWN) != (self.source == NO_SOURCE):
            raise ValueError("Unknown labels carry no source and vice versa")

    @property
    def known(self) -> bool:
        return self.value != UNKNOWN

    def to_dict(self) -> dict:
        return {"value": self.value, "source": self.source, "flags": list(self.flags)}

    @classmethod
    def from_dict(cls, d: dict) -> GenderLabel:
        return cls(d["value"], d["source"], tuple(d.get("flags", ())))


def unknown(*flags: str) -> GenderLabel:
    return GenderLabel(UNKNOWN, NO_SOURCE, tuple(flags))


# --------------------------------------------------------------------------
# dictionary


def label_by_dictionary(record: AuthorRecord, dictionary: SynonymDictionary | None = None) -> GenderLabel:
    dictionary = dictionary or default_dictionary()
    hits = set()
    for m in record.mentions:
        group = dictionary.lookup(m.name.given)
        if group is not None and group.gender in (FEMALE, MALE):
            hits.add(group.gender)
    if len(hits) == 1:
        return GenderLabel(hits.pop(), DICTIONARY)
    if len(hits) > 1:
        return unknown("dictionary_disagreement")
    return unknown()


# --------------------------------------------------------------------------
# external service


@dataclass
class ExternalLookupPolicy:
    min_count: int = 10
    min_probability: float = 0.9
    cache_path: str | Path | None = None

    def __post_init__(self):
        if not 0 < self.min_probability <= 1:
            raise ValueError("min_probability must be in (0, 1]")

    def accepts(self, answer: dict) -> bool:
        # Names seen at least min_count times with probability above min_probability.
        return (
            answer.get("gender") in (FEMALE, MALE)
            and int(answer.get("count") or 0) >= self.min_count
            and float(answer.get("probability") or 0.0) > self.min_probability
        )


class NameGenderClient(Protocol):
    def lookup(self, name: str) -> dict | None:
        """Return ``{"gender": "F"|"M"|None, "probability": p, "count": n}``."""


class LookupUnavailable(RuntimeError):
    pass


def _norm_gender(g):
    return {"female": FEMALE, "male": MALE, "f": FEMALE, "m": MALE}.get(str(g).lower()) if g else None


class GenderizeClient:
    """Live client for a genderize.io-compatible endpoint."""

    def __init__(self, url: str = "https://api.genderize.io", session=None, apikey: str | None = None,
                 timeout: float = 30.0):
        if session is None:
            import requests

            session = requests.Session()
        self.url, self.session, self.apikey, self.timeout = url, session, apikey, timeout

    def lookup(self, name: str) -> dict | None:
        params = {"name": name}
        if self.apikey:
            params["apikey"] = self.apikey
        try:
            resp = self.session.get(self.url, params=params, timeout=self.timeout)
            resp.raise_for_status()
            data = resp.json()
        except Exception as exc:
            raise LookupUnavailable(str(exc)) from exc
        return {"gender": _norm_gender(data.get("gender")), "probability": data.get("probability", 0.0),
                "count": data.get("count", 0)}


class CachedLookup:
    """Replayable JSONL cache in front of an optional live client.

    Without a live client, misses return None.  New answers are appended to
    the cache file; one writer at a time.
    """

    def __init__(self, cache_path=None, client: NameGenderClient | None = None):
        self.cache_path = Path(cache_path) if cache_path else None
        self.client = client
        self.entries: dict[str, dict] = {}
        if self.cache_path and self.cache_path.exists():
            with open(self.cache_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        e = json.loads(line)
                        e["gender"] = _norm_gender(e.get("gender"))
                        self.entries[e["query"].upper()] = e

    def lookup(self, name: str) -> dict | None:
        q = name.upper()
        if q in self.entries:
            return self.entries[q]
        if self.client is None:
            return None
        answer = self.client.lookup(q)
        if answer is None:
            return None
        entry = {"query": q, "gender": answer.get("gender"), "probability": answer.get("probability", 0.0),
                 "count": answer.get("count", 0),
                 "fetched_at": datetime.now(timezone.utc).isoformat(timespec="seconds")}
        self.entries[q] = entry
        if self.cache_path:
            with open(self.cache_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
        return entry


def label_by_external(record: AuthorRecord, policy: ExternalLookupPolicy | None = None,
                      client: NameGenderClient | None = None) -> GenderLabel:
    policy = policy or ExternalLookupPolicy()
    if client is None:
        if policy.cache_path is None:
            return unknown()
        client = CachedLookup(policy.cache_path)
    givens = sorted({m.name.given for m in record.mentions if m.name.given})
    if not givens:
        return unknown()
    hits = set()
    for g in givens:
        try:
            answer = client.lookup(g)
        except Exception as exc:  # service trouble never fails the pipeline
            logger.warning("name-gender lookup failed for %s: %s", g, exc)
            return unknown("retryable")
        if answer and policy.accepts(answer):
            hits.add(answer["gender"])
    if len(hits) == 1:
        return GenderLabel(hits.pop(), EXTERNAL)
    return unknown("external_disagreement") if hits else unknown()


# --------------------------------------------------------------------------
# surname endings


@dataclass
class EndingRules:
    female_endings: list[str]
    male_endings: list[str]
    _ordered: list[tuple[str, str]] = field(init=False, repr=False)

    def __post_init__(self):
        fem = {key_form(e) for e in self.female_endings}
        mal = {key_form(e) for e in self.male_endings}
        both = fem & mal
        if both:
            raise ValueError(f"endings listed for both genders: {sorted(both)}")
        ordered = [(key_form(e), FEMALE) for e in self.female_endings]
        ordered += [(key_form(e), MALE) for e in self.male_endings]
        self._ordered = sorted(set(ordered), key=lambda x: (-len(x[0]), x[0]))

    @classmethod
    def from_file(cls, path=None) -> EndingRules:
        sections: dict[str, list[str]] = {"female": [], "male": []}
        current = None
        for line in Path(path or _data_path("endings.txt")).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip().lower()
                if current not in sections:
                    raise ValueError(f"unknown section {line}")
                continue
            if current is None:
                raise ValueError("suffix listed before any [female]/[male] section")
            sections[current].append(line)
        return cls(sections["female"], sections["male"])

    def match(self, surname: str) -> tuple[str, str] | None:
        """``(gender, matched suffix)`` for the longest matching suffix."""
        form = key_form(surname)
        for sfx, g in self._ordered:
            if form.endswith(sfx) and len(form) > len(sfx):
                return g, sfx
        return None


def default_rules() -> EndingRules:
    return EndingRules.from_file()


def label_by_ending(record: AuthorRecord, rules: EndingRules | None = None) -> GenderLabel:
    rules = rules or default_rules()
    hits = set()
    for surname in sorted({m.name.surname for m in record.mentions}):
        hit = rules.match(surname)
        if hit:
            hits.add(hit[0])
    if len(hits) == 1:
        return GenderLabel(hits.pop(), ENDING)
    return unknown("ending_disagreement") if hits else unknown()


@dataclass
class ValidationReport:
    n_female: int
    n_male: int
    female_recognized: int
    female_errors: int
    male_recognized: int
    male_errors: int
    assignments: list[dict]

    @property
    def F_recognized(self) -> float:
        return self.female_recognized / self.n_female if self.n_female else 0.0

    @property
    def F_error(self) -> float:
        return self.female_errors / self.n_female if self.n_female else 0.0

    @property
    def M_recognized(self) -> float:
        return self.male_recognized / self.n_male if self.n_male else 0.0

    @property
    def M_error(self) -> float:
        return self.male_errors / self.n_male if self.n_male else 0.0

    def to_dict(self) -> dict:
        return {
            "F_recognized": self.F_recognized, "F_error": self.F_error,
            "M_recognized": self.M_recognized, "M_error": self.M_error,
            "counts": {"F": self.n_female, "M": self.n_male,
                       "F_recognized": self.female_recognized, "F_error": self.female_errors,
                       "M_recognized": self.male_recognized, "M_error": self.male_errors},
        }


def validate_endings(labeled: Iterable[tuple[AuthorRecord, GenderLabel]],
                     rules: EndingRules | None = None) -> ValidationReport:
    """Re-label dictionary/external-labeled records by surname ending and score it.

    A record is recognized when the ending rule gives its known gender and an
    error when the rule gives the opposite one.
    """
    rules = rules or default_rules()
    assignments = []
    for record, label in labeled:
        if not label.known or label.source not in (DICTIONARY, EXTERNAL):
            continue
        by_ending = label_by_ending(record, rules)
        assignments.append({"id": record.id, "surname": record.display_name.surname,
                            "label": label.value, "ending": by_ending.value})
    if not assignments:
        raise ValueError("no dictionary- or service-labeled records to validate against")
    counts = {(g, outcome): 0 for g in (FEMALE, MALE) for outcome in ("hit", "miss")}
    for a in assignments:
        if a["ending"] == a["label"]:
            counts[(a["label"], "hit")] += 1
        elif a["ending"] != UNKNOWN:
            counts[(a["label"], "miss")] += 1
    return ValidationReport(
        n_female=sum(a["label"] == FEMALE for a in assignments),
        n_male=sum(a["label"] == MALE for a in assignments),
        female_recognized=counts[(FEMALE, "hit")],
        female_errors=counts[(FEMALE, "miss")],
        male_recognized=counts[(MALE, "hit")],
        male_errors=counts[(MALE, "miss")],
        assignments=assignments,
    )


# --------------------------------------------------------------------------
# whole corpus


def genderize_corpus(
    records: Sequence[AuthorRecord],
    dictionary: SynonymDictionary | None = None,
    rules: EndingRules | None = None,
    policy: ExternalLookupPolicy | None = None,
    *,
    client: NameGenderClient | None = None,
    stages: Iterable[str] = STAGES,
) -> tuple[dict[str, GenderLabel], dict]:
    """Label every record; earlier stages in the fixed precedence always win.

    ``stages`` selects which sources run; its order is irrelevant.
    """
    enabled = set(stages)
    unknown_stages = enabled - set(STAGES)
    if unknown_stages:
        raise ValueError(f"unknown stages {sorted(unknown_stages)}")
    dictionary = dictionary or default_dictionary()
    rules = rules or default_rules()
    policy = policy or ExternalLookupPolicy()
    if client is None and policy.cache_path:
        client = CachedLookup(policy.cache_path)

    labels: dict[str, GenderLabel] = {}
    for rec in records:
        label = unknown()
        flags: list[str] = []
        for stage in STAGES:
            if stage not in enabled:
                continue
            if stage == DICTIONARY:
                label = label_by_dictionary(rec, dictionary)
            elif stage == EXTERNAL:
                if client is None:
                    continue
                label = label_by_external(rec, policy, client)
            else:
                label = label_by_ending(rec, rules)
            if label.known:
                break
            flags.extend(label.flags)
        if not label.known and flags:
            label = unknown(*dict.fromkeys(flags))
        labels[rec.id] = label
    return labels, summarize_labels(labels)


def summarize_labels(labels: dict[str, GenderLabel]) -> dict:
    total = len(labels)
    counts = {FEMALE: 0, MALE: 0, UNKNOWN: 0}
    by_stage = {s: 0 for s in STAGES}
    increments = {s: {FEMALE: 0, MALE: 0} for s in STAGES}
    flagged = 0
    for label in labels.values():
        counts[label.value] += 1
        if label.known:
            by_stage[label.source] += 1
            increments[label.source][label.value] += 1
        if label.flags:
            flagged += 1
    return {
        "total": total,
        "counts": counts,
        "shares": {k: (v / total if total else 0.0) for k, v in counts.items()},
        "by_stage": by_stage,
        "increments": increments,
        "flagged": flagged,
    }


def dump_labels(labels: dict[str, GenderLabel], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rid in sorted(labels):
            fh.write(json.dumps({"id": rid, **labels[rid].to_dict()}, ensure_ascii=False) + "\n")


def load_labels(path) -> dict[str, GenderLabel]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                d = json.loads(line)
                out[d["id"]] = GenderLabel.from_dict(d)
    return out
