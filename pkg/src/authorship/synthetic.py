"""Synthetic corpora with planted authors, for recovery and determinism checks.

Every planted person has a surname no other person shares, so the only
difficulty is recognising one person across scripts, transliteration
variants, homoglyph substitutions and initials.
"""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field

from .disambig import SynonymDictionary, default_dictionary
from .ingest import Corpus, RawRecord
from .nameproc import default_confusables, default_transliteration, has_cyrillic

SURNAMES = (
    "ШЕВЧЕНКО", "БОНДАРЕНКО", "ТКАЧЕНКО", "КРАВЧЕНКО", "ОЛІЙНИК", "ПОЛІЩУК", "ЛИСЕНКО", "РУДЕНКО",
    "САВЧЕНКО", "ПЕТРЕНКО", "КЛИМЕНКО", "ПАВЛЕНКО", "ЛЕВЧЕНКО", "ХАРЧЕНКО", "КАРПЕНКО", "ГАВРИЛЮК",
    "ДЕМЧЕНКО", "ЗІНЧЕНКО", "ЮЩЕНКО", "МЕЛЬНИК", "ГОНЧАРУК", "ЯРЕМЧУК", "ФЕДОРЧУК", "ЖУРАВЕЛЬ",
    "ЧОРНОВІЛ", "ДОРОШЕНКО", "ЄРМОЛЕНКО", "ГРИЦЕНКО", "ВОВК", "СИДОРЕНКО", "КУЗЬМЕНКО", "ТИМОШЕНКО",
    "МАРТИНЕНКО", "ЗАМОТА", "ОСТАПЧУК", "БІЛОУС", "ЩЕРБАК", "НАЗАРУК", "ПРИХОДЬКО", "СТЕЦЮК",
    "БАБИЧ", "ЛУЦЕНКО", "ІЩЕНКО", "ГУЦУЛЯК", "КОСТЕНКО", "СЕМЕНЮК", "ЦИМБАЛ", "ФІЛІПОВИЧ",
    "ДАНИЛЮК", "АНДРУСИШИН", "ВЕРБИЦЬКИЙ", "КУЛИК", "МИРОНЕНКО", "ОНИЩЕНКО", "РЕВА", "САМОЙЛЕНКО",
    "ТАРАНЕНКО", "УСТИМЕНКО", "ХОМЕНКО", "ЯКИМЧУК",
)

# alternative, non-official romanization choices per Cyrillic letter
_ALT = {"И": "I", "Х": "H", "Г": "G", "Й": "J", "Я": "JA", "Ю": "JU", "Є": "JE", "Ї": "JI", "Ц": "C",
        "Щ": "SCH", "Ь": "", "Ж": "ZH", "Ш": "SH", "Ч": "CH"}


@dataclass
class PlantedPerson:
    id: str
    surname: str
    given_cyrillic: str
    given_latin: list[str]
    gender: str


@dataclass
class SyntheticCorpus:
    corpus: Corpus
    persons: list[PlantedPerson]
    truth: dict[str, str] = field(default_factory=dict)  # mention id -> person id
    has_full_name: dict[str, bool] = field(default_factory=dict)

    def clusters(self) -> dict[str, frozenset[str]]:
        out: dict[str, set[str]] = {}
        for mid, pid in self.truth.items():
            out.setdefault(pid, set()).add(mid)
        return {pid: frozenset(m) for pid, m in out.items()}

    def full_name_persons(self) -> set[str]:
        return {pid for pid, full in self.has_full_name.items() if full}


def _alt_romanization(cyr: str) -> str:
    out = []
    for i, ch in enumerate(cyr):
        if ch in _ALT:
            out.append(_ALT[ch])
        else:
            medial, initial = default_transliteration().cyr_to_lat.get(ch, (ch, ch))
            out.append(initial if i == 0 else medial)
    return "".join(out)


def _homoglyph(s: str, rng: random.Random) -> str:
    """Swap one confusable letter for its twin in the other script."""
    table = default_confusables()
    target = table.to_latin if has_cyrillic(s) else table.to_cyrillic
    spots = [i for i, ch in enumerate(s) if ch in target and target[ch] != ch]
    if not spots:
        return s
    i = rng.choice(spots)
    return s[:i] + target[s[i]] + s[i + 1:]


def surname_forms(cyr: str, rng: random.Random) -> dict[str, str]:
    table = default_transliteration()
    official = table.romanize(cyr)
    alt = _alt_romanization(cyr)
    cands = {c for _, c in table.cyrillic_candidates(alt)[0]}
    if cyr not in cands and cyr.replace("Ь", "") not in cands:
        alt = official
    return {"cyrillic": cyr, "official": official, "alternative": alt,
            "homoglyph_cyrillic": _homoglyph(cyr, rng), "homoglyph_latin": _homoglyph(official, rng)}


def _persons(n: int, rng: random.Random, dictionary: SynonymDictionary) -> list[PlantedPerson]:
    if n > len(SURNAMES):
        raise ValueError(f"at most {len(SURNAMES)} planted persons")
    groups = [g for g in dictionary.groups if any(has_cyrillic(v) for v in g.variants)
              and any(not has_cyrillic(v) for v in g.variants)]
    surnames = rng.sample(SURNAMES, n)
    out = []
    for i, surname in enumerate(surnames):
        g = rng.choice(groups)
        cyr = next(v for v in g.variants if has_cyrillic(v) and not any(c.isascii() for c in v))
        latin = sorted(v for v in g.variants if v.isascii())
        out.append(PlantedPerson(f"P{i:03d}", surname, cyr, latin, g.gender))
    return out


def generate(
    n_papers: int = 200,
    n_persons: int = 50,
    *,
    seed: int = 0,
    p_initials: float = 0.3,
    p_initials_only: float = 0.1,
    issns: tuple[str, ...] = ("1234-5679", "2345-678X"),
    years: tuple[int, int] = (2015, 2020),
    dictionary: SynonymDictionary | None = None,
) -> SyntheticCorpus:
    """Papers by planted persons with varied renderings of each name.

    Each person's first appearance uses a full given name so that initials
    have a unique full-name record to attach to.  The exception is a share
    ``p_initials_only`` of persons who only ever appear as the same Latin
    surname with an initial.  The second ISSN is marked as indexed.
    """
    rng = random.Random(seed)
    dictionary = dictionary or default_dictionary()
    persons = _persons(n_persons, rng, dictionary)
    forms = {p.id: surname_forms(p.surname, rng) for p in persons}
    initials_only = {p.id for p in persons if rng.random() < p_initials_only}
    table = default_transliteration()
    seen: set[str] = set()
    full: dict[str, bool] = {}
    truth: dict[str, str] = {}
    records = []
    for k in range(n_papers):
        size = rng.choices((1, 2, 3, 4, 5), weights=(30, 30, 22, 12, 6))[0]
        team = rng.sample(persons, size)
        if rng.random() < 0.4:
            team.sort(key=lambda p: table.romanize(p.surname))
        issn = rng.choice(issns)
        doi = f"10.5555/synth.{seed}.{k:05d}"
        names = []
        for pos, p in enumerate(team):
            style = rng.choice(("cyrillic", "official", "official", "alternative",
                                "homoglyph_cyrillic", "homoglyph_latin"))
            use_initials = p.id in seen and rng.random() < p_initials
            if p.id in initials_only:
                style, use_initials = "official", True
            surname = forms[p.id][style]
            cyrillic = style in ("cyrillic", "homoglyph_cyrillic")
            if cyrillic:
                given = p.given_cyrillic
                initial = given[0]
            else:
                given = rng.choice(p.given_latin)
                initial = table.romanize(p.given_cyrillic)[0]
            if use_initials:
                names.append(f"{surname} {initial}.")
            else:
                names.append(f"{surname} {given}")
                full[p.id] = True
            full.setdefault(p.id, False)
            seen.add(p.id)
            truth[f"{doi}#{pos}"] = p.id
        year = rng.randint(*years)
        records.append(RawRecord(
            doi=doi, year=year, issn=issn, publisher="Synthetic Press", title=f"Synthetic paper {k}",
            author_names=names, citation_count=rng.randint(0, 20),
            indexed_scopus=issn == issns[-1], indexed_wos=False,
        ))
    provenance = {"source": f"synthetic seed={seed}", "fetched_at": None}
    return SyntheticCorpus(Corpus(records, provenance), persons, truth, full)


def dump_truth(sc: SyntheticCorpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"persons": [asdict(p) for p in sc.persons], "mentions": sc.truth},
                  fh, ensure_ascii=False, indent=1, sort_keys=True)
