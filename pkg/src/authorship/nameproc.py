"""Author-name parsing, homoglyph folding and Cyrillic/Latin transliteration.

Names arrive from deposits in Latin, Cyrillic or a mix of both, often with
look-alike letters from the wrong alphabet.  Everything here is pure and
driven by the TSV tables shipped in ``authorship/data``.
"""
from __future__ import annotations

import logging
import re
import unicodedata
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

logger = logging.getLogger(__name__)

LATIN = "Latin"
CYRILLIC = "Cyrillic"
MIXED = "Mixed"

CYR_TO_LAT = "cyr_to_lat"
LAT_TO_CYR = "lat_to_cyr"

DEFAULT_CANDIDATE_CAP = 64

DEFAULT_PATRONYMIC_SUFFIXES = (
    "YCH", "ICH", "IVNA", "YIVNA", "OVNA", "EVNA",
    "ИЧ", "ІВНА", "ЇВНА", "ОВНА", "ЕВНА", "ИВНА",
)

# Consonants that may carry a soft sign dropped by romanization.
_SOFT_SIGN_HOSTS = frozenset("ЛНСТДЗЦ")
_LATIN_VOWELS = frozenset("AEIOUY")


class NameParseError(ValueError):
    """Raised when a raw author string holds no usable name."""


class TransliterationError(ValueError):
    """Raised when no transliteration candidate survives."""


def _data_path(name: str) -> Path:
    return Path(str(resources.files("authorship") / "data" / name))


def _read_tsv(path: Path) -> list[list[str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            rows.append(line.split("\t"))
    return rows


def letter_script(ch: str) -> str | None:
    """Return ``"Latin"``, ``"Cyrillic"``, ``"Other"`` or None for non-letters."""
    if not ch.isalpha():
        return None
    name = unicodedata.name(ch, "")
    if name.startswith("LATIN"):
        return LATIN
    if name.startswith("CYRILLIC"):
        return CYRILLIC
    return "Other"


def strip_diacritics(s: str) -> str:
    decomposed = unicodedata.normalize("NFD", s)
    return "".join(c for c in decomposed if not unicodedata.combining(c))


# --------------------------------------------------------------------------
# homoglyphs


@dataclass(frozen=True)
class ConfusableTable:
    """Code point -> representative in each script."""

    to_latin: dict[str, str]
    to_cyrillic: dict[str, str]

    def __contains__(self, ch: str) -> bool:
        return ch in self.to_latin

    @classmethod
    def from_tsv(cls, path: str | Path) -> ConfusableTable:
        to_latin, to_cyrillic = {}, {}
        for row in _read_tsv(Path(path)):
            ch = chr(int(row[0], 16))
            to_latin[ch] = row[1]
            to_cyrillic[ch] = row[2]
        return cls(to_latin, to_cyrillic)


@lru_cache(maxsize=None)
def default_confusables() -> ConfusableTable:
    return ConfusableTable.from_tsv(_data_path("confusables.tsv"))


def _majority(latin: int, cyrillic: int) -> str | None:
    if latin == cyrillic == 0:
        return None
    return CYRILLIC if cyrillic > latin else LATIN


def _script_votes(chars, table: ConfusableTable, *, unambiguous: bool) -> str | None:
    lat = cyr = 0
    for ch in chars:
        if unambiguous and ch in table:
            continue
        sc = letter_script(ch)
        if sc == LATIN:
            lat += 1
        elif sc == CYRILLIC:
            cyr += 1
    return _majority(lat, cyr)


def fold_homoglyphs(s: str, table: ConfusableTable | None = None) -> str:
    """Replace look-alike letters by the representative of the surrounding script.

    The script of each run of letters is decided by its letters that have no
    look-alike, failing that by the raw majority of a run of two or more
    letters (ties go to Latin).  Single look-alike letters, usually initials,
    follow the letter-weighted vote of the decided runs and are left alone
    when there is none.  Folding is idempotent: a decided run folds to a run
    with the same decision, so the weighted vote does not move.
    """
    table = table or default_confusables()
    runs = []
    for m in re.finditer(r"[^\W\d_]+", s):
        run = m.group()
        script = _script_votes(run, table, unambiguous=True)
        if script is None and len(run) > 1:
            script = _script_votes(run, table, unambiguous=False)
        runs.append((m.start(), run, script))
    weight = {LATIN: 0, CYRILLIC: 0}
    for _, run, script in runs:
        if script is not None:
            weight[script] += len(run)
    whole = _majority(weight[LATIN], weight[CYRILLIC])
    out = list(s)
    for start, run, script in runs:
        script = script or whole
        if script is None:
            continue
        mapping = table.to_cyrillic if script == CYRILLIC else table.to_latin
        for i, ch in enumerate(run, start=start):
            if ch in mapping:
                out[i] = mapping[ch]
    return "".join(out)


def skeleton(s: str, table: ConfusableTable | None = None) -> str:
    """Script-blind form: every look-alike mapped to its Latin representative."""
    table = table or default_confusables()
    return "".join(table.to_latin.get(ch, ch) for ch in s)


def detect_script(s: str) -> str:
    scripts = {letter_script(ch) for ch in s}
    if LATIN in scripts and CYRILLIC in scripts:
        return MIXED
    if CYRILLIC in scripts:
        return CYRILLIC
    return LATIN


def name_form(s: str, table: ConfusableTable | None = None) -> str:
    """Folded, uppercased, NFC form used for stored name parts and dictionary keys."""
    return unicodedata.normalize("NFC", fold_homoglyphs(s, table).upper())


def key_form(s: str, table: ConfusableTable | None = None) -> str:
    return skeleton(strip_diacritics(s.upper()), table)


# --------------------------------------------------------------------------
# parsed names


@dataclass(frozen=True)
class PersonName:
    raw: str
    surname: str
    given: str | None = None
    initials: tuple[str, ...] = ()
    patronymic: str | None = None
    script: str = LATIN
    normalized_key: str = ""
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def display(self) -> str:
        if self.given:
            return " ".join(p for p in (self.surname, self.given, self.patronymic) if p)
        if self.initials:
            return f"{self.surname} {'.'.join(self.initials)}."
        return self.surname

    @property
    def has_given(self) -> bool:
        return bool(self.given)

    def to_dict(self) -> dict:
        return {
            "raw": self.raw,
            "surname": self.surname,
            "given": self.given,
            "initials": list(self.initials),
            "patronymic": self.patronymic,
            "script": self.script,
            "normalized_key": self.normalized_key,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict) -> PersonName:
        return cls(
            raw=d["raw"],
            surname=d["surname"],
            given=d.get("given"),
            initials=tuple(d.get("initials", ())),
            patronymic=d.get("patronymic"),
            script=d.get("script", LATIN),
            normalized_key=d.get("normalized_key", ""),
            warnings=tuple(d.get("warnings", ())),
        )


def make_key(surname: str, given: str | None, initials, table=None) -> str:
    tail = key_form(given, table) if given else ".".join(key_form(i, table) for i in initials)
    return f"{key_form(surname, table)}|{tail}"


def assemble_name(raw, surname, given=None, initials=(), patronymic=None, warnings=(), table=None):
    """Build a PersonName from already-normalized parts."""
    return PersonName(
        raw=raw,
        surname=surname,
        given=given,
        initials=tuple(initials),
        patronymic=patronymic,
        script=detect_script(raw),
        normalized_key=make_key(surname, given, initials, table),
        warnings=tuple(warnings),
    )


def _is_patronymic(word: str, suffixes) -> bool:
    return len(word) >= 4 and any(word.endswith(sfx) for sfx in suffixes)


def parse_name(
    raw: str,
    *,
    order: str = "surname_first",
    patronymic_suffixes=DEFAULT_PATRONYMIC_SUFFIXES,
    table: ConfusableTable | None = None,
) -> PersonName:
    """Split ``"SURNAME GIVEN [PATRONYMIC]"`` or ``"SURNAME I.[I.]"`` into parts.

    ``order="given_first"`` reads the last token as the surname instead.
    """
    if raw is None or not raw.strip():
        raise NameParseError(f"empty author name: {raw!r}")
    folded = name_form(raw.strip(), table)
    tokens = [t for t in re.split(r"[\s,;]+", folded) if t]
    tokens = [t for t in tokens if any(ch.isalpha() for ch in t)]
    if not tokens:
        raise NameParseError(f"no letters in author name: {raw!r}")

    warnings = []
    if any(letter_script(ch) == "Other" for ch in raw):
        warnings.append("foreign_script")
    if order == "given_first":
        surname_tok, rest = tokens[-1], tokens[:-1]
    elif order == "surname_first":
        surname_tok, rest = tokens[0], tokens[1:]
    else:
        raise ValueError(f"unknown name order {order!r}")
    surname = surname_tok.strip(".-'’")
    surname = surname.replace(".", "")
    if not any(ch.isalpha() for ch in surname):
        raise NameParseError(f"no usable surname in {raw!r}")
    if not rest:
        warnings.append("surname_only")

    given = patronymic = None
    initials: list[str] = []
    for tok in rest:
        if "." in tok:
            pieces = [(p, True) for p in re.split(r"[.\-]", tok) if p]
            if not tok.endswith("."):
                # "S.MARIA": the last piece carries no period
                pieces[-1] = (pieces[-1][0], False)
        else:
            pieces = [(tok, False)]
        for piece, dotted in pieces:
            letters = "".join(ch for ch in piece if ch.isalpha() or ch in "-'’")
            if not letters:
                continue
            if len(letters) == 1 or (dotted and len(letters) == 2):
                initials.append(letters[0])
            elif given is None:
                given = letters
                initials.append(letters[0])
            elif patronymic is None and _is_patronymic(letters, patronymic_suffixes):
                patronymic = letters
                initials.append(letters[0])
            else:
                initials.append(letters[0])
    return assemble_name(raw, surname, given, initials, patronymic, warnings, table)


# --------------------------------------------------------------------------
# transliteration


@dataclass(frozen=True)
class TransliterationTable:
    """Deterministic Cyrillic->Latin romanization plus Latin->Cyrillic variants.

    ``cyr_to_lat`` maps a Cyrillic letter to ``(medial, word_initial)``
    spellings.  ``lat_to_cyr_variants`` maps a Latin n-gram to
    ``[(cyrillic, cost), ...]``; cost 0 is the primary reading and candidate
    enumeration prefers low total cost.
    """

    cyr_to_lat: dict[str, tuple[str, str]]
    lat_to_cyr_variants: dict[str, list[tuple[str, int]]]

    @classmethod
    def from_tsv(cls, cyr_path: str | Path, lat_path: str | Path) -> TransliterationTable:
        cyr = {}
        with open(cyr_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                medial = parts[1] if len(parts) > 1 else ""
                initial = parts[2] if len(parts) > 2 and parts[2] else medial
                cyr[parts[0]] = (medial, initial)
        lat: dict[str, list[tuple[str, int]]] = {}
        for row in _read_tsv(Path(lat_path)):
            lat.setdefault(row[0], []).append((row[1], int(row[2]) if len(row) > 2 else 0))
        for opts in lat.values():
            opts.sort(key=lambda o: (o[1], o[0]))
        return cls(cyr, lat)

    @property
    def max_ngram(self) -> int:
        return max(len(k) for k in self.lat_to_cyr_variants)

    def romanize(self, text: str) -> str:
        """Deterministic Latin reading of a (possibly mixed) string."""
        s = unicodedata.normalize("NFC", text.upper())
        out = []
        prev_letter = False
        i = 0
        while i < len(s):
            ch = s[i]
            if ch == "З" and s[i + 1:i + 2] == "Г":
                out.append("ZGH")
                i += 2
                prev_letter = True
                continue
            if ch in self.cyr_to_lat:
                medial, initial = self.cyr_to_lat[ch]
                out.append(medial if prev_letter else initial)
                prev_letter = True
            else:
                out.append(ch)
                prev_letter = ch.isalpha()
            if ch in "'’":
                prev_letter = True
            i += 1
        return "".join(out)

    def _options(self, s: str, pos: int) -> list[tuple[int, str, int]]:
        """(consumed length, cyrillic chunk, cost) choices at ``pos``."""
        ch = s[pos]
        sc = letter_script(ch)
        if sc == CYRILLIC or not ch.isalpha() and ch not in self.lat_to_cyr_variants:
            return [(1, ch, 0)]
        opts = []
        for n in range(min(self.max_ngram, len(s) - pos), 0, -1):
            for chunk, cost in self.lat_to_cyr_variants.get(s[pos:pos + n], ()):
                opts.append((n, chunk, cost))
        if not opts and sc == LATIN:
            base = strip_diacritics(ch)
            for chunk, cost in self.lat_to_cyr_variants.get(base, ()):
                opts.append((1, chunk, cost))
        return opts

    def cyrillic_candidates(self, text: str, cap: int = DEFAULT_CANDIDATE_CAP) -> tuple[list[tuple[int, str]], bool]:
        """Lowest-cost Cyrillic readings of ``text``.

        Returns ``([(cost, candidate), ...], overflowed)``, sorted by cost then
        string.  An empty list means some letter had no mapping.
        """
        s = unicodedata.normalize("NFC", text.upper())
        keep = cap + 1
        memo: dict[int, list[tuple[int, str]]] = {len(s): [(0, "")]}
        for pos in range(len(s) - 1, -1, -1):
            best: dict[str, int] = {}
            for n, chunk, cost in self._options(s, pos):
                nxt = pos + n
                chunks = [(chunk, cost)]
                if chunk and chunk[-1] in _SOFT_SIGN_HOSTS:
                    follow = s[nxt:nxt + 1]
                    if not follow or not follow.isalpha() or (
                        letter_script(follow) == LATIN and follow not in _LATIN_VOWELS
                    ):
                        chunks.append((chunk + "Ь", cost + 1))
                for c_chunk, c_cost in chunks:
                    for tail_cost, tail in memo[nxt]:
                        cand = c_chunk + tail
                        total = c_cost + tail_cost
                        if total < best.get(cand, 1 << 30):
                            best[cand] = total
            memo[pos] = sorted(((c, t) for t, c in best.items()))[:keep]
        result = memo[0]
        overflow = len(result) > cap
        return result[:cap], overflow


@lru_cache(maxsize=None)
def default_transliteration() -> TransliterationTable:
    return TransliterationTable.from_tsv(_data_path("cyr_to_lat.tsv"), _data_path("lat_to_cyr.tsv"))


def has_cyrillic(s: str | None) -> bool:
    return bool(s) and any(letter_script(ch) == CYRILLIC for ch in s)


def has_latin(s: str | None) -> bool:
    return bool(s) and any(letter_script(ch) == LATIN for ch in s)


def _name_parts(name: PersonName):
    return [name.surname, name.given, name.patronymic, *name.initials]


def _combine(left, right, cap):
    """Top-``cap`` cost-ordered product of two candidate lists."""
    best: dict[tuple, int] = {}
    for lc, lv in left:
        for rc, rv in right:
            key = (*lv, rv)
            total = lc + rc
            if total < best.get(key, 1 << 30):
                best[key] = total
    return sorted(((c, k) for k, c in best.items()), key=lambda x: (x[0], x[1]))[:cap + 1]


def transliterate(
    name: PersonName,
    direction: str,
    table: TransliterationTable | None = None,
    cap: int = DEFAULT_CANDIDATE_CAP,
) -> set[PersonName]:
    """Readings of ``name`` in the other script.

    ``cyr_to_lat`` yields one deterministic romanization; ``lat_to_cyr``
    yields up to ``cap`` candidates, flagged ``candidates_truncated`` on
    overflow.
    """
    table = table or default_transliteration()
    parts = _name_parts(name)
    if direction == CYR_TO_LAT:
        if not any(has_cyrillic(p) for p in parts):
            return {name}
        rom = [table.romanize(p) if p else p for p in parts]
        initials = [r[:1] for r in rom[3:]]
        raw = " ".join(p for p in rom[:3] if p) if rom[1] else f"{rom[0]} {'.'.join(initials)}."
        return {assemble_name(raw.strip(), rom[0], rom[1], initials, rom[2], name.warnings)}
    if direction != LAT_TO_CYR:
        raise ValueError(f"unknown direction {direction!r}")
    if not any(has_latin(p) for p in parts):
        return {name}

    overflow = False
    combined: list[tuple[int, tuple]] = [(0, ())]
    for idx, part in enumerate(parts):
        if not part:
            options = [(0, part)]
        else:
            options, over = table.cyrillic_candidates(part, cap)
            if idx >= 3:
                options = [(c, s[:1]) for c, s in options]
            overflow |= over
            if not options:
                logger.warning("no Cyrillic reading for %r in %r", part, name.raw)
                raise TransliterationError(f"unmappable name part {part!r} in {name.raw!r}")
        combined = _combine(combined, options, cap)
    if len(combined) > cap:
        overflow = True
        combined = combined[:cap]
    warnings = name.warnings + (("candidates_truncated",) if overflow else ())
    out = set()
    for _, vals in combined:
        surname, given, patronymic, *initials = vals
        raw = " ".join(p for p in (surname, given, patronymic) if p) if given else f"{surname} {'.'.join(initials)}."
        out.add(assemble_name(raw.strip(), surname, given, initials, patronymic, warnings))
    if not out:
        raise TransliterationError(f"no Cyrillic candidates for {name.raw!r}")
    return out


def latin_reading(s: str, table: TransliterationTable | None = None) -> str:
    """Single Latin reading of a name part, romanizing any Cyrillic letters."""
    table = table or default_transliteration()
    return table.romanize(s) if has_cyrillic(s) else s.upper()


def cyrillic_readings(s: str, table: TransliterationTable | None = None, cap: int = DEFAULT_CANDIDATE_CAP) -> list[str]:
    """Candidate Cyrillic readings of a name part (itself if already Cyrillic)."""
    table = table or default_transliteration()
    if not has_latin(s):
        return [s.upper()]
    cands, _ = table.cyrillic_candidates(s, cap)
    return [c for _, c in cands]


def with_warning(name: PersonName, warning: str) -> PersonName:
    return replace(name, warnings=name.warnings + (warning,))
