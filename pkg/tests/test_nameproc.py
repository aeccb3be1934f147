import unicodedata

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from authorship.nameproc import (
    CYR_TO_LAT,
    CYRILLIC,
    LAT_TO_CYR,
    LATIN,
    MIXED,
    NameParseError,
    TransliterationError,
    default_confusables,
    default_transliteration,
    detect_script,
    fold_homoglyphs,
    parse_name,
    skeleton,
    strip_diacritics,
    transliterate,
)

CYR_A = "А"
CYR_EM = "М"

# Ukrainian surnames used for round-trip checks
SURNAMES = [
    "МАРТИНЕНКО", "ЗАМОТА", "КАФКА", "ВЕРГУН", "ШЕВЧЕНКО", "ЩЕРБАК", "ЮЩЕНКО", "ЯРЕМЧУК", "ЄРМОЛЕНКО",
    "ЇЖАКЕВИЧ", "ЗГУРОВСЬКИЙ", "КОВАЛЬ", "МЕЛЬНИК", "ГАВРИЛЮК", "ҐАВА", "ЖУРАВЕЛЬ", "ЦИМБАЛ", "ХОМЕНКО",
    "БОСОВСЬКА", "ДІБРОВА", "СОВА", "ВЕРБИЦЬКИЙ", "ЧОРНОВІЛ", "ПРИХОДЬКО", "СТЕЦЮК", "ОНИЩЕНКО", "ЛЬВОВ",
    "КУЗЬМЕНКО", "ІЩЕНКО", "АНДРУСИШИН", "МИРОШНИЧЕНКО", "ЯКИМЧУК", "ПІДГІРНИЙ", "ТЕРЕЩЕНКО", "ПАЛІЙ",
]


def test_fold_cyrillic_initial_in_latin_name():
    assert fold_homoglyphs(f"VERHUN {CYR_A}.") == "VERHUN A."


def test_fold_pure_latin_identity():
    assert fold_homoglyphs("ABC") == "ABC"


def test_fold_keeps_confusable_only_cyrillic_word():
    # every letter of СОВА has a Latin twin; the word stays Cyrillic
    assert fold_homoglyphs("СОВА") == "СОВА"


def test_fold_latin_letter_inside_cyrillic_word():
    assert fold_homoglyphs("КAФКА") == "КАФКА"


def _confusable_variants(word):
    table = default_confusables()
    out = {word}
    for i, ch in enumerate(word):
        twin = table.to_cyrillic.get(ch)
        if twin and twin != ch:
            out.add(word[:i] + twin + word[i + 1:])
    return sorted(out)


def test_deposit_variants_collapse():
    seeds = ["EUGEN", "EUGENE", "YEVHEN", "EVGENIJ", "EVGENY"]
    variants = [v for s in seeds for v in _confusable_variants(s)][:40]
    folded = {fold_homoglyphs(v) for v in variants}
    assert len(folded) <= len(variants)
    assert len(folded) == len(seeds)


@given(st.text(alphabet="ABCEHIKMOPTXYАВСЕНІКМОРТХУЁЇабвгдеяюABCDEFGHIJKLMNOPQRSTUVWXYZ .-", max_size=30))
@settings(max_examples=300, derandomize=True)
def test_fold_idempotent_and_length_preserving(s):
    once = fold_homoglyphs(s)
    assert fold_homoglyphs(once) == once
    assert len(once) == len(unicodedata.normalize("NFC", s))


def test_fold_idempotent_without_unambiguous_letters():
    once = fold_homoglyphs("AЁ.Ё")
    assert once == "AË.Ë"
    assert fold_homoglyphs(once) == once


def test_parse_full_latin():
    n = parse_name("KAFKA SOFIYA")
    assert (n.surname, n.given, n.initials, n.script) == ("KAFKA", "SOFIYA", ("S",), LATIN)


def test_parse_patronymic():
    n = parse_name("VERGUN ANDRIJ IVANOVYCH")
    assert (n.surname, n.given, n.patronymic) == ("VERGUN", "ANDRIJ", "IVANOVYCH")
    assert n.initials == ("A", "I")


def test_parse_cyrillic_initials():
    n = parse_name("КАФКА С.М.")
    assert n.surname == "КАФКА"
    assert n.given is None
    assert n.initials == ("С", "М")
    assert n.script == CYRILLIC


def test_parse_mixed_script_initials_fold():
    n = parse_name(f"KAFKA S.{CYR_EM}.")
    assert n.initials == ("S", "M")
    assert n.script == MIXED
    assert n.normalized_key == parse_name("KAFKA S.M.").normalized_key


def test_parse_errors_and_warnings():
    with pytest.raises(NameParseError):
        parse_name("   ")
    with pytest.raises(NameParseError):
        parse_name("... ,;")
    assert "surname_only" in parse_name("KAFKA").warnings


def test_parse_given_first():
    n = parse_name("Sofiya Kafka", order="given_first")
    assert (n.surname, n.given) == ("KAFKA", "SOFIYA")


def test_first_initial_matches_given():
    n = parse_name("ШЕВЧЕНКО ТАРАС Г.")
    assert n.initials[0] == n.given[0]


def test_key_invariant_under_homoglyph_substitution():
    table = default_confusables()
    for raw in ["KAFKA SOFIYA", "КАФКА С.М.", "VERHUN ANTONINA", "MARTYNENKO VALENTYNA", "СОВА О.П."]:
        key = parse_name(raw).normalized_key
        for i, ch in enumerate(raw):
            for twin in (table.to_latin.get(ch), table.to_cyrillic.get(ch)):
                if twin and twin != ch:
                    assert parse_name(raw[:i] + twin + raw[i + 1:]).normalized_key == key


def test_key_has_no_ambiguous_code_points():
    table = default_confusables()
    key = parse_name("КАФКА С.М.").normalized_key
    assert all(ch not in table or table.to_latin[ch] == ch for ch in key)


def test_detect_script():
    assert detect_script("ABC") == LATIN
    assert detect_script("АБВ") == CYRILLIC
    assert detect_script("AБ") == MIXED


def test_strip_diacritics():
    assert strip_diacritics("ŠEVČENKO") == "SEVCENKO"


def test_romanize_paper_example():
    n = parse_name("МАРТИНЕНКО ВАЛЕНТИНА")
    (lat,) = transliterate(n, CYR_TO_LAT)
    assert lat.surname == "MARTYNENKO"
    assert lat.given == "VALENTYNA"


def test_official_word_initial_forms():
    table = default_transliteration()
    assert table.romanize("ЮЩЕНКО") == "YUSHCHENKO"
    assert table.romanize("ЯРЕМЧУК") == "YAREMCHUK"
    assert table.romanize("ЗГУРОВСЬКИЙ") == "ZGHUROVSKYI"
    assert table.romanize("ЄРМОЛЕНКО") == "YERMOLENKO"
    assert table.romanize("ПАЛІЙ") == "PALII"


def test_lat_to_cyr_contains_original():
    cands = transliterate(parse_name("ZAMOTA IRINA"), LAT_TO_CYR)
    assert "ЗАМОТА" in {c.surname for c in cands}


def test_already_in_target_script():
    n = parse_name("ZAMOTA I.")
    assert transliterate(n, CYR_TO_LAT) == {n}
    m = parse_name("ЗАМОТА І.")
    assert transliterate(m, LAT_TO_CYR) == {m}


@pytest.mark.parametrize("surname", SURNAMES)
def test_round_trip(surname):
    (lat,) = transliterate(parse_name(f"{surname} І."), CYR_TO_LAT)
    back = transliterate(lat, LAT_TO_CYR)
    assert surname in {c.surname for c in back}


def test_candidate_cap_flags_overflow():
    n = parse_name("YIYIYIYIYIYI CHRISTINA")
    out = transliterate(n, LAT_TO_CYR, cap=4)
    assert len(out) == 4
    assert all("candidates_truncated" in c.warnings for c in out)


def test_unmappable_grapheme():
    n = parse_name("ΑΛΦΑ BETA")
    with pytest.raises(TransliterationError):
        transliterate(n, LAT_TO_CYR)


def test_skeleton_is_script_blind():
    assert skeleton("СОВА") == skeleton("COBA")
