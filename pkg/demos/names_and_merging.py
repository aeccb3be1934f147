"""
Names, homoglyphs and merging
=============================

Walks through how one person's scattered spellings end up as a single
author record, and why a different surname family stays split.
"""

#%%
# imports
from authorship.disambig import MergePolicy, disambiguate
from authorship.gender import genderize_corpus
from authorship.ingest import Corpus, RawRecord
from authorship.nameproc import CYR_TO_LAT, LAT_TO_CYR, fold_homoglyphs, parse_name, transliterate

#%%
# Step 1. Homoglyphs
# ------------------
# The initial below is a Cyrillic "А". It looks Latin but compares unequal.
raw = "VERHUN А."
print(raw == "VERHUN A.", fold_homoglyphs(raw) == "VERHUN A.")

#%%
# Step 2. Parsing and keys
# ------------------------
for s in ["KAFKA SOFIYA", "КАФКА С.М.", "KAFKA S.М."]:
    n = parse_name(s)
    print(f"{s:18} surname={n.surname:8} initials={n.initials} key={n.normalized_key}")

#%%
# Step 3. Transliteration both ways
# ---------------------------------
(lat,) = transliterate(parse_name("МАРТИНЕНКО ВАЛЕНТИНА"), CYR_TO_LAT)
print(lat.display)
back = transliterate(parse_name("ZAMOTA IRINA"), LAT_TO_CYR)
print(len(back), "Cyrillic candidates, first few:", sorted(c.surname for c in back)[:5])

#%%
# Step 4. Six mentions, one person
# --------------------------------
kafka = ["KAFKA S.М.", "KAFKA SOFIYA", "КАФКА С.М.", "KAFKA S.M.", "KAFKA SOFIIA", "KAFKA S."]
corpus = Corpus([RawRecord(f"10.1/k{i}", 2020, "1234-5679", "P", "T", [n]) for i, n in enumerate(kafka)])
records = disambiguate(corpus)
labels, _ = genderize_corpus(records)
for r in records:
    print(r.id, r.display_name.display, len(r.mentions), "mentions,", labels[r.id].value)
    for entry in r.merge_log:
        print("   ", entry["rule"], entry["score"])

#%%
# Step 5. A surname shared by several people
# ------------------------------------------
# "VERHUN A." could be Andrij or Antonina, so nothing is merged automatically
# and the ambiguous pairs go to a review file instead.
verhun = ["VERHUN А.", "VERGUN ANDRIJ IVANOVYCH", "VERHUN A.", "VERHUN ANTONINA", "VERHUN ANDRIJ"]
corpus = Corpus([RawRecord(f"10.1/v{i}", 2020, "1234-5679", "P", "T", [n]) for i, n in enumerate(verhun)])
records = disambiguate(corpus, policy=MergePolicy(review_file="verhun_review.tsv"))
for r in records:
    print(r.id, r.display_name.display, len(r.mentions))
print(open("verhun_review.tsv", encoding="utf-8").read())
