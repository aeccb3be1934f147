"""
Alphabetical author lists in two scripts
========================================

A Ukrainian author list can be sorted by the Latin spelling, by the
Cyrillic spelling, by both or by neither.
"""

#%%
# imports
from authorship.alphabet import adjusted_counts, check_corpus, check_order, summarize
from authorship.ingest import RawRecord
from authorship.nameproc import parse_name
from authorship.synthetic import generate


def verdict(names):
    paper = RawRecord("demo", 2020, "", "", "", names)
    return check_order(paper, [parse_name(n) for n in names])


#%%
# Step 1. One list, two answers
# -----------------------------
# M before Z in Latin, but З (Z) comes before М (M) in Cyrillic.
v = verdict(["MARTYNENKO V.", "ZAMOTA I."])
print(v.latin_ordered, v.cyrillic_ordered, v.definitely_non_alpha)

v = verdict(["ZAMOTA I.", "MARTYNENKO V."])
print(v.latin_ordered, v.cyrillic_ordered, v.definitely_non_alpha)

#%%
# Step 2. Ties on surname fall through to initials
# ------------------------------------------------
print(verdict(["IVANOV A.", "IVANOV B."]).latin_ordered, verdict(["IVANOV B.", "IVANOV A."]).latin_ordered)

#%%
# Step 3. Discounting lucky orderings
# -----------------------------------
# n names land in order by chance with probability 1/n!
print(adjusted_counts({2: 5194, 3: 1284, 4: 135}))

#%%
# Step 4. A whole corpus
# ----------------------
sc = generate(n_papers=300, n_persons=60, seed=1)
verdicts, skips = check_corpus(sc.corpus)
(s,) = summarize(sc.corpus, verdicts)
print(s.collaborative_papers, "collaborative papers")
print("definitely non-alphabetical:", s.definitely_non_alpha, f"({s.definitely_non_alpha_share:.1%})")
print("intentionally alphabetical, adjusted:", s.adjusted_intentional, f"({s.adjusted_intentional_share:.1%})")
