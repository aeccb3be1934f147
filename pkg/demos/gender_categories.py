"""
Gender categories and the reshuffled baseline
=============================================

Builds a small synthetic corpus, labels authors and compares observed
category shares with shares after permuting the labels.
"""

#%%
# imports
import numpy as np

from authorship import analytics
from authorship.disambig import disambiguate
from authorship.gender import genderize_corpus, validate_endings
from authorship.synthetic import generate

#%%
# Step 1. A corpus with known answers
# -----------------------------------
sc = generate(n_papers=400, n_persons=60, seed=3)
records = disambiguate(sc.corpus)
print(len(sc.corpus), "papers,", len(sc.persons), "planted persons,", len(records), "author records")

#%%
# Step 2. Labels
# --------------
labels, summary = genderize_corpus(records)
print(summary["counts"], summary["by_stage"])

# how well would surname endings alone have done on the dictionary-labelled authors?
report = validate_endings((r, labels[r.id]) for r in records)
print({k: round(v, 3) for k, v in report.to_dict().items() if k.startswith(("F_", "M_"))})

#%%
# Step 3. Observed shares
# -----------------------
a = analytics.Authorship.build(sc.corpus, records, labels)
(entire,) = analytics.breakdown(a)
print(entire.classified_papers, "of", entire.total_papers, "papers classified")

#%%
# Step 4. Reshuffled shares
# -------------------------
null = analytics.reshuffle_null(a, n=200, seed=0)
for c in analytics.CATEGORIES:
    print(f"{analytics.CATEGORY_LABELS[c]:9} observed {entire.shares[c]:.3f}  reshuffled {null.mean_shares[c]:.3f}")

# spread across rounds, mixed teams only
mix = np.array([r[analytics.MIX_COLL] for r in null.round_counts])
print("MIX coll per round: mean", mix.mean(), "sd", mix.std().round(2))

#%%
# Step 5. Per-author view
# -----------------------
stats, agg = analytics.author_stats(a)
for g in ("F", "M"):
    print(g, {k: (round(v, 3) if isinstance(v, float) else v) for k, v in agg[g].items()})
