"""
Intrinsic evaluation on word-similarity datasets
================================================

A similarity dataset is a list of word pairs with human-judged scores.
An embedding is scored by the Spearman correlation between those gold
judgments and the cosine similarities it assigns, plus the coverage:
how many pairs had both words represented. Pairs with a missing word
are skipped, never guessed at.
"""
import math

import numpy as np

from metavec import (
    EmbeddingSpace,
    evaluate,
    evaluate_suite,
    format_report_table,
    load_similarity_dataset,
    report_records,
    spearman,
)

# Spearman correlation works on ranks, so any monotone rescaling of the
# scores leaves it unchanged; ties get the average of their ranks.
print("perfect order:   ", spearman([1, 2, 3, 4], [10, 20, 30, 40]))
print("one swap:        ", spearman([1, 2, 3, 4], [1, 3, 2, 4]))
print("reversed:        ", spearman([1, 2, 3], [3, 2, 1]))

# Datasets load from tab-, comma- or whitespace-delimited text.
raw = b"""# word1 word2 score
sun   moon   7.0
sun   lamp   6.1
moon  cheese 1.2
sun   cheese 0.9
lamp  cheese 1.1
moon  rocket 4.0
"""
dataset = load_similarity_dataset(raw, delimiter="whitespace", name="toy-sim")
print("\nloaded", len(dataset), "pairs from", dataset.name)

# A tiny embedding that happens to know about light sources but has
# never seen "rocket": that pair is skipped and shows up as coverage.
rng = np.random.default_rng(5)
sun = np.array([1.0, 0.2, 0.0])
space = EmbeddingSpace(
    ["sun", "moon", "lamp", "cheese"],
    np.vstack([
        sun,
        sun * 0.9 + rng.normal(size=3) * 0.05,
        sun * 0.8 + rng.normal(size=3) * 0.1,
        np.array([-0.5, 1.0, 0.4]),
    ]),
)
report = evaluate(space, dataset)
print("rho:", None if report.spearman_rho is None else round(report.spearman_rho, 4),
      "| coverage:", report.coverage_pct, "%",
      f"({report.pairs_used}/{report.pairs_total} pairs)")

# evaluate_suite scores several datasets and averages the defined
# correlations; a grouping labels each dataset as similarity- or
# relatedness-flavored for the Sim/Rel rows.
relatedness = load_similarity_dataset(
    b"sun\tlamp\t5.5\nmoon\tcheese\t2.0\nsun\tmoon\t6.5\n", name="toy-rel"
)
summary = evaluate_suite(
    space, [dataset, relatedness],
    grouping={"toy-sim": "sim", "toy-rel": "rel"},
)
print("\n" + format_report_table(summary), end="")

# The machine-readable form is one JSON record per dataset.
print("\nreport records:")
print(report_records(summary), end="")
