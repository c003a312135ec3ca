"""
Synthesizing vectors for missing words
======================================

When two sources are combined, each word that only one of them knows
would otherwise be lost. Instead, the word's nearest neighbors are
looked up in the space that has it (the donor), and the missing vector
is the centroid of those neighbors' vectors in the deficient space.
"""
import numpy as np

from metavec import EmbeddingSpace, cosine, extend_to_union, nearest_neighbors, synthesize_word
from metavec.oov import format_audit_dump

# Clustered toy data: five "topics", forty words each, so every word has
# meaningful neighbors.
rng = np.random.default_rng(2)
centers = rng.normal(size=(5, 12)) * 3.0
labels = np.repeat(np.arange(5), 40)
matrix = centers[labels] + rng.normal(size=(200, 12)) * 0.5
tokens = [f"topic{c}_word{i:02d}" for i, c in enumerate(labels)]
full = EmbeddingSpace(tokens, matrix)

# Hold one word out of a second copy of the space.
held = 17
word = tokens[held]
deficient = EmbeddingSpace(
    [t for t in tokens if t != word], np.delete(matrix, held, axis=0)
)

print("held-out word:", word)
print("its donor-space neighbors:")
for token, score in nearest_neighbors(full, word, k=5).neighbors:
    print(f"  {token:18s} cosine {score:.3f}")

synthesized = synthesize_word(word, full, deficient, k=10)
true_vector = matrix[held]
print("cosine(synthesized, true):", round(cosine(synthesized, true_vector), 4))

others = [cosine(true_vector, matrix[j]) for j in range(200) if j != held]
print("90th percentile of true-vs-random cosines:",
      round(float(np.percentile(others, 90)), 4))

# extend_to_union applies the same recipe in both directions at once so
# two aligned spaces end up with the same (union) vocabulary.
rng2 = np.random.default_rng(3)
e1 = EmbeddingSpace(["a", "b", "c", "d"], rng2.normal(size=(4, 6)))
e2 = EmbeddingSpace(["b", "c", "d", "e"], rng2.normal(size=(4, 6)))
ext1, ext2, report = extend_to_union(e1, e2, k=2, record_neighbors=True)
print("\nunion vocabulary:", ext1.tokens)
print("synthesized per side:", report.words_synthesized)

# The audit dump records which neighbors produced each synthetic vector,
# which is the first thing to inspect when a combined space misbehaves.
print("audit dump:")
print(format_audit_dump(report).decode(), end="")
