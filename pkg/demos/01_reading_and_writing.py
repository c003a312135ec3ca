"""
Reading and writing embedding files
===================================

The toolkit speaks the two common interchange formats for pre-trained
word vectors: whitespace-separated text (with or without the
``vocab dim`` header line) and the packed binary layout (ASCII header,
then token + float32 vector records).
"""
import numpy as np

from metavec import (
    EmbeddingSpace,
    ParseError,
    parse_binary_embeddings,
    parse_text_embeddings,
    write_binary_embeddings,
    write_text_embeddings,
)

# An embedding space is just an ordered vocabulary and a float64 matrix,
# one row per token.
rng = np.random.default_rng(0)
tokens = ["cat", "dog", "fish", "owl"]
space = EmbeddingSpace(tokens, rng.normal(size=(4, 3)))
print("tokens:", space.tokens)
print("dim:   ", space.dim)
print("vector('cat'):", np.round(space.vector("cat"), 3))

# Text output always carries the header. Precision 17 is the default and
# round-trips float64 exactly; smaller values give smaller files.
payload = write_text_embeddings(space, precision=4)
print("\ntext at precision 4:")
print(payload.decode(), end="")

exact = write_text_embeddings(space)
back = parse_text_embeddings(exact)
print("exact text round-trip:", np.array_equal(back.matrix, space.matrix))

# Headerless files are recognized too: the first line's field count sets
# the dimensionality.
headerless = b"north 1.0 0.0\nsouth -1.0 0.0\n"
compass = parse_text_embeddings(headerless)
print("headerless parse:", compass.tokens, "dim", compass.dim)

# The binary format stores float32, so a round-trip quantizes values to
# single precision: identical to an explicit float32 cast.
blob = write_binary_embeddings(space)
binary_back = parse_binary_embeddings(blob)
quantized = space.matrix.astype(np.float32).astype(np.float64)
print("binary round-trip == float32 cast:",
      np.array_equal(binary_back.matrix, quantized))

# Malformed input raises ParseError with the offending line or byte, so
# a broken multi-gigabyte download fails loudly instead of half-loading.
for bad in (b"cat 1.0\ndog 2.0 3.0\n", blob[:-2]):
    try:
        parse_text_embeddings(bad) if bad[:1].isalpha() else parse_binary_embeddings(bad)
    except ParseError as exc:
        print("rejected:", exc)
