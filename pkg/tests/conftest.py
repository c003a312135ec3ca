import numpy as np
import pytest

from metavec.embeddings import EmbeddingSpace


@pytest.fixture
def make_space():
    """Factory for random embedding spaces with a reproducible vocabulary."""

    def factory(n=20, dim=5, seed=0, prefix="w", scale=1.0, meta=None):
        rng = np.random.default_rng(seed)
        tokens = [f"{prefix}{i:03d}" for i in range(n)]
        matrix = rng.normal(size=(n, dim)) * scale
        return EmbeddingSpace(tokens, matrix, meta=meta)

    return factory
