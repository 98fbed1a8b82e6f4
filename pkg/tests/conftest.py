import itertools

import numpy as np
import pytest

from quadlab import rng as qrng, trees


@pytest.fixture
def rng():
    return qrng.stream(20260809)


def all_forests(k, n):
    def comps(n, k):
        if k == 1:
            yield (n,)
            return
        for first in range(n + 1):
            for rest in comps(n - first, k - 1):
                yield (first,) + rest

    for comp in comps(n, k):
        pools = [trees.enumerate_labeled_trees(m) for m in comp]
        for combo in itertools.product(*pools):
            yield list(combo)


def sample_small_boltzmann(rng, max_faces=2000):
    """A size-capped Boltzmann map via the tree route, or None if oversize."""
    from quadlab import schaeffer

    try:
        return schaeffer.boltzmann_quad_via_trees(rng, max_edges=max_faces)
    except trees.SizeTooLarge:
        return None
