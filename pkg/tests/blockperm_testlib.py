"""Shared helpers for the blockperm test suite.

Kept out of conftest.py so test modules can import them by a module name
that stays unique when this suite is collected together with other suites
from the repository root.
"""

import numpy as np

from blockperm.errors import ValidationError


class ScriptedStream:
    """Stream double whose bounded draws are scripted, for pinning the
    worked permutation-matrix examples."""

    def __init__(self, draws):
        self.draws = list(draws)

    def randbelow(self, n):
        if not self.draws:
            raise AssertionError("scripted stream exhausted")
        value = self.draws.pop(0)
        if not 0 <= value < n:
            raise ValidationError(f"scripted draw {value} out of [0, {n})")
        return value


def random_image(rng, h, w, c=3):
    return rng.integers(0, 256, size=(h, w, c), dtype=np.uint8)
