"""Seedable, splittable randomness shared by the samplers and generators."""

from __future__ import annotations

import numpy as np


class RandomSource:
    """A named PCG64 stream with deterministic splitting.

    Identical seeds produce identical sample sequences. ``split`` derives
    independent child streams (seed plus child index through a seed
    sequence), so per-trial or per-replicate streams do not depend on
    scheduling order.
    """

    def __init__(self, seed: int | None = None, _ss: np.random.SeedSequence | None = None):
        self._ss = _ss if _ss is not None else np.random.SeedSequence(seed)
        self.seed = seed
        self.generator = np.random.Generator(np.random.PCG64(self._ss))

    def split(self, n: int) -> list["RandomSource"]:
        """Derive ``n`` independent child streams."""
        return [RandomSource(_ss=child) for child in self._ss.spawn(n)]

    def uniforms(self, size: int) -> np.ndarray:
        return self.generator.random(size)

    def __repr__(self) -> str:  # pragma: no cover
        return f"RandomSource(seed={self.seed})"


def as_random_source(seed) -> RandomSource:
    """Coerce None / int / RandomSource / numpy Generator into a RandomSource."""
    if isinstance(seed, RandomSource):
        return seed
    if isinstance(seed, np.random.Generator):
        src = RandomSource()
        src.generator = seed
        return src
    return RandomSource(seed)
