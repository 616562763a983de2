"""Index-selection schemes that drive the order components are visited in.

Each scheme materializes its indices one pass at a time from a generator
seeded by (seed, pass number), so any position in the stream can be
reconstructed from the scheme and a draw count alone.  That is what makes
checkpointed runs resume bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNIFORM = "uniform"
PERMUTED = "permuted"
CYCLIC = "cyclic"

_KINDS = (UNIFORM, PERMUTED, CYCLIC)

# config-facing names, including the frozen-permutation alias
SAMPLING_NAMES = (UNIFORM, PERMUTED, "permuted-frozen", CYCLIC)


@dataclass(frozen=True)
class SamplingScheme:
    """How the next component index is chosen.

    kind:    "uniform" (i.i.d. with replacement), "permuted" (a fresh
             permutation each pass), or "cyclic" (k mod n, no randomness).
    seed:    nonnegative generator seed; ignored by cyclic.
    refresh: permuted only.  False freezes the first permutation and replays
             it every pass, reproducing the pre-permuted variant.
    """

    kind: str
    seed: int = 0
    refresh: bool = True

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown sampling kind {self.kind!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")

    @staticmethod
    def from_name(name: str, seed: int = 0) -> "SamplingScheme":
        """Build from a config tag, accepting the "permuted-frozen" alias."""
        if name == "permuted-frozen":
            return SamplingScheme(PERMUTED, seed, refresh=False)
        return SamplingScheme(name, seed)

    @property
    def tag(self) -> str:
        if self.kind == PERMUTED and not self.refresh:
            return "permuted-frozen"
        return self.kind


class IndexSampler:
    """Stateful index stream for one run over a problem with n components."""

    def __init__(self, scheme: SamplingScheme, n: int):
        if n < 1:
            raise ValueError(f"sampler needs n >= 1, got {n}")
        self.scheme = scheme
        self.n = int(n)
        self.draws = 0
        self._pass = 0
        self._pos = 0
        self._block = self._make_block(0)

    def _make_block(self, pass_index: int) -> np.ndarray:
        kind = self.scheme.kind
        if kind == CYCLIC:
            return np.arange(self.n)
        if kind == PERMUTED and not self.scheme.refresh:
            pass_index = 0
        rng = np.random.default_rng([self.scheme.seed, pass_index])
        if kind == UNIFORM:
            return rng.integers(0, self.n, size=self.n)
        return rng.permutation(self.n)

    def next_index(self) -> int:
        if self._pos == self.n:
            self._pass += 1
            self._pos = 0
            self._block = self._make_block(self._pass)
        j = int(self._block[self._pos])
        self._pos += 1
        self.draws += 1
        return j

    @property
    def passes_completed(self) -> int:
        return self.draws // self.n

    def skip_to(self, draws: int) -> "IndexSampler":
        """Jump the stream to an absolute draw count (used on resume)."""
        if draws < 0:
            raise ValueError(f"draw count must be >= 0, got {draws}")
        self.draws = draws
        self._pass = draws // self.n
        self._pos = draws % self.n
        self._block = self._make_block(self._pass)
        return self
