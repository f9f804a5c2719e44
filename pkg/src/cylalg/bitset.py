"""Dense atom sets backed by packed uint64 words."""

from __future__ import annotations

import numpy as np

from . import _kernels as K


class AtomSet:
    """Immutable set of atom ids drawn from a fixed universe 0..size-1."""

    __slots__ = ("size", "words", "_hash")

    def __init__(self, size: int, words: np.ndarray):
        self.size = size
        w = np.asarray(words, dtype=np.uint64)
        K.mask_tail(w, size)
        w.setflags(write=False)
        self.words = w
        self._hash = None

    @classmethod
    def from_atoms(cls, size: int, ids) -> "AtomSet":
        return cls(size, K.pack_indices(ids, size))

    @classmethod
    def empty(cls, size: int) -> "AtomSet":
        return cls(size, K.empty_words(size))

    @classmethod
    def full(cls, size: int) -> "AtomSet":
        return cls(size, K.full_words(size))

    def ids(self):
        return K.unpack_indices(self.words)

    def __len__(self):
        return K.popcount(self.words)

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.size and K.testbit(self.words, i)

    def __bool__(self):
        return bool(self.words.any())

    def __or__(self, other: "AtomSet") -> "AtomSet":
        return AtomSet(self.size, self.words | other.words)

    def __and__(self, other: "AtomSet") -> "AtomSet":
        return AtomSet(self.size, self.words & other.words)

    def __sub__(self, other: "AtomSet") -> "AtomSet":
        return AtomSet(self.size, self.words & ~other.words)

    def __invert__(self) -> "AtomSet":
        return AtomSet(self.size, ~self.words)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, AtomSet)
            and self.size == other.size
            and np.array_equal(self.words, other.words)
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.size, self.words.tobytes()))
        return self._hash

    def __repr__(self):
        ids = self.ids()
        if len(ids) > 12:
            return f"AtomSet({len(ids)} of {self.size})"
        return f"AtomSet({ids} of {self.size})"
