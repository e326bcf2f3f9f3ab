from __future__ import annotations

from typing import Iterable, NamedTuple


class CorrelatorKey(NamedTuple):
    """Canonical name of one genus-zero correlator.

    ``insertions`` is the sorted multiset of basis indices and ``steps`` the
    curve degree counted in minimal degree units. Build keys with :meth:`of`
    so that reorderings of the same insertions compare equal.
    """

    insertions: tuple[int, ...]
    steps: int

    @classmethod
    def of(cls, insertions: Iterable[int], steps: int) -> "CorrelatorKey":
        if steps < 0:
            raise ValueError(f"negative degree steps: {steps}")
        return cls(tuple(sorted(insertions)), int(steps))

    @property
    def n(self) -> int:
        return len(self.insertions)

    def rank(self) -> tuple:
        """Recursion order: degree steps, then insertion count, then the key."""
        return (self.steps, len(self.insertions), self.insertions)
