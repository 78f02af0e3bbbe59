"""Compositions and admissible indices.

A composition of weight n and depth r is an ordered tuple of r positive
integers summing to n.  The set of all such tuples is written I(r, n) in the
rest of the package; the admissible subset, whose first part is at least 2,
is written I_0(r, n).  Both enumerations are returned in lexicographic order
so that downstream output is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator


@dataclass(frozen=True)
class Composition:
    """An ordered tuple of positive integers."""

    parts: tuple[int, ...]

    def __post_init__(self) -> None:
        parts = tuple(self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise ValueError("composition must have at least one part")
        for p in parts:
            if not isinstance(p, int) or p < 1:
                raise ValueError(f"composition parts must be integers >= 1, got {p!r}")

    @property
    def depth(self) -> int:
        return len(self.parts)

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __getitem__(self, i):
        return self.parts[i]

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class AdmissibleIndex(Composition):
    """A composition whose first part is at least 2."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if self.parts[0] < 2:
            raise ValueError(f"admissible index must start with a part >= 2, got {self.parts}")


def _tuples(r: int, n: int, first_min: int) -> Iterator[tuple[int, ...]]:
    if r == 1:
        if n >= first_min:
            yield (n,)
        return
    for head in range(first_min, n - r + 2):
        for rest in _tuples(r - 1, n - head, 1):
            yield (head, *rest)


def enumerate_compositions(r: int, n: int) -> list[Composition]:
    """All compositions of n into exactly r positive parts, lexicographically.

    Returns the empty list when n < r; there are C(n-1, r-1) results
    otherwise.
    """
    if r < 1:
        raise ValueError(f"depth must be >= 1, got {r}")
    return [Composition(t) for t in _tuples(r, n, 1)]


def enumerate_admissible(r: int, n: int) -> list[AdmissibleIndex]:
    """The compositions of n into r parts whose first part is >= 2.

    Returns the empty list when n <= r; there are C(n-2, r-1) results
    otherwise.
    """
    if r < 1:
        raise ValueError(f"depth must be >= 1, got {r}")
    return [AdmissibleIndex(t) for t in _tuples(r, n, 2)]
