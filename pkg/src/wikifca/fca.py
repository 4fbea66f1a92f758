"""Derivation operators, closures, implications and the canonical base.

Attribute sets are ints used as bitsets over a context's attribute list;
object sets are ints over its object list.  ``intent`` is computed column
by column, so its cost is ``|M|`` big-int operations regardless of how many
objects the extent holds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .context import FormalContext, iter_bits

AttributeSet = int


def popcount(x: int) -> int:
    return x.bit_count()


def lectic_key(mask: int, n: int) -> int:
    """Sort key realising the lectic order (attribute 0 most significant)."""
    key = 0
    for i in iter_bits(mask):
        key |= 1 << (n - 1 - i)
    return key


@dataclass(frozen=True)
class Implication:
    """``premise -> conclusion``; the conclusion is stored united with the premise."""

    premise: int
    conclusion: int

    def __post_init__(self):
        object.__setattr__(self, "conclusion", self.conclusion | self.premise)

    @property
    def added(self) -> int:
        return self.conclusion & ~self.premise

    def is_trivial(self) -> bool:
        return self.added == 0


@dataclass(frozen=True)
class ImplicationBase:
    implications: tuple
    size: int  # |M|
    attributes: tuple = ()  # attribute labels, when known

    def __post_init__(self):
        object.__setattr__(self, "implications", tuple(self.implications))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if self.attributes and len(self.attributes) != self.size:
            raise ValueError("attribute labels do not match the universe size")
        full = (1 << self.size) - 1
        for imp in self.implications:
            if imp.conclusion & ~full:
                raise ValueError("implication mentions attributes outside the universe")

    def __len__(self) -> int:
        return len(self.implications)

    def __iter__(self) -> Iterator[Implication]:
        return iter(self.implications)

    def __getitem__(self, i):
        return self.implications[i]


# ---------------------------------------------------------------------------
# derivation


def extent(k: FormalContext, B: int) -> int:
    ext = k.full_objects
    cols = k.columns
    for m in iter_bits(B):
        ext &= cols[m]
        if not ext:
            break
    return ext


def intent(k: FormalContext, A: int) -> int:
    result = 0
    for m, col in enumerate(k.columns):
        if A & ~col == 0:
            result |= 1 << m
    return result


def closure(k: FormalContext, B: int) -> int:
    return intent(k, extent(k, B))


def is_closed(k: FormalContext, B: int) -> bool:
    return closure(k, B) == B


def is_valid(k: FormalContext, imp: Implication) -> bool:
    return extent(k, imp.premise) & ~extent(k, imp.conclusion) == 0


def support(k: FormalContext, imp: Implication) -> Fraction:
    """|premise'| / |G|.  Raises on a context without objects."""
    if not k.objects:
        raise ZeroDivisionError("support is undefined on a context without objects")
    return Fraction(popcount(extent(k, imp.premise)), len(k.objects))


# ---------------------------------------------------------------------------
# NextClosure


def next_closed(A: int, n: int, close: Callable[[int], int]) -> Optional[int]:
    """Lectically next ``close``-closed set after ``A``, or None after the last."""
    for i in reversed(range(n)):
        bit = 1 << i
        if A & bit:
            A &= ~bit
        else:
            B = close(A | bit)
            if (B & ~A) & (bit - 1) == 0:
                return B
    return None


def all_closed(n: int, close: Callable[[int], int]) -> Iterator[int]:
    A = close(0)
    while A is not None:
        yield A
        A = next_closed(A, n, close)


def concepts(k: FormalContext) -> list[tuple[int, int]]:
    """All formal concepts ``(extent, intent)``, intents in lectic order."""
    n = len(k.attributes)
    return [(extent(k, B), B) for B in all_closed(n, lambda X: closure(k, X))]


# ---------------------------------------------------------------------------
# implication closure


class LinClosure:
    """Counter-based closure under a growing set of implications.

    Each premise keeps a count of its attributes not yet in the closure; an
    implication fires when its count drops to zero.  Work per call is linear
    in the total size of the implications plus ``|M|``.
    """

    def __init__(self, implications: Iterable[Implication] = ()):
        self.conclusions: list[int] = []
        self.sizes: list[int] = []
        self.watch: dict[int, list[int]] = {}
        self.unconditional = 0
        for imp in implications:
            self.add(imp)

    def add(self, imp: Implication) -> None:
        j = len(self.conclusions)
        self.conclusions.append(imp.conclusion)
        self.sizes.append(popcount(imp.premise))
        if imp.premise == 0:
            self.unconditional |= imp.conclusion
        for a in iter_bits(imp.premise):
            self.watch.setdefault(a, []).append(j)

    def __call__(self, X: int) -> int:
        count = self.sizes.copy()
        closed = X | self.unconditional
        update = closed
        watch, conclusions = self.watch, self.conclusions
        while update:
            low = update & -update
            update ^= low
            for j in watch.get(low.bit_length() - 1, ()):
                count[j] -= 1
                if count[j] == 0:
                    new = conclusions[j] & ~closed
                    if new:
                        closed |= new
                        update |= new
        return closed


def lin_closure(L: Iterable[Implication], X: int) -> int:
    """Smallest superset of ``X`` respecting every implication in ``L``."""
    return LinClosure(L)(X)


def entails(L: Iterable[Implication], imp: Implication) -> bool:
    return imp.conclusion & ~lin_closure(L, imp.premise) == 0


# ---------------------------------------------------------------------------
# canonical base


def iter_canonical_base(k: FormalContext) -> Iterator[Implication]:
    """Yield the canonical base one implication at a time, in lectic order of premises.

    NextClosure over the closure operator of the base found so far: every
    set it visits is either an intent or the next pseudo-intent.
    """
    n = len(k.attributes)
    closer = LinClosure()
    A = 0
    while A is not None:
        C = closure(k, A)
        if C != A:
            imp = Implication(A, C)
            closer.add(imp)
            yield imp
        A = next_closed(A, n, closer)


def canonical_base(k: FormalContext) -> ImplicationBase:
    """Duquenne-Guigues base: pseudo-intents in lectic order, each implying its closure."""
    return ImplicationBase(tuple(iter_canonical_base(k)), len(k.attributes), k.attribute_labels)


def count_supported(k: FormalContext, L: Iterable[Implication]) -> int:
    return sum(1 for imp in L if extent(k, imp.premise))


def theory_oracle(k: FormalContext, cap: int = 12) -> list[Implication]:
    """Every ``X -> X''`` by brute force; for tests on small contexts."""
    n = len(k.attributes)
    if n > cap:
        raise ValueError(f"theory oracle limited to {cap} attributes, context has {n}")
    return [Implication(X, closure(k, X)) for X in range(1 << n)]


def base_of(k: FormalContext, implications: Sequence[Implication]) -> ImplicationBase:
    return ImplicationBase(tuple(implications), len(k.attributes), k.attribute_labels)
