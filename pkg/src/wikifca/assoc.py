"""Frequent closed itemsets and the Luxenburger base of association rules."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .context import FormalContext
from .fca import Implication, closure, extent, intent, lectic_key, lin_closure, popcount


class UndefinedConfidence(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class AssociationRule:
    premise: int
    conclusion: int
    support: Fraction
    confidence: Fraction


@dataclass(frozen=True)
class IcebergLattice:
    nodes: dict  # closed attribute set -> support
    covers: tuple  # (lower, upper) pairs
    size: int  # |M|

    def __contains__(self, B: int) -> bool:
        return B in self.nodes

    def upper_covers(self, B: int) -> list[int]:
        return [hi for lo, hi in self.covers if lo == B]


def _rational(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def _itemset_support(k: FormalContext, Z: int) -> Fraction:
    return Fraction(popcount(extent(k, Z)), len(k.objects))


def frequent_closed(k: FormalContext, minsupp) -> IcebergLattice:
    """Closed sets with support >= minsupp, plus their covering pairs.

    Close-by-One with support pruning: a child ``(B + i)''`` is kept only when
    it adds no attribute below ``i`` (so each closed set is generated once) and
    is frequent (support only drops further down the tree).
    """
    n = len(k.attributes)
    if not k.objects:
        return IcebergLattice({}, (), n)
    minsupp = _rational(minsupp)
    G = len(k.objects)
    need = minsupp * G  # minimum extent size, possibly fractional

    nodes: dict[int, Fraction] = {}
    top = closure(k, 0)
    top_count = popcount(extent(k, top))
    if top_count < need:
        return IcebergLattice({}, (), n)
    stack = [(top, extent(k, top), 0)]
    while stack:
        B, ext, start = stack.pop()
        nodes[B] = Fraction(popcount(ext), G)
        cols = k.columns
        for i in range(start, n):
            bit = 1 << i
            if B & bit:
                continue
            child_ext = ext & cols[i]
            if popcount(child_ext) < need:
                continue
            C = intent(k, child_ext)
            if (C & ~B) & (bit - 1):
                continue
            stack.append((C, child_ext, i + 1))

    ordered = sorted(nodes, key=lambda B: lectic_key(B, n))
    nodes = {B: nodes[B] for B in ordered}
    covers = []
    for B in ordered:
        candidates = set()
        for i in range(n):
            if not B >> i & 1:
                C = closure(k, B | 1 << i)
                if C in nodes:
                    candidates.add(C)
        for C in sorted(candidates, key=lambda X: lectic_key(X, n)):
            if not any(D != C and D & C == D for D in candidates):
                covers.append((B, C))
    return IcebergLattice(nodes, tuple(covers), n)


def confidence(k: FormalContext, premise: int, conclusion: int) -> Fraction:
    """supp(premise + conclusion) / supp(premise)."""
    base = popcount(extent(k, premise))
    if base == 0:
        raise UndefinedConfidence("premise has support zero")
    return Fraction(popcount(extent(k, premise | conclusion)), base)


def _rule_order(n: int):
    def key(r: AssociationRule):
        return (-r.support, -r.confidence, lectic_key(r.premise, n), lectic_key(r.conclusion, n))
    return key


def luxenburger_base(k: FormalContext, minsupp, minconf,
                     lattice: Optional[IcebergLattice] = None) -> list[AssociationRule]:
    """Rules ``B1 -> B2 \\ B1`` along covers of the iceberg lattice with enough confidence."""
    minconf = _rational(minconf)
    lattice = lattice or frequent_closed(k, minsupp)
    rules = []
    for lo, hi in lattice.covers:
        s_lo, s_hi = lattice.nodes[lo], lattice.nodes[hi]
        if s_lo == 0:
            continue
        conf = s_hi / s_lo
        if conf >= minconf:
            rules.append(AssociationRule(lo, hi & ~lo, s_hi, conf))
    rules.sort(key=_rule_order(lattice.size))
    return rules


def all_association_rules_oracle(k: FormalContext, minsupp, minconf,
                                 cap: int = 12) -> list[AssociationRule]:
    """Every rule X -> Y (Y nonempty, disjoint from X) meeting both thresholds."""
    n = len(k.attributes)
    if n > cap:
        raise ValueError(f"rule oracle limited to {cap} attributes, context has {n}")
    if not k.objects:
        return []
    minsupp, minconf = _rational(minsupp), _rational(minconf)
    full = (1 << n) - 1
    supp = [_itemset_support(k, Z) for Z in range(1 << n)]
    rules = []
    for X in range(1 << n):
        if supp[X] == 0:
            continue
        rest = full & ~X
        Y = rest
        while Y:
            s = supp[X | Y]
            if s >= minsupp:
                conf = s / supp[X]
                if conf >= minconf:
                    rules.append(AssociationRule(X, Y, s, conf))
            Y = (Y - 1) & rest
    rules.sort(key=_rule_order(n))
    return rules


def derive_rule(base: Iterable[Implication], lattice: IcebergLattice,
                rules: Sequence[AssociationRule], premise: int,
                conclusion: int) -> Optional[tuple[Fraction, Fraction]]:
    """Recover (support, confidence) of ``premise -> conclusion`` from mined structure.

    Both sides are closed with the canonical base; support is the iceberg
    support of the closed union, confidence the product of rule confidences
    along a chain of Luxenburger rules between the two closed sets.  Returns
    None when the structure cannot vouch for the rule (e.g. it is infrequent
    or needs an edge below the confidence threshold).
    """
    base = list(base)
    lo = lin_closure(base, premise)
    hi = lin_closure(base, premise | conclusion)
    if hi not in lattice.nodes or lo not in lattice.nodes:
        return None
    edges: dict[int, list[tuple[int, Fraction]]] = {}
    for r in rules:
        edges.setdefault(r.premise, []).append((r.premise | r.conclusion, r.confidence))
    best = {lo: Fraction(1)}
    queue = deque([lo])
    while queue:
        B = queue.popleft()
        if B == hi:
            return lattice.nodes[hi], best[B]
        for C, conf in edges.get(B, ()):
            if C & hi == C and C not in best:
                best[C] = best[B] * conf
                queue.append(C)
    return None


def rule_names(k: FormalContext, r: AssociationRule) -> tuple[list, list]:
    return k.names(r.premise), k.names(r.conclusion)

