"""Probably approximately correct implication bases.

Horn query learning against the context itself: membership ("is X closed?")
is answered exactly, equivalence is approximated by sampling uniform random
attribute sets.  Because every learned implication is ``X -> X''``, the
hypothesis is always sound; only completeness is approximate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .context import FormalContext
from .fca import Implication, ImplicationBase, LinClosure, closure


@dataclass(frozen=True)
class PacParams:
    epsilon: float
    delta: float
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if not 0 < self.delta <= 1:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class PacRun:
    base: ImplicationBase
    params: PacParams
    equivalence_checks: int = 0
    samples_drawn: int = 0
    counterexamples: int = 0
    history: list = field(default_factory=list)

    def manifest(self) -> dict:
        return {
            "epsilon": self.params.epsilon,
            "delta": self.params.delta,
            "seed": self.params.seed,
            "iterations": self.counterexamples,
            "equivalence_checks": self.equivalence_checks,
            "samples_drawn": self.samples_drawn,
            "base_size": len(self.base),
        }


def sample_count(i: int, epsilon: float, delta: float) -> int:
    """Samples for the i-th (1-based) equivalence check."""
    return math.ceil((i + math.log(1 / delta)) / epsilon)


def _draw(rng: np.random.Generator, count: int, n: int) -> list[int]:
    """``count`` uniform subsets of n attributes, attribute 0 is the first bit drawn."""
    if n == 0:
        return [0] * count
    bits = rng.integers(0, 2, size=(count, n), dtype=np.uint8)
    weights = [1 << j for j in range(n)]
    return [sum(w for w, b in zip(weights, row) if b) for row in bits.tolist()]


def _refine(k: FormalContext, hypothesis: list[Implication], C: int) -> None:
    """Fold the negative counterexample C (closed under the hypothesis, not in k)."""
    for j, imp in enumerate(hypothesis):
        A = imp.premise & C
        if A != imp.premise:
            cA = closure(k, A)
            if cA != A:
                hypothesis[j] = Implication(A, cA)
                return
    hypothesis.append(Implication(C, closure(k, C)))


def pac_run(k: FormalContext, params: PacParams, *, max_checks: Optional[int] = None) -> PacRun:
    n = len(k.attributes)
    rng = np.random.Generator(np.random.PCG64(params.seed))
    hypothesis: list[Implication] = []
    run = PacRun(ImplicationBase((), n, k.attribute_labels), params)
    i = 0
    while max_checks is None or i < max_checks:
        i += 1
        run.equivalence_checks = i
        batch = _draw(rng, sample_count(i, params.epsilon, params.delta), n)
        run.samples_drawn += len(batch)
        close_h = LinClosure(hypothesis)
        counterexample = None
        for X in batch:
            hX = close_h(X)
            if hX != closure(k, X):
                counterexample = hX
                break
        if counterexample is None:
            break
        run.counterexamples += 1
        _refine(k, hypothesis, counterexample)
        run.history.append(len(hypothesis))
    run.base = ImplicationBase(tuple(hypothesis), n, k.attribute_labels)
    return run


def pac_basis(k: FormalContext, params: PacParams) -> ImplicationBase:
    """Sound base within Horn distance epsilon of k's theory with probability >= 1 - delta."""
    return pac_run(k, params).base


def horn_distance(L: Iterable[Implication], k: FormalContext, cap: int = 20) -> Fraction:
    """Exact fraction of attribute sets X where the base closes X differently from k."""
    n = len(k.attributes)
    if n > cap:
        raise ValueError(f"exact Horn distance limited to {cap} attributes, context has {n}")
    close_l = LinClosure(L)
    wrong = sum(1 for X in range(1 << n) if close_l(X) != closure(k, X))
    return Fraction(wrong, 1 << n)


def horn_distance_sampled(L: Iterable[Implication], k: FormalContext, samples: int,
                          seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate of the Horn distance and its standard error."""
    if samples < 1:
        raise ValueError("need at least one sample")
    n = len(k.attributes)
    close_l = LinClosure(L)
    rng = np.random.Generator(np.random.PCG64(seed))
    wrong = sum(1 for X in _draw(rng, samples, n) if close_l(X) != closure(k, X))
    p = wrong / samples
    return p, math.sqrt(p * (1 - p) / samples)
