"""Rank-sum comparison of paired scenario outputs.

Mann-Whitney U with midranks for ties. Small samples get the exact
permutation distribution; larger ones use the tie-corrected normal
approximation with continuity correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from statistics import median
from typing import Sequence

# Largest group size handled by exhaustive permutation enumeration.
EXACT_LIMIT = 8

_ALTERNATIVES = ("greater", "less", "two-sided")


@dataclass(frozen=True)
class MannWhitneyResult:
    n1: int
    n2: int
    rank_sum: float
    u_stat: float
    p_value: float
    median_a: float
    median_b: float
    alternative: str
    method: str


def _midranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with tied values sharing their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _tie_term(values: Sequence[float]) -> float:
    """Sum of t^3 - t over tie groups of the pooled sample."""
    total = 0.0
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    for t in counts.values():
        if t > 1:
            total += t * t * t - t
    return total


def _exact_p_greater(ranks: Sequence[float], n1: int, observed_w: float) -> float:
    """P(rank sum of a random n1-subset >= observed) over all subsets."""
    n = len(ranks)
    hits = 0
    total = 0
    for subset in combinations(range(n), n1):
        total += 1
        w = sum(ranks[i] for i in subset)
        if w >= observed_w:
            hits += 1
    return hits / total


def _normal_p_greater(u_stat: float, n1: int, n2: int, tie_term: float) -> float:
    """One-sided upper tail with tie correction and continuity correction."""
    n = n1 + n2
    mean_u = n1 * n2 / 2.0
    var_u = (n1 * n2 / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if var_u <= 0.0:
        # Every pooled value tied: no evidence against the null.
        return 1.0
    z = (u_stat - mean_u - 0.5) / math.sqrt(var_u)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def mann_whitney(
    a: Sequence[float],
    b: Sequence[float],
    alternative: str = "greater",
    method: str = "auto",
) -> MannWhitneyResult:
    """Compare two independent samples by ranks.

    ``alternative="greater"`` tests whether values in ``a`` tend to exceed
    those in ``b``. ``method`` is "auto" (exact when both groups are small),
    "exact", or "normal".
    """
    if alternative not in _ALTERNATIVES:
        raise ValueError(f"unknown alternative {alternative!r}")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")

    if alternative == "two-sided":
        greater = mann_whitney(a, b, "greater", method)
        less = mann_whitney(a, b, "less", method)
        p = min(1.0, 2.0 * min(greater.p_value, less.p_value))
        return MannWhitneyResult(
            n1, n2, greater.rank_sum, greater.u_stat, p,
            greater.median_a, greater.median_b, "two-sided", greater.method,
        )
    if alternative == "less":
        flipped = mann_whitney(b, a, "greater", method)
        # Report the statistic of sample a, the p-value of the flipped test.
        pooled = list(a) + list(b)
        ranks = _midranks(pooled)
        rank_sum = sum(ranks[:n1])
        u_stat = rank_sum - n1 * (n1 + 1) / 2.0
        return MannWhitneyResult(
            n1, n2, rank_sum, u_stat, flipped.p_value,
            median(a), median(b), "less", flipped.method,
        )

    pooled = list(a) + list(b)
    ranks = _midranks(pooled)
    rank_sum = sum(ranks[:n1])
    u_stat = rank_sum - n1 * (n1 + 1) / 2.0

    use_exact = method == "exact" or (method == "auto" and max(n1, n2) <= EXACT_LIMIT)
    if use_exact:
        p = _exact_p_greater(ranks, n1, rank_sum)
        chosen = "exact"
    else:
        p = _normal_p_greater(u_stat, n1, n2, _tie_term(pooled))
        chosen = "normal"
    return MannWhitneyResult(
        n1, n2, rank_sum, u_stat, p, median(a), median(b), "greater", chosen,
    )
