"""Exact optimal welfare by exhaustive search over all n^m assignments."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .errors import BudgetExceeded, InputError
from .greedy import Allocation
from .instances import Instance

__all__ = ["OptResult", "brute_force_opt", "welfare_of", "certified_opt", "DEFAULT_OPT_BUDGET"]

DEFAULT_OPT_BUDGET = 10**7


@dataclass(frozen=True)
class OptResult:
    allocation: Allocation
    welfare: int
    assignments_searched: int
    analytic: bool = False  # True when certified by the sum-of-values upper bound

    @property
    def bundles(self) -> tuple[frozenset[int], ...]:
        return self.allocation.bundles

    def owner(self) -> dict[int, int]:
        return self.allocation.owner()


def _bundles(allocation) -> tuple[frozenset[int], ...]:
    if isinstance(allocation, Allocation):
        return allocation.bundles
    return tuple(frozenset(b) for b in allocation)


def welfare_of(instance: Instance, allocation) -> int:
    """Sum of player values; ``allocation`` is an Allocation or per-player bundles."""
    bundles = _bundles(allocation)
    if len(bundles) != instance.n:
        raise InputError(f"expected {instance.n} bundles, got {len(bundles)}")
    seen: set[int] = set()
    for b in bundles:
        if seen & b:
            raise InputError(f"bundles overlap on item(s) {sorted(seen & b)}")
        seen |= b
    return sum(v.value(b) for v, b in zip(instance.valuations, bundles))


def brute_force_opt(instance: Instance, budget: int = DEFAULT_OPT_BUDGET) -> OptResult:
    """Welfare-maximizing full assignment.

    Depth-first over items ``1..m`` trying players in index order, so the
    first optimum found is the lexicographically smallest assignment vector;
    later leaves only replace it on strictly larger welfare. Branches whose
    optimistic bound (current welfare plus the best single-item values of the
    remaining items) cannot beat the incumbent are cut.
    """
    n, m = instance.n, instance.m
    if n**m > budget:
        raise BudgetExceeded("brute-force OPT", n**m, budget)
    vals = instance.valuations
    best_single = [max(v.singleton(j) for v in vals) for j in range(1, m + 1)]
    suffix = [0] * (m + 1)
    for k in range(m - 1, -1, -1):
        suffix[k] = suffix[k + 1] + best_single[k]

    bundles: list[set[int]] = [set() for _ in range(n)]
    assign = [0] * m
    best_welfare = -1
    best_assign: list[int] = []
    leaves = 0

    def dfs(k: int, current: int) -> None:
        nonlocal best_welfare, best_assign, leaves
        if k == m:
            leaves += 1
            if current > best_welfare:
                best_welfare, best_assign = current, assign.copy()
            return
        if current + suffix[k] <= best_welfare:
            return
        j = k + 1
        for i in range(n):
            gain = vals[i].marginal(j, bundles[i])
            bundles[i].add(j)
            assign[k] = i
            dfs(k + 1, current + gain)
            bundles[i].discard(j)

    dfs(0, 0)
    result = tuple(frozenset(j + 1 for j in range(m) if best_assign[j] == i) for i in range(n))
    return OptResult(Allocation(result, best_welfare), best_welfare, leaves)


def certified_opt(instance: Instance, bundles: Sequence) -> OptResult:
    """Accept ``bundles`` as optimal when its welfare reaches ``sum_i v_i(M)``.

    No allocation can exceed that sum, so matching it proves optimality
    without search. Raises :class:`InputError` when the bound is not met.
    """
    bundles = _bundles(bundles)
    covered = set().union(*bundles)
    if covered != set(instance.items):
        raise InputError("a certified optimum must assign every item")
    w = welfare_of(instance, bundles)
    bound = sum(v.total() for v in instance.valuations)
    if w != bound:
        raise InputError(f"allocation welfare {w} does not reach the upper bound {bound}")
    return OptResult(Allocation(bundles, w), w, 0, analytic=True)
