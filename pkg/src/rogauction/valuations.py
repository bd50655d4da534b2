"""Value-query oracles.

Items are 1-indexed (``1..m``); bundles are plain ``frozenset``s of items.
All values are exact non-negative integers.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Protocol

from .errors import BudgetExceeded, InputError

__all__ = [
    "Graph",
    "VertexCoverValuation",
    "AdditiveValuation",
    "ValuationOracle",
    "SubmodularityCheck",
    "check_monotone_submodular",
    "value",
    "marginal",
]


class ValuationOracle(Protocol):
    m: int

    def value(self, bundle: Iterable[int]) -> int: ...


def _check_items(items: Iterable[int], m: int) -> frozenset[int]:
    s = frozenset(items)
    for j in s:
        if not 1 <= j <= m:
            raise InputError(f"item {j} out of range [1, {m}]")
    return s


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``1..m``.

    Edges are stored as sorted pairs. Self-loops, out-of-range endpoints and
    duplicates (in either orientation) raise :class:`InputError`.
    """

    m: int
    edges: tuple[tuple[int, int], ...]

    def __init__(self, m: int, edges: Iterable[Sequence[int]] = ()):
        if m < 1:
            raise InputError(f"item count must be >= 1, got {m}")
        seen: set[tuple[int, int]] = set()
        norm = []
        for e in edges:
            if len(e) != 2:
                raise InputError(f"edge {list(e)} must have exactly two endpoints")
            a, b = int(e[0]), int(e[1])
            if a == b:
                raise InputError(f"self-loop [{a}, {b}]")
            for x in (a, b):
                if not 1 <= x <= m:
                    raise InputError(f"edge [{a}, {b}] has endpoint {x} out of range [1, {m}]")
            pair = (min(a, b), max(a, b))
            if pair in seen:
                raise InputError(f"duplicate edge [{a}, {b}]")
            seen.add(pair)
            norm.append(pair)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    def neighbours(self) -> list[frozenset[int]]:
        """Neighbour sets indexed by item; index 0 is unused."""
        adj: list[set[int]] = [set() for _ in range(self.m + 1)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return [frozenset(s) for s in adj]


@dataclass(frozen=True)
class VertexCoverValuation:
    """``v(S)`` = number of edges of ``graph`` with at least one endpoint in ``S``."""

    graph: Graph
    adjacency: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)
    degrees: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adj = tuple(self.graph.neighbours())
        object.__setattr__(self, "adjacency", adj)
        object.__setattr__(self, "degrees", tuple(len(s) for s in adj))

    @classmethod
    def from_edges(cls, m: int, edges: Iterable[Sequence[int]]) -> VertexCoverValuation:
        return cls(Graph(m, edges))

    @property
    def m(self) -> int:
        return self.graph.m

    def value(self, bundle: Iterable[int]) -> int:
        s = _check_items(bundle, self.m)
        return sum(1 for a, b in self.graph.edges if a in s or b in s)

    def marginal(self, j: int, bundle: Iterable[int]) -> int:
        s = _check_items(bundle, self.m)
        if not 1 <= j <= self.m:
            raise InputError(f"item {j} out of range [1, {self.m}]")
        if j in s:
            raise InputError(f"item {j} is already in the bundle")
        return self.degrees[j] - len(s & self.adjacency[j])

    def singleton(self, j: int) -> int:
        """``v({j})``, i.e. the degree of ``j``."""
        return self.degrees[j]

    def total(self) -> int:
        return len(self.graph.edges)


@dataclass(frozen=True)
class AdditiveValuation:
    """``v(S) = sum of weights[j-1] for j in S``; a modular baseline."""

    weights: tuple[int, ...]

    def __init__(self, weights: Iterable[int]):
        w = tuple(int(x) for x in weights)
        if not w:
            raise InputError("additive valuation needs at least one item")
        if any(x < 0 for x in w):
            raise InputError("additive weights must be non-negative")
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return len(self.weights)

    def value(self, bundle: Iterable[int]) -> int:
        s = _check_items(bundle, self.m)
        return sum(self.weights[j - 1] for j in s)

    def marginal(self, j: int, bundle: Iterable[int]) -> int:
        s = _check_items(bundle, self.m)
        if not 1 <= j <= self.m:
            raise InputError(f"item {j} out of range [1, {self.m}]")
        if j in s:
            raise InputError(f"item {j} is already in the bundle")
        return self.weights[j - 1]

    def singleton(self, j: int) -> int:
        return self.weights[j - 1]

    def total(self) -> int:
        return sum(self.weights)


def value(v: ValuationOracle, bundle: Iterable[int]) -> int:
    return v.value(bundle)


def marginal(v: ValuationOracle, j: int, bundle: Iterable[int]) -> int:
    """``v(S + j) - v(S)``; raises if ``j`` is already in ``S``."""
    if hasattr(v, "marginal"):
        return v.marginal(j, bundle)
    s = frozenset(bundle)
    if j in s:
        raise InputError(f"item {j} is already in the bundle")
    return v.value(s | {j}) - v.value(s)


@dataclass(frozen=True)
class SubmodularityCheck:
    holds: bool
    kind: str | None = None  # "normalization", "submodularity" or "monotonicity"
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.holds


def _mask_to_set(mask: int, items: Sequence[int]) -> frozenset[int]:
    return frozenset(x for k, x in enumerate(items) if mask >> k & 1)


def check_monotone_submodular(
    v: ValuationOracle, m: int | None = None, budget: int = 3**10
) -> SubmodularityCheck:
    """Exhaustively check normalization, submodularity and monotonicity.

    Only value queries are used, so any object with ``m`` and ``value`` works.
    Submodularity is checked for every item ``j`` and every pair ``S ⊆ T``
    with ``j ∉ T``; the first violation found (``j`` ascending, then ``T``
    and ``S`` by bitmask) is returned as ``(S, T, j)``. Monotonicity
    witnesses are ``(S, T)`` with ``v(S) > v(T)``.
    """
    m = v.m if m is None else m
    if 3**m > budget:
        raise BudgetExceeded("submodularity check", 3**m, budget)
    cache: dict[frozenset[int], int] = {}

    def val(s: frozenset[int]) -> int:
        if s not in cache:
            cache[s] = v.value(s)
        return cache[s]

    if val(frozenset()) != 0:
        return SubmodularityCheck(False, "normalization", (frozenset(),))

    for j in range(1, m + 1):
        rest = [x for x in range(1, m + 1) if x != j]
        for tmask in range(1 << len(rest)):
            t = _mask_to_set(tmask, rest)
            gain_t = val(t | {j}) - val(t)
            # enumerate submasks of tmask in increasing order
            smask = 0
            while True:
                s = _mask_to_set(smask, rest)
                if val(s | {j}) - val(s) < gain_t:
                    return SubmodularityCheck(False, "submodularity", (s, t, j))
                if smask == tmask:
                    break
                smask = (smask - tmask) & tmask

    items = list(range(1, m + 1))
    for tmask in range(1 << m):
        t = _mask_to_set(tmask, items)
        smask = 0
        while True:
            s = _mask_to_set(smask, items)
            if val(s) > val(t):
                return SubmodularityCheck(False, "monotonicity", (s, t))
            if smask == tmask:
                break
            smask = (smask - tmask) & tmask
    return SubmodularityCheck(True)
