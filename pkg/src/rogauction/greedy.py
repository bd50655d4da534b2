"""Random-order greedy allocation for a fixed item order.

:func:`run_greedy` is the reference loop: it processes one permutation and
keeps a full trace. :func:`run_greedy_batch` runs many permutations at once
with numpy and returns only per-player values; it is what enumeration and
Monte Carlo use, and it is tested against :func:`run_greedy` permutation by
permutation.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .instances import Instance
from .valuations import AdditiveValuation, VertexCoverValuation

__all__ = [
    "TieRule",
    "LOWEST_INDEX",
    "Allocation",
    "StepTrace",
    "GreedyTrace",
    "validate_permutation",
    "random_permutation",
    "run_greedy",
    "run_greedy_batch",
    "GENERATOR_ID",
]

GENERATOR_ID = "numpy.random.PCG64"


@dataclass(frozen=True)
class TieRule:
    """How to choose among players with equal maximal marginal value.

    ``lowest-index`` prefers the earliest player in the instance.
    ``random`` picks uniformly among tied players with a generator seeded
    by ``seed``.
    """

    kind: str = "lowest-index"
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("lowest-index", "random"):
            raise InputError(f"unknown tie rule {self.kind!r}")
        if self.kind == "random" and self.seed is None:
            raise InputError("the random tie rule needs a seed")

    @classmethod
    def random(cls, seed: int) -> TieRule:
        return cls("random", seed)

    @classmethod
    def parse(cls, text: str) -> TieRule:
        """``"lowest"`` / ``"lowest-index"`` or ``"random:SEED"``."""
        if text in ("lowest", "lowest-index"):
            return cls()
        if text.startswith("random:"):
            try:
                return cls("random", int(text.split(":", 1)[1]))
            except ValueError:
                pass
        raise InputError(f"cannot parse tie rule {text!r} (use 'lowest' or 'random:SEED')")

    @property
    def deterministic(self) -> bool:
        return self.kind == "lowest-index"

    def __str__(self) -> str:
        return self.kind if self.seed is None else f"{self.kind}:{self.seed}"


LOWEST_INDEX = TieRule()


@dataclass(frozen=True)
class Allocation:
    bundles: tuple[frozenset[int], ...]
    welfare: int

    def owner(self) -> dict[int, int]:
        """Map item -> player index."""
        return {j: i for i, b in enumerate(self.bundles) for j in b}


@dataclass(frozen=True)
class StepTrace:
    t: int  # 1-based step
    item: int
    marginals: tuple[int, ...]
    tie_set: tuple[int, ...]
    winner: int
    gain: int


@dataclass(frozen=True)
class GreedyTrace:
    steps: tuple[StepTrace, ...]

    @property
    def winners(self) -> tuple[int, ...]:
        return tuple(s.winner for s in self.steps)

    @property
    def gains(self) -> tuple[int, ...]:
        return tuple(s.gain for s in self.steps)


def validate_permutation(sigma: Sequence[int], m: int) -> tuple[int, ...]:
    sigma = tuple(int(x) for x in sigma)
    if len(sigma) != m or sorted(sigma) != list(range(1, m + 1)):
        raise InputError(f"{list(sigma)} is not a permutation of 1..{m}")
    return sigma


def random_permutation(m: int, seed=None) -> tuple[int, ...]:
    """Uniform permutation of ``1..m``; ``seed`` may be an int or a Generator."""
    if m < 1:
        raise InputError("m must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return tuple(int(x) for x in rng.permutation(np.arange(1, m + 1)))


def run_greedy(
    instance: Instance,
    sigma: Sequence[int],
    rule: TieRule = LOWEST_INDEX,
    tie_rng: np.random.Generator | None = None,
) -> tuple[Allocation, GreedyTrace]:
    """Give each item, in ``sigma`` order, to a player of maximal marginal value.

    Items whose marginals are all zero are still assigned. ``tie_rng``
    overrides the generator of a random tie rule (used by Monte Carlo).
    """
    sigma = validate_permutation(sigma, instance.m)
    if rule.kind == "random" and tie_rng is None:
        tie_rng = np.random.default_rng(rule.seed)
    vals = instance.valuations
    bundles: list[set[int]] = [set() for _ in vals]
    steps = []
    welfare = 0
    for t, j in enumerate(sigma, start=1):
        margs = tuple(v.marginal(j, b) for v, b in zip(vals, bundles))
        best = max(margs)
        ties = tuple(i for i, x in enumerate(margs) if x == best)
        if rule.kind == "random" and len(ties) > 1:
            winner = ties[int(tie_rng.integers(len(ties)))]
        else:
            winner = ties[0]
        bundles[winner].add(j)
        welfare += best
        steps.append(StepTrace(t, j, margs, ties, winner, best))
    alloc = Allocation(tuple(frozenset(b) for b in bundles), welfare)
    return alloc, GreedyTrace(tuple(steps))


def _linear_marginal_tables(instance: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Initial marginals ``base[i, j]`` and decrements ``dec[i, j, k]``.

    For a vertex-cover player, winning ``j`` lowers the marginal of each
    neighbour ``k`` by one; additive marginals never change.
    """
    n, m = instance.n, instance.m
    base = np.zeros((n, m + 1), dtype=np.int64)
    dec = np.zeros((n, m + 1, m + 1), dtype=np.int64)
    for i, v in enumerate(instance.valuations):
        if isinstance(v, VertexCoverValuation):
            base[i] = v.degrees
            for a, b in v.graph.edges:
                dec[i, a, b] = dec[i, b, a] = 1
        elif isinstance(v, AdditiveValuation):
            base[i, 1:] = v.weights
        else:
            raise InputError(f"batch engine does not support {type(v).__name__}")
    return base, dec


def run_greedy_batch(instance: Instance, perms: np.ndarray) -> np.ndarray:
    """Per-player final values for each row of ``perms`` (lowest-index ties).

    ``perms`` is an integer array of shape ``(B, m)`` holding 1-based items.
    Returns an ``int64`` array of shape ``(B, n)``.
    """
    perms = np.asarray(perms, dtype=np.int64)
    if perms.ndim != 2 or perms.shape[1] != instance.m:
        raise InputError(f"perms must have shape (B, {instance.m})")
    batch = perms.shape[0]
    base, dec = _linear_marginal_tables(instance)
    n = instance.n
    # uncovered[i, b, k]: current marginal of item k for player i in run b
    uncovered = np.repeat(base[:, None, :], batch, axis=1)
    values = np.zeros((batch, n), dtype=np.int64)
    rows = np.arange(batch)
    for t in range(instance.m):
        j = perms[:, t]
        margs = uncovered[:, rows, j]
        winner = margs.argmax(axis=0)  # first maximum = lowest index
        values[rows, winner] += margs[winner, rows]
        for i in range(n):
            sel = winner == i
            if sel.any():
                uncovered[i, sel] -= dec[i, j[sel]]
    return values
