"""Auction instances: the lower-bound family, random generators and JSON I/O.

File format (UTF-8 JSON, items 1-indexed)::

    {"m": 7,
     "players": [{"name": "p1", "kind": "vertex_cover", "edges": [[1, 7], ...]},
                 {"name": "p4", "kind": "additive", "weights": [1, 0, ...]}]}

Player order is the tie-break preference order of the lowest-index rule.
Unknown fields are rejected.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from itertools import combinations
from os import PathLike
from typing import Union

import numpy as np

from .errors import InputError
from .valuations import AdditiveValuation, Graph, VertexCoverValuation

Valuation = Union[VertexCoverValuation, AdditiveValuation]

__all__ = [
    "Player",
    "Instance",
    "paper_lower_bound_instance",
    "paper_opt_bundles",
    "random_instance",
    "instance_to_dict",
    "instance_from_dict",
    "dumps_instance",
    "save_instance",
    "load_instance",
    "instance_hash",
]


@dataclass(frozen=True)
class Player:
    name: str
    valuation: Valuation


@dataclass(frozen=True)
class Instance:
    """``n`` players with valuations over the shared items ``1..m``.

    Players are indexed from 0 in code; player ``i`` is preferred over
    player ``i + 1`` by the lowest-index tie rule.
    """

    m: int
    players: tuple[Player, ...]

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        if self.m < 1:
            raise InputError("an instance needs at least one item")
        if not self.players:
            raise InputError("an instance needs at least one player")
        for p in self.players:
            if p.valuation.m != self.m:
                raise InputError(
                    f"player {p.name!r} has m={p.valuation.m}, instance has m={self.m}"
                )

    @classmethod
    def from_valuations(cls, valuations, names=None) -> Instance:
        valuations = list(valuations)
        names = names or [f"p{i + 1}" for i in range(len(valuations))]
        if not valuations:
            raise InputError("an instance needs at least one player")
        return cls(valuations[0].m, tuple(Player(nm, v) for nm, v in zip(names, valuations)))

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def valuations(self) -> tuple[Valuation, ...]:
        return tuple(p.valuation for p in self.players)

    @property
    def items(self) -> range:
        return range(1, self.m + 1)

    def is_vertex_cover(self) -> bool:
        return all(isinstance(v, VertexCoverValuation) for v in self.valuations)


def paper_lower_bound_instance(m: int) -> Instance:
    """Three players on odd ``m >= 5`` items: a star centred at ``m`` and two
    interleaved perfect-ish matchings over ``1..m-1``."""
    if m < 5 or m % 2 == 0:
        raise InputError(f"the lower-bound family needs odd m >= 5, got {m}")
    star = [(j, m) for j in range(1, m)]
    odd_pairs = [(j, j + 1) for j in range(1, m - 1, 2)]
    even_pairs = [(j, j + 1) for j in range(2, m - 2, 2)]
    return Instance.from_valuations(
        [VertexCoverValuation.from_edges(m, e) for e in (star, odd_pairs, even_pairs)]
    )


def paper_opt_bundles(m: int) -> tuple[frozenset[int], ...]:
    """The allocation ``({m}, odd items < m, even items < m)``, which covers
    every edge of :func:`paper_lower_bound_instance` and is therefore optimal."""
    if m < 5 or m % 2 == 0:
        raise InputError(f"the lower-bound family needs odd m >= 5, got {m}")
    return (
        frozenset({m}),
        frozenset(range(1, m, 2)),
        frozenset(range(2, m, 2)),
    )


def random_instance(n: int, m: int, edge_prob: float, seed=None) -> Instance:
    """``n`` independent Erdős–Rényi ``G(m, edge_prob)`` vertex-cover players."""
    if not 0.0 <= edge_prob <= 1.0:
        raise InputError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    if n < 1 or m < 1:
        raise InputError("need n >= 1 and m >= 1")
    rng = np.random.default_rng(seed)
    pairs = list(combinations(range(1, m + 1), 2))
    vals = []
    for _ in range(n):
        keep = rng.random(len(pairs)) < edge_prob
        vals.append(VertexCoverValuation.from_edges(m, [p for p, k in zip(pairs, keep) if k]))
    return Instance.from_valuations(vals)


# -- serialization -----------------------------------------------------------

_TOP_KEYS = {"m", "players"}
_PLAYER_KEYS = {
    "vertex_cover": {"name", "kind", "edges"},
    "additive": {"name", "kind", "weights"},
}


def instance_to_dict(instance: Instance) -> dict:
    players = []
    for p in instance.players:
        v = p.valuation
        if isinstance(v, VertexCoverValuation):
            players.append(
                {"name": p.name, "kind": "vertex_cover", "edges": [list(e) for e in v.graph.edges]}
            )
        else:
            players.append({"name": p.name, "kind": "additive", "weights": list(v.weights)})
    return {"m": instance.m, "players": players}


def instance_from_dict(data: dict) -> Instance:
    if not isinstance(data, dict):
        raise InputError("instance must be a JSON object")
    extra = set(data) - _TOP_KEYS
    if extra:
        raise InputError(f"unknown instance field(s): {sorted(extra)}")
    missing = _TOP_KEYS - set(data)
    if missing:
        raise InputError(f"missing instance field(s): {sorted(missing)}")
    m = data["m"]
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise InputError(f"'m' must be a positive integer, got {m!r}")
    if not isinstance(data["players"], list) or not data["players"]:
        raise InputError("'players' must be a non-empty list")

    players = []
    for k, pd in enumerate(data["players"]):
        if not isinstance(pd, dict):
            raise InputError(f"player #{k + 1} must be an object")
        kind = pd.get("kind")
        if kind not in _PLAYER_KEYS:
            raise InputError(f"player #{k + 1}: unknown kind {kind!r}")
        allowed = _PLAYER_KEYS[kind]
        extra = set(pd) - allowed
        if extra:
            raise InputError(f"player #{k + 1}: unknown field(s) {sorted(extra)}")
        missing = allowed - set(pd)
        if missing:
            raise InputError(f"player #{k + 1}: missing field(s) {sorted(missing)}")
        name = pd["name"]
        if not isinstance(name, str):
            raise InputError(f"player #{k + 1}: name must be a string")
        try:
            if kind == "vertex_cover":
                edges = pd["edges"]
                if not isinstance(edges, list) or not all(
                    isinstance(e, list) and all(isinstance(x, int) for x in e) for e in edges
                ):
                    raise InputError("edges must be a list of [a, b] integer pairs")
                val = VertexCoverValuation(Graph(m, edges))
            else:
                weights = pd["weights"]
                if not isinstance(weights, list) or len(weights) != m:
                    raise InputError(f"weights must be a list of length m={m}")
                val = AdditiveValuation(weights)
        except InputError as exc:
            raise InputError(f"player {name!r}: {exc}") from None
        players.append(Player(name, val))
    return Instance(m, tuple(players))


def dumps_instance(instance: Instance) -> str:
    """Stable text form: one line per player."""
    data = instance_to_dict(instance)
    players = ",\n".join("    " + json.dumps(p) for p in data["players"])
    return f'{{\n  "m": {data["m"]},\n  "players": [\n{players}\n  ]\n}}\n'


def save_instance(instance: Instance, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_instance(instance))


def load_instance(path: str | PathLike) -> Instance:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: not valid JSON ({exc})") from None
    return instance_from_dict(data)


def instance_hash(instance: Instance) -> str:
    """SHA-256 over the canonical JSON form (sorted keys, no whitespace)."""
    blob = json.dumps(instance_to_dict(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
