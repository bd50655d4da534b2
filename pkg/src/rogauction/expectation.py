"""Expected welfare of the random-order greedy algorithm.

Exact mode enumerates all ``m!`` orders and returns :class:`fractions.Fraction`
values. Monte Carlo mode samples orders from a seeded generator. Both split
the work into fixed chunks whose integer sums are merged at the end, so the
result does not depend on the number of workers.
"""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import islice, permutations

import numpy as np

from . import __version__
from .errors import BudgetExceeded, InputError
from .greedy import GENERATOR_ID, LOWEST_INDEX, TieRule, run_greedy, run_greedy_batch
from .instances import Instance, instance_hash, paper_lower_bound_instance, paper_opt_bundles
from .optimal import DEFAULT_OPT_BUDGET, OptResult, brute_force_opt, certified_opt

__all__ = [
    "ExpectationReport",
    "exact_expectation",
    "monte_carlo",
    "resolve_opt",
    "Family",
    "PAPER_FAMILY",
    "SweepRow",
    "ratio_sweep",
    "sweep_to_csv",
    "fraction_to_json",
    "DEFAULT_EXACT_BUDGET",
    "DEFAULT_CHUNK",
]

DEFAULT_EXACT_BUDGET = math.factorial(10)
DEFAULT_CHUNK = 10_000
_ENUM_BATCH = 40_320


def fraction_to_json(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator, "decimal": f"{float(x):.10f}"}


def map_chunks(fn: Callable, args: Sequence[tuple], workers: int = 1) -> list:
    """``[fn(*a) for a in args]``, optionally across processes, order preserved."""
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*args)))


def resolve_opt(
    instance: Instance,
    opt_budget: int = DEFAULT_OPT_BUDGET,
    known_bundles=None,
) -> OptResult | None:
    """Brute force within budget, else certify ``known_bundles``, else ``None``."""
    if instance.n**instance.m <= opt_budget:
        return brute_force_opt(instance, opt_budget)
    if known_bundles is not None:
        return certified_opt(instance, known_bundles)
    return None


@dataclass
class ExpectationReport:
    mode: str  # "exact" or "monte-carlo"
    m: int
    n: int
    player_names: list[str]
    per_player: list[Fraction]  # exact values, or exact sample means in MC mode
    total: Fraction
    tie_rule: str
    instance_hash: str
    per_player_stderr: list[float] | None = None
    total_stderr: float | None = None
    opt_welfare: int | None = None
    opt_analytic: bool = False
    permutations: int | None = None
    samples: int | None = None
    seed: int | None = None
    generator: str | None = None
    min_welfare: int | None = None
    version: str = field(default=__version__)

    @property
    def ratio(self) -> Fraction | None:
        if self.opt_welfare is None or self.opt_welfare == 0:
            return None
        return self.total / self.opt_welfare

    def to_dict(self) -> dict:
        exact = self.mode == "exact"
        players = []
        for k, (name, val) in enumerate(zip(self.player_names, self.per_player)):
            entry = {"player": k + 1, "name": name}
            if exact:
                entry["expected"] = fraction_to_json(val)
            else:
                entry["mean"] = float(val)
                entry["stderr"] = self.per_player_stderr[k]
            players.append(entry)
        ratio = self.ratio
        out = {
            "tool_version": self.version,
            "instance_hash": self.instance_hash,
            "mode": self.mode,
            "m": self.m,
            "n": self.n,
            "tie_rule": self.tie_rule,
            "players": players,
            "total": fraction_to_json(self.total) if exact else float(self.total),
            "total_stderr": self.total_stderr,
            "opt_welfare": self.opt_welfare,
            "opt_analytic": self.opt_analytic,
            "ratio": None
            if ratio is None
            else (fraction_to_json(ratio) if exact else float(ratio)),
            "permutations_enumerated": self.permutations,
            "samples": self.samples,
            "seed": self.seed,
            "generator": self.generator,
            "min_welfare": self.min_welfare,
        }
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["player", "name", "expected", "decimal", "stderr"])
        exact = self.mode == "exact"
        errs = self.per_player_stderr or [None] * self.n
        for k, (name, val) in enumerate(zip(self.player_names, self.per_player)):
            w.writerow([k + 1, name, str(val) if exact else "", f"{float(val):.10f}", _fmt(errs[k])])
        w.writerow(
            ["total", "", str(self.total) if exact else "", f"{float(self.total):.10f}",
             _fmt(self.total_stderr)]
        )
        return buf.getvalue()


def _fmt(x) -> str:
    return "" if x is None else f"{x:.10f}"


# -- exact enumeration ---------------------------------------------------------


def _exact_chunk(instance: Instance, first: int) -> tuple[list[int], int, int]:
    """Sums over all orders starting with ``first``, in lexicographic order."""
    rest = [j for j in instance.items if j != first]
    sums = np.zeros(instance.n, dtype=np.int64)
    min_w = None
    count = 0
    it = permutations(rest)
    while True:
        block = list(islice(it, _ENUM_BATCH))
        if not block:
            break
        perms = np.empty((len(block), instance.m), dtype=np.int64)
        perms[:, 0] = first
        perms[:, 1:] = block
        vals = run_greedy_batch(instance, perms)
        sums += vals.sum(axis=0)
        w = int(vals.sum(axis=1).min())
        min_w = w if min_w is None else min(min_w, w)
        count += len(block)
    return [int(x) for x in sums], min_w, count


def exact_expectation(
    instance: Instance,
    rule: TieRule = LOWEST_INDEX,
    budget: int = DEFAULT_EXACT_BUDGET,
    opt: OptResult | None = None,
    workers: int = 1,
) -> ExpectationReport:
    """Average each player's final value over all ``m!`` orders.

    Only the lowest-index tie rule is accepted. ``min_welfare`` records the
    worst order seen, so callers can check the per-order half guarantee.
    """
    if not rule.deterministic:
        raise InputError("exact mode requires the lowest-index tie rule")
    total_perms = math.factorial(instance.m)
    if total_perms > budget:
        raise BudgetExceeded("exact enumeration", total_perms, budget)
    parts = map_chunks(_exact_chunk, [(instance, f) for f in instance.items], workers)
    sums = [sum(p[0][i] for p in parts) for i in range(instance.n)]
    count = sum(p[2] for p in parts)
    assert count == total_perms
    per_player = [Fraction(s, count) for s in sums]
    return ExpectationReport(
        mode="exact",
        m=instance.m,
        n=instance.n,
        player_names=[p.name for p in instance.players],
        per_player=per_player,
        total=sum(per_player, Fraction(0)),
        tie_rule=str(rule),
        instance_hash=instance_hash(instance),
        opt_welfare=None if opt is None else opt.welfare,
        opt_analytic=False if opt is None else opt.analytic,
        permutations=count,
        min_welfare=min(p[1] for p in parts),
    )


# -- Monte Carlo -----------------------------------------------------------------


def _mc_chunk(instance: Instance, rule: TieRule, seed: int, index: int, size: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    base = np.tile(np.arange(1, instance.m + 1, dtype=np.int64), (size, 1))
    perms = rng.permuted(base, axis=1)
    if rule.deterministic:
        vals = run_greedy_batch(instance, perms)
    else:
        vals = np.empty((size, instance.n), dtype=np.int64)
        for r in range(size):
            alloc, _ = run_greedy(instance, perms[r], rule, tie_rng=rng)
            vals[r] = [v.value(b) for v, b in zip(instance.valuations, alloc.bundles)]
    totals = vals.sum(axis=1)
    return (
        [int(x) for x in vals.sum(axis=0)],
        [int(x) for x in (vals * vals).sum(axis=0)],
        int(totals.sum()),
        int((totals * totals).sum()),
        int(totals.min()),
    )


def _stderr(s: int, s2: int, count: int) -> float:
    # unbiased sample variance from exact integer sums
    var = Fraction(count * s2 - s * s, count * (count - 1))
    return math.sqrt(var / count)


def monte_carlo(
    instance: Instance,
    rule: TieRule = LOWEST_INDEX,
    samples: int = 100_000,
    seed: int = 0,
    opt: OptResult | None = None,
    workers: int = 1,
    chunk_size: int = DEFAULT_CHUNK,
) -> ExpectationReport:
    """Estimate per-player expected values from ``samples`` uniform orders.

    Chunk ``k`` draws from ``SeedSequence([seed, k])``; chunk boundaries
    depend only on ``samples`` and ``chunk_size``.
    """
    if samples < 2:
        raise InputError("Monte Carlo needs at least 2 samples")
    if seed < 0:
        raise InputError("seed must be non-negative")
    chunks = []
    start, k = 0, 0
    while start < samples:
        size = min(chunk_size, samples - start)
        chunks.append((instance, rule, seed, k, size))
        start += size
        k += 1
    parts = map_chunks(_mc_chunk, chunks, workers)
    n = instance.n
    s = [sum(p[0][i] for p in parts) for i in range(n)]
    s2 = [sum(p[1][i] for p in parts) for i in range(n)]
    ts = sum(p[2] for p in parts)
    ts2 = sum(p[3] for p in parts)
    per_player = [Fraction(x, samples) for x in s]
    return ExpectationReport(
        mode="monte-carlo",
        m=instance.m,
        n=n,
        player_names=[p.name for p in instance.players],
        per_player=per_player,
        total=Fraction(ts, samples),
        tie_rule=str(rule),
        instance_hash=instance_hash(instance),
        per_player_stderr=[_stderr(a, b, samples) for a, b in zip(s, s2)],
        total_stderr=_stderr(ts, ts2, samples),
        opt_welfare=None if opt is None else opt.welfare,
        opt_analytic=False if opt is None else opt.analytic,
        samples=samples,
        seed=seed,
        generator=GENERATOR_ID,
        min_welfare=min(p[4] for p in parts),
    )


# -- sweeps ------------------------------------------------------------------------


@dataclass(frozen=True)
class Family:
    """A parametrized instance family; ``known_opt`` certifies OPT beyond brute force."""

    name: str
    build: Callable[[int], Instance]
    known_opt: Callable[[int], tuple] | None = None

    def validate(self, m: int) -> None:
        self.build(m)


PAPER_FAMILY = Family("paper", paper_lower_bound_instance, paper_opt_bundles)


@dataclass(frozen=True)
class SweepRow:
    m: int
    mode: str
    e_rog: Fraction
    e_rog_stderr: float | None
    opt: int
    opt_analytic: bool
    samples: int | None
    seed: int | None

    @property
    def ratio(self) -> Fraction:
        return self.e_rog / self.opt


def ratio_sweep(
    family: Family,
    m_values: Sequence[int],
    mode: str = "auto",
    samples: int = 100_000,
    seed: int = 0,
    exact_budget: int = DEFAULT_EXACT_BUDGET,
    opt_budget: int = DEFAULT_OPT_BUDGET,
    workers: int = 1,
) -> list[SweepRow]:
    """One ``(m, E[ROG], OPT, ratio)`` row per ``m``.

    ``auto`` enumerates when ``m! <= exact_budget`` and samples otherwise.
    """
    if not m_values:
        raise InputError("empty m list")
    if mode not in ("auto", "exact", "mc"):
        raise InputError(f"unknown mode {mode!r}")
    for m in m_values:
        family.validate(m)
    rows = []
    for m in m_values:
        inst = family.build(m)
        known = family.known_opt(m) if family.known_opt else None
        opt = resolve_opt(inst, opt_budget, known)
        if opt is None:
            raise BudgetExceeded(f"OPT for {family.name} m={m}", inst.n**m, opt_budget)
        use_exact = mode == "exact" or (mode == "auto" and math.factorial(m) <= exact_budget)
        if use_exact:
            rep = exact_expectation(inst, budget=exact_budget, opt=opt, workers=workers)
            rows.append(SweepRow(m, "exact", rep.total, None, opt.welfare, opt.analytic, None, None))
        else:
            rep = monte_carlo(inst, samples=samples, seed=seed, opt=opt, workers=workers)
            rows.append(
                SweepRow(m, "mc", rep.total, rep.total_stderr, opt.welfare, opt.analytic, samples, seed)
            )
    return rows


SWEEP_COLUMNS = ["m", "mode", "e_rog", "e_rog_stderr", "opt", "ratio", "samples", "seed", "opt_analytic"]


def sweep_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow(
            [
                r.m,
                r.mode,
                f"{float(r.e_rog):.10f}",
                _fmt(r.e_rog_stderr),
                r.opt,
                f"{float(r.ratio):.10f}",
                "" if r.samples is None else r.samples,
                "" if r.seed is None else r.seed,
                int(r.opt_analytic),
            ]
        )
    return buf.getvalue()
