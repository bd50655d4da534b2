from collections import Counter
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rogauction import (
    AdditiveValuation,
    Allocation,
    InputError,
    Instance,
    TieRule,
    paper_lower_bound_instance,
    random_instance,
    random_permutation,
    run_greedy,
)
from rogauction.greedy import run_greedy_batch

from .oracles import edge_lists, naive_greedy, naive_opt


def test_identity_order_everything_to_player_one():
    alloc, trace = run_greedy(paper_lower_bound_instance(7), range(1, 8))
    assert alloc.bundles == (frozenset(range(1, 8)), frozenset(), frozenset())
    assert alloc.welfare == 6
    assert all(len(s.tie_set) >= 2 or s.gain == 0 for s in trace.steps[:6])


def test_centre_first_order():
    alloc, _ = run_greedy(paper_lower_bound_instance(7), (7, 1, 2, 3, 4, 5, 6))
    assert alloc.bundles == (frozenset({6, 7}), frozenset({1, 3, 5}), frozenset({2, 4}))
    assert alloc.welfare == 11


def test_single_additive_player_takes_everything():
    inst = Instance.from_valuations([AdditiveValuation([3, 1, 4, 1, 5])])
    alloc, _ = run_greedy(inst, (5, 3, 1, 2, 4))
    assert alloc.bundles == (frozenset(range(1, 6)),)
    assert alloc.welfare == 14


@pytest.mark.parametrize("sigma", [(1, 1, 2, 3, 4), (1, 2, 3, 4), (1, 2, 3, 4, 6), ()])
def test_rejects_non_permutations(sigma):
    with pytest.raises(InputError, match="not a permutation"):
        run_greedy(paper_lower_bound_instance(5), sigma)


def test_trace_invariants(small_suite):
    for inst in small_suite[:30]:
        for sigma in list(permutations(inst.items))[:50]:
            alloc, trace = run_greedy(inst, sigma)
            assert sum(trace.gains) == alloc.welfare
            for s in trace.steps:
                assert s.gain == s.marginals[s.winner] == max(s.marginals)
                assert s.winner in s.tie_set
                assert s.tie_set == tuple(i for i, x in enumerate(s.marginals) if x == s.gain)
            # full partition
            assert sorted(j for b in alloc.bundles for j in b) == list(inst.items)
            assert alloc.welfare == sum(v.value(b) for v, b in zip(inst.valuations, alloc.bundles))


def test_trace_replay_reproduces_welfare(small_suite):
    for inst in small_suite[:20]:
        sigma = random_permutation(inst.m, 3)
        alloc, trace = run_greedy(inst, sigma)
        bundles = [set() for _ in range(inst.n)]
        for s in trace.steps:
            bundles[s.winner].add(s.item)
        assert sum(v.value(b) for v, b in zip(inst.valuations, bundles)) == alloc.welfare


def test_matches_naive_greedy(small_suite):
    for inst in small_suite:
        edges = edge_lists(inst)
        for sigma in list(permutations(inst.items))[::7]:
            alloc, _ = run_greedy(inst, sigma)
            assert [set(b) for b in alloc.bundles] == naive_greedy(edges, sigma)


def test_batch_engine_matches_scalar(small_suite):
    for inst in small_suite + [paper_lower_bound_instance(7)]:
        perms = np.array(list(permutations(inst.items)), dtype=np.int64)
        batch = run_greedy_batch(inst, perms)
        for row, sigma in zip(batch, perms):
            alloc, _ = run_greedy(inst, sigma)
            assert list(row) == [v.value(b) for v, b in zip(inst.valuations, alloc.bundles)]


def test_batch_engine_additive():
    inst = Instance.from_valuations([AdditiveValuation([1, 2, 3]), AdditiveValuation([3, 2, 1])])
    perms = np.array(list(permutations(inst.items)))
    # item 1 -> player 2, items 2 (tie) and 3 -> player 1, in every order
    assert (run_greedy_batch(inst, perms) == [5, 3]).all()


def test_half_guarantee_every_order(small_suite):
    for inst in small_suite:
        opt, _ = naive_opt(edge_lists(inst), inst.m)
        for sigma in permutations(inst.items):
            assert 2 * run_greedy(inst, sigma)[0].welfare >= opt


def test_relabeling_symmetry(small_suite):
    for inst in small_suite[:40]:
        perm = list(reversed(range(inst.n)))
        relabeled = Instance(inst.m, tuple(inst.players[k] for k in perm))
        for sigma in list(permutations(inst.items))[::11]:
            a, _ = run_greedy(inst, sigma)
            c = run_greedy_with_preference(relabeled, sigma, perm)
            assert c.welfare == a.welfare
            assert [c.bundles[perm.index(i)] for i in range(inst.n)] == list(a.bundles)


def run_greedy_with_preference(inst, sigma, original_index):
    """Greedy where ties go to the smallest original index."""
    bundles = [set() for _ in range(inst.n)]
    welfare = 0
    for j in sigma:
        margs = [v.marginal(j, b) for v, b in zip(inst.valuations, bundles)]
        best = max(margs)
        winner = min((i for i in range(inst.n) if margs[i] == best),
                     key=lambda i: original_index[i])
        bundles[winner].add(j)
        welfare += best
    return Allocation(tuple(frozenset(b) for b in bundles), welfare)


def test_random_tie_rule_is_seeded():
    inst = paper_lower_bound_instance(7)
    sigma = tuple(range(1, 8))
    a = run_greedy(inst, sigma, TieRule.random(3))
    b = run_greedy(inst, sigma, TieRule.random(3))
    assert a == b
    outcomes = {run_greedy(inst, sigma, TieRule.random(s))[0].welfare for s in range(30)}
    assert len(outcomes) > 1
    for s in range(30):
        _, trace = run_greedy(inst, sigma, TieRule.random(s))
        assert all(st.winner in st.tie_set for st in trace.steps)


def test_tie_rule_parse():
    assert TieRule.parse("lowest") == TieRule()
    assert TieRule.parse("random:9") == TieRule.random(9)
    with pytest.raises(InputError):
        TieRule.parse("coin")
    with pytest.raises(InputError):
        TieRule("random")


def test_random_permutation_basics():
    assert random_permutation(1, 0) == (1,)
    assert random_permutation(3, 42) == random_permutation(3, 42)
    with pytest.raises(InputError):
        random_permutation(0, 1)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32))
def test_random_permutation_is_permutation(m, seed):
    assert sorted(random_permutation(m, seed)) == list(range(1, m + 1))


def test_random_permutation_uniform_m4():
    rng = np.random.default_rng(2024)
    n = 24_000
    counts = Counter(random_permutation(4, rng) for _ in range(n))
    assert len(counts) == 24
    p = 1 / 24
    sigma = (n * p * (1 - p)) ** 0.5
    for c in counts.values():
        assert abs(c - n * p) <= 5 * sigma
    # chi-square with 23 dof; 0.999 quantile is about 49.7
    chi2 = sum((c - n * p) ** 2 / (n * p) for c in counts.values())
    assert chi2 < 49.7
