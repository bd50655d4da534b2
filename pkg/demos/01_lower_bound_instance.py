# %% [markdown]
# # The three-player lower-bound instance
#
# Player 1 values a star centred at the last item, players 2 and 3 value two
# interleaved sets of disjoint edges. Ties go to the earliest player.

# %%
from fractions import Fraction

from rogauction import (
    brute_force_opt,
    exact_expectation,
    paper_lower_bound_instance,
    paper_opt_bundles,
    run_greedy,
    welfare_of,
)

inst = paper_lower_bound_instance(7)
for p in inst.players:
    print(p.name, p.valuation.graph.edges)

# %% [markdown]
# Two hand-picked orders. Processing the items left to right lets player 1
# win every tie, so it ends up with everything. Putting the centre first
# frees the small items for the other two players.

# %%
for order in [(1, 2, 3, 4, 5, 6, 7), (7, 1, 2, 3, 4, 5, 6)]:
    alloc, trace = run_greedy(inst, order)
    print(order, "->", [sorted(b) for b in alloc.bundles], "welfare", alloc.welfare)

# %% [markdown]
# The optimum covers every edge, so it equals the total edge count.

# %%
opt = brute_force_opt(inst)
print("brute force OPT:", opt.welfare, [sorted(b) for b in opt.bundles])
print("star/odd/even allocation:", welfare_of(inst, paper_opt_bundles(7)))

# %% [markdown]
# Exact expectations over all 5040 orders, next to the closed forms
# ``m - 1``, ``(m - 1)/3`` and ``17(m - 3)/120``.

# %%
rep = exact_expectation(inst, opt=opt)
m = inst.m
closed = [Fraction(m - 1), Fraction(m - 1, 3), Fraction(17 * (m - 3), 120)]
for k, (got, want) in enumerate(zip(rep.per_player, closed), start=1):
    print(f"player {k}: {got} (closed form {want})")
print("E[welfare] / OPT =", rep.ratio, "≈", float(rep.ratio))
