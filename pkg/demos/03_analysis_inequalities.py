# %% [markdown]
# # Checking the analysis inequalities on random instances
#
# For every order of the items we replay the greedy run against a fixed
# optimal allocation and record, per item, who owns it in the optimum, its
# strongest competitor, how many of its edges were already used, the gain
# of the algorithm and the drop of the residual optimum.

# %%
from rogauction import brute_force_opt, paper_lower_bound_instance, random_instance
from rogauction.instrumentation import annotate_run, verify_instance

inst = paper_lower_bound_instance(5)
opt = brute_force_opt(inst)
for r in annotate_run(inst, (5, 2, 1, 4, 3), opt=opt):
    print(r)

# %% [markdown]
# ``verify_instance`` enumerates every order and reports the smallest slack
# of each inequality; a negative slack would come with a witness order.

# %%
for seed in range(5):
    inst = random_instance(3, 6, 0.5, seed=seed)
    reports = verify_instance(inst)
    print(seed, {r.claim: r.status for r in reports})

# %% [markdown]
# The reverse loss inequality, for items whose competitor is at least as
# strong as the optimal owner, is recorded but not required.

# %%
neg = next(r for r in verify_instance(paper_lower_bound_instance(7)) if r.claim == "neg")
print(neg.notes["reverse_direction"])
