# %% [markdown]
# # How the expected ratio approaches 177/240
#
# Small ``m`` is enumerated exactly, larger ``m`` is sampled. Beyond the
# brute-force budget the optimum is certified: the star/odd/even allocation
# reaches the sum of all players' total values, which nothing can exceed.

# %%
import sys

from rogauction import PAPER_FAMILY, ratio_sweep
from rogauction.expectation import sweep_to_csv

rows = ratio_sweep(PAPER_FAMILY, [5, 7, 9, 21, 51, 101], samples=40_000, seed=1)
sys.stdout.write(sweep_to_csv(rows))

# %%
print("limit 177/240 =", 177 / 240)
for r in rows:
    print(f"m={r.m:4d}  ratio={float(r.ratio):.4f}  gap={float(r.ratio) - 177 / 240:+.4f}")
