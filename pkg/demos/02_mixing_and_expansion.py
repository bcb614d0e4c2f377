# # Checking edge mixing and vertex expansion
#
# On a graph small enough to enumerate, every pair of vertex sets (S, T) can
# be checked against the spectral mixing bound.  Two bounds are reported:
# lambda2 sqrt(|S||T|), which always holds, and (1 - gamma) sqrt(|S||T|),
# which is the same quantity divided by D and is routinely violated.

# In[1]:

from xnet.graphs import build_random_regular_bipartite
from xnet.spectral import check_expansion, check_mixing, dense_second_eigenvalue, mixing_sweep

g = build_random_regular_bipartite(8, 3, seed=5)
rep = dense_second_eigenvalue(g)
print(f"D=3, lambda2={rep.lambda2:.4f}, gamma={rep.gamma:.4f}")

# In[2]:

sweep = mixing_sweep(g, rep)
print(f"{sweep.pairs} pairs: {sweep.violations_standard} standard violations, "
      f"{sweep.violations_paper} scaled-bound violations "
      f"(pass rate {sweep.paper_pass_rate:.3f})")

# A single check shows the numbers behind one pair.

# In[3]:

print(check_mixing(g, [0, 1, 2], [3, 4, 5, 6], rep))

# ## Expansion
#
# Every subset of at most n/2 left vertices is enumerated and its
# neighbourhood compared with (1 + gamma)|S|.

# In[4]:

checks = check_expansion(g, report=rep)
short = [c for c in checks if not c.satisfied]
print(f"{len(checks)} subsets checked, {len(short)} below the claimed bound")
smallest = min(checks, key=lambda c: c.neighborhood_size / c.subset_size)
print("tightest subset:", smallest.subset, "->", smallest.neighborhood_size)
