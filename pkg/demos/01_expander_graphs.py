# # Building expander graphs and measuring their spectral gap
#
# Two families are available: XOR Cayley graphs on {0,1}^k, whose spectrum
# is known exactly from character sums, and random regular bipartite graphs
# built as a union of D permutations, whose second eigenvalue is estimated
# with block power iteration.

# In[1]:

import numpy as np

from xnet.graphs import (
    ExpanderBudget,
    build_cayley_xor_graph,
    build_random_regular_bipartite,
    sample_generators,
)
from xnet.spectral import cayley_character_sums, dense_second_eigenvalue, spectral_report

# ## Cayley graphs
#
# The generator budget grows like k / eps^2.  The constant c is a free knob;
# c = 0.25 is already enough for gamma >= 1 - eps on every seed we tried.

# In[2]:

for k, eps in [(8, 0.5), (8, 0.3), (10, 0.3)]:
    budget = ExpanderBudget.for_dimension(k, eps, c=0.25)
    g = build_cayley_xor_graph(k, sample_generators(k, budget, seed=0))
    rep = spectral_report(g)
    print(f"k={k:2d} eps={eps}: |H|={g.degree:3d}  lambda2={rep.lambda2:7.2f}  "
          f"gamma={rep.gamma:.3f}  target>={1 - eps:.2f}")

# The character sums are the whole spectrum: one eigenvalue per element of
# {0,1}^k, the first being the degree.

# In[3]:

g = build_cayley_xor_graph(4, [1, 2, 4, 8, 15])
print(np.sort(cayley_character_sums(g))[::-1])

# ## Random regular bipartite graphs
#
# For a D-regular bipartite graph the relevant quantity is the second
# singular value of the biadjacency matrix.  Power iteration and the dense
# solver agree to round-off.

# In[4]:

for d in (2, 4, 8, 16):
    g = build_random_regular_bipartite(256, d, seed=1)
    est = spectral_report(g, "power-iteration")
    exact = dense_second_eigenvalue(g)
    print(f"D={d:2d}: lambda2={est.lambda2:.6f} (dense {exact.lambda2:.6f}), "
          f"2 sqrt(D-1)={2 * np.sqrt(d - 1):.3f}, gamma={est.gamma:.3f}")
