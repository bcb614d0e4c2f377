# # How deep must a sparse network be before every output sees every input?
#
# Stack random D-regular bipartite layers and track, for every input, how
# many vertices it reaches after each layer.  The network is fully sensitive
# once every frontier covers all n outputs.

# In[1]:

import math

import numpy as np

from xnet.connectivity import count_paths, layer_spectra, sensitivity_depth
from xnet.graphs import LayeredNetwork, identity_bipartite, random_layered_network

n, d = 256, 8
tmax = 2 * int(math.log2(n))
net = random_layered_network(n, d, tmax, seed=0)
rep = sensitivity_depth(net)
print("fully sensitive at depth", rep.fully_sensitive_at)
print("smallest frontier per layer:", rep.frontier_sizes.min(axis=0)[:6])

# With identity layers nothing ever mixes, which makes a useful control.

# In[2]:

control = sensitivity_depth(LayeredNetwork(tuple(identity_bipartite(n) for _ in range(tmax))))
print("identity control achieved:", control.achieved)

# ## Counting paths
#
# The number of paths from S to T through t layers concentrates around
# D^t |S||T| / n.  Exact counts are computed with sparse products.

# In[3]:

net3 = net.truncated(3)
spectra = layer_spectra(net3)
rng = np.random.default_rng(0)
for _ in range(5):
    s = rng.choice(n, 32, replace=False)
    t = rng.choice(n, 32, replace=False)
    p = count_paths(net3, s, t, spectra)
    print(f"exact={p.exact_count:6d} expected={p.expected:8.1f} "
          f"rel.dev={p.relative_deviation:.3f} within bound={p.within_bound}")
