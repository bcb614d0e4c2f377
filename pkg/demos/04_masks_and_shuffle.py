# # Connectivity masks for sparse layers
#
# An expander mask gives each output exactly fan_in inputs and spreads the
# inputs evenly.  A group mask is block diagonal.  Channel shuffle between
# two grouped stages lets information cross groups.

# In[1]:

import numpy as np

from xnet.masks import compose_reachability, group_mask, shuffle_permutation, xconv_mask, xlinear_mask

fc = xlinear_mask(4096, 9216, fan_in=1024, source=0)
print(f"fc6 mask: {fc.active_count:,} of {fc.dense_count:,} weights")
print("column degrees range:", fc.column_degrees().min(), "to", fc.column_degrees().max())

conv = xconv_mask(256, 128, 32, 3, source=0)
print(f"3x3 conv mask: {conv.active_count:,} of {conv.dense_count:,} weights")

# ## Groups and shuffle
#
# Two grouped stages without a shuffle stay block diagonal.  With the
# shuffle in between, every output depends on every input.

# In[2]:

channels, g = 16, 4
m = group_mask(channels, channels, g)
plain = compose_reachability(m, m)
mixed = compose_reachability(m, shuffle_permutation(channels, g), m)
print(plain.astype(int))
print("with shuffle, fully connected:", bool(mixed.all()))
print("shuffle permutation:", shuffle_permutation(6, 2))
