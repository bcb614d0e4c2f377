# # Parameter and multiply-add accounting
#
# Costs are computed from layer specs.  Bias terms are left out unless asked
# for; FLOPs are reported both as multiply-adds and as twice that.

# In[1]:

from xnet.accounting import LayerSpec, count, count_model, depthwise_separable_ratio
from xnet.architectures import alexnet, erfnet, vgg16_cifar

dense = count(LayerSpec("dense_conv", 64, 128, 3, (32, 32)))
grouped = count(LayerSpec("grouped_pointwise", 64, 128, 3, (32, 32), group_count=4))
print("dense", dense.macs, "grouped/4", grouped.macs, "ratio", dense.macs / grouped.macs)
print("depthwise separable vs dense, 64->128, 3x3:", depthwise_separable_ratio(64, 128, 3))

# ## Whole networks

# In[2]:

for name, specs in [("AlexNet", alexnet()), ("X-AlexNet-1", alexnet("x1")),
                    ("VGG16", vgg16_cifar()), ("X-VGG16-1", vgg16_cifar("x1")),
                    ("ERFNet", erfnet())]:
    total = count_model(specs)
    print(f"{name:12s} params={total.params:>12,}  mult-adds={total.macs:>16,}")
