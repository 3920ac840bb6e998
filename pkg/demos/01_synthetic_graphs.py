"""Sampling the two synthetic attributed-graph families.

Both samplers draw Bernoulli(1/2) class labels and Gaussian features whose
means sit at +/- signal_scale * sigma / (2 sqrt(d)), so neither the graph
nor the features alone separate the classes comfortably. The block model
wires edges by class-dependent probabilities; the preferential-attachment
model grows the graph node by node with affinity-weighted degrees.
"""

import math
import tempfile

import numpy as np

from certlab import CbaParams, CsbmParams, load_graph, sample_cba, sample_csbm, save_graph

n = 200
csbm = sample_csbm(CsbmParams(n=n, seed=7))
cba = sample_cba(CbaParams(n=n, deg=2, seed=7))

print(f"feature dimension rule: d = floor(n / ln^2 n) = {csbm.d}")
for name, g in (("CSBM", csbm), ("CBA", cba)):
    edges = int(g.adjacency.sum() // 2)
    same = np.equal.outer(g.labels, g.labels)
    iu = np.triu_indices(n, k=1)
    intra = int((g.adjacency[iu] * same[iu]).sum())
    degrees = g.adjacency.sum(axis=1)
    print(f"{name}: {edges} edges ({intra} intra-class), "
          f"max degree {int(degrees.max())}, "
          f"labeled {g.m} nodes ({np.sum(g.labels[g.labeled] == 1)} per class)")

expected = math.comb(n, 2) * (CsbmParams.p + CsbmParams.q) / 2
print(f"CSBM expected edge count: {expected:.0f}")

with tempfile.NamedTemporaryFile(suffix=".json") as fh:
    save_graph(csbm, fh.name)
    back = load_graph(fh.name)
    print("JSON round trip lossless:",
          np.array_equal(back.features, csbm.features)
          and np.array_equal(back.adjacency, csbm.adjacency))
