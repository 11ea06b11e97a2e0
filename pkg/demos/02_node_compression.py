"""Why the sampled lattice is cheap: most draws land on a handful of nodes.

A hundred jumps from the law for alpha = 0.5 or 1.5 collapse to a few dozen
distinct lattice offsets, because small jumps carry most of the mass. The
solver evaluates the network once per distinct offset and weights it by its
count, so the cost per collocation point grows far slower than N * K.

Run: python demos/02_node_compression.py
"""

from __future__ import annotations

from gmcpinn.sampler import NodeSet, draw_nodes, jump_distribution, default_k_cap
from gmcpinn.problems import poisson2d_frac
from gmcpinn.solver import DataSampler, build_eval_batch, build_terms, draw_term_nodes
from gmcpinn.streams import pseudo_random, halton

for alpha in (0.5, 1.5):
    ns: NodeSet = draw_nodes(jump_distribution(alpha, default_k_cap(10)), 10, 10, pseudo_random(0))
    top = sorted(ns.as_dict().items(), key=lambda kv: -kv[1])[:6]
    print(f"alpha={alpha}: 100 draws -> {ns.unique} distinct jumps; most frequent {top}")

print("\nunique network inputs per raw node, 2D Poisson problem, 100 points:")
problem = poisson2d_frac()
data = DataSampler(problem, 100, 10, 10)(0)
for n in (10, 20, 40, 80):
    terms = build_terms(problem, n, n)
    batch = build_eval_batch(data, terms, draw_term_nodes(terms, 100, halton(2)))
    print(f"  N=K={n:>3}: {batch.raw_nodes:>9} raw, {batch.unique:>7} unique, "
          f"ratio {batch.unique / batch.raw_nodes:.2e}")
