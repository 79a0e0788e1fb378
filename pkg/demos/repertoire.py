"""Building the two repertoires and taking the first census.

Neighbors in the recognition repertoire are near-copies of each other; the
abstraction repertoire samples small neighborhoods of it.

Run:  python3 demos/repertoire.py [size]
"""

import sys

import numpy as np

from groupselect import SimConfig, build_abstraction_map, build_recognition_repertoire, builtin_alphabet, census
from groupselect.alphabet import pattern_matrix

size = int(sys.argv[1]) if len(sys.argv) > 1 else 5000
cfg = SimConfig(rec_size=size)
rng = np.random.default_rng(0)
graph = build_recognition_repertoire(size, cfg.mutation_count, cfg.fanout, cfg.branch_sample,
                                     cfg.back_edges, cfg.neuron_count, rng)
print(f"recognition repertoire: {graph.size} groups in {graph.layer.max() + 1} layers, "
      f"connected={graph.is_connected()}, mean degree {graph.degrees().mean():.2f}")

# Topography: a child differs from its parent in at most mutation_count pairs,
# while two unrelated groups disagree on about half of the 120 pairs.
iu = np.triu_indices(16, 1)
flat = graph.weights[:, iu[0], iu[1]]
child = np.arange(1, graph.size)
parent_diff = (flat[child] != flat[graph.parent[child]]).sum(axis=1)
other = rng.permutation(graph.size)
random_diff = (flat != flat[other]).sum(axis=1)
print(f"pairs differing: child vs parent {parent_diff.mean():.1f}, random pair {random_diff.mean():.1f}")

amap = build_abstraction_map(graph, cfg.abs_size, rng)
counts = amap.connection_counts()
print(f"abstraction repertoire: {amap.size} groups, connections per group "
      f"min {counts.min()} mean {counts.mean():.1f} max {counts.max()}")

glyphs = builtin_alphabet()
rec = census(graph.weights, pattern_matrix(glyphs))
print("\nrecognizers per letter before any learning:")
print("  " + " ".join(f"{g.label}:{c}" for g, c in zip(glyphs, rec)))
print(f"{int((rec == 0).sum())} of {len(glyphs)} letters have no recognizer yet")
