"""A single neuronal group: convergence, flip counts and the energy landscape.

Run:  python3 demos/one_group.py
"""

import numpy as np

from groupselect import builtin_alphabet, census, converge, encode_grid, energy, is_stable, new_random_group
from groupselect.hopfield import stable_states

rng = np.random.default_rng(7)
w = new_random_group(16, rng)
letters = {g.label: encode_grid(g) for g in builtin_alphabet()}

# Present every letter and watch how many flips the group needs to settle.
# Few flips means the letter sits close to one of the group's attractors.
print("letter  flips  visits  energy(start -> end)")
for label, p in letters.items():
    res = converge(w, p)
    print(f"  {label}     {res.flips:3d}    {res.visits:4d}   {energy(w, p):6.1f} -> {energy(w, res.stable_state):6.1f}")

# The trajectory records the state after every visit; energy never rises along it.
res = converge(w, letters["A"], record=True)
es = [energy(w, s) for s in res.trajectory]
print(f"\nA: energy along the trajectory is non-increasing: {all(b <= a for a, b in zip(es, es[1:]))}")

# n = 16 is small enough to enumerate every stable state exhaustively.
found = stable_states(w)
print(f"\nthis group has {len(found)} stable states among 65536 patterns")
recognized = [lab for lab, p in letters.items() if is_stable(w, p)]
print(f"letters it already recognizes (q = 0): {recognized or 'none'}")

# Odd-weight patterns win because a zero input sum switches a neuron on.
patterns = []
for k in (7, 8, 9, 10):
    p = np.zeros(16, np.uint8)
    p[rng.permutation(16)[:k]] = 1
    patterns.append(p)
hits = np.zeros(4, int)
for _ in range(5):
    batch = np.stack([new_random_group(16, rng) for _ in range(20_000)])
    hits += census(batch, np.stack(patterns))
for k, h in zip((7, 8, 9, 10), hits):
    print(f"pattern with {k:2d} pixels on: stable in {h:3d} of 100000 random groups")
