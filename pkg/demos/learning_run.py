"""A desk-sized learning run, from random repertoire to learned letters.

Prints the census as the run progresses and, when matplotlib is installed,
draws recognizer counts per letter and the letters-learned curve.

Run:  python3 demos/learning_run.py [presentations] [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

from groupselect import SimConfig, run_simulation

presentations = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
out = Path(sys.argv[2] if len(sys.argv) > 2 else "demo_run")
config = SimConfig(rec_size=5000, abs_size=100, presentations=presentations, seed=1)


def report(rec):
    covered = int((rec.rec_counts > 0).sum())
    print(f"t={rec.t:5d}  letters with recognizers {covered:2d}  "
          f"recognizers total {int(rec.rec_counts.sum()):5d}  letters learned {rec.letters_learned:2d}")


records, sim = run_simulation(config, out_dir=out, on_record=report)
first, last = records[0], records[-1]
grew = [lab for lab, a, b in zip(last.labels, first.rec_counts, last.rec_counts) if b > a]
print(f"\n{len(grew)} letters gained recognizers: {''.join(grew)}")
print(f"learned by the abstraction repertoire: "
      f"{''.join(l for l, c in zip(last.labels, last.abs_counts) if c)}")
print(f"metrics and snapshot written to {out}/")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)

t = np.array([r.t for r in records])
rec = np.stack([r.rec_counts for r in records])
fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
for j, label in enumerate(last.labels):
    ax1.plot(t, rec[:, j], lw=1)
    ax1.annotate(label, (t[-1], rec[-1, j]), fontsize=7)
ax1.set(yscale="symlog", xlabel="presentations", ylabel="recognition groups with the letter stable")
ax2.step(t, [r.letters_learned for r in records], where="post")
ax2.set(xlabel="presentations", ylabel="letters learned", ylim=(0, len(last.labels)))
fig.tight_layout()
fig.savefig(out / "census.png", dpi=120)
print(f"plot saved to {out / 'census.png'}")
