"""Command line entry point: ``groupselect {build,run,census,inspect,glyphs}``.

Exit codes: 0 success, 1 configuration error, 2 runtime or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .alphabet import GlyphParseError, builtin_alphabet, encode_grid, format_glyphs, load_glyph_set
from .harness import SimConfig, Simulation, export_metrics, inspect_group, load_config, run_simulation
from .repertoire import ConfigurationError
from .snapshot import SnapshotError, file_sha256

EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _config(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    if getattr(args, "presentations", None) is not None:
        cfg = cfg.replace(presentations=args.presentations)
    return cfg


def cmd_build(args) -> int:
    cfg = _config(args)
    sim = Simulation.build(cfg)
    digest = sim.save(args.output)
    print(f"built r={sim.graph.size} a={sim.amap.size} "
          f"mean_connections={sim.amap.connection_counts().mean():.2f} -> {args.output}")
    print(f"sha256 {digest}")
    return 0


def cmd_run(args) -> int:
    cfg = _config(args)
    records, sim = run_simulation(cfg, out_dir=args.output, workers=args.workers,
                                  resume=args.snapshot, checkpoint=args.checkpoint)
    final = records[-1]
    out = Path(args.output)
    print(f"t={final.t} letters_learned={final.letters_learned}/{len(final.labels)}")
    print(f"metrics {out / 'metrics.csv'}")
    print(f"snapshot {out / 'snapshot.snap'} sha256 {file_sha256(out / 'snapshot.snap')}")
    return 0


def cmd_census(args) -> int:
    sim = Simulation.load(args.snapshot, workers=args.workers)
    rec = sim.census()
    if args.output:
        export_metrics([rec], args.output, config=sim.config)
    print(f"t={rec.t}")
    print("letter rec_count abs_count")
    for lab, rc, ac in zip(rec.labels, rec.rec_counts, rec.abs_counts):
        print(f"{lab:>6} {int(rc):9d} {int(ac):9d}")
    print(f"letters_learned={rec.letters_learned}/{len(rec.labels)}")
    return 0


def cmd_inspect(args) -> int:
    sim = Simulation.load(args.snapshot)
    probes = None
    if args.probes:
        probes = {g.label: encode_grid(g) for g in load_glyph_set(args.probes)}
    rep = inspect_group(sim, args.group, probes, args.repertoire, scan=args.scan)
    out = {k: v for k, v in rep.items() if k not in ("weights", "probes", "stable_states")}
    out["weights"] = np.round(rep["weights"], 6).tolist()
    out["probes"] = {k: {"flips": v["flips"], "final": "".join(map(str, v["final"])),
                         "energy": v["energy"]} for k, v in rep["probes"].items()}
    if "stable_states" in rep:
        out["stable_states"] = ["".join(map(str, s)) for s in rep["stable_states"]]
    print(json.dumps(out, indent=2))
    return 0


def cmd_glyphs(args) -> int:
    glyphs = builtin_alphabet() if args.file is None else load_glyph_set(args.file)
    print(format_glyphs(glyphs), end="")
    print(f"{len(glyphs)} glyphs OK", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="groupselect", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="construct and save the repertoires")
    b.add_argument("--config")
    b.add_argument("--seed", type=int)
    b.add_argument("-o", "--output", required=True, help="snapshot file to write")
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("run", help="run the presentation loop")
    r.add_argument("--config")
    r.add_argument("--seed", type=int)
    r.add_argument("--presentations", type=int, help="override the total presentation count")
    r.add_argument("-o", "--output", required=True, help="output directory")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--snapshot", help="resume from this snapshot instead of building")
    r.add_argument("--checkpoint", action="store_true",
                   help="save checkpoint.snap at every census point")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("census", help="census of a saved snapshot")
    c.add_argument("snapshot")
    c.add_argument("-o", "--output", help="also write metrics.csv and summary.json here")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_census)

    i = sub.add_parser("inspect", help="report on one group of a snapshot")
    i.add_argument("snapshot")
    i.add_argument("group", type=int)
    i.add_argument("--repertoire", choices=("recognition", "abstraction"), default="recognition")
    i.add_argument("--probes", help="glyph file of probe patterns (default: the run's glyphs)")
    i.add_argument("--scan", action="store_true", help="enumerate all stable states (n <= 20)")
    i.set_defaults(func=cmd_inspect)

    g = sub.add_parser("glyphs", help="validate and print a glyph file (default: built-in)")
    g.add_argument("file", nargs="?")
    g.set_defaults(func=cmd_glyphs)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, GlyphParseError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, SnapshotError, ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
