"""Simulation driver: presentation loop, census, persistence and export.

One presentation step is: converge every recognition group from the
stimulus, update all excitations, propagate recognition weights, then
propagate abstraction weights from the pre-step recognition weights.
Letters are drawn uniformly and each is shown ``repetitions`` times in a row.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .alphabet import GlyphGrid, builtin_alphabet, load_glyph_set, pattern_matrix
from .dynamics import (
    LearningParams,
    PropagationStats,
    compute_theta_abs,
    propagate_abstraction,
    propagate_recognition,
    update_excitations,
)
from .hopfield import DimensionError, as_pattern, converge, converge_batch, energy, stable_mask, stable_states
from .repertoire import (
    AbstractionMap,
    ConfigurationError,
    RepertoireGraph,
    build_abstraction_map,
    build_recognition_repertoire,
)
from .snapshot import read_snapshot, write_snapshot

log = logging.getLogger(__name__)

# fixed spawn keys, so e.g. enabling noise leaves the letter order alone
STREAMS = {"repertoire": 0, "abstraction": 1, "letters": 2, "noise": 3}

SCAN_LIMIT = 20


@dataclass
class SimConfig:
    neuron_count: int = 16
    rec_size: int = 5000
    abs_size: int = 100
    mutation_count: int = 60
    fanout: int = 8
    branch_sample: int = 4
    back_edges: int = 32
    learning: LearningParams = field(default_factory=LearningParams)
    repetitions: int = 10
    presentations: int = 2000
    cadence: int = 100
    seed: int = 0
    glyphs: str = "builtin"

    def __post_init__(self):
        if isinstance(self.learning, dict):
            self.learning = _strict(LearningParams, self.learning, "learning")
        for name in ("neuron_count", "rec_size", "abs_size", "fanout",
                     "branch_sample", "repetitions", "cadence"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        for name in ("mutation_count", "back_edges", "presentations", "seed"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative")
        if self.abs_size > self.rec_size:
            raise ConfigurationError("abs_size cannot exceed rec_size")
        if self.branch_sample > self.fanout:
            raise ConfigurationError("branch_sample cannot exceed fanout")
        if self.presentations and self.cadence > self.presentations:
            raise ConfigurationError("cadence cannot exceed the number of presentations")

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        return _strict(cls, d, "config")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["learning"] = self.learning.to_dict()
        return d

    def replace(self, **changes) -> "SimConfig":
        d = self.to_dict()
        d.update(changes)
        return SimConfig.from_dict(d)

    def load_glyphs(self) -> list[GlyphGrid]:
        if self.glyphs == "builtin":
            return builtin_alphabet()
        return load_glyph_set(self.glyphs)


def _strict(cls, d: dict, what: str):
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigurationError(f"unknown {what} keys: {', '.join(unknown)}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid {what}: {exc}") from None


def load_config(path) -> SimConfig:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return SimConfig.from_dict(d)


def stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(STREAMS[name],)))


@dataclass
class MetricsRecord:
    t: int
    labels: list[str]
    rec_counts: np.ndarray
    abs_counts: np.ndarray
    duration: float = 0.0

    @property
    def letters_learned(self) -> int:
        return int((self.abs_counts >= 1).sum())

    def rec_covered(self) -> int:
        return int((self.rec_counts >= 1).sum())


def _chunks(m: int, workers: int) -> list[slice]:
    workers = max(1, min(workers, m))
    bounds = np.linspace(0, m, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def present_to_repertoire(weights: np.ndarray, pattern, workers: int = 1) -> np.ndarray:
    """Flip counts of every group when initialized to ``pattern``."""
    p = as_pattern(pattern, weights.shape[1])
    if workers <= 1 or weights.shape[0] < 2:
        return converge_batch(weights, p)[1]
    parts = _chunks(weights.shape[0], workers)
    with ThreadPoolExecutor(len(parts)) as ex:
        res = list(ex.map(lambda sl: converge_batch(weights[sl], p)[1], parts))
    return np.concatenate(res)


def census(weights: np.ndarray, patterns, workers: int = 1) -> np.ndarray:
    """Per pattern, the number of groups for which it is a stable state."""
    pats = np.atleast_2d(np.asarray(patterns, dtype=np.uint8))
    if weights.shape[0] == 0:
        return np.zeros(pats.shape[0], dtype=np.int64)
    if pats.shape[1] != weights.shape[1]:
        raise DimensionError(
            f"patterns have length {pats.shape[1]}, groups have {weights.shape[1]} neurons")
    if workers <= 1:
        return stable_mask(weights, pats).sum(axis=0)
    parts = _chunks(weights.shape[0], workers)
    with ThreadPoolExecutor(len(parts)) as ex:
        res = list(ex.map(lambda sl: stable_mask(weights[sl], pats).sum(axis=0), parts))
    return np.sum(res, axis=0)


def _check_glyphs(config: SimConfig, glyphs) -> None:
    if not glyphs:
        raise ConfigurationError("glyph set is empty")
    side = glyphs[0].side
    if side * side != config.neuron_count:
        raise ConfigurationError(
            f"glyphs are {side}x{side} but neuron_count is {config.neuron_count}")


class Simulation:
    """Mutable simulation state; build with :meth:`build` or :meth:`load`."""

    def __init__(self, config: SimConfig, glyphs: list[GlyphGrid], graph: RepertoireGraph,
                 amap: AbstractionMap, workers: int = 1):
        _check_glyphs(config, glyphs)
        if graph.neuron_count != config.neuron_count:
            raise ConfigurationError("repertoire neuron count does not match the config")
        self.config = config
        self.params = config.learning
        self.glyphs = glyphs
        self.labels = [g.label for g in glyphs]
        self.patterns = pattern_matrix(glyphs)
        self.graph = graph
        self.amap = amap
        self.workers = workers
        self.adjacency = graph.adjacency()
        self.connections = amap.connection_matrix(graph.size)
        self.theta_abs = compute_theta_abs(amap.connection_counts(), self.params)

        self.t = 0
        self.excitation = np.zeros(graph.size)
        self.last_flips = np.full(graph.size, -1, dtype=np.int64)
        self.letter = -1
        self.reps_left = 0
        self.letter_rng = stream(config.seed, "letters")
        self.noise_rng = stream(config.seed, "noise")
        self.rec_stats = PropagationStats()
        self.abs_stats = PropagationStats()

    @classmethod
    def build(cls, config: SimConfig, workers: int = 1, glyphs=None) -> "Simulation":
        glyphs = config.load_glyphs() if glyphs is None else glyphs
        _check_glyphs(config, glyphs)
        graph = build_recognition_repertoire(
            config.rec_size, config.mutation_count, config.fanout, config.branch_sample,
            config.back_edges, config.neuron_count, stream(config.seed, "repertoire"))
        amap = build_abstraction_map(graph, config.abs_size, stream(config.seed, "abstraction"))
        return cls(config, glyphs, graph, amap, workers)

    @property
    def frozen(self) -> np.ndarray:
        return self.excitation >= self.params.theta_freeze

    def present(self, pattern) -> np.ndarray:
        return present_to_repertoire(self.graph.weights, pattern, self.workers)

    def step(self) -> None:
        if self.reps_left == 0:
            self.letter = int(self.letter_rng.integers(len(self.glyphs)))
            self.reps_left = self.config.repetitions
        q = self.present(self.patterns[self.letter])
        s = update_excitations(self.excitation, q, self.params, self.noise_rng)
        rec_old = self.graph.weights
        rec_new = propagate_recognition(rec_old, s, self.adjacency, self.params, self.rec_stats)
        abs_new = propagate_abstraction(self.amap.weights, rec_old, s, self.connections,
                                        self.theta_abs, self.params, self.abs_stats)
        self.graph.weights = rec_new
        self.amap.weights = abs_new
        self.excitation = s
        self.last_flips = q
        self.reps_left -= 1
        self.t += 1

    def census(self) -> MetricsRecord:
        return MetricsRecord(
            self.t, list(self.labels),
            census(self.graph.weights, self.patterns, self.workers),
            census(self.amap.weights, self.patterns, self.workers))

    def run(self, until: int, checkpoint=None, on_record=None) -> list[MetricsRecord]:
        """Advance to ``until`` presentations, returning a record per census point.

        A census is taken at the current time if it is a census point, then
        every ``cadence`` presentations, and at ``until`` itself. With
        ``checkpoint`` set, the state is saved there at every census point.
        """
        cadence = self.config.cadence
        records = []
        clock = time.perf_counter()

        def take():
            nonlocal clock
            rec = self.census()
            now = time.perf_counter()
            rec.duration = now - clock
            clock = now
            records.append(rec)
            log.info("t=%d letters_learned=%d rec_covered=%d (%.2fs)",
                     rec.t, rec.letters_learned, rec.rec_covered(), rec.duration)
            if on_record is not None:
                on_record(rec)
            if checkpoint is not None:
                self.save(checkpoint)

        if self.t % cadence == 0:
            take()
        while self.t < until:
            self.step()
            if self.t % cadence == 0 or self.t == until:
                take()
        return records

    # persistence

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {
            "rec_weights": self.graph.weights,
            "rec_indptr": self.graph.indptr,
            "rec_indices": self.graph.indices,
            "rec_parent": self.graph.parent,
            "rec_layer": self.graph.layer,
            "abs_weights": self.amap.weights,
            "abs_anchors": self.amap.anchors,
            "abs_indptr": self.amap.indptr,
            "abs_indices": self.amap.indices,
            "excitation": self.excitation,
            "last_flips": self.last_flips,
            "patterns": self.patterns,
        }

    def state_meta(self) -> dict:
        return {
            "kind": "groupselect-simulation",
            "code_version": __version__,
            "config": self.config.to_dict(),
            "labels": self.labels,
            "n": self.config.neuron_count,
            "r": self.graph.size,
            "a": self.amap.size,
            "t": self.t,
            "letter": self.letter,
            "reps_left": self.reps_left,
            "seed": self.config.seed,
            "rng": {"letters": self.letter_rng.bit_generator.state,
                    "noise": self.noise_rng.bit_generator.state},
            "stats": {"rec": asdict(self.rec_stats), "abs": asdict(self.abs_stats)},
        }

    def save(self, path) -> str:
        return write_snapshot(path, self.state_meta(), self.state_arrays())

    @classmethod
    def load(cls, path, workers: int = 1, config: SimConfig | None = None) -> "Simulation":
        """Restore a saved state. ``config`` may override run-length settings only."""
        meta, arr = read_snapshot(path)
        saved = SimConfig.from_dict(meta["config"])
        if config is not None:
            structural = ("neuron_count", "rec_size", "abs_size", "mutation_count",
                          "fanout", "branch_sample", "back_edges")
            for name in structural:
                if getattr(config, name) != getattr(saved, name):
                    raise ConfigurationError(
                        f"config {name}={getattr(config, name)} does not match "
                        f"snapshot value {getattr(saved, name)}")
            saved = config
        labels = meta["labels"]
        side = int(round(np.sqrt(meta["n"])))
        glyphs = [GlyphGrid(lab, p.reshape(side, side)) for lab, p in zip(labels, arr["patterns"])]
        graph = RepertoireGraph(arr["rec_weights"], arr["rec_indptr"], arr["rec_indices"],
                                arr["rec_parent"], arr["rec_layer"])
        amap = AbstractionMap(arr["abs_anchors"], arr["abs_indptr"], arr["abs_indices"],
                              arr["abs_weights"])
        sim = cls(saved, glyphs, graph, amap, workers)
        sim.t = meta["t"]
        sim.letter = meta["letter"]
        sim.reps_left = meta["reps_left"]
        sim.excitation = arr["excitation"]
        sim.last_flips = arr["last_flips"]
        sim.letter_rng.bit_generator.state = meta["rng"]["letters"]
        sim.noise_rng.bit_generator.state = meta["rng"]["noise"]
        sim.rec_stats = PropagationStats(**meta["stats"]["rec"])
        sim.abs_stats = PropagationStats(**meta["stats"]["abs"])
        return sim


def run_simulation(config: SimConfig, out_dir=None, workers: int = 1, resume=None,
                   checkpoint: bool = False, on_record=None):
    """Build (or resume) and run to ``config.presentations``.

    Returns ``(records, simulation)``. With ``out_dir`` the metrics CSV,
    summary and final snapshot are written there. ``on_record`` is called
    with each census record as it is taken.
    """
    if resume is not None:
        sim = Simulation.load(resume, workers, config)
    else:
        sim = Simulation.build(config, workers)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    ckpt = out / "checkpoint.snap" if (out is not None and checkpoint) else None
    records = sim.run(config.presentations, checkpoint=ckpt, on_record=on_record)
    if out is not None:
        export_metrics(records, out, config=config)
        sim.save(out / "snapshot.snap")
    return records, sim


def metrics_csv(records: list[MetricsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "letter", "rec_count", "abs_count"])
    for rec in records:
        for lab, rc, ac in zip(rec.labels, rec.rec_counts, rec.abs_counts):
            w.writerow([rec.t, lab, int(rc), int(ac)])
    return buf.getvalue()


def export_metrics(records: list[MetricsRecord], destination, config: SimConfig | None = None):
    """Write ``metrics.csv`` and ``summary.json`` into ``destination``."""
    if not records:
        raise ValueError("no metrics records to export")
    dest = Path(destination)
    dest.mkdir(parents=True, exist_ok=True)
    final = records[-1]
    summary = {
        "code_version": __version__,
        "final_t": final.t,
        "letters_learned": final.letters_learned,
        "alphabet_size": len(final.labels),
        "learned": [lab for lab, c in zip(final.labels, final.abs_counts) if c >= 1],
        "census_points": len(records),
    }
    if config is not None:
        summary["seed"] = config.seed
        summary["config"] = config.to_dict()
    csv_path = dest / "metrics.csv"
    csv_path.write_text(metrics_csv(records))
    summary_path = dest / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return csv_path, summary_path


def inspect_group(sim: Simulation, group: int, probes=None, repertoire: str = "recognition",
                  scan: bool = False) -> dict:
    """Report on one group: excitation, weights, and how it treats probe patterns."""
    if repertoire == "recognition":
        stack = sim.graph.weights
    elif repertoire == "abstraction":
        stack = sim.amap.weights
    else:
        raise ValueError(f"unknown repertoire {repertoire!r}")
    if not 0 <= group < stack.shape[0]:
        raise IndexError(f"no {repertoire} group {group} (size {stack.shape[0]})")
    w = stack[group]
    n = w.shape[0]
    if probes is None:
        probes = dict(zip(sim.labels, sim.patterns))
    report = {"repertoire": repertoire, "group": group, "weights": w.copy(), "probes": {}}
    if repertoire == "recognition":
        report["excitation"] = float(sim.excitation[group])
        report["frozen"] = bool(sim.frozen[group])
        report["neighbors"] = sim.graph.neighbors(group).tolist()
    else:
        report["connections"] = sim.amap.connections(group).tolist()
        report["theta_abs"] = float(sim.theta_abs[group])
    for name, p in probes.items():
        res = converge(w, p)
        report["probes"][name] = {"flips": res.flips, "final": res.stable_state,
                                  "energy": energy(w, res.stable_state)}
    if scan:
        if n > SCAN_LIMIT:
            raise ValueError(
                f"exhaustive scan needs 2**{n} checks; only n <= {SCAN_LIMIT} is supported. "
                "Probe specific patterns instead.")
        report["stable_states"] = stable_states(w, SCAN_LIMIT)
    return report
