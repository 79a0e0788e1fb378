import json

import numpy as np
import pytest

from groupselect.alphabet import builtin_alphabet, pattern_matrix
from groupselect.harness import (
    MetricsRecord,
    SimConfig,
    Simulation,
    census,
    export_metrics,
    inspect_group,
    load_config,
    metrics_csv,
    present_to_repertoire,
    run_simulation,
)
from groupselect.hopfield import converge, is_stable, new_random_group
from groupselect.repertoire import ConfigurationError
from groupselect.snapshot import file_sha256


def small(**kw):
    base = dict(rec_size=300, abs_size=20, presentations=60, cadence=20, seed=4)
    base.update(kw)
    return SimConfig(**base)


def pair(w01):
    return np.array([[0.0, w01], [w01, 0.0]])


class TestPresent:
    def test_two_group_hand_trace(self):
        q = present_to_repertoire(np.stack([pair(1.0), pair(-1.0)]), [1, 1])
        assert q.tolist() == [0, 1]

    def test_single_group_matches_converge(self):
        w = new_random_group(16, np.random.default_rng(0))
        p = np.random.default_rng(1).integers(0, 2, 16)
        assert present_to_repertoire(w[None], p).tolist() == [converge(w, p).flips]

    def test_stable_pattern_gives_zero(self):
        w = new_random_group(16, np.random.default_rng(2))
        p = converge(w, np.ones(16, np.uint8)).stable_state
        assert present_to_repertoire(w[None], p)[0] == 0

    def test_weights_untouched_and_workers_agree(self):
        rng = np.random.default_rng(3)
        ws = np.stack([new_random_group(16, rng) for _ in range(101)])
        before = ws.copy()
        p = rng.integers(0, 2, 16)
        assert np.array_equal(present_to_repertoire(ws, p, 1), present_to_repertoire(ws, p, 4))
        assert np.array_equal(ws, before)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            present_to_repertoire(np.zeros((2, 4, 4)), [1, 0, 1])


class TestCensus:
    def test_empty(self):
        assert census(np.zeros((0, 16, 16)), pattern_matrix(builtin_alphabet())).tolist() == [0] * 26

    def test_single_group_single_glyph(self):
        # a group whose only stable state among the glyphs is its converged state
        pats = np.array([[1, 1], [1, 0], [0, 1]], dtype=np.uint8)
        assert census(pair(1.0)[None], pats).tolist() == [1, 0, 0]

    def test_matches_is_stable(self):
        rng = np.random.default_rng(5)
        ws = np.stack([new_random_group(16, rng) for _ in range(200)])
        pats = pattern_matrix(builtin_alphabet())
        ref = [sum(is_stable(w, p) for w in ws) for p in pats]
        assert census(ws, pats).tolist() == ref
        assert census(ws, pats, workers=3).tolist() == ref


class TestConfig:
    def test_unknown_keys(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"rec_size": 10, "bogus": 1}))
        with pytest.raises(ConfigurationError, match="bogus"):
            load_config(path)
        path.write_text(json.dumps({"learning": {"alpha": 0.1, "gamma": 2}}))
        with pytest.raises(ConfigurationError, match="gamma"):
            load_config(path)

    def test_round_trip(self, tmp_path):
        cfg = small(learning={"alpha": 0.1})
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert load_config(path) == cfg

    @pytest.mark.parametrize("kw", [{"rec_size": 0}, {"repetitions": 0}, {"cadence": 100},
                                    {"abs_size": 400}, {"learning": {"omega": 1.5}}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            small(**kw)

    def test_glyph_side_mismatch(self):
        with pytest.raises(ConfigurationError, match="neuron_count"):
            Simulation.build(small(neuron_count=9))

    def test_empty_glyph_set(self, tmp_path):
        path = tmp_path / "none.txt"
        path.write_text("")
        with pytest.raises(ConfigurationError, match="empty"):
            Simulation.build(small(glyphs=str(path)))


class TestRun:
    def test_zero_presentations(self):
        records, _ = run_simulation(small(presentations=0))
        assert [r.t for r in records] == [0]

    def test_census_points(self):
        records, sim = run_simulation(small(presentations=50, cadence=20))
        assert [r.t for r in records] == [0, 20, 40, 50]
        assert sim.t == 50

    def test_record_bounds(self):
        records, sim = run_simulation(small())
        for r in records:
            assert np.all((0 <= r.rec_counts) & (r.rec_counts <= sim.graph.size))
            assert np.all((0 <= r.abs_counts) & (r.abs_counts <= sim.amap.size))
            assert r.letters_learned == int((r.abs_counts >= 1).sum()) <= 26

    def test_letters_in_blocks(self):
        cfg = small(presentations=40, repetitions=10)
        sim = Simulation.build(cfg)
        letters = []
        for _ in range(40):
            sim.step()
            letters.append(sim.letter)
        assert all(len(set(letters[i:i + 10])) == 1 for i in range(0, 40, 10))

    def test_deterministic_outputs(self, tmp_path):
        run_simulation(small(), out_dir=tmp_path / "a")
        run_simulation(small(), out_dir=tmp_path / "b", workers=3)
        for name in ("metrics.csv", "summary.json", "snapshot.snap"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_different_seed_differs(self, tmp_path):
        run_simulation(small(), out_dir=tmp_path / "a")
        run_simulation(small(seed=5), out_dir=tmp_path / "b")
        assert file_sha256(tmp_path / "a" / "snapshot.snap") != file_sha256(tmp_path / "b" / "snapshot.snap")

    def test_resume_is_bit_exact(self, tmp_path):
        cfg = small(presentations=65, cadence=20, repetitions=7)
        full, _ = run_simulation(cfg, out_dir=tmp_path / "full")
        run_simulation(cfg.replace(presentations=40), out_dir=tmp_path / "half", checkpoint=True)
        rest, _ = run_simulation(cfg, out_dir=tmp_path / "rest",
                                 resume=tmp_path / "half" / "checkpoint.snap")
        assert (tmp_path / "full" / "snapshot.snap").read_bytes() == \
            (tmp_path / "rest" / "snapshot.snap").read_bytes()
        assert metrics_csv(full[2:]) == metrics_csv(rest)

    def test_resume_rejects_structural_change(self, tmp_path):
        sim = Simulation.build(small())
        sim.save(tmp_path / "s.snap")
        with pytest.raises(ConfigurationError, match="rec_size"):
            Simulation.load(tmp_path / "s.snap", config=small(rec_size=301))

    def test_noise_does_not_change_letter_order(self):
        a = Simulation.build(small())
        b = Simulation.build(small(learning={"noise_sigma": 0.3}))
        la, lb = [], []
        for _ in range(30):
            a.step()
            b.step()
            la.append(a.letter)
            lb.append(b.letter)
        assert la == lb
        assert not np.array_equal(a.excitation, b.excitation)


class TestExport:
    def record(self, t=0):
        labels = [g.label for g in builtin_alphabet()]
        return MetricsRecord(t, labels, np.arange(26), np.arange(26) % 2)

    def test_rows(self, tmp_path):
        csv_path, summary = export_metrics([self.record()], tmp_path)
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "t,letter,rec_count,abs_count"
        assert len(lines) == 27
        assert lines[2] == "0,B,1,1"
        assert json.loads(summary.read_text())["letters_learned"] == 13

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            export_metrics([], tmp_path)

    def test_identical_bytes(self, tmp_path):
        recs = [self.record(0), self.record(100)]
        recs[1].duration = 123.0
        a, _ = export_metrics(recs, tmp_path / "a", config=small())
        b, _ = export_metrics(recs, tmp_path / "b", config=small())
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            export_metrics([self.record()], blocker / "sub")


@pytest.fixture(scope="module")
def sim():
    s = Simulation.build(small())
    s.run(20)
    return s


class TestInspect:
    def test_own_stable_state(self, sim):
        w = sim.graph.weights[7]
        own = converge(w, np.ones(16, np.uint8)).stable_state
        rep = inspect_group(sim, 7, {"own": own, "complement": 1 - own})
        assert rep["probes"]["own"]["flips"] == 0
        assert rep["probes"]["complement"]["flips"] == converge(w, 1 - own).flips >= 1
        assert rep["excitation"] == sim.excitation[7]
        assert rep["frozen"] == bool(sim.excitation[7] >= sim.params.theta_freeze)

    def test_scan_matches_brute_force(self, sim):
        rep = inspect_group(sim, 3, {}, scan=True)
        w = sim.graph.weights[3]
        found = {tuple(s) for s in rep["stable_states"].tolist()}
        codes = np.arange(2 ** 16)
        bits = ((codes[:, None] >> np.arange(16)) & 1).astype(np.uint8)
        brute = {tuple(b) for b in bits.tolist() if is_stable(w, np.array(b, dtype=np.uint8))}
        assert found == brute

    def test_abstraction_group(self, sim):
        rep = inspect_group(sim, 0, repertoire="abstraction")
        assert rep["connections"] == sim.amap.connections(0).tolist()
        assert len(rep["probes"]) == 26

    def test_unknown_group(self, sim):
        with pytest.raises(IndexError):
            inspect_group(sim, 10_000)

    def test_scan_refused_for_large_n(self):
        glyphs = [g for g in builtin_alphabet()]
        cfg = small(neuron_count=25, rec_size=5, abs_size=1, presentations=0)
        from groupselect.alphabet import GlyphGrid
        big = [GlyphGrid(g.label, np.pad(g.cells, ((0, 1), (0, 1)))) for g in glyphs]
        sim = Simulation.build(cfg, glyphs=big)
        with pytest.raises(ValueError, match="n <= 20"):
            inspect_group(sim, 0, {}, scan=True)
