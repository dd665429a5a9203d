import json

import numpy as np
import pytest

from optimalk import montecarlo
from optimalk.asymptotics import Sinusoid, theorem3_report
from optimalk.estimator import ErrorModel
from optimalk.exceptions import BoundsError, InsufficientDataError
from optimalk.montecarlo import (
    SimulationConfig,
    best_candidate_heatmap,
    cell_squared_errors,
    estimator_name,
    normal_block,
    preset,
    rmse_vs_n_curves,
    run_cell,
    scaled_rmse,
    write_outputs,
)
from optimalk.seqgen import generate, rice_sequence, rule_of_thumb


def small_config(**changes):
    base = dict(n_values=(30, 60), sigma_values=(0.5, 1.5), omega_values=(1.0, 3.0),
                candidates=((1, 0), (3, 1), (3, 2)), replications=300, seed=11)
    return SimulationConfig(**{**base, **changes})


class TestNoise:
    def test_random_access(self):
        block = normal_block(5, 3, 0, 0, 10, 7)
        single = normal_block(5, 3, 0, 6, 1, 7)
        assert np.array_equal(block[6], single[0])

    def test_streams_and_cells_differ(self):
        a = normal_block(5, 3, 0, 0, 1, 50)
        assert not np.array_equal(a, normal_block(5, 3, 1, 0, 1, 50))
        assert not np.array_equal(a, normal_block(5, 4, 0, 0, 1, 50))
        assert not np.array_equal(a, normal_block(6, 3, 0, 0, 1, 50))

    def test_standard_normal_moments(self):
        z = normal_block(1, 0, 0, 0, 2000, 100).ravel()
        assert abs(z.mean()) < 5 / np.sqrt(z.size)
        assert abs(z.var() - 1) < 5 * np.sqrt(2 / z.size)
        assert abs(np.mean(z**4) - 3) < 0.05

    def test_chunking_does_not_change_results(self, monkeypatch):
        seqs = [rule_of_thumb(), rice_sequence()]
        ref = cell_squared_errors(40, 1.0, 2.0, seqs, 500, seed=3, cell=2)
        monkeypatch.setattr(montecarlo, "CHUNK_ELEMENTS", 40 * 7)
        assert np.array_equal(ref, cell_squared_errors(40, 1.0, 2.0, seqs, 500, seed=3, cell=2))


class TestRunCell:
    @pytest.mark.parametrize("seq", [rule_of_thumb(), rice_sequence()], ids=["d1(3)", "rice"])
    def test_flat_setting(self, seq):
        rmse, stderr = run_cell(500, 1.5, 1.0, seq, 10_000, seed=2)
        assert 1.35 <= rmse <= 1.65
        assert 0 < stderr < 0.05

    def test_deterministic(self):
        a = run_cell(50, 1.0, 2.0, rule_of_thumb(), 500, seed=9)
        b = run_cell(50, 1.0, 2.0, rule_of_thumb(), 500, seed=9)
        assert a == b
        assert a != run_cell(50, 1.0, 2.0, rule_of_thumb(), 500, seed=10)

    def test_errors(self):
        with pytest.raises(ValueError):
            run_cell(50, 1.0, 1.0, rule_of_thumb(), 0, seed=1)
        with pytest.raises(InsufficientDataError):
            run_cell(3, 1.0, 1.0, rule_of_thumb(), 100, seed=1)
        with pytest.raises(TypeError):
            run_cell(50, 1.0, 1.0, [0.7, -0.7], 100, seed=1)

    def test_scaled_rmse(self):
        rmse, stderr = scaled_rmse([0.0, 2.0], n=4, sigma=1.0)
        assert rmse == 2.0
        assert stderr == pytest.approx(2.0 * np.std([0.0, 2.0], ddof=1) / np.sqrt(2))

    def test_stderr_matches_batch_spread(self):
        se = cell_squared_errors(100, 1.0, 1.0, [rule_of_thumb()], 5000, seed=21)[0]
        _, stderr = scaled_rmse(se, 100, 1.0)
        batch_means = [scaled_rmse(b, 100, 1.0)[0] for b in np.split(se, 10)]
        spread = np.std(batch_means, ddof=1) / np.sqrt(10)
        assert 0.5 < spread / stderr < 2.0

    def test_matches_asymptotics_at_largest_n(self):
        n = 500
        for r, k in [(2, 1), (3, 1), (4, 1), (4, 2)]:
            for sigma, omega in [(1.0, 0.5), (1.5, 1.0)]:
                rmse, stderr = run_cell(n, sigma, omega, generate(r, k), 4000, seed=5)
                ref = theorem3_report(r, k, Sinusoid(5.0, omega), ErrorModel.normal(sigma), n).rmse
                assert abs(rmse - ref) < 3 * stderr, (r, k, sigma, omega, rmse, ref, stderr)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError, match="replications"):
            small_config(replications=99)
        with pytest.raises(InsufficientDataError):
            small_config(n_values=(3, 60))
        with pytest.raises(BoundsError):
            small_config(candidates=((3, 3),))
        with pytest.raises(ValueError, match="seed"):
            small_config(seed=-1)
        with pytest.raises(ValueError):
            small_config(sigma_values=(0.0,))

    def test_presets(self):
        t2 = preset("table2")
        assert len(t2.cells()) == 300
        assert len(t2.candidates) == 10
        assert t2.sigma_values[2] == 0.6 and t2.omega_values[-1] == 5.0
        fig3 = preset("fig3")
        assert fig3.candidates == ((3, 0), (3, 2), (3, 1))
        assert fig3.n_values == tuple(range(25, 501, 25))
        assert preset("fig4").candidates[2] == (3, 1)
        assert preset("figS1", replications=100).replications == 100
        with pytest.raises(ValueError):
            preset("fig9")

    def test_replace_and_dict(self):
        cfg = small_config().replace(seed=12)
        assert cfg.seed == 12
        data = json.loads(json.dumps(cfg.to_dict()))
        assert SimulationConfig(**{**data, "candidates": data["candidates"]}) == cfg


class TestHeatmap:
    def test_one_winner_per_cell(self):
        summary = best_candidate_heatmap(small_config())
        groups = summary.cell_records()
        assert len(groups) == 8
        for records in groups.values():
            assert sum(rec.best for rec in records) == 1
            best = min(records, key=lambda rec: rec.rmse)
            assert best.best
            assert all(rec.rmse >= 0 for rec in records)

    def test_parallel_identical(self):
        cfg = small_config()
        assert best_candidate_heatmap(cfg, jobs=4).records == best_candidate_heatmap(cfg).records

    def test_coupling_toggle_within_noise(self):
        cfg = small_config(replications=1000)
        coupled = best_candidate_heatmap(cfg)
        independent = best_candidate_heatmap(cfg.replace(common_random_numbers=False))
        for a, b in zip(coupled.records, independent.records):
            assert abs(a.rmse - b.rmse) < 3 * np.hypot(a.stderr, b.stderr)

    def test_regional_structure(self):
        base = dict(candidates=montecarlo.STUDY_CANDIDATES, replications=2000, seed=4)
        flat = best_candidate_heatmap(SimulationConfig(
            n_values=(500,), sigma_values=(2.0,), omega_values=(0.5,), **base)).winners()[0]
        rough = best_candidate_heatmap(SimulationConfig(
            n_values=(25,), sigma_values=(0.2,), omega_values=(5.0,), **base)).winners()[0]
        assert flat.k == 0 and flat.r > 1
        assert rough.k == rough.r - 1 and rough.r > 1

    def test_curves(self):
        cfg = small_config()
        points = rmse_vs_n_curves(cfg)
        assert len(points) == 2 * 2 * 2 * 3
        first = points[:2]
        assert [p.n for p in first] == [30, 60]
        assert first[0].label == "Rice"
        assert np.isfinite([p.log_rmse for p in points]).all()

    @pytest.mark.parametrize("rk,name", [((1, 0), "Rice"), ((3, 0), "opt(3)"),
                                         ((3, 2), "ord(3)"), ((4, 1), "d_1(4)")])
    def test_names(self, rk, name):
        assert estimator_name(*rk) == name


class TestOutputs:
    def test_files(self, tmp_path):
        summary = best_candidate_heatmap(small_config())
        paths = write_outputs(summary, tmp_path / "out")
        text = open(paths["summary.csv"], "rb").read()
        assert b"\r" not in text
        lines = text.decode("utf-8").splitlines()
        assert lines[0] == "n,sigma,omega,r,k,rmse,stderr,best"
        assert len(lines) == 1 + 8 * 3
        winners = open(paths["winners.csv"], encoding="utf-8").read().splitlines()
        assert len(winners) == 1 + 8
        config = json.load(open(paths["config.json"], encoding="utf-8"))
        assert config["seed"] == 11 and config["candidates"][1] == [3, 1]

    def test_byte_identical(self, tmp_path):
        cfg = small_config()
        a = write_outputs(best_candidate_heatmap(cfg), tmp_path / "a")
        b = write_outputs(best_candidate_heatmap(cfg, jobs=3), tmp_path / "b")
        for name in a:
            assert open(a[name], "rb").read() == open(b[name], "rb").read()
