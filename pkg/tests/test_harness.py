import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from zerohit import analytic
from zerohit.cli import main as cli_main
from zerohit.core import ConfigError, ExperimentConfig
from zerohit.harness import (N_SHARDS, run_sample_dump, run_sharded,
                             run_tabulate, run_verify_densities)


def small_cfg(**kw):
    base = dict(n_samples=2000, step_size=1e-2, seed=3)
    base.update(kw)
    return ExperimentConfig(**base)


class TestRunSharded:
    def test_merges_in_shard_order_and_worker_invariant(self):
        cfg = small_cfg()

        def task(st, k):
            return (st.uniforms(k),)

        a, = run_sharded(cfg.root_stream(), 1000, 1, task)
        b, = run_sharded(cfg.root_stream(), 1000, 8, task)
        assert a.shape == (1000,)
        assert np.array_equal(a, b)

    def test_shard_sizes_cover_total(self):
        sizes = []

        def task(st, k):
            sizes.append(k)
            return (np.empty(k),)

        run_sharded(small_cfg().root_stream(), 100, 1, task)
        assert sum(sizes) == 100
        assert len(sizes) <= N_SHARDS


class TestReproducibility:
    def test_rerun_byte_identical(self, tmp_path):
        cfg = small_cfg()
        d1, d2 = tmp_path / "a", tmp_path / "b"
        run_verify_densities(cfg, workers=1, out_dir=d1, make_figures=False)
        run_verify_densities(cfg, workers=1, out_dir=d2, make_figures=False)
        for name in ("verify_densities.json", "verify_densities_claims.csv"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_worker_count_invariant(self, tmp_path):
        cfg = small_cfg()
        d1, d8 = tmp_path / "w1", tmp_path / "w8"
        run_verify_densities(cfg, workers=1, out_dir=d1, make_figures=False)
        run_verify_densities(cfg, workers=8, out_dir=d8, make_figures=False)
        assert ((d1 / "verify_densities.json").read_bytes()
                == (d8 / "verify_densities.json").read_bytes())

    def test_report_json_shape(self, tmp_path):
        cfg = small_cfg()
        res = run_verify_densities(cfg, out_dir=tmp_path, make_figures=False)
        doc = json.loads((tmp_path / "verify_densities.json").read_text())
        assert doc["experiment"] == "verify_densities"
        assert doc["all_passed"] == res.all_passed
        assert "wall_time" not in doc
        for rep in doc["reports"]:
            assert set(rep) >= {"kind", "statistic", "p_value", "n", "pass",
                                "notes"}

    def test_figures_rendered_alongside_reports(self, tmp_path):
        run_verify_densities(small_cfg(), out_dir=tmp_path, make_figures=True)
        pngs = list(tmp_path.glob("*.png"))
        assert pngs, "expected rendered figure files"
        assert (tmp_path / "verify_densities_claims.csv").exists()

    def test_excessive_truncation_rejected(self, tmp_path):
        cfg = small_cfg(t_cap=1e2)  # ~8% of paths would be censored
        with pytest.raises(ConfigError, match="trunc"):
            run_verify_densities(cfg, out_dir=None, make_figures=False)


class TestTabulate:
    def test_known_point_value(self, tmp_path):
        spec = analytic.DensitySpec(law="v_density", x=1.0, u=0.5)
        path = run_tabulate(spec, np.array([1.0]), tmp_path / "law.csv")
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == 1
        assert float(rows[0]["value"]) == pytest.approx(8 / (5 * math.pi))
        assert rows[0]["law"] == "v_density"
        assert float(rows[0]["x"]) == 1.0 and float(rows[0]["u"]) == 0.5

    def test_far_tail_matches_asymptote(self, tmp_path):
        spec = analytic.DensitySpec(law="v_density", x=1.0, u=0.25)
        ys = np.array([1e3, 2e3, 5e3])
        path = run_tabulate(spec, ys, tmp_path / "tail.csv")
        rows = list(csv.DictReader(path.open()))
        c = analytic.v_tail_constant(1.0, 0.25)
        for row, y in zip(rows, ys):
            assert float(row["value"]) == pytest.approx(c / y ** 2, rel=0.01)


class TestSampleDump:
    def test_tau_dump_columns(self, tmp_path):
        cfg = small_cfg()
        path = run_sample_dump("tau", cfg, 200, tmp_path / "tau.csv")
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == 200
        r = rows[0]
        assert list(r) == ["sampler", "x", "u", "value", "tau", "truncated",
                           "seed", "stream_id"]
        assert r["sampler"] == "tau" and r["value"] == r["tau"]
        assert r["truncated"] == "False" and int(r["seed"]) == cfg.seed

    def test_v_dump_one_row_per_u(self, tmp_path):
        cfg = small_cfg()
        path = run_sample_dump("v", cfg, 64, tmp_path / "v.csv")
        rows = list(csv.DictReader(path.open()))
        assert len(rows) == 64 * 3  # u grid has three interior points
        assert {r["u"] for r in rows} == {"0.25", "0.5", "0.75"}

    def test_dump_deterministic(self, tmp_path):
        cfg = small_cfg()
        p1 = run_sample_dump("theorem1_rhs", cfg, 50, tmp_path / "a.csv")
        p2 = run_sample_dump("theorem1_rhs", cfg, 50, tmp_path / "b.csv")
        assert p1.read_bytes() == p2.read_bytes()

    def test_unknown_sampler(self, tmp_path):
        from zerohit.core import DomainError
        with pytest.raises(DomainError):
            run_sample_dump("bogus", small_cfg(), 10, tmp_path / "x.csv")


class TestCli:
    def test_verify_densities_passes_and_exits_zero(self, tmp_path):
        runner = CliRunner()
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n_samples = 20000\nstep_size = 1e-3\nseed = 1\n")
        result = runner.invoke(cli_main, [
            "verify-densities", "--config", str(cfg),
            "--out", str(tmp_path / "out")])
        assert result.exit_code == 0, result.output
        lines = [ln for ln in result.output.splitlines()
                 if ln.startswith("[PASS]") or ln.startswith("[FAIL]")]
        assert lines and all(ln.startswith("[PASS]") for ln in lines)
        assert (tmp_path / "out" / "verify_densities.json").exists()

    def test_seed_flag_overrides_config(self, tmp_path):
        runner = CliRunner()
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n_samples = 2000\nstep_size = 1e-2\nseed = 1\n")
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        for out in (out1, out2):
            runner.invoke(cli_main, [
                "verify-densities", "--config", str(cfg), "--seed", "77",
                "--out", str(out)])
        j1 = json.loads((out1 / "verify_densities.json").read_text())
        assert j1["config"]["seed"] == 77
        assert ((out1 / "verify_densities.json").read_bytes()
                == (out2 / "verify_densities.json").read_bytes())

    def test_unknown_config_key_is_error(self, tmp_path):
        runner = CliRunner()
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("n_samples = 2000\nfrobnicate = 1\n")
        result = runner.invoke(cli_main, [
            "verify-densities", "--config", str(cfg),
            "--out", str(tmp_path / "out")])
        assert result.exit_code != 0
        assert "unknown config key" in str(result.output) + str(
            result.exception)

    def test_tabulate_writes_csv(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "law.csv"
        result = runner.invoke(cli_main, [
            "tabulate", "--law", "tau_density", "--x", "1.0",
            "--grid", "1:1:1", "--out", str(out)])
        assert result.exit_code == 0, result.output
        rows = list(csv.DictReader(out.open()))
        assert float(rows[0]["value"]) == pytest.approx(
            math.exp(-0.5) / math.sqrt(2 * math.pi))

    def test_sample_dump_cli(self, tmp_path):
        runner = CliRunner()
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n_samples = 2000\nstep_size = 1e-2\nseed = 2\n")
        result = runner.invoke(cli_main, [
            "sample", "--sampler", "tau", "--n", "100",
            "--config", str(cfg), "--out", str(tmp_path / "dump")])
        assert result.exit_code == 0, result.output
        files = list((tmp_path / "dump").glob("*.csv"))
        assert files and sum(1 for _ in csv.DictReader(
            files[0].open())) == 100

    def test_help_lists_subcommands(self):
        result = CliRunner().invoke(cli_main, ["--help"])
        for name in ("verify-densities", "verify-theorem1",
                     "verify-conditionals", "verify-meander", "convergence",
                     "tabulate", "sample"):
            assert name in result.output
