import hashlib
import json
from pathlib import Path

import pytest

from socialsim.cli import main


@pytest.fixture()
def plan_file(tmp_path):
    cfg = {
        "base_seed": 5,
        "n_agents": 40,
        "timesteps": 40,
        "activation_p": 0.05,
        "policy": {"kind": "mock"},
    }
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture()
def run_dir(plan_file, tmp_path):
    out = tmp_path / "runs"
    assert main(["simulate", "--config", str(plan_file), "--out", str(out)]) == 0
    return out


@pytest.fixture()
def analysis_dir(run_dir, tmp_path):
    out = tmp_path / "analysis"
    assert main(["analyze", "--logs", str(run_dir), "--out", str(out)]) == 0
    return out


class TestGenerators:
    def test_gen_population(self, tmp_path):
        out = tmp_path / "pop.jsonl"
        assert main(["gen-population", "--n", "40", "--seed", "3", "--out", str(out)]) == 0
        from socialsim.population import load_population

        profiles, _ = load_population(out)
        assert len(profiles) == 40

    def test_gen_corpus(self, tmp_path):
        out = tmp_path / "corpus.jsonl"
        assert main(["gen-corpus", "--seed", "3", "--size", "10", "--out", str(out)]) == 0
        from socialsim.population import load_corpus

        assert len(load_corpus(out)) == 10


class TestSimulate:
    def test_missing_config_exits_2(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2

    def test_invalid_json_config_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_single_cell_run(self, plan_file, tmp_path):
        out = tmp_path / "one"
        rc = main(
            ["simulate", "--config", str(plan_file), "--out", str(out), "--cell", "load=high,norm=repost", "--policy", "mock"]
        )
        assert rc == 0
        logs = list((out / "logs").glob("*.jsonl"))
        assert len(logs) == 1
        assert logs[0].name == "high_repost_dominant_r0.jsonl"

    def test_bad_cell_spec_exits_2(self, plan_file, tmp_path):
        assert main(["simulate", "--config", str(plan_file), "--out", str(tmp_path / "o"), "--cell", "load=enormous,norm=repost"]) == 2

    def test_determinism_same_flags_same_manifest(self, plan_file, tmp_path):
        digests = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["simulate", "--config", str(plan_file), "--out", str(out), "--seed", "9"]) == 0
            digests.append(hashlib.sha256((out / "manifest.json").read_bytes()).hexdigest())
        assert digests[0] == digests[1]

    def test_unknown_flag_exits_2(self, plan_file, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--config", str(plan_file), "--out", str(tmp_path / "o"), "--bogus"])
        assert exc.value.code == 2


class TestAnalyze:
    def test_coefficient_csv_row_counts(self, analysis_dir):
        threshold = (analysis_dir / "threshold_coefficients.csv").read_text().strip().splitlines()
        assert len(threshold) == 1 + 24
        allocation = (analysis_dir / "allocation_coefficients.csv").read_text().strip().splitlines()
        assert len(allocation) == 1 + 48

    def test_stage_filter_skips_allocation(self, run_dir, tmp_path):
        out = tmp_path / "thr_only"
        assert main(["analyze", "--logs", str(run_dir), "--out", str(out), "--stage", "threshold"]) == 0
        assert (out / "threshold_coefficients.csv").exists()
        assert not (out / "allocation_coefficients.csv").exists()

    def test_missing_logs_exit_1(self, tmp_path):
        assert main(["analyze", "--logs", str(tmp_path / "void"), "--out", str(tmp_path / "o")]) == 1

    def test_descriptive_outputs_exist(self, analysis_dir):
        assert (analysis_dir / "descriptive_shares.csv").exists()
        assert (analysis_dir / "load_audit.csv").exists()
        assert (analysis_dir / "fit_metrics.csv").exists()

    def test_shares_rows_sum_to_one(self, analysis_dir):
        import csv

        with open(analysis_dir / "descriptive_shares.csv", newline="") as fh:
            for row in csv.DictReader(fh):
                total = sum(float(row[a]) for a in ("read", "like", "repost", "quote"))
                # file values carry six decimals, so allow their rounding error
                assert total == pytest.approx(1.0, abs=2e-6)


class TestReport:
    def test_outputs(self, analysis_dir, tmp_path):
        out = tmp_path / "report"
        assert main(["report", "--analysis", str(analysis_dir), "--out", str(out)]) == 0
        svgs = list(out.glob("*.svg"))
        assert len(svgs) >= 2
        assert (out / "report.md").exists()

    def test_twelve_curves(self, analysis_dir, tmp_path):
        out = tmp_path / "report"
        main(["report", "--analysis", str(analysis_dir), "--out", str(out)])
        svg = (out / "threshold_probability_curves.svg").read_text()
        assert svg.count('class="curve"') == 4 * 3

    def test_stacked_bars_cover_all_cells_and_actions(self, analysis_dir, tmp_path):
        out = tmp_path / "report"
        main(["report", "--analysis", str(analysis_dir), "--out", str(out)])
        svg = (out / "shares_by_condition.svg").read_text()
        assert svg.count("seg-read") == 12
        for action in ("like", "repost", "quote"):
            assert svg.count(f"seg-{action}") == 12

    def test_bar_segment_heights_sum_to_plot_height(self, analysis_dir, tmp_path):
        import re

        out = tmp_path / "report"
        main(["report", "--analysis", str(analysis_dir), "--out", str(out)])
        svg = (out / "shares_by_condition.svg").read_text()
        heights = {}
        for m in re.finditer(r'<rect class="seg-\w+" x="([\d.]+)" y="[\d.]+" width="[\d.]+" height="([\d.]+)"', svg):
            heights.setdefault(m.group(1), 0.0)
            heights[m.group(1)] += float(m.group(2))
        assert len(heights) == 12
        for total in heights.values():
            assert total == pytest.approx(270.0, abs=0.1)  # plot height: full bar

    def test_missing_analysis_file_named(self, tmp_path, capsys):
        out = tmp_path / "report"
        rc = main(["report", "--analysis", str(tmp_path / "void"), "--out", str(out)])
        assert rc == 1
        assert "descriptive_shares.csv" in capsys.readouterr().err

    def test_custom_scenario_grid(self, analysis_dir, tmp_path):
        grid = tmp_path / "grid.csv"
        grid.write_text(
            "composite,load,norm\n"
            + "\n".join(f"{c},{l},no_norm" for c in (0.0, 0.5, 1.0) for l in ("lowest", "high"))
        )
        out = tmp_path / "report"
        assert main(["report", "--analysis", str(analysis_dir), "--out", str(out), "--grid", str(grid)]) == 0
        svg = (out / "threshold_probability_curves.svg").read_text()
        assert svg.count('class="curve"') == 2


class TestHelp:
    @pytest.mark.parametrize("cmd", ["simulate", "analyze", "report", "gen-population", "gen-corpus"])
    def test_help_lists_flags(self, cmd, capsys):
        with pytest.raises(SystemExit) as exc:
            main([cmd, "--help"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        assert "--out" in out
