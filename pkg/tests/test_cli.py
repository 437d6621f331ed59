import csv
import json
import re
from pathlib import Path

import numpy as np
import pytest

from mamlflow.cli import CSV_HEADER, main, render_svg

ROOT = Path(__file__).resolve().parents[1]


def _config(tmp_path, name="exp.json", **cfg):
    base = {"pool": {"kind": "two_task"}, "algorithms": ["maml"], "maml": {"alpha": 0.1, "beta": 0.1, "eps": 1e-4},
            "w0": [2.0], "seed": 0}
    base.update(cfg)
    p = tmp_path / name
    p.write_text(json.dumps(base))
    return p


class TestRun:
    def test_outputs(self, tmp_path):
        cfg = _config(tmp_path, algorithms=["maml", "bi_maml"])
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        rows = list(csv.reader((tmp_path / "o" / "maml.csv").open()))
        assert rows[0] == CSV_HEADER
        assert rows[1][:3] == ["exp-s0", "maml", "0"]
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert [s["algorithm"] for s in summary] == ["maml", "bi_maml"]
        assert set(summary[0]) == {"algorithm", "terminal_gradF_norm", "iters", "t_final", "hess_evals",
                                   "grad_evals", "wall_ns", "termination"}
        ratio = json.loads((tmp_path / "o" / "comparison.json").read_text())
        assert 0 < ratio["hess_evals_ratio"] < 1

    def test_lf_and_roundtrip_floats(self, tmp_path):
        cfg = _config(tmp_path)
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
        raw = (tmp_path / "o" / "maml.csv").read_bytes()
        assert b"\r\n" not in raw
        row = raw.decode().splitlines()[2].split(",")
        # iterate 1 is w = 2 (1 - beta s) with s = (1 - alpha)^2, and F = s (w^2 + 1) / 2
        s = 0.81
        w1 = 2.0 * (1 - 0.1 * s)
        assert float(row[5]) == pytest.approx(s * (w1 * w1 + 1) / 2, rel=1e-15)
        assert repr(float(row[5])) == row[5]
        assert row[-1] == "0"

    def test_byte_identical(self, tmp_path):
        cfg = _config(tmp_path, algorithms=["maml", "bi_maml", "fo_maml"])
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")])
        for name in ("maml", "bi_maml", "fo_maml"):
            assert (tmp_path / "a" / f"{name}.csv").read_bytes() == (tmp_path / "b" / f"{name}.csv").read_bytes()

    def test_seed_override_changes_start(self, tmp_path):
        cfg = _config(tmp_path, pool={"kind": "random_quadratic", "M": 3, "d": 2}, w0=None)
        data = json.loads(cfg.read_text())
        del data["w0"]
        cfg.write_text(json.dumps(data))
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "a"), "--seed", "1"])
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "2"])
        assert (tmp_path / "a" / "maml.csv").read_bytes() != (tmp_path / "b" / "maml.csv").read_bytes()

    def test_beta_zero(self, tmp_path, capsys):
        cfg = _config(tmp_path, maml={"beta": 0})
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "maml.beta" in capsys.readouterr().err

    def test_unknown_algorithm(self, tmp_path, capsys):
        cfg = _config(tmp_path, algorithms=["sgd"])
        assert main(["run", "--config", str(cfg)]) == 2
        assert "unknown algorithm" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "cfg, key",
        [
            ({"pool": {"kind": "nope"}}, "pool.kind"),
            ({"maml": {"alpha": "big"}}, "maml.alpha"),
            ({"budgets": {"max_iters": 1.5}}, "budgets.max_iters"),
            ({"w0": [1.0, 2.0]}, "w0"),
            ({"suite": {"kind": "regression"}}, "pool"),
        ],
    )
    def test_config_errors_name_key(self, tmp_path, capsys, cfg, key):
        p = _config(tmp_path, **cfg)
        assert main(["run", "--config", str(p)]) == 2
        assert key in capsys.readouterr().err

    def test_missing_and_malformed_config(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "none.json")]) == 2
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert main(["run", "--config", str(bad)]) == 2

    def test_divergence_exit(self, tmp_path):
        cfg = _config(tmp_path, maml={"alpha": 0.1, "beta": 10.0, "eps": 1e-4})
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
        summary = json.loads((tmp_path / "o" / "summary.json").read_text())
        assert summary[0]["termination"] == "diverged"

    def test_suite_and_csv_sources(self, tmp_path):
        suite = _config(tmp_path, "s.json", pool=None, w0=None,
                        suite={"kind": "regression", "M": 3, "d": 4, "n": 20}, budgets={"max_iters": 20})
        data = json.loads(suite.read_text())
        del data["pool"], data["w0"]
        suite.write_text(json.dumps(data))
        assert main(["run", "--config", str(suite), "--out", str(tmp_path / "s")]) == 0

        table = tmp_path / "t.csv"
        from mamlflow.datagen import write_synthetic_table

        write_synthetic_table(table, n=80)
        data = {"csv": {"path": str(table), "features": ["age", "bmi"], "label": "target"},
                "algorithms": ["maml"], "maml": {"alpha": 0.1, "beta": 0.1}, "budgets": {"max_iters": 10}}
        p = tmp_path / "c.json"
        p.write_text(json.dumps(data))
        assert main(["run", "--config", str(p), "--out", str(tmp_path / "c")]) == 0


class TestVerify:
    def test_two_task_passes(self, tmp_path):
        cfg = _config(tmp_path, verify={"checks": ["lyapunov", "envelope", "norm_transfer", "time_bound_maml"]})
        assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")]) == 0
        report = json.loads((tmp_path / "v" / "report.json").read_text())
        assert {r["status"] for r in report} == {"pass"}
        assert all(set(r) == {"check", "status", "margin", "hypothesis", "details"} for r in report)

    def test_forced_check_above_bound(self, tmp_path):
        # alpha = 0.2 exceeds alpha_bound_thm1 = 1/15 on the two-task pool
        cfg = _config(tmp_path, maml={"alpha": 0.2, "beta": 0.1}, verify={"checks": ["time_bound_maml"]})
        assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v")]) == 0
        report = json.loads((tmp_path / "v" / "report.json").read_text())
        assert report[0]["status"] == "hypothesis-violated"

    def test_failure_exit(self, tmp_path, monkeypatch):
        from mamlflow import diagnostics

        def fake_verify(*a, **k):
            c = diagnostics.SmoothnessConstants(1.0, 1.0, 0.0, 1.0)
            return [diagnostics.CheckReport("lyapunov", "fail", -1.0, {}, {})], c

        monkeypatch.setattr(diagnostics, "verify", fake_verify)
        assert main(["verify", "--config", str(_config(tmp_path)), "--out", str(tmp_path / "v")]) == 1


class TestConstants:
    def test_two_task(self, tmp_path, capsys):
        assert main(["constants", "--config", str(_config(tmp_path))]) == 0
        out = json.loads(capsys.readouterr().out)
        assert (out["L"], out["mu"], out["kappa"], out["sigma"]) == pytest.approx((1, 1, 0, 1))
        assert out["alpha_bound_thm1"] == pytest.approx(1 / 15)

    def test_counterexample(self, tmp_path, capsys):
        assert main(["constants", "--config", str(_config(tmp_path, pool={"kind": "counterexample"}))]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["mu"] == pytest.approx(0.01) and out["L"] == pytest.approx(2.01)

    def test_hinge_flagged(self, tmp_path, capsys):
        from mamlflow.datagen import write_synthetic_table

        table = tmp_path / "t.csv"
        write_synthetic_table(table, n=60)
        p = tmp_path / "h.json"
        p.write_text(json.dumps({"csv": {"path": str(table), "features": ["age", "bmi"], "label": "label",
                                         "loss": "hinge"}}))
        assert main(["constants", "--config", str(p)]) == 1
        out = json.loads(capsys.readouterr().out)
        assert out["mu_le_zero"] is True and out["mu"] <= 0


class TestCounterexample:
    def test_scan_outputs(self, tmp_path, capsys):
        assert main(["counterexample", "--out", str(tmp_path)]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["min_d2F"] < 0
        rows = list(csv.reader((tmp_path / "counterexample.csv").open()))
        assert rows[0] == ["w", "d2F"] and len(rows) == 6002

    def test_alpha_zero(self, capsys):
        assert main(["counterexample", "--alpha", "0"]) == 0
        assert json.loads(capsys.readouterr().out)["min_d2F"] >= 0.01

    @pytest.mark.parametrize("args", [["--step", "0"], ["--step", "-1"], ["--grid-min", "1", "--grid-max", "0"]])
    def test_bad_grid(self, args):
        assert main(["counterexample", *args]) == 2


class TestPlot:
    def _runs(self, tmp_path):
        cfg = _config(tmp_path, algorithms=["maml", "bi_maml"])
        main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
        return [str(tmp_path / "o" / "maml.csv"), str(tmp_path / "o" / "bi_maml.csv")]

    def test_two_polylines(self, tmp_path):
        svg = tmp_path / "g.svg"
        assert main(["plot", *self._runs(tmp_path), "--out", str(svg), "--column", "gradF_norm", "--log-y"]) == 0
        text = svg.read_text()
        assert text.count("<polyline") == 2 and "log10 gradF_norm" in text

    def test_one_file_per_column(self, tmp_path):
        svg = tmp_path / "g.svg"
        assert main(["plot", *self._runs(tmp_path), "--out", str(svg), "--column", "F_val", "--column", "gradF_norm"]) == 0
        assert (tmp_path / "g_F_val.svg").exists() and (tmp_path / "g_gradF_norm.svg").exists()

    def test_missing_column(self, tmp_path, capsys):
        assert main(["plot", self._runs(tmp_path)[0], "--out", str(tmp_path / "g.svg"), "--column", "loss"]) == 2
        assert "loss" in capsys.readouterr().err

    def test_empty_csv(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        assert main(["plot", str(p), "--out", str(tmp_path / "g.svg")]) == 2
        p.write_text(",".join(CSV_HEADER) + "\n")
        assert main(["plot", str(p), "--out", str(tmp_path / "g.svg")]) == 2

    def test_schema_mismatch(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("iter,gradF_norm\n0,1.0\n")
        assert main(["plot", str(p), "--out", str(tmp_path / "g.svg")]) == 2

    def test_render_points_inside_frame(self):
        svg = render_svg([(np.arange(5.0), np.array([1.0, 0.5, 0.1, 0.01, 0.0]), "a")], "gradF_norm", log_y=True)
        pts = re.search(r'points="([^"]+)"', svg).group(1).split()
        assert len(pts) == 4  # the zero is dropped on a log axis
        for p in pts:
            x, y = map(float, p.split(","))
            assert 70 <= x <= 620 and 30 <= y <= 355


class TestDocs:
    def test_stdout_and_file(self, tmp_path, capsys):
        assert main(["docs"]) == 0
        assert "| anchor |" in capsys.readouterr().out
        out = tmp_path / "m.md"
        rep = tmp_path / "r.json"
        rep.write_text('[{"check": "lyapunov", "status": "pass"}]')
        assert main(["docs", "--out", str(out), "--report", str(rep)]) == 0
        assert "lyapunov: pass" in out.read_text()


class TestShippedConfigs:
    @pytest.mark.parametrize("name", sorted(p.name for p in (ROOT / "configs").glob("*.json")))
    def test_configs_parse(self, name):
        from mamlflow.cli import load_experiment

        exp = load_experiment(ROOT / "configs" / name)
        assert exp.algorithms and exp.w0.shape == (exp.pool.dim,)
