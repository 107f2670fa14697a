import json

import numpy as np
import pytest

from laxforge import model
from laxforge.cli import main as cli_main
from laxforge.harness import (ConfigError, SuiteConfig, generate_instance,
                              run_suite)


class TestGenerate:
    def test_determinism(self):
        a = generate_instance((3, (2,)), 42)
        b = generate_instance((3, (2,)), 42)
        assert np.array_equal(a.oper.q, b.oper.q)
        assert np.array_equal(a.oper.p, b.oper.p)
        assert a.chart.t == b.chart.t and a.chart.t0 == b.chart.t0

    def test_separation_contract(self):
        inst = generate_instance((5, (1, 2)), 7)
        q = inst.oper.q
        g = q.size
        gaps = np.abs(q[:, None] - q[None, :]) + 10 * np.eye(g)
        assert np.min(gaps) >= 0.1

    def test_constraints_hold_by_construction(self):
        from laxforge.coords import qp_to_geo
        inst = generate_instance((2, (1, 2)), 3)
        geo = qp_to_geo(inst.oper, inst.omega, inst.profile)
        viol = model.validate_chart_constraints(geo, inst.profile, inst.omega,
                                                inst.chart)
        assert max(abs(v) for v in viol.values()) < 1e-10


class TestRunSuite:
    def test_empty_suites(self):
        rep = run_suite(SuiteConfig(suites=(), instances_per_case=1))
        assert rep.checks == [] and rep.passed

    def test_unknown_suite_rejected(self):
        with pytest.raises(ConfigError):
            run_suite(SuiteConfig(suites=("nope",)))

    def test_unsupported_case_rejected(self):
        with pytest.raises(model.UnsupportedProfileError):
            run_suite(SuiteConfig(cases=((3, ()),), suites=("gauge",)))

    def test_reports_deterministic(self):
        config = SuiteConfig(cases=((3, (2,)),), instances_per_case=2,
                             suites=("gauge", "spectral"))
        r1 = run_suite(config).to_json(strip_wall_times=True)
        r2 = run_suite(config).to_json(strip_wall_times=True)
        assert r1 == r2

    def test_threading_matches_serial(self):
        config = SuiteConfig(cases=((3, (2,)), (4, ())), instances_per_case=1,
                             suites=("gauge", "hamiltonian-equivalence"))
        serial = run_suite(config).to_json(strip_wall_times=True)
        config.threads = 3
        threaded = run_suite(config).to_json(strip_wall_times=True)
        assert serial == threaded

    def test_fault_injection_flips_only_dependent_suites(self):
        config = SuiteConfig(cases=((3, (2,)),), instances_per_case=1,
                             suites=("gauge", "compatibility"),
                             fault_inject="H")
        rep = run_suite(config)
        by_suite = {}
        for c in rep.checks:
            by_suite.setdefault(c.suite, []).append(c)
        assert all(c.passed for c in by_suite["gauge"])
        assert all(c.name == "zero-curvature-fault" and c.passed
                   for c in by_suite["compatibility"])

    def test_config_from_json(self):
        doc = {"cases": [[4, []], [3, [2]]], "instances_per_case": 2,
               "seed": 5, "suites": ["gauge"], "tol": {"gauge": 1e-7}}
        config = SuiteConfig.from_json(doc)
        assert config.cases == ((4, ()), (3, (2,)))
        assert config.tolerances()["gauge"] == 1e-7


class TestProblemDescriptor:
    DOC = {"r_inf": 3,
           "poles": [{"x": [0.2, -0.4], "r": 2}],
           "times": {"inf": {"2": [1.0, 0.0]}, "0": {"1": [0.9, 0.3]}},
           "monodromies": {"inf": [0.5, -0.1], "0": [0.8, 0.2]},
           "seed": 4}

    def test_run_problem(self):
        from laxforge.harness import run_problem
        profile, chart, seed = model.load_problem(json.dumps(self.DOC))
        rep = run_problem(profile, chart, seed)
        assert rep.passed and rep.summary()["total"] >= 8

    def test_cli_problem(self, tmp_path):
        path = tmp_path / "problem.json"
        path.write_text(json.dumps(self.DOC))
        assert cli_main(["verify", "--problem", str(path),
                         "--suite", "gauge,spectral"]) == 0


class TestCli:
    def test_verify_roundtrip(self, tmp_path):
        out = tmp_path / "report.json"
        csv = tmp_path / "report.csv"
        code = cli_main(["verify", "--suite", "gauge", "--instances", "1",
                         "--seed", "2", "--out", str(out), "--csv", str(csv)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["summary"]["failed"] == 0
        assert csv.read_text().startswith("suite,case,seed,name")

    def test_verify_config_file_and_exit_codes(self, tmp_path):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps({"cases": [[4, []]], "instances_per_case": 1,
                                   "suites": ["gauge"], "seed": 1}))
        assert cli_main(["verify", "--config", str(cfg)]) == 0
        # impossible tolerance forces a check failure -> exit 1
        assert cli_main(["verify", "--config", str(cfg),
                         "--tol", "gauge=1e-30"]) == 1
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"cases": [[4, []]], "suites": ["nope"]}))
        assert cli_main(["verify", "--config", str(bad)]) == 2

    def test_fault_inject_cli(self, tmp_path):
        code = cli_main(["verify", "--suite", "compatibility", "--instances",
                         "1", "--fault-inject", "H"])
        assert code == 0  # fault detected == lower-bound checks pass

    def test_report_figures(self, tmp_path):
        out = tmp_path / "report.json"
        cli_main(["verify", "--suite", "gauge", "--instances", "1",
                  "--out", str(out)])
        figdir = tmp_path / "figs"
        code = cli_main(["report", "--in", str(out), "--figures", str(figdir),
                         "--csv", str(tmp_path / "again.csv")])
        assert code == 0
        assert (figdir / "residuals.png").exists()
        assert (figdir / "outcomes.png").exists()
