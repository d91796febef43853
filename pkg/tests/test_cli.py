import json

import pytest

from loopext import checks, cli
from loopext import extension as ext
from loopext import mesh as msh
from loopext.errors import ConfigError

FAST = dict(resolution="tiny", suites=("lie", "mesh"), samples=2, seeds=(0,))


class TestSuiteConfig:
    def test_empty_suites_rejected(self):
        with pytest.raises(ConfigError):
            checks.SuiteConfig(suites=()).validate()

    def test_unknown_suite_rejected(self):
        with pytest.raises(ConfigError):
            checks.SuiteConfig(suites=("algebraic-geometry",)).validate()

    def test_bad_tolerance_rejected(self):
        with pytest.raises(ConfigError):
            checks.SuiteConfig(tolerance=0.0).validate()

    def test_convergence_needs_three_levels(self):
        with pytest.raises(ConfigError):
            checks.run_convergence(checks.SuiteConfig(refinement_levels=2))

    def test_tolerance_ladder(self):
        cfg = checks.SuiteConfig(tolerance=1e-3, refinement_levels=3)
        assert cfg.ladder() == (1.6e-2, 4e-3, 1e-3)
        explicit = checks.SuiteConfig(tolerance_ladder=(1e-1, 1e-2, 1e-3))
        assert explicit.ladder() == (1e-1, 1e-2, 1e-3)
        with pytest.raises(ConfigError):
            checks.SuiteConfig(tolerance_ladder=(1e-1, 1e-2)).ladder()


class TestRunSuite:
    def test_all_records_have_anchor_or_plumbing(self):
        report = checks.run_suite(checks.SuiteConfig(**FAST))
        assert report["records"]
        for r in report["records"]:
            assert r["anchor"]
        assert report["summary"]["fail"] == 0

    def test_deterministic_across_thread_counts(self):
        bodies = set()
        for threads in (1, 4, 8):
            cfg = checks.SuiteConfig(threads=threads, **FAST)
            bodies.add(checks.report_body_json(checks.run_suite(cfg)))
        assert len(bodies) == 1

    def test_repeat_runs_identical(self):
        cfg = checks.SuiteConfig(**FAST)
        a = checks.report_body_json(checks.run_suite(cfg))
        b = checks.report_body_json(checks.run_suite(cfg))
        assert a == b

    def test_exit_codes(self):
        report = {"summary": {"fail": 0, "indeterminate": 0}}
        assert checks.exit_code(report) == 0
        report = {"summary": {"fail": 2, "indeterminate": 0}}
        assert checks.exit_code(report) == 1
        report = {"summary": {"fail": 0, "indeterminate": 1}}
        assert checks.exit_code(report) == 1
        assert checks.exit_code(report, allow_indeterminate=True) == 0


class TestConvergenceMode:
    def test_ladder_report(self):
        cfg = checks.SuiteConfig(resolution="small", refinement_levels=3,
                                 suites=("wz",))
        report = checks.run_convergence(cfg)
        assert report["mode"] == "convergence"
        for r in report["records"]:
            assert len(r["details"]["errors"]) == 3
            assert r["details"]["monotone"], r
            # tolerance-bearing checks must decay at roughly second order
            if r["name"] != "wz.id1-gluing":
                assert r["details"]["fitted_order"] > 1.5


class TestCli:
    def test_main_pass_run(self, capsys):
        rc = cli.main(["--suite", "lie", "--resolution", "tiny",
                       "--report", "md"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "lie.group-axioms" in out

    def test_config_error_exit_2(self, capsys):
        rc = cli.main(["--suite", "lie", "--tolerance", "-1"])
        assert rc == 2

    def test_json_report_to_file(self, tmp_path):
        out = tmp_path / "report.json"
        rc = cli.main(["--suite", "lie", "--resolution", "tiny",
                       "--out", str(out)])
        assert rc == 0
        data = json.loads(out.read_text())
        assert data["schema_version"] == 1
        assert all(r["status"] == "pass" for r in data["records"])

    def test_replay_map_input(self, tmp_path):
        obj = msh.random_map("loop", 3, resolution=msh.TINY_RESOLUTION)
        path = tmp_path / "loop.json"
        msh.save_map(obj, path)
        rc = cli.main(["--input", str(path), "--out",
                       str(tmp_path / "replay.json")])
        assert rc == 0
        data = json.loads((tmp_path / "replay.json").read_text())
        assert data["mode"] == "replay"
        assert data["records"][0]["name"] == "replay.loop"

    def test_replay_element_input(self, tmp_path):
        el = ext.random_element(
            msh.random_map("loop", 4, resolution=msh.TINY_RESOLUTION), 5,
            resolution=msh.TINY_RESOLUTION)
        path = tmp_path / "el.json"
        path.write_text(json.dumps(ext.element_to_dict(el)))
        rc = cli.main(["--input", str(path), "--out",
                       str(tmp_path / "replay.json")])
        assert rc == 0

    def test_thread_env_used(self, monkeypatch):
        monkeypatch.setenv("LOOPEXT_THREADS", "2")
        cfg = checks.SuiteConfig(**FAST)
        assert cfg.worker_count() == 2
