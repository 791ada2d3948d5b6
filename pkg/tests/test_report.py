"""Trace CSV round-trips, comparison reports, figure emission."""

from __future__ import annotations

import numpy as np
import pytest
import yaml

from dfig_smc.config import RunConfig, parse_config
from dfig_smc.controllers import ControllerConfig
from dfig_smc.engine import Scenario, compute_metrics, run_scenario
from dfig_smc.errors import ParseError, ValidationError
from dfig_smc.plots import (
    MAX_POINTS_PER_LINE,
    save_control_plot,
    save_currents_plot,
    save_torque_plot,
)
from dfig_smc.report import (
    ComparisonReport,
    check_stability,
    compare_controllers,
    ordering_verdicts,
    read_trace_csv,
    run_report,
    write_trace_csv,
)

SHORT_CONFIG = """
scenario:
  horizon: 0.05
  record_stride: 5
"""


@pytest.fixture(scope="module")
def short_trace():
    cfg = parse_config(SHORT_CONFIG)
    return run_scenario(cfg.scenario, ControllerConfig(mode="smmc"), cfg.bank)


class TestTraceCsv:
    def test_round_trip_is_exact(self, short_trace, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(short_trace, path)
        back = read_trace_csv(path)
        assert back.n_models == short_trace.n_models
        assert np.array_equal(back.data, short_trace.data)

    def test_header_and_line_count(self, short_trace, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(short_trace, path)
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(short_trace.column_names())
        assert lines[0].startswith("t,phi_dr,phi_qr,i_ds,i_qs,omega,te,te_ref,"
                                   "u_d,u_q,s_d,s_q,s_fused,v_lyap,v_1")
        assert len(lines) == 1 + short_trace.n_rows

    def test_two_sample_trace_gives_three_lines(self, tmp_path):
        tr = run_scenario(Scenario(horizon=1e-4, record_stride=1),
                          ControllerConfig(mode="smmc"))
        path = tmp_path / "tiny.csv"
        write_trace_csv(tr, path)
        assert len(path.read_text().splitlines()) == 3

    def test_column_count_tracks_bank_size(self, short_trace, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(short_trace, path)
        header = path.read_text().splitlines()[0]
        assert len(header.split(",")) == 14 + short_trace.n_models

    def test_rejects_foreign_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,stuff\n0.0,1.0\n")
        with pytest.raises(ParseError):
            read_trace_csv(path)

    def test_rejects_malformed_row(self, tmp_path):
        path = tmp_path / "bad.csv"
        header = ("t,phi_dr,phi_qr,i_ds,i_qs,omega,te,te_ref,u_d,u_q,"
                  "s_d,s_q,s_fused,v_lyap,v_1")
        path.write_text(header + "\n1.0,2.0,oops\n")
        with pytest.raises(ParseError):
            read_trace_csv(path)

    def test_loaded_metrics_use_recorded_columns(self, short_trace, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(short_trace, path)
        back = read_trace_csv(path)
        m = compute_metrics(back, rated=4.0)
        assert m.tv_d == float(np.sum(np.abs(np.diff(back.u_d))))


class TestVerdicts:
    class _M:
        def __init__(self, tv, sse):
            self.chattering_tv = tv
            self.sse = sse

    def test_strict_decrease_passes(self):
        metrics = {"a": self._M(100.0, 1.0), "b": self._M(10.0, 0.5),
                   "c": self._M(1.0, 0.1)}
        v = ordering_verdicts(("a", "b", "c"), metrics)
        assert v == {"chattering_ordering": "pass", "sse_ordering": "pass"}

    def test_equal_metrics_tie(self):
        metrics = {"a": self._M(5.0, 0.2), "b": self._M(5.0, 0.2)}
        v = ordering_verdicts(("a", "b"), metrics)
        assert v == {"chattering_ordering": "tie", "sse_ordering": "tie"}

    def test_increase_fails(self):
        metrics = {"a": self._M(1.0, 0.1), "b": self._M(5.0, 0.5)}
        v = ordering_verdicts(("a", "b"), metrics)
        assert v == {"chattering_ordering": "fail", "sse_ordering": "fail"}


@pytest.fixture(scope="module")
def report(tmp_path_factory):
    out = tmp_path_factory.mktemp("cmp")
    cfg = parse_config(SHORT_CONFIG)
    return compare_controllers(cfg, out_dir=out), out


class TestComparison:
    def test_runs_and_artifacts(self, report):
        rep, out = report
        assert rep.labels == ("smc1", "smc2", "smmc")
        assert set(rep.metrics) == {"smc1", "smc2", "smmc"}
        for label in rep.labels:
            assert (out / f"{label}_trace.csv").exists()
            for kind in ("torque", "control", "currents"):
                assert (out / f"{label}_{kind}.svg").exists()
        assert (out / "report.yaml").exists()
        assert len(rep.artifacts) == 3 * 4 + 1

    def test_report_document_is_machine_readable(self, report):
        rep, out = report
        doc = yaml.safe_load((out / "report.yaml").read_text())
        assert set(doc) == {"verdicts", "runs", "certificate", "config"}
        assert [r["label"] for r in doc["runs"]] == list(rep.labels)
        for run in doc["runs"]:
            assert set(run["metrics"]) == {
                "chattering_tv", "tv_d", "tv_q", "switch_count", "switches_d",
                "switches_q", "sse", "settling_time", "ise",
            }

    def test_report_embeds_reproducible_config(self, report):
        rep, out = report
        doc = yaml.safe_load((out / "report.yaml").read_text())
        embedded = yaml.safe_dump(doc["config"])
        assert parse_config(embedded) == parse_config(SHORT_CONFIG)
        assert parse_config(rep.config_text) == parse_config(SHORT_CONFIG)

    def test_verdicts_come_from_contained_metrics(self, report):
        rep, _ = report
        assert rep.verdicts == ordering_verdicts(rep.labels, rep.metrics)

    def test_duplicate_selection_ties(self, tmp_path):
        cfg = parse_config(SHORT_CONFIG + "controllers: [smmc, smmc]\n")
        rep = compare_controllers(cfg, out_dir=tmp_path)
        assert rep.labels == ("smmc", "smmc-2")
        assert rep.metrics["smmc"] == rep.metrics["smmc-2"]
        assert rep.verdicts == {"chattering_ordering": "tie",
                                "sse_ordering": "tie"}
        assert not rep.all_pass

    def test_single_controller_rejected(self, tmp_path):
        cfg = parse_config(SHORT_CONFIG + "controllers: [smmc]\n")
        with pytest.raises(ValidationError):
            compare_controllers(cfg, out_dir=tmp_path)

    def test_certificate_included_and_ok(self, report):
        rep, _ = report
        assert isinstance(rep, ComparisonReport)
        assert len(rep.certificate.gain_ok) == 6
        assert rep.certificate.ok


class TestRunReport:
    def test_emits_trace_figures_and_summary(self, tmp_path):
        cfg = parse_config(SHORT_CONFIG)
        doc = run_report(cfg, out_dir=tmp_path)
        assert (tmp_path / "smmc_trace.csv").exists()
        assert (tmp_path / "smmc_torque.svg").exists()
        assert (tmp_path / "run.yaml").exists()
        assert doc["run"]["metrics"]["chattering_tv"] > 0
        again = yaml.safe_load((tmp_path / "run.yaml").read_text())
        assert again["run"]["label"] == "smmc"

    def test_uses_controller_section(self, tmp_path):
        cfg = parse_config(SHORT_CONFIG + "controller:\n  mode: smc2\n")
        doc = run_report(cfg, out_dir=tmp_path)
        assert doc["run"]["label"] == "smc2"


class TestCheckStability:
    def test_default_bank_certifies(self):
        cert = check_stability(parse_config(""))
        assert cert.ok
        assert all(cert.gain_ok)
        assert all(me > 0 for me in cert.min_eig_p)


class TestPlots:
    def test_figures_are_svg_documents(self, short_trace, tmp_path):
        for saver, name in ((save_torque_plot, "a.svg"),
                            (save_control_plot, "b.svg"),
                            (save_currents_plot, "c.svg")):
            path = tmp_path / name
            saver(short_trace, path, title="check")
            head = path.read_text()[:500]
            assert "<svg" in head

    def test_long_trace_is_thinned_for_display(self, tmp_path):
        tr = run_scenario(Scenario(horizon=1.0, record_stride=1),
                          ControllerConfig(mode="smmc"))
        assert tr.n_rows > MAX_POINTS_PER_LINE
        before = tr.data.copy()
        path = tmp_path / "big.svg"
        save_torque_plot(tr, path)
        assert path.exists() and path.stat().st_size > 0
        # pure rendering: the trace itself is untouched
        assert np.array_equal(tr.data, before)
