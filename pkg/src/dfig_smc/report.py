"""Trace serialization and the three-way controller comparison report.

CSV traces carry the full recording grid at 17 significant digits, so a
read-back reproduces the stored matrix bit for bit. A comparison run
executes every selected controller on the identical scenario, writes one
CSV and three figures per run, evaluates the analytic certificates once
for the shared bank, and emits a single YAML report that embeds the
fully-resolved configuration — the run is reproducible from the report
alone.

Verdict semantics (computed from the contained metrics only):

* ``chattering_ordering`` — every controller in the selection must
  produce strictly less control total variation than the one before it;
  any equality downgrades the verdict to ``"tie"``, any increase to
  ``"fail"``.
* ``sse_ordering`` — the last controller must track strictly better
  (lower steady-state error) than the first; equality is a ``"tie"``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import yaml

from .config import RunConfig, controller_preset, serialize_config
from .engine import (
    Metrics,
    SimTrace,
    build_bank,
    compute_metrics,
    run_scenario,
)
from .errors import ParseError, ValidationError
from .plots import save_control_plot, save_currents_plot, save_torque_plot
from .stability import StabilityCertificate, certify_bank, reaching_monitor

_BASE_COLUMNS = ("t", "phi_dr", "phi_qr", "i_ds", "i_qs", "omega", "te",
                 "te_ref", "u_d", "u_q", "s_d", "s_q", "s_fused", "v_lyap")


def write_trace_csv(trace: SimTrace, path) -> None:
    """Write the recording grid as CSV at full round-trip precision.

    One header line, one row per recorded sample, 17 significant digits
    per value. Unwritable paths raise the usual OSError.
    """
    header = ",".join(trace.column_names())
    np.savetxt(path, trace.data, delimiter=",", fmt="%.17g", header=header,
               comments="")


def read_trace_csv(path) -> SimTrace:
    """Load a trace written by write_trace_csv, exactly.

    The returned trace carries no engine metadata, so metric extraction
    falls back to the recorded columns (see compute_metrics).
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        names = header.split(",")
        if tuple(names[: len(_BASE_COLUMNS)]) != _BASE_COLUMNS:
            raise ParseError(f"unexpected trace header in {path}: {header!r}")
        extra = names[len(_BASE_COLUMNS):]
        for i, name in enumerate(extra):
            if name != f"v_{i + 1}":
                raise ParseError(f"unexpected validity column {name!r} in {path}")
        body = fh.read()
    if body.strip() == "":
        data = np.zeros((0, len(names)))
    else:
        try:
            data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
        except ValueError as exc:
            raise ParseError(f"malformed trace row in {path}: {exc}") from exc
    if data.shape[1] != len(names):
        raise ParseError(
            f"trace {path} has {data.shape[1]} columns, header names {len(names)}"
        )
    return SimTrace(data=data, n_models=len(extra), meta={"source": str(path)})


@dataclass(frozen=True)
class ComparisonReport:
    """Joined result of one comparison run."""

    labels: tuple[str, ...]
    metrics: dict
    verdicts: dict
    certificate: StabilityCertificate
    artifacts: tuple[str, ...]
    config_text: str

    @property
    def all_pass(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())


def ordering_verdicts(labels, metrics) -> dict:
    """Chattering and tracking verdicts over the selection order."""
    chat = [metrics[label].chattering_tv for label in labels]
    if any(b > a for a, b in zip(chat, chat[1:])):
        chattering = "fail"
    elif any(b == a for a, b in zip(chat, chat[1:])):
        chattering = "tie"
    else:
        chattering = "pass"
    first, last = metrics[labels[0]].sse, metrics[labels[-1]].sse
    if last < first:
        sse = "pass"
    elif last == first:
        sse = "tie"
    else:
        sse = "fail"
    return {"chattering_ordering": chattering, "sse_ordering": sse}


def _run_labels(names) -> list[str]:
    seen: dict = {}
    labels = []
    for name in names:
        seen[name] = seen.get(name, 0) + 1
        labels.append(name if seen[name] == 1 else f"{name}-{seen[name]}")
    return labels


def _reaching_fractions(trace: SimTrace, layer: float) -> dict:
    out = {}
    for key, s in (("d", trace.s_d), ("q", trace.s_q)):
        rep = reaching_monitor(trace.t, s, omega_layer=layer)
        out[key] = float(rep.violation_fraction)
    return out


def _metrics_node(m: Metrics) -> dict:
    return {
        "chattering_tv": float(m.chattering_tv),
        "tv_d": float(m.tv_d),
        "tv_q": float(m.tv_q),
        "switch_count": int(m.switch_count),
        "switches_d": int(m.switches_d),
        "switches_q": int(m.switches_q),
        "sse": float(m.sse),
        "settling_time": float(m.settling_time),
        "ise": float(m.ise),
    }


def _certificate_node(cert: StabilityCertificate) -> dict:
    return {
        "ok": bool(cert.ok),
        "gain_ok": [bool(v) for v in cert.gain_ok],
        "min_eig_p": [float(v) for v in cert.min_eig_p],
        "full_order_min_eig": [float(v) for v in cert.full_order_min_eig],
        "reaching_violation_fraction": float(cert.reaching_violation_fraction),
    }


def compare_controllers(config: RunConfig, out_dir=None) -> ComparisonReport:
    """Run the selected controllers on one scenario and write the report.

    Emits, under the output directory: per-run trace CSVs, per-run
    torque/control/current figures, and ``report.yaml``. Needs at least
    two controllers selected; duplicate selections are legitimate and
    produce tie verdicts.
    """
    config.validate()
    if len(config.controllers) < 2:
        raise ValidationError(
            f"comparison needs at least 2 controllers "
            f"(got {list(config.controllers)})"
        )
    out = str(out_dir) if out_dir is not None else config.out_dir
    os.makedirs(out, exist_ok=True)

    labels = _run_labels(config.controllers)
    metrics: dict = {}
    run_nodes = []
    artifacts: list[str] = []
    for name, label in zip(config.controllers, labels):
        controller = controller_preset(name)
        trace = run_scenario(config.scenario, controller, config.bank)
        m = compute_metrics(trace)
        metrics[label] = m

        csv_path = os.path.join(out, f"{label}_trace.csv")
        write_trace_csv(trace, csv_path)
        figures = {}
        for kind, saver in (("torque", save_torque_plot),
                            ("control", save_control_plot),
                            ("currents", save_currents_plot)):
            fig_path = os.path.join(out, f"{label}_{kind}.svg")
            saver(trace, fig_path, title=f"{label}: {kind}")
            figures[kind] = fig_path
        artifacts.append(csv_path)
        artifacts.extend(figures.values())

        run_nodes.append({
            "label": label,
            "controller": name,
            "metrics": _metrics_node(m),
            "reaching_violation_fraction": _reaching_fractions(
                trace, controller.omega_layer
            ),
            "elapsed_s": float(trace.meta["elapsed_s"]),
            "artifacts": {"trace": csv_path, **figures},
        })

    verdicts = ordering_verdicts(labels, metrics)
    bank_models = build_bank(config.scenario.machine, config.bank)
    certificate = certify_bank(bank_models, m_bound=config.bank.m_bound)
    config_text = serialize_config(config)

    doc = {
        "verdicts": dict(verdicts),
        "runs": run_nodes,
        "certificate": _certificate_node(certificate),
        "config": yaml.safe_load(config_text),
    }
    report_path = os.path.join(out, "report.yaml")
    with open(report_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    artifacts.append(report_path)

    return ComparisonReport(
        labels=tuple(labels),
        metrics=metrics,
        verdicts=verdicts,
        certificate=certificate,
        artifacts=tuple(artifacts),
        config_text=config_text,
    )


def run_report(config: RunConfig, out_dir=None) -> dict:
    """Single-controller run: trace CSV, figures, and a YAML summary.

    Uses the config's ``controller`` section as-is and returns the
    report document (also written to ``run.yaml``).
    """
    config.validate()
    out = str(out_dir) if out_dir is not None else config.out_dir
    os.makedirs(out, exist_ok=True)

    trace = run_scenario(config.scenario, config.controller, config.bank)
    m = compute_metrics(trace)
    label = config.controller.mode
    csv_path = os.path.join(out, f"{label}_trace.csv")
    write_trace_csv(trace, csv_path)
    figures = {}
    for kind, saver in (("torque", save_torque_plot),
                        ("control", save_control_plot),
                        ("currents", save_currents_plot)):
        fig_path = os.path.join(out, f"{label}_{kind}.svg")
        saver(trace, fig_path, title=f"{label}: {kind}")
        figures[kind] = fig_path

    doc = {
        "run": {
            "label": label,
            "metrics": _metrics_node(m),
            "reaching_violation_fraction": _reaching_fractions(
                trace, config.controller.omega_layer
            ),
            "elapsed_s": float(trace.meta["elapsed_s"]),
            "artifacts": {"trace": csv_path, **figures},
        },
        "config": yaml.safe_load(serialize_config(config)),
    }
    report_path = os.path.join(out, "run.yaml")
    with open(report_path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)
    doc["run"]["artifacts"]["report"] = report_path
    return doc


def check_stability(config: RunConfig) -> StabilityCertificate:
    """Analytic certificates for the configured bank, no simulation."""
    config.validate()
    models = build_bank(config.scenario.machine, config.bank)
    return certify_bank(models, m_bound=config.bank.m_bound)
