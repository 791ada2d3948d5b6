"""Command-line interface: run, compare, check-stability.

Exit codes follow the report contract: 0 when everything requested
passed, 2 when the work completed but a verdict (ordering claim or
stability certificate) did not hold strictly, 1 on execution errors.
The output directory resolves as DFIG_SMC_OUT over --out over the
config's out_dir.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .config import RunConfig, parse_config
from .errors import DfigSmcError
from .report import check_stability, compare_controllers, run_report

ENV_OUT = "DFIG_SMC_OUT"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dfig-smc",
        description="Induction-generator torque control: simulate sliding-mode "
                    "controllers, compare them, and check stability certificates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="simulate the configured controller")
    cmp_p = sub.add_parser("compare", help="run a controller comparison")
    chk_p = sub.add_parser("check-stability",
                           help="evaluate bank certificates only")
    for p in (run_p, cmp_p, chk_p):
        p.add_argument("--config", metavar="FILE",
                       help="YAML run configuration (defaults when omitted)")
    for p in (run_p, cmp_p):
        p.add_argument("--out", metavar="DIR",
                       help="output directory (default: config out_dir; "
                            f"the {ENV_OUT} environment variable wins)")
    cmp_p.add_argument("--controllers", metavar="NAMES",
                       help="comma-separated selection, e.g. smc1,smc2,smmc")
    return parser


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        return parse_config("")
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _resolve_out(args) -> str | None:
    env = os.environ.get(ENV_OUT)
    if env:
        return env
    return args.out


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    doc = run_report(cfg, out_dir=_resolve_out(args))
    run = doc["run"]
    m = run["metrics"]
    print(f"run {run['label']}: chattering_tv={m['chattering_tv']:.6g} "
          f"sse={m['sse']:.6g} settling_time={m['settling_time']:.6g}s")
    print(f"artifacts in {os.path.dirname(run['artifacts']['trace'])}")
    return 0


def _cmd_compare(args) -> int:
    cfg = _load_config(args.config)
    if args.controllers:
        names = tuple(s.strip() for s in args.controllers.split(",") if s.strip())
        cfg = replace(cfg, controllers=names)
        cfg.validate()
    report = compare_controllers(cfg, out_dir=_resolve_out(args))
    for label in report.labels:
        m = report.metrics[label]
        print(f"{label}: chattering_tv={m.chattering_tv:.6g} sse={m.sse:.6g} "
              f"settling_time={m.settling_time:.6g}s")
    for name, verdict in report.verdicts.items():
        print(f"{name}: {verdict}")
    print(f"report: {report.artifacts[-1]}")
    return 0 if report.all_pass else 2


def _cmd_check_stability(args) -> int:
    cfg = _load_config(args.config)
    cert = check_stability(cfg)
    speeds = cfg.bank.speeds
    for i, ok in enumerate(cert.gain_ok):
        speed = speeds[i // 2]
        channel = "d" if i % 2 == 0 else "q"
        print(f"model {i} (omega_op={speed:g}, {channel}): "
              f"gain_ok={ok} min_eig_p={cert.min_eig_p[i]:.6g} "
              f"full_order_min_eig={cert.full_order_min_eig[i]:.6g}")
    print(f"certificate: {'ok' if cert.ok else 'FAILED'}")
    return 0 if cert.ok else 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "compare": _cmd_compare,
        "check-stability": _cmd_check_stability,
    }
    try:
        return handlers[args.command](args)
    except (DfigSmcError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
