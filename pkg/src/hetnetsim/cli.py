"""Command-line front end: sweeps, validation, and the power-floor report.

Exit codes: 0 success, 1 validation failures, 2 usage or config errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import data_aided, phy, scenario
from .experiments import (
    ExperimentSpec,
    Metric,
    analytic_ber_vector,
    dump_config,
    load_config,
    run_sweep,
    split_config,
    write_csv,
)
from .scenario import SystemConfig

_SWEEP_COMMANDS = {
    "nmse-sweep": Metric.NMSE,
    "ber-sweep": Metric.BER,
    "rate-sweep": Metric.RATE,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetnetsim",
        description="Monte Carlo sweeps for data-aided channel estimation "
                    "in decoupled HetNets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_sweep=False, needs_out=False):
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--seed", type=int, default=1, help="master seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes (default: HETNET_THREADS or 1)")
        p.add_argument("--dump-config", action="store_true",
                       help="print the effective config as JSON and exit")
        if needs_sweep:
            p.add_argument("--sweep", required=True, metavar="NAME=MIN:MAX:STEP",
                           help="swept parameter and grid, in the field's unit")
            p.add_argument("--out", required=needs_out, help="output CSV path")

    for name, metric in _SWEEP_COMMANDS.items():
        p = sub.add_parser(name, help=f"run a {metric.value} sweep to CSV")
        common(p, needs_sweep=True, needs_out=True)
    common(sub.add_parser("validate", help="run the desk-scale validation suite"))
    common(sub.add_parser("floor", help="print the data-power saturation limit"))
    return parser


def _parse_override(item: str):
    if "=" not in item:
        raise ValueError(f"malformed override {item!r}, expected KEY=VALUE")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _parse_sweep(text: str):
    if "=" not in text or text.count(":") != 2:
        raise ValueError(f"malformed sweep {text!r}, expected NAME=MIN:MAX:STEP")
    name, grid = text.split("=", 1)
    lo, hi, step = (float(x) for x in grid.split(":"))
    if step <= 0 or hi < lo:
        raise ValueError(f"bad sweep grid {grid!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return name.strip(), tuple(lo + i * step for i in range(count))


def _effective_config(args):
    raw = {}
    if args.config:
        base, experiment = load_config(args.config)
        raw.update(json.loads(dump_config(base, experiment)))
    for item in args.set:
        key, value = _parse_override(item)
        raw[key] = value
    system, experiment = split_config(raw)
    return SystemConfig(**system), experiment


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("HETNET_THREADS")
    return max(1, int(env)) if env else 1


def _run_floor(cfg: SystemConfig, seed: int) -> int:
    topo = scenario.build_topology(cfg, phy.stream(seed, 0, 0))
    assoc = scenario.associate(topo, cfg)
    if not len(assoc.decoupled):
        print("no decoupled UEs in this topology; nothing to report")
        return 0
    bers = analytic_ber_vector(cfg, topo, assoc)
    rho_con = cfg.tau_t * cfg.p_train_mw / cfg.noise_power_mw
    print(f"data-power saturation limit of the DA SNR-like increment "
          f"(tau_d={cfg.tau_d}, P_T={cfg.p_train_dbm:g} dBm):")
    for k in assoc.decoupled:
        floor = data_aided.da_power_floor(cfg.tau_d, bers, topo.beta_mbs, k)
        if math.isinf(floor):
            print(f"  ue {k:3d}: BER = 0 everywhere, no floor (increment unbounded)")
            continue
        nmse_floor = 10.0 * math.log10(
            1.0 / (1.0 + (rho_con + floor) * topo.beta_mbs[k]))
        print(f"  ue {k:3d}: BER = {bers[k]:.3e}, increment floor = {floor:.6g}, "
              f"NMSE floor = {nmse_floor:.2f} dB")
    return 0


def parse_and_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2

    try:
        cfg, experiment = _effective_config(args)
    except (ValueError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.dump_config:
        sys.stdout.write(dump_config(cfg, experiment))
        return 0

    if args.command == "floor":
        return _run_floor(cfg, args.seed)

    if args.command == "validate":
        from . import validation

        report = validation.run_validation(master_seed=args.seed,
                                           threads=_threads(args))
        for line in report.lines():
            print(line)
        return 0 if report.passed else 1

    metric = _SWEEP_COMMANDS[args.command]
    try:
        name, values = _parse_sweep(args.sweep)
        spec = ExperimentSpec(
            base=cfg,
            sweep_param=name,
            sweep_values=values,
            metric=metric,
            master_seed=args.seed,
            **experiment,
        )
    except (ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        table = run_sweep(spec, threads=_threads(args))
        write_csv(table, args.out)
    except OSError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {len(table.rows)} rows to {args.out}")
    return 0


def main(argv=None) -> int:
    return parse_and_dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
