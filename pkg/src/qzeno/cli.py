"""Command-line entry point: ``qzeno {run,sweep,intensity,converge,oracle-check,presets}``.

Exit codes: 0 success, 1 configuration error, 2 integration failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import convergence, oracle, scenario
from .errors import IntegrationError, OracleError

log = logging.getLogger("qzeno")

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRATION = 0, 1, 2


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_config_args(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", help="start from a named preset (see 'qzeno presets')")
    src.add_argument("--config", metavar="PATH", help="key = value scenario file")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                   help="override one config key (repeatable)")
    p.add_argument("--ks-eta-convention", choices=("on", "off"),
                   help="multiply eta_peak by 10 (delta-kernel reference convention)")
    p.add_argument("--out", metavar="DIR",
                   help=f"output directory (default ${scenario.OUTPUT_ENV} or "
                        f"./{scenario.DEFAULT_OUTPUT})")


def resolve_config(args) -> scenario.ScenarioConfig:
    if args.preset:
        cfg = scenario.preset(args.preset)
    elif args.config:
        cfg = scenario.ScenarioConfig.load(args.config)
    else:
        cfg = scenario.ScenarioConfig()
    for item in args.set:
        if "=" not in item:
            raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        cfg = cfg.with_override(key.strip(), value.strip())
    if args.ks_eta_convention:
        cfg = cfg.replace(ks_eta_convention=args.ks_eta_convention == "on")
    return cfg.validate()


def cmd_run(args) -> int:
    cfg = resolve_config(args)
    result = scenario.run(cfg, args.out)
    print(json.dumps(result.summary(), indent=2))
    log.info("wrote %s", result.output_dir)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    rows = scenario.sweep(cfg, args.param, args.values, parallel=args.parallel, out=args.out)
    for r in rows:
        print(f"{r['parameter']}={r['value']:g}\tplateau={r['plateau']:.6g}\t{r['status']}"
              + (f"\t{r['error']}" if r["error"] else ""))
    return EXIT_OK


def cmd_intensity(args) -> int:
    cfg = resolve_config(args)
    result, imap = scenario.compute_intensity_map(cfg, args.t_samples)
    directory = scenario.output_root(args.out, cfg) / cfg.name
    directory.mkdir(parents=True, exist_ok=True)
    cfg.replace(t_end=cfg.resolved_t_end).save(directory / "config.txt")
    path = scenario.write_intensity(directory / "intensity.csv", imap, args.x_window)
    scenario.write_series(directory / "series.csv", result)
    print(path)
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = resolve_config(args)
    report = convergence.refine(cfg, args.density, args.range, parallel=args.parallel)
    directory = scenario.output_root(args.out, cfg) / f"converge-{cfg.name}"
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "report.json").write_text(report.to_json() + "\n")
    print(report.to_json())
    if any(r.status != "ok" for r in report.rungs):
        return EXIT_INTEGRATION
    return EXIT_OK


def cmd_oracle(args) -> int:
    report = oracle.oracle_check(args.n_k, args.n_omega, args.t, args.dt)
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["passed"] else EXIT_INTEGRATION


def cmd_presets(args) -> int:
    if args.name:
        sys.stdout.write(scenario.preset(args.name).to_text())
    else:
        for name in scenario.PRESETS:
            print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qzeno", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario and write CSV series")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="plateau of the decay rate against one parameter")
    _add_config_args(p)
    p.add_argument("--param", required=True, choices=scenario.SWEEP_PARAMETERS)
    p.add_argument("--values", required=True, type=_floats)
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("intensity", help="photon intensity map I(x, t)")
    _add_config_args(p)
    p.add_argument("--t-samples", type=int, default=41)
    p.add_argument("--x-window", type=float, default=None,
                   help="keep |x| <= X (distance from the atom)")
    p.set_defaults(func=cmd_intensity)

    p = sub.add_parser("converge", help="refinement ladder of the plateau")
    _add_config_args(p)
    p.add_argument("--density", type=_floats, default=[1.0, 2.0, 4.0])
    p.add_argument("--range", type=_floats, default=[1.0])
    p.add_argument("--parallel", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("oracle-check", help="structured integrator vs dense propagator")
    p.add_argument("--n-k", type=int, default=4)
    p.add_argument("--n-omega", type=int, default=3)
    p.add_argument("--t", type=float, default=10.0)
    p.add_argument("--dt", type=float, default=0.001)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("presets", help="list presets or print one as a config file")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except IntegrationError as exc:
        log.error("integration failed: %s", exc)
        return EXIT_INTEGRATION
    except (ValueError, OSError, OracleError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
