"""Command line entry points for sweeps, config checks, and cost tables."""

import argparse
import sys
from dataclasses import replace

from .harness import (
    EXIT_CONFIG_ERROR,
    EXIT_FLAGGED,
    EXIT_OK,
    STATUS_OK,
    emit_outputs,
    run_sweep,
)
from .metrics import complexity_counts
from .sysconfig import ConfigError, build_configs, parse_kv_text, validate_config


def _load_kv(path: str | None, sets: list[str]) -> dict[str, str]:
    kv: dict[str, str] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            kv.update(parse_kv_text(fh.read(), source=path))
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip().lower()
        if not key:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        kv[key] = value.strip()
    return kv


def _parse_dim_list(text: str) -> list[int]:
    """Accept `a..b`, `a..b..step`, or a comma list of integers."""
    text = text.strip()
    if ".." in text:
        parts = text.split("..")
        if len(parts) not in (2, 3):
            raise ConfigError(f"bad range {text!r}; expected a..b or a..b..step")
        try:
            lo, hi = int(parts[0]), int(parts[1])
            step = int(parts[2]) if len(parts) == 3 else 1
        except ValueError:
            raise ConfigError(f"bad range {text!r}; bounds must be integers")
        if step < 1 or hi < lo:
            raise ConfigError(f"bad range {text!r}; need lo <= hi and step >= 1")
        return list(range(lo, hi + 1, step))
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad list {text!r}; expected comma-separated integers")
    if not values:
        raise ConfigError(f"bad list {text!r}; no values")
    return values


def _cmd_run(args) -> int:
    kv = _load_kv(args.config, args.set or [])
    cfg, ch, run_cfg = build_configs(kv)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError(f"--trials must be positive, got {args.trials}")
        overrides["trials"] = args.trials
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError(f"--threads must be positive, got {args.threads}")
        overrides["threads"] = args.threads
    if overrides:
        run_cfg = replace(run_cfg, **overrides)

    summary = run_sweep(run_cfg, cfg, ch)
    written = emit_outputs(summary, run_cfg.output_dir)
    for path in written:
        print(f"wrote {path}")
    for p in summary.points:
        if p.status != STATUS_OK:
            print(f"{p.status}: {p.scheme}/{p.phase_rule} M={p.M} N={p.N} "
                  f"tau={p.tau} ({p.note})")
    return EXIT_FLAGGED if summary.flagged else EXIT_OK


def _cmd_validate(args) -> int:
    kv = _load_kv(args.config, args.set or [])
    cfg, ch, run_cfg = build_configs(kv)
    all_ok = True
    for scheme in run_cfg.schemes:
        report = validate_config(cfg, ch, scheme)
        print(f"# scheme {scheme}")
        print(report)
        all_ok = all_ok and report.ok
    return EXIT_OK if all_ok else EXIT_CONFIG_ERROR


def _cmd_complexity(args) -> int:
    Ms = _parse_dim_list(args.M)
    Ns = _parse_dim_list(args.N)
    print("M,N,count_bs_ue_zf,count_bs_ris_zf")
    for M in Ms:
        for N in Ns:
            ue, ris = complexity_counts(M, N, args.K, args.U_b, args.U_d)
            print(f"{M},{N},{ue},{ris}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riszf",
        description="Monte Carlo sweeps for RIS-assisted zero-forcing downlinks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute the configured sweep")
    p_run.add_argument("--config", help="key=value config file")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
    p_run.add_argument("--out", help="output directory")
    p_run.add_argument("--seed", type=int, help="master seed")
    p_run.add_argument("--trials", type=int, help="trials per grid point")
    p_run.add_argument("--threads", type=int, help="parallel worker count")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a config and print a report")
    p_val.add_argument("--config", required=True, help="key=value config file")
    p_val.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
    p_val.set_defaults(func=_cmd_validate)

    p_cx = sub.add_parser("complexity", help="print multiplication counts as CSV")
    p_cx.add_argument("--M", required=True,
                      help="antenna counts: a..b, a..b..step, or comma list")
    p_cx.add_argument("--N", required=True,
                      help="element counts: a..b, a..b..step, or comma list")
    p_cx.add_argument("--K", type=int, default=4, help="number of RISs")
    p_cx.add_argument("--U_b", type=int, default=4, help="blocked UE count")
    p_cx.add_argument("--U_d", type=int, default=2, help="direct UE count")
    p_cx.set_defaults(func=_cmd_complexity)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
