"""Command-line entry point.

    driftls track  [flags] [key=value ...]
    driftls bandit [flags] [key=value ...]
    driftls bench  [flags] [key=value ...]
    driftls bounds [flags] [key=value ...]
    driftls gen    [flags] [key=value ...]

Config precedence: built-in defaults < --config file < command line (named
flags and bare key=value overrides alike). Exit codes: 0 success, 2 config
error, 3 I/O error, 4 bound-validation failure (bounds subcommand only).
"""
from __future__ import annotations

import argparse
import sys

from .exceptions import ConfigError, EventLogError
from .harness import (
    BanditConfig,
    BenchConfig,
    BoundsConfig,
    GenConfig,
    TrackConfig,
    build_config,
    parse_config_file,
    run_bandit,
    run_bench,
    run_bounds,
    run_gen,
    run_track,
)

_CONFIG_CLS = {
    "track": TrackConfig,
    "bandit": BanditConfig,
    "bench": BenchConfig,
    "bounds": BoundsConfig,
    "gen": GenConfig,
}

_RUNNERS = {
    "track": run_track,
    "bandit": run_bandit,
    "bench": run_bench,
    "bounds": run_bounds,
    "gen": run_gen,
}

# CLI flag name -> config key (flags are conveniences; any key works as
# a bare key=value argument)
_FLAG_KEYS = {
    "seed": "seed",
    "seeds": "seeds",
    "out": "out",
    "algo": "algo",
    "d": "d",
    "k": "k",
    "t": "t",
    "horizon": "horizon",
}

# bench takes comma lists, so its short flags land on the list-valued keys
_FLAG_ALIASES = {"bench": {"algo": "algos", "d": "dims"}}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftls",
        description="Streaming least-squares trackers, bandit policies, and "
                    "their experiment harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("track", "tracking-error experiment (per-seed CSVs + summary)"),
        ("bandit", "PEGE / LinUCB runs or event-log replay"),
        ("bench", "per-step runtime table over (algo, d)"),
        ("bounds", "Monte Carlo validation of the error envelopes"),
        ("gen", "generate a synthetic clicklog + truth sidecar"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("--seed", default=None)
        p.add_argument("--seeds", default=None,
                       help="seed count (N) or explicit list (a,b,c)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--algo", default=None)
        p.add_argument("--d", default=None)
        p.add_argument("--k", default=None)
        p.add_argument("--t", default=None)
        p.add_argument("--horizon", default=None)
        p.add_argument("--csv", action="store_true", default=None,
                       help="write CSV artifacts where optional")
        p.add_argument("--timing", action="store_true", default=None,
                       help="record wall-clock columns (off by default so "
                            "artifacts stay byte-reproducible)")
        p.add_argument("overrides", nargs="*", metavar="key=value",
                       help="any config key override")
    return parser


def _parse_overrides(tokens: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for tok in tokens:
        body = tok[2:] if tok.startswith("--") else tok
        if "=" not in body:
            if tok.startswith("--"):
                # unknown flags only take the single-token form
                raise ConfigError(
                    f"unrecognized flag {tok!r}; config overrides must be "
                    f"written as {tok}=VALUE"
                )
            raise ConfigError(f"override {tok!r} is not of the form key=value")
        key, val = body.split("=", 1)
        if not key:
            raise ConfigError(f"override {tok!r} has an empty key")
        out[key] = val
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    # unknown --key=value options are config overrides, same as bare key=value
    args, unknown = parser.parse_known_args(argv)
    try:
        cls = _CONFIG_CLS[args.command]
        file_cfg = parse_config_file(args.config) if args.config else {}
        aliases = _FLAG_ALIASES.get(args.command, {})
        cli_cfg: dict[str, object] = {
            aliases.get(key, key): getattr(args, flag)
            for flag, key in _FLAG_KEYS.items()
            if getattr(args, flag, None) is not None
        }
        if args.csv is not None:
            cli_cfg["csv"] = args.csv
        if args.timing is not None:
            cli_cfg["timing"] = args.timing
        # unknown flags first so a bad one is named before its stray value
        cli_cfg.update(_parse_overrides(list(unknown) + list(args.overrides)))
        cfg = build_config(cls, file_cfg, cli_cfg)
        result = _RUNNERS[args.command](cfg)
    except ConfigError as e:
        print(f"driftls: config error: {e}", file=sys.stderr)
        return 2
    except EventLogError as e:
        print(f"driftls: event log error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"driftls: i/o error: {e}", file=sys.stderr)
        return 3
    if args.command == "bounds" and not result.get("passed", False):
        print("driftls: bound validation FAILED (see bounds_report.json)",
              file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
