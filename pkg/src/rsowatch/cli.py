"""Command line entry point.

Exit codes: 0 success, 2 configuration problem, 3 data problem,
4 unexpected internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .pipeline import ConfigError, DataError, RunConfig, load_run_config
from .synthetic import load_scenario

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INTERNAL = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rsowatch",
        description="Per-object anomaly detection over orbital element time series.",
    )
    parser.add_argument("--config", help="path to a JSON run config")
    parser.add_argument("--out", help="output directory (overrides the config)")
    parser.add_argument("--workers", type=int, help="worker processes (overrides the config)")
    parser.add_argument("--seed", type=int, help="base seed (overrides the config)")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with ground-truth masks")
    p.add_argument("--scenario", required=True, help="scenario JSON file")

    p = sub.add_parser("ingest", help="parse element sets and write normalized tables")
    p.add_argument("--fetch", action="store_true",
                   help="pull element sets from the configured catalog service first")
    p.add_argument("--window", help="named window to fetch (required with --fetch)")

    p = sub.add_parser("label", help="write interquartile-range outlier labels")
    p.add_argument("--window", action="append", dest="windows",
                   help="named window (repeatable; default: all configured windows)")

    p = sub.add_parser("train", help="train one model per selected object")
    p.add_argument("--window", help="training window name (default: config train_window)")
    p.add_argument("--force", action="store_true", help="retrain even when cached")

    p = sub.add_parser("score", help="score observations in a window against saved models")
    p.add_argument("--window", required=True, help="named window to score")

    p = sub.add_parser("evaluate", help="hyperparameter grids and temporal robustness")
    p.add_argument("--grid", help="grid spec JSON file")
    p.add_argument("--temporal", action="store_true", help="run the temporal window sweep")

    p = sub.add_parser("stats", help="statistical reports over scored verdicts")
    p.add_argument("--chi2", help="two window names, comma separated (e.g. baseline,leadup)")
    p.add_argument("--monthly", action="store_true", help="monthly anomaly counts per mission")
    p.add_argument("--diffs", action="store_true", help="consecutive-observation delta reports")
    p.add_argument("--corr", action="store_true", help="element correlation reports")
    return parser


def _load_config(args) -> RunConfig:
    if not args.config:
        raise ConfigError(f"{args.command} requires --config")
    return load_run_config(args.config, out_dir=args.out,
                           workers=args.workers, seed=args.seed)


def _run_fetch(cfg: RunConfig, window_name: str | None) -> None:
    from .synthetic import format_tle
    from .tle_client import CatalogClient, ClientConfig

    if not cfg.client:
        raise ConfigError("--fetch requires a 'client' block in the config")
    if not cfg.fetch_ids:
        raise ConfigError("--fetch requires non-empty 'fetch_ids' in the config")
    if not window_name:
        raise ConfigError("--fetch requires --window")
    if not cfg.tle_path:
        raise ConfigError("--fetch requires tle_path to store the downloaded records")
    try:
        client_cfg = ClientConfig(**cfg.client)
    except TypeError as exc:
        raise ConfigError(f"bad client block: {exc}") from None
    window = cfg.window(window_name)
    client = CatalogClient(client_cfg)
    try:
        result = client.fetch_window(cfg.fetch_ids, window)
    finally:
        client.close()
    with open(cfg.tle_path, "w", encoding="ascii", newline="\n") as fh:
        for norad_id in sorted(result.series):
            for rec in result.series[norad_id].observations:
                line1, line2 = format_tle(rec)
                fh.write(line1 + "\n" + line2 + "\n")
    log.info("fetched %d records for %d objects", result.record_count, result.object_count)


def _dispatch(args) -> int:
    if args.command == "synth":
        if not args.out:
            raise ConfigError("synth requires --out")
        scenario = load_scenario(args.scenario)
        pipeline.run_synth(scenario, args.out)
        print(f"wrote synthetic corpus to {args.out}")
        return EXIT_OK

    cfg = _load_config(args)

    if args.command == "ingest":
        if args.fetch:
            _run_fetch(cfg, args.window)
        result = pipeline.run_ingest(cfg)
        print(f"ingested {result.record_count} records for {result.object_count} objects"
              f" ({len(result.rejected)} rejected)")
    elif args.command == "label":
        outputs = pipeline.run_label(cfg, window_names=args.windows)
        print(f"wrote {len(outputs)} label table(s)")
    elif args.command == "train":
        results = pipeline.run_train(cfg, window_name=args.window, force=args.force)
        by_status = {}
        for row in results:
            by_status[row["status"]] = by_status.get(row["status"], 0) + 1
        print("training: " + json.dumps(by_status, sort_keys=True))
    elif args.command == "score":
        path = pipeline.run_score(cfg, args.window)
        print(f"wrote {path}")
    elif args.command == "evaluate":
        outputs = pipeline.run_evaluate(cfg, grid_path=args.grid, temporal=args.temporal)
        print("wrote " + ", ".join(outputs))
    elif args.command == "stats":
        chi2_pair = None
        if args.chi2:
            parts = [p.strip() for p in args.chi2.split(",")]
            if len(parts) != 2 or not all(parts):
                raise ConfigError("--chi2 expects two window names, comma separated")
            chi2_pair = (parts[0], parts[1])
        outputs = pipeline.run_stats(cfg, chi2_pair=chi2_pair, monthly=args.monthly,
                                     diffs=args.diffs, corr=args.corr)
        print("wrote " + ", ".join(outputs))
    else:  # pragma: no cover - argparse enforces the choices
        raise ConfigError(f"unknown command {args.command!r}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort boundary for exit code 4
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
