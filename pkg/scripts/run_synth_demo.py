#!/usr/bin/env python3
"""Generate a small synthetic corpus and run the whole pipeline on it.

Writes a scenario, a run config, and every report the CLI can produce into
--out. Useful as a smoke test and as a worked example of the file formats.
"""

import argparse
import json
import os
import sys

from rsowatch.cli import main as cli_main
from rsowatch.synthetic import (ElementBaseline, ScenarioConfig, epoch_grid,
                                index_range_injection, save_scenario)
from rsowatch.windows import utc

BASELINES = {
    "mean_motion": ElementBaseline(level=15.1, sigma=0.001),
    "eccentricity": ElementBaseline(level=0.0007, sigma=2e-5),
    "inclination": ElementBaseline(level=51.64, sigma=0.005),
    "raan": ElementBaseline(level=180.0, sigma=0.02, drift_per_day=-0.001),
    "arg_perigee": ElementBaseline(level=90.0, sigma=0.5),
    "mean_anomaly": ElementBaseline(level=200.0, sigma=1.0),
}


def build_scenario(seed: int) -> ScenarioConfig:
    base = ScenarioConfig(
        object_count=8, observations_per_object=240, start_epoch=utc(2021, 1, 1),
        cadence_per_day=2.0, baselines=BASELINES, seed=seed,
    )
    epochs = epoch_grid(base, 0)
    injections = [
        index_range_injection(epochs, 200, 205, "inclination", "step", 12.0,
                              norad_ids=[90001, 90002]),
        index_range_injection(epochs, 210, 211, "mean_motion", "impulse", 15.0,
                              sign=-1, norad_ids=[90001]),
        index_range_injection(epochs, 220, 224, "raan", "ramp", 14.0, norad_ids=[90003]),
    ]
    return ScenarioConfig(
        object_count=8, observations_per_object=240, start_epoch=utc(2021, 1, 1),
        cadence_per_day=2.0, baselines=BASELINES, seed=seed,
        distractor_count=3,
        mission_labels=["communications", "earth_science", "navigation_global_positioning"],
        injections=injections,
    )


def build_config(out_dir: str, seed: int, workers: int) -> dict:
    return {
        "out_dir": out_dir,
        "seed": seed,
        "workers": workers,
        "tle_path": os.path.join(out_dir, "corpus.tle"),
        "satcat_path": os.path.join(out_dir, "satcat.csv"),
        "mission_primary_path": os.path.join(out_dir, "missions_primary.csv"),
        "mission_secondary_path": os.path.join(out_dir, "missions_secondary.csv"),
        "windows": {
            "train": ["2021-01-01T00:00:00+00:00", "2021-03-22T00:00:00+00:00"],
            "baseline": ["2021-03-22T00:00:00+00:00", "2021-04-11T00:00:00+00:00"],
            "leadup": ["2021-04-11T00:00:00+00:00", "2021-05-01T00:00:00+00:00"],
        },
        "selection": {
            "owner_codes": ["CIS"],
            "excluded_object_types": ["DEBRIS"],
            "min_training_observations": 100,
            "count_window": "train",
        },
        "model": {"epochs": 25, "seed": 0},
        "temporal": {"eval_window": "leadup", "durations_days": [30.0, 60.0, 80.0]},
    }


def run(argv, step: str) -> None:
    code = cli_main(argv)
    if code != 0:
        print(f"step {step} failed with exit code {code}", file=sys.stderr)
        raise SystemExit(code)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="demo_out", help="output directory")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--temporal", action="store_true",
                        help="also run the (slower) temporal window sweep")
    args = parser.parse_args()

    os.makedirs(args.out, exist_ok=True)
    scenario_path = os.path.join(args.out, "scenario_in.json")
    config_path = os.path.join(args.out, "run_config.json")
    save_scenario(build_scenario(args.seed), scenario_path)
    with open(config_path, "w", encoding="utf-8") as fh:
        json.dump(build_config(args.out, args.seed, args.workers), fh, indent=2, sort_keys=True)

    run(["--out", args.out, "synth", "--scenario", scenario_path], "synth")
    base = ["--config", config_path]
    run(base + ["ingest"], "ingest")
    run(base + ["label"], "label")
    run(base + ["train"], "train")
    run(base + ["score", "--window", "baseline"], "score baseline")
    run(base + ["score", "--window", "leadup"], "score leadup")
    run(base + ["stats", "--chi2", "baseline,leadup", "--monthly", "--diffs", "--corr"], "stats")
    if args.temporal:
        run(base + ["evaluate", "--temporal"], "evaluate")

    print(f"\ndemo complete; reports are under {args.out}")


if __name__ == "__main__":
    main()
