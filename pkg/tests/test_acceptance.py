"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line (visible with -s, or in the captured
output on failure) and enforces the stated tolerance and time budget.
"""

import dataclasses
import json
import os
import time

import numpy as np

from rsowatch import anchor_ae, isolation_forest, sweeps
from rsowatch.anchor_ae import ModelConfig, PARAM_NAMES, anchor_loss
from rsowatch.elements import ELEMENT_NAMES
from rsowatch.isolation_forest import IForestConfig
from rsowatch.metrics import (ConfusionCounts, ContingencyTable2x2, chi_square_2x2,
                              confusion, f1_score)
from rsowatch.outliers import iqr_outliers
from rsowatch.synthetic import (ElementBaseline, ScenarioConfig, corpus_text,
                                epoch_grid, format_tle, generate,
                                index_range_injection)
from rsowatch.tle import checksum, epoch_decode, parse_tle, parse_tle_text
from rsowatch.windows import PeriodWindow, utc

from fd import max_gradient_error, random_small_setup
from test_anchor_ae import brute_force_anchor
from test_outliers import brute_force_outliers
from test_pipeline_cli import build_workspace, run_cli


def report(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance {number:02d}] {status} {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"acceptance {number:02d} {name}: {detail}"


def quiet_baselines(**drift):
    base = {
        "mean_motion": ElementBaseline(15.1, 0.001),
        "eccentricity": ElementBaseline(0.0007, 2e-5),
        "inclination": ElementBaseline(51.64, 0.005),
        "raan": ElementBaseline(180.0, 0.02),
        "arg_perigee": ElementBaseline(90.0, 0.5),
        "mean_anomaly": ElementBaseline(200.0, 1.0),
    }
    for name, rate in drift.items():
        b = base[name]
        base[name] = ElementBaseline(b.level, b.sigma, drift_per_day=rate)
    return base


def test_01_chi_square_reproduces_flagged_rate_comparison():
    t0 = time.monotonic()
    table = ContingencyTable2x2(anomalies_a=1634, total_a=842269,
                                anomalies_b=26536, total_b=880546)
    result = chi_square_2x2(table)
    elapsed = time.monotonic() - t0
    ok = (abs(result.statistic - 21276.23) <= 5.0
          and result.p_value < 1e-300
          and result.p_label == "< 0.001"
          and elapsed < 1.0)
    report(1, "chi-square on published counts",
           ok, f"statistic={result.statistic:.2f}, p_label={result.p_label!r}, {elapsed:.3f}s")


def test_02_anchor_loss_matches_brute_force_over_random_batches():
    t0 = time.monotonic()
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        B = int(rng.integers(2, 65))
        dim = int(rng.integers(2, 9))
        k = int(rng.integers(1, 7))
        Z = rng.normal(scale=10.0 ** rng.uniform(-2, 2), size=(B, dim))
        worst = max(worst, abs(anchor_loss(Z, k) - brute_force_anchor(Z, k)))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    report(2, "anchor term vs O(B^2) reference over 1000 batches",
           ok, f"worst abs err={worst:.2e}, {elapsed:.2f}s")


def test_03_gradients_match_finite_differences_on_random_models():
    t0 = time.monotonic()
    worst = 0.0
    anchor_count = 0
    for seed in range(100):
        params, cfg, batch = random_small_setup(seed)
        anchor_count += cfg.lambda_anchor > 0.0
        worst = max(worst, max_gradient_error(params, cfg, batch))
    elapsed = time.monotonic() - t0
    ok = worst < 1e-4 and anchor_count > 0 and elapsed < 60.0
    report(3, "finite-difference gradient check over 100 random models",
           ok, f"worst rel err={worst:.2e}, {anchor_count} with anchor, {elapsed:.1f}s")


def test_04_zero_anchor_weight_is_bitwise_plain_autoencoder():
    rng = np.random.default_rng(404)
    X = rng.normal(size=(200, 6)) * [0.001, 2e-5, 0.005, 0.02, 0.5, 1.0] \
        + [15.1, 0.0007, 51.64, 180.0, 90.0, 200.0]

    direct_cfg = ModelConfig(epochs=150, lambda_anchor=0.0, seed=77)
    direct = anchor_ae.train(X, direct_cfg, norad_id=1)

    # the plain-autoencoder family as the sweep harness builds it: a nonzero
    # anchor weight in the base config that the family override switches off
    base = ModelConfig(epochs=150, lambda_anchor=0.25, seed=0)
    family_cfg, _ = sweeps._build_configs("ae", {}, 77, base, IForestConfig())
    via_family = anchor_ae.train(X, family_cfg, norad_id=1)

    identical = all(
        np.array_equal(direct.params[name], via_family.params[name])
        for name in PARAM_NAMES
    )
    same_loss = direct.metadata["final_loss"] == via_family.metadata["final_loss"]
    report(4, "anchor weight 0 equals plain autoencoder bit for bit",
           identical and same_loss,
           f"{len(PARAM_NAMES)} parameter arrays compared after 150 epochs")


def test_05_injected_anomalies_recovered_on_synthetic_constellation():
    t0 = time.monotonic()
    n_objects, n_obs = 20, 1000
    train_rows, score_start = 850, 925
    sc = ScenarioConfig(
        object_count=n_objects,
        observations_per_object=n_obs,
        start_epoch=utc(2016, 1, 1),
        cadence_per_day=2.0,
        baselines=quiet_baselines(),
        seed=2016,
    )

    # Three anomaly cycles per object inside the scored stretch. Every cycle
    # hits all six elements with an impulse, a step and a ramp; the step takes
    # one sign and the impulse and ramp the other, so each element sees
    # exactly 15 high and 15 low anomalous observations out of 75 scored.
    # That keeps the interquartile fences anchored in the normal band.
    injections = []
    for o in range(n_objects):
        nid = 90001 + o
        epochs = epoch_grid(sc, o)
        for c in range(3):
            base = score_start + 25 * c
            for j, element in enumerate(ELEMENT_NAMES):
                s = 1 if (c + j + o) % 2 == 0 else -1
                mag = lambda e: 12.0 + ((7 * e + 3 * o + 5 * c + 2 * j) % 13)
                injections += [
                    index_range_injection(epochs, base + 2, base + 3, element,
                                          "impulse", mag(0), sign=-s, norad_ids=(nid,)),
                    index_range_injection(epochs, base + 7, base + 12, element,
                                          "step", mag(1), sign=s, norad_ids=(nid,)),
                    index_range_injection(epochs, base + 16, base + 20, element,
                                          "ramp", mag(2), sign=-s, norad_ids=(nid,)),
                ]
    corpus = generate(dataclasses.replace(sc, injections=injections))

    vs_masks = ConfusionCounts()
    vs_labels = ConfusionCounts()
    for o in range(n_objects):
        nid = 90001 + o
        matrix = corpus.series[nid].matrix()
        model = anchor_ae.train(
            matrix[:train_rows],
            ModelConfig(seed=sweeps.sub_seed(5, nid)),
            norad_id=nid,
        )
        scored = matrix[score_start:]
        _, flags, _ = anchor_ae.score_matrix(model, scored)

        masks = corpus.mask_matrix(nid)[score_start:]
        labels = np.column_stack([iqr_outliers(scored[:, j]) for j in range(6)])
        vs_masks = vs_masks + confusion(masks.ravel(), flags.ravel())
        vs_labels = vs_labels + confusion(labels.ravel(), flags.ravel())

    f1_masks = f1_score(vs_masks)
    f1_labels = f1_score(vs_labels)
    elapsed = time.monotonic() - t0
    density = vs_masks.tp + vs_masks.fn
    ok = f1_masks >= 0.90 and f1_labels >= 0.75 and elapsed < 600.0
    report(5, "flags recover injected anomalies and agree with quartile labels",
           ok, f"F1 vs masks={f1_masks:.3f}, F1 vs labels={f1_labels:.3f}, "
               f"{density} anomalous cells, {elapsed:.0f}s")


def test_06_quartile_outliers_match_brute_force_exactly():
    rng = np.random.default_rng(6)
    checked = 0
    for i in range(10000):
        n = int(rng.integers(4, 201))
        style = i % 4
        if style == 0:
            values = rng.integers(-50, 51, size=n).astype(np.float64)
        elif style == 1:
            values = rng.normal(scale=10.0 ** rng.uniform(-3, 3), size=n)
        elif style == 2:
            values = np.round(rng.normal(size=n), 1)  # heavy ties
        else:
            values = np.full(n, float(rng.integers(-5, 6)))
            values[rng.integers(0, n)] += float(rng.integers(1, 100))
        expected = np.asarray(brute_force_outliers(values.tolist()), dtype=bool)
        got = iqr_outliers(values)
        assert np.array_equal(got, expected), f"sequence {i} (n={n}, style={style})"
        checked += 1
    report(6, "interquartile outliers exact vs brute force", checked == 10000,
           f"{checked} sequences, n in [4, 200]")


def test_07_format_parse_identity_on_randomized_records():
    from rsowatch.elements import OrbitalElements, TleRecord

    drag_templates = (
        " .00000000  00000-0  00000-0 0",
        "-.00002182  00000-0 -11606-4 0",
        " .00012345  12345-4  56789-3 0",
    )
    rng = np.random.default_rng(7)
    for i in range(1000):
        elements = OrbitalElements(
            mean_motion=round(float(rng.uniform(0.1, 99.9)), 8),
            eccentricity=round(float(rng.uniform(0.0, 0.9)), 7),
            inclination=round(float(rng.uniform(0.0, 180.0)), 4),
            raan=round(float(rng.uniform(0.0, 359.9999)), 4),
            arg_perigee=round(float(rng.uniform(0.0, 359.9999)), 4),
            mean_anomaly=round(float(rng.uniform(0.0, 359.9999)), 4),
        )
        record = TleRecord(
            norad_id=int(rng.integers(1, 100000)),
            epoch=epoch_decode(int(rng.integers(0, 100)),
                               round(float(rng.uniform(1.0, 365.0)), 8)),
            elements=elements,
            classification=str(rng.choice(["U", "C", "S"])),
            intl_designator=str(rng.choice(["98067A", "21005AB", "57001A", ""])),
            element_set_number=int(rng.integers(0, 10000)),
            revolution_number=int(rng.integers(0, 100000)),
            drag_fields=str(rng.choice(drag_templates)),
        )
        line1, line2 = format_tle(record)
        assert int(line1[68]) == checksum(line1[:68]), f"record {i} line 1 checksum"
        assert int(line2[68]) == checksum(line2[:68]), f"record {i} line 2 checksum"
        parsed = parse_tle(line1, line2)
        assert parsed.checksum_valid == (True, True)
        for field in ("norad_id", "epoch", "elements", "classification",
                      "intl_designator", "element_set_number",
                      "revolution_number", "drag_fields"):
            assert getattr(parsed, field) == getattr(record, field), f"record {i}: {field}"

    sc = ScenarioConfig(
        object_count=3, observations_per_object=50,
        start_epoch=utc(2021, 1, 1), cadence_per_day=2.0,
        baselines=quiet_baselines(), seed=70,
    )
    result = parse_tle_text(corpus_text(generate(sc)))
    clean = result.rejected == [] and result.checksum_warnings == 0
    report(7, "text format and parser are exact inverses",
           clean, "1000 randomized records plus a generated corpus")


def test_08_worker_count_never_changes_report_bytes(tmp_path):
    t0 = time.monotonic()
    ws = build_workspace(tmp_path)
    assert run_cli("--out", ws["synth_dir"], "synth", "--scenario", ws["scenario"]) == 0

    outs = {}
    for workers in (1, 8):
        out = tmp_path / f"out_w{workers}"
        cfg = ["--config", ws["config"], "--out", out, "--workers", str(workers)]
        assert run_cli(*cfg, "ingest") == 0
        assert run_cli(*cfg, "label") == 0
        assert run_cli(*cfg, "train") == 0
        assert run_cli(*cfg, "score", "--window", "baseline") == 0
        assert run_cli(*cfg, "score", "--window", "leadup") == 0
        assert run_cli(*cfg, "stats", "--chi2", "baseline,leadup",
                       "--monthly", "--diffs", "--corr") == 0
        assert run_cli(*cfg, "evaluate", "--grid", ws["grid"], "--temporal") == 0
        outs[workers] = out

    def tree(root):
        files = {}
        for dirpath, _, names in os.walk(root):
            for name in names:
                path = os.path.join(dirpath, name)
                rel = os.path.relpath(path, root)
                if name.startswith("manifest_"):
                    continue  # manifests carry wall-clock timestamps
                with open(path, "rb") as fh:
                    files[rel] = fh.read()
        return files

    tree1, tree8 = tree(outs[1]), tree(outs[8])
    same_names = sorted(tree1) == sorted(tree8)
    diffs = [rel for rel in tree1 if tree1[rel] != tree8.get(rel)]
    elapsed = time.monotonic() - t0
    report(8, "1 worker and 8 workers produce byte-identical reports",
           same_names and not diffs,
           f"{len(tree1)} files compared, differing: {diffs or 'none'}, {elapsed:.0f}s")


def test_09_forest_separates_planted_outlier_across_seeds():
    hits = 0
    for trial in range(100):
        rng = np.random.default_rng(trial)
        X = rng.normal(size=(60, 2))
        X[-1] = (12.0, -12.0)
        forest = isolation_forest.fit(X, IForestConfig(n_estimators=50, seed=trial))
        scores = isolation_forest.score(forest, X)
        hits += scores[-1] > np.median(scores[:-1])

    constant = np.full((50, 3), 2.5)
    forest = isolation_forest.fit(constant, IForestConfig(seed=0))
    none_flagged = not isolation_forest.classify(forest, constant).any()

    ok = hits >= 95 and none_flagged
    report(9, "forest ranks a planted outlier above the cluster",
           ok, f"{hits}/100 trials, constant data flags nothing: {none_flagged}")


def test_10_temporal_harness_fills_every_window_and_family():
    t0 = time.monotonic()
    sc = ScenarioConfig(
        object_count=3,
        observations_per_object=1260,
        start_epoch=utc(2016, 1, 1),
        cadence_per_day=0.55,
        baselines=quiet_baselines(),
        seed=10,
    )
    injections = []
    for o in range(3):
        nid = 90001 + o
        epochs = epoch_grid(sc, o)
        injections += [
            index_range_injection(epochs, 1206, 1216, "mean_motion", "step", 14.0,
                                  norad_ids=(nid,)),
            index_range_injection(epochs, 1225, 1226, "inclination", "impulse", 16.0,
                                  norad_ids=(nid,)),
            index_range_injection(epochs, 1235, 1243, "arg_perigee", "ramp", 14.0,
                                  sign=-1, norad_ids=(nid,)),
        ]
    corpus = generate(dataclasses.replace(sc, injections=injections))

    ref_epochs = epoch_grid(sc, 0)
    train_end = ref_epochs[1200]
    eval_window = PeriodWindow("eval", train_end, utc(2023, 6, 1))

    rows = sweeps.temporal_window_eval(
        corpus.series, train_end, eval_window,
        durations_days=tuple(365.25 * y for y in (1, 2, 3, 4, 5)),
        families=("ae", "anchor_ae", "iforest"),
        seed=10,
        base_model=ModelConfig(epochs=30),
        base_forest=IForestConfig(n_estimators=50),
    )
    elapsed = time.monotonic() - t0

    expected_cells = [(f"window_{w}", fam)
                      for w in (1, 2, 3, 4, 5)
                      for fam in ("ae", "anchor_ae", "iforest")]
    shape_ok = [(r.window_name, r.family) for r in rows] == expected_cells
    none_skipped = all(not r.skipped for r in rows)
    populated = all(
        r.accuracy is not None and r.f1 is not None and r.n_eval > 0 for r in rows
    )
    report(10, "temporal comparison covers 5 windows x 3 families with no gaps",
           shape_ok and none_skipped and populated,
           f"{len(rows)} rows, {elapsed:.0f}s")
