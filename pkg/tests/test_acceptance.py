"""Acceptance battery for the shipped toolkit.

Each test carries an ``acceptance`` marker; the conftest hook prints one
``ACCEPTANCE PASS/FAIL: <name>`` line per criterion at the end of the run.
Shared synthetic runs are computed once per session and reused.
"""
import contextlib
import io
import json
import math
import time

import numpy as np
import pytest

from driftwatch import dataio
from driftwatch.cli import main
from driftwatch.dataio import (
    load_detector,
    read_embeddings,
    read_embeddings_binary,
    read_embeddings_csv,
    save_detector,
    write_embeddings_binary,
    write_embeddings_csv,
)
from driftwatch.errors import FormatError
from driftwatch.forest import ForestConfig, fit_forest, path_length, score_batch
from driftwatch.pipeline import (
    MonitorState,
    evaluate,
    fit_detector,
    monitor_step,
    new_monitor,
    score_record,
    score_records,
)
from driftwatch.service import create_app
from driftwatch.stats import c_factor, ks_pvalue, ks_test, mad_summary
from driftwatch.synth import DriftSchedule, SynthConfig, gen_baseline, gen_ood, gen_stream
from tests.conftest import make_records

SCENARIO_SEEDS = (1, 2, 3, 4, 5)


@pytest.fixture(scope="module")
def synthetic_runs():
    """One fitted detector and evaluation per scenario seed, dim 64 defaults."""
    t_start = time.time()
    runs = []
    for seed in SCENARIO_SEEDS:
        cfg = SynthConfig(dim=64, n_train=1000, n_test=500, seed=seed)
        train, test = gen_baseline(cfg)
        det = fit_detector(train, ForestConfig(dim=64))
        test_nd = [r for r in test if r.truth == dataio.NONDEFECT]
        ood = gen_ood(cfg, 500, severity=8.0, type_ii_rate=0.6)
        report = evaluate(det, test_nd, ood)
        runs.append({"seed": seed, "cfg": cfg, "detector": det, "report": report})
    return {"runs": runs, "elapsed": time.time() - t_start}


@pytest.mark.acceptance("oracle-values")
def test_normalizer_and_two_point_score_oracles():
    assert c_factor(1) == 0.0
    assert c_factor(2) == 1.0
    assert c_factor(256) == pytest.approx(10.2448, abs=1e-3)
    gamma = 0.5772156649
    own = 2.0 * (math.log(255) + gamma) - 2.0 * 255 / 256
    assert c_factor(256) == pytest.approx(own, abs=1e-6)
    # two points always split on the first cut: path length 1, c(2) = 1
    X = np.array([[0.0], [1.0]])
    forest = fit_forest(X, ForestConfig(dim=1, n_trees=50, psi=2, seed=0))
    scores = score_batch(forest, X)
    assert scores == pytest.approx([0.5, 0.5], abs=1e-9)


@pytest.mark.acceptance("score-bounds-and-monotonicity")
def test_score_bounds_and_path_monotonicity():
    t0 = time.time()
    rng = np.random.default_rng(99)
    pairs = 0
    for trial in range(25):
        dim = int(rng.integers(2, 9))
        n = int(rng.integers(30, 120))
        X = rng.standard_normal((n, dim)) * rng.uniform(0.5, 3.0)
        cfg = ForestConfig(
            dim=dim,
            n_trees=int(rng.integers(5, 40)),
            psi=int(rng.integers(4, 64)),
            seed=int(rng.integers(0, 10_000)),
        )
        forest = fit_forest(X, cfg)
        pts = rng.standard_normal((48, dim)) * 4.0
        scores = score_batch(forest, pts)
        assert np.all(scores > 0.0) and np.all(scores <= 1.0)
        mean_paths = np.array([
            np.mean([path_length(t, p) for t in forest.trees]) for p in pts
        ])
        order = np.argsort(mean_paths)
        s_sorted = scores[order]
        h_sorted = mean_paths[order]
        # strictly shorter mean path must give a strictly higher score
        for a, b in zip(range(len(pts) - 1), range(1, len(pts))):
            if h_sorted[a] < h_sorted[b]:
                assert s_sorted[a] > s_sorted[b]
        pairs += len(pts)
    assert pairs >= 1000
    assert time.time() - t0 < 10.0


@pytest.mark.acceptance("robust-stats-oracles")
def test_mad_and_ks_reference_values():
    summary = mad_summary(np.array([1.0, 2.0, 3.0, 4.0, 100.0]))
    assert summary.threshold == 6.5
    assert ks_pvalue(0.2, 100, 100) == pytest.approx(0.0366, abs=1e-3)
    same = np.array([0.2, 0.4, 0.6])
    result = ks_test(same, same.copy())
    assert result.d_statistic == 0.0
    assert result.p_value == 1.0


@pytest.mark.acceptance("synthetic-detection-rates")
def test_synthetic_detection_and_false_flag_rates(synthetic_runs):
    passing = 0
    for run in synthetic_runs["runs"]:
        rep = run["report"]
        assert rep.n_ood == 500 and rep.n_test == 500
        if rep.detection_rate >= 0.90 and rep.test_flag_rate <= 0.05:
            passing += 1
    assert passing >= 4, [
        (r["seed"], r["report"].detection_rate, r["report"].test_flag_rate)
        for r in synthetic_runs["runs"]
    ]
    assert synthetic_runs["elapsed"] < 60.0


@pytest.mark.acceptance("score-distribution-gap")
def test_ks_p_value_gap_between_test_and_ood(synthetic_runs):
    for run in synthetic_runs["runs"]:
        rep = run["report"]
        p_tt = rep.ks_train_vs_test.p_value
        p_to = rep.ks_train_vs_ood.p_value
        assert p_tt >= 1e3 * p_to, (run["seed"], p_tt, p_to)


@pytest.mark.acceptance("severity-zero-null")
def test_severity_zero_flag_rate_matches_baseline(synthetic_runs):
    within = 0
    for run in synthetic_runs["runs"]:
        null_batch = gen_ood(run["cfg"], 500, severity=0.0, type_ii_rate=1.0)
        scored = score_records(run["detector"], null_batch)
        rate = sum(1 for s in scored if s.flagged) / len(scored)
        if abs(rate - run["detector"].baseline_flag_rate) <= 0.03:
            within += 1
    assert within >= 4


@pytest.mark.acceptance("drift-alarm-end-to-end")
def test_alarm_fires_in_drift_window_and_stays_quiet_without(tmp_path):
    t0 = time.time()

    def run_cli(argv):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = main(argv)
        return code, out.getvalue()

    base = ["simulate", "--dim", "16", "--n-train", "500", "--n-test", "100",
            "--seed", "3", "--schedule", "abrupt", "--t0", "500", "--length", "1000",
            "--severity", "8", "--type2-rate", "0.6"]
    drift_dir, quiet_dir = tmp_path / "drift", tmp_path / "quiet"
    assert run_cli(base + ["--out", str(drift_dir)])[0] == 0
    assert run_cli(base + ["--ood-frac", "0", "--out", str(quiet_dir)])[0] == 0

    model = str(tmp_path / "model.json")
    code, _ = run_cli(["fit", "--train", str(drift_dir / "train.csv"), "--out", model])
    assert code == 0

    code, out = run_cli(["monitor", "--model", model,
                         "--in", str(drift_dir / "stream.csv"), "--window", "200"])
    assert code == 3
    events = [json.loads(line) for line in out.strip().split("\n")]
    first_alarm = next(e for e in events if e["event"] == "alarm_raised")
    assert 500 <= first_alarm["index"] <= 900

    code, out = run_cli(["monitor", "--model", model,
                         "--in", str(quiet_dir / "stream.csv"), "--window", "200"])
    assert code == 0
    summary = json.loads(out.strip().split("\n")[-1])
    assert summary["alarms_raised"] == 0
    assert time.time() - t0 < 30.0


@pytest.mark.acceptance("equivalences")
def test_batch_stream_service_and_serialization_equivalences(tmp_path):
    rng = np.random.default_rng(31)
    train = make_records(rng.standard_normal((400, 8)), pred=0, truth=0)
    det = fit_detector(train, ForestConfig(dim=8, seed=31))

    # batch scoring and one-at-a-time scoring flag the same records
    queries = make_records(rng.standard_normal((500, 8)) * 1.6, pred=0, truth=255, start_id=1000)
    batch = score_records(det, queries)
    assert batch == [score_record(det, q) for q in queries]

    # a saved and reloaded detector reproduces scores exactly
    path = tmp_path / "model.json"
    save_detector(det, path)
    loaded = load_detector(path)
    fresh = make_records(rng.standard_normal((1000, 8)), pred=0, truth=255, start_id=5000)
    s_orig = [s.score for s in score_records(det, fresh)]
    s_loaded = [s.score for s in score_records(loaded, fresh)]
    assert s_orig == s_loaded

    # CLI monitor and the HTTP service reach identical window state
    cfg = SynthConfig(dim=8, n_train=50, n_test=10, seed=8)
    sched = DriftSchedule(mode="abrupt", t0=100, severity=8.0, type_ii_rate=1.0)
    stream = gen_stream(cfg, sched, length=200)
    stream_path = tmp_path / "stream.csv"
    write_embeddings_csv(stream_path, 8, stream)

    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        main(["monitor", "--model", str(path), "--in", str(stream_path), "--window", "50"])
    cli_summary = json.loads(out.getvalue().strip().split("\n")[-1])

    from fastapi.testclient import TestClient

    with TestClient(create_app()) as client:
        resp = client.post("/detectors", params={"window": 50}, json={"path": str(path)})
        did = resp.json()["detector_id"]
        payload = [
            {"id": r.id, "pred": r.pred, "features": [float(v) for v in r.features]}
            for r in stream
        ]
        client.post(f"/detectors/{did}/score", json=payload)
        status = client.get(f"/detectors/{did}/status").json()

    for key in ("seen", "scored", "flagged", "alarms_raised", "alarm_active", "window_flag_rate"):
        assert status[key] == cli_summary[key], key


@pytest.mark.acceptance("format-round-trips")
def test_formats_round_trip_and_reject_corruption(tmp_path):
    rng = np.random.default_rng(77)
    recs = make_records(rng.standard_normal((64, 6)).astype(np.float32), pred=0, truth=0)
    recs += make_records(rng.standard_normal((16, 6)).astype(np.float32), pred=1, truth=2, start_id=64)

    csv_a = tmp_path / "a.csv"
    write_embeddings_csv(csv_a, 6, recs)
    dim, from_csv = read_embeddings_csv(csv_a)
    assert dim == 6

    bin_path = tmp_path / "a.bin"
    write_embeddings_binary(bin_path, 6, from_csv)
    dim_b, from_bin = read_embeddings_binary(bin_path)
    assert dim_b == 6
    assert len(from_bin) == len(recs)
    for orig, back in zip(recs, from_bin):
        assert (orig.id, orig.pred, orig.truth) == (back.id, back.pred, back.truth)
        assert np.array_equal(orig.features, back.features)  # f32 in, f32 out

    csv_b = tmp_path / "b.csv"
    write_embeddings_csv(csv_b, 6, from_bin)
    assert csv_a.read_bytes() == csv_b.read_bytes()

    data = bytearray(bin_path.read_bytes())
    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"XXXX" + bytes(data[4:]))
    with pytest.raises(FormatError, match="magic"):
        read_embeddings_binary(bad_magic)

    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(bytes(data[:-7]))
    with pytest.raises(FormatError, match=r"expected \d+ bytes"):
        read_embeddings_binary(truncated)

    assert read_embeddings(bin_path)[1][0].id == recs[0].id  # extension sniffing
