"""Supervision workflow: fit a detector on non-defect embeddings, flag suspect predictions, raise alarms.

Only non-defect predictions are judged against the detector; a defect
prediction is already an alert from the classifier itself and bypasses
the outlier check.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import dataio
from .dataio import EmbeddingRecord
from .errors import ConfigError, FitError, ScoreError
from .forest import ForestConfig, IsolationForest, fit_forest, score_batch
from .stats import DEFAULT_MAD_K, KsResult, MadSummary, ks_test, mad_summary

DEFAULT_WINDOW = 200
MIN_ALARM_RATE = 0.05
ALARM_BASELINE_MULTIPLIER = 3.0


@dataclass(eq=False)
class DriftDetector:
    """The deployable supervision model: forest + training-score summary."""

    forest: IsolationForest
    mad: MadSummary
    baseline_flag_rate: float
    n_train: int
    created_at: str = ""
    train_scores: np.ndarray | None = None  # kept in memory after fit, never serialized

    @property
    def threshold(self) -> float:
        return self.mad.threshold

    @property
    def dim(self) -> int:
        return self.forest.config.dim


@dataclass(frozen=True)
class ScoredRecord:
    id: int
    score: float
    flagged: bool
    pred: int


def is_nondefect_training_record(record: EmbeddingRecord) -> bool:
    """Ground truth designates the class; the prediction stands in when truth is unknown."""
    if record.truth == dataio.UNKNOWN:
        return record.pred == dataio.NONDEFECT
    return record.truth == dataio.NONDEFECT


def fit_detector(
    train_records: list[EmbeddingRecord],
    config: ForestConfig,
    k: float = DEFAULT_MAD_K,
    created_at: str = "",
    n_jobs: int = 1,
) -> DriftDetector:
    """Fit the forest on non-defect records, then threshold their own scores at k MADs."""
    rows = [r for r in train_records if is_nondefect_training_record(r)]
    if len(rows) < 2:
        raise FitError(f"need at least 2 non-defect training records, got {len(rows)}")
    X = np.empty((len(rows), config.dim), dtype=np.float64)
    for i, rec in enumerate(rows):
        feats = np.asarray(rec.features, dtype=np.float64)
        if feats.shape != (config.dim,):
            raise FitError(f"record {rec.id} has {feats.size} features, expected {config.dim}")
        if not np.all(np.isfinite(feats)):
            raise FitError(f"non-finite feature value in record {rec.id}")
        X[i] = feats

    forest = fit_forest(X, config, n_jobs=n_jobs)
    train_scores = score_batch(forest, X)
    mad = mad_summary(train_scores, k=k)
    if mad.degenerate:
        warnings.warn("training score distribution has zero MAD; threshold floored at the median")
    baseline = float(np.mean(train_scores >= mad.threshold))
    return DriftDetector(
        forest=forest,
        mad=mad,
        baseline_flag_rate=baseline,
        n_train=len(rows),
        created_at=created_at,
        train_scores=train_scores,
    )


def score_record(detector: DriftDetector, record: EmbeddingRecord) -> ScoredRecord:
    """Score one record; flag it only when it was predicted non-defect."""
    feats = np.asarray(record.features, dtype=np.float64)
    if feats.shape != (detector.dim,):
        raise ScoreError(f"record {record.id}: expected {detector.dim} features, got {feats.size}")
    try:
        value = float(score_batch(detector.forest, feats[np.newaxis, :])[0])
    except ScoreError:
        raise ScoreError(f"record {record.id}: non-finite feature value") from None
    flagged = record.pred == dataio.NONDEFECT and value >= detector.threshold
    return ScoredRecord(id=record.id, score=value, flagged=flagged, pred=record.pred)


def score_records(detector: DriftDetector, records: list[EmbeddingRecord]) -> list[ScoredRecord]:
    """Vectorized scoring of many records; equals record-by-record scoring exactly."""
    if not records:
        return []
    X = np.empty((len(records), detector.dim), dtype=np.float64)
    for i, rec in enumerate(records):
        feats = np.asarray(rec.features, dtype=np.float64)
        if feats.shape != (detector.dim,):
            raise ScoreError(f"record {rec.id}: expected {detector.dim} features, got {feats.size}")
        if not np.all(np.isfinite(feats)):
            raise ScoreError(f"record {rec.id}: non-finite feature value")
        X[i] = feats
    values = score_batch(detector.forest, X)
    return [
        ScoredRecord(
            id=rec.id,
            score=float(v),
            flagged=rec.pred == dataio.NONDEFECT and v >= detector.threshold,
            pred=rec.pred,
        )
        for rec, v in zip(records, values)
    ]


# --- streaming monitor -------------------------------------------------------

@dataclass(frozen=True)
class MonitorEvent:
    kind: str  # "flag" | "alarm_raised" | "alarm_cleared" | "error"
    index: int
    record_id: int | None = None
    score: float | None = None
    window_flag_rate: float | None = None
    message: str | None = None

    def to_json_obj(self) -> dict:
        obj: dict = {"event": self.kind, "index": self.index}
        if self.record_id is not None:
            obj["id"] = self.record_id
        if self.score is not None:
            obj["score"] = self.score
        if self.window_flag_rate is not None:
            obj["window_flag_rate"] = self.window_flag_rate
        if self.message is not None:
            obj["message"] = self.message
        return obj


@dataclass(eq=False)
class MonitorState:
    """Sliding-window flag statistics over non-defect predictions.

    The alarm is active exactly while the window is full and its flag
    rate sits at or above alarm_rate. seen counts every consumed stream
    item, including malformed ones.
    """

    window_size: int = DEFAULT_WINDOW
    alarm_rate: float = MIN_ALARM_RATE
    window: deque = field(default_factory=deque)
    window_flags: int = 0
    seen: int = 0
    scored: int = 0
    flagged: int = 0
    errors: int = 0
    alarm_active: bool = False
    alarms_raised: int = 0

    @property
    def window_flag_rate(self) -> float:
        return self.window_flags / len(self.window) if self.window else 0.0


def new_monitor(detector: DriftDetector, window: int = DEFAULT_WINDOW, alarm_rate: float | None = None) -> MonitorState:
    """Fresh monitor; the default alarm rate is anchored to the detector's own false-flag rate."""
    if window < 1:
        raise ConfigError(f"window size must be >= 1, got {window}")
    if alarm_rate is None:
        alarm_rate = max(MIN_ALARM_RATE, ALARM_BASELINE_MULTIPLIER * detector.baseline_flag_rate)
    if not 0.0 < alarm_rate <= 1.0:
        raise ConfigError(f"alarm rate must lie in (0, 1], got {alarm_rate}")
    return MonitorState(window_size=window, alarm_rate=alarm_rate)


def monitor_step(state: MonitorState, scored: ScoredRecord) -> list[MonitorEvent]:
    """Fold one scored record into the monitor; returns the events it causes.

    A single record can emit both a flag and an alarm transition, so the
    result is a list. Defect predictions only advance the counters.
    """
    index = state.seen
    state.seen += 1
    state.scored += 1
    events: list[MonitorEvent] = []
    if scored.pred != dataio.NONDEFECT:
        return events

    if scored.flagged:
        state.flagged += 1
        events.append(MonitorEvent(kind="flag", index=index, record_id=scored.id, score=scored.score))
    if len(state.window) == state.window_size:
        state.window_flags -= state.window.popleft()
    state.window.append(1 if scored.flagged else 0)
    state.window_flags += 1 if scored.flagged else 0

    full = len(state.window) == state.window_size
    rate = state.window_flag_rate
    now_active = full and rate >= state.alarm_rate
    if now_active and not state.alarm_active:
        state.alarms_raised += 1
        events.append(MonitorEvent(kind="alarm_raised", index=index, window_flag_rate=rate))
    elif state.alarm_active and not now_active:
        events.append(MonitorEvent(kind="alarm_cleared", index=index, window_flag_rate=rate))
    state.alarm_active = now_active
    return events


def monitor_error(state: MonitorState, message: str) -> MonitorEvent:
    """Record a malformed stream item without aborting the stream."""
    index = state.seen
    state.seen += 1
    state.errors += 1
    return MonitorEvent(kind="error", index=index, message=message)


# --- evaluation ---------------------------------------------------------------

@dataclass(frozen=True)
class EvalReport:
    """Detection quality against a labeled OOD batch; all rates are exact count ratios."""

    threshold: float
    baseline_flag_rate: float
    n_test: int
    n_test_flagged: int
    test_flag_rate: float | None
    n_ood: int
    n_type2: int
    type_ii_rate: float | None
    n_detected: int
    detection_rate: float | None
    ks_train_vs_test: KsResult | None
    ks_train_vs_ood: KsResult | None

    CSV_HEADER = (
        "threshold,baseline_flag_rate,n_test,n_test_flagged,test_flag_rate,"
        "n_ood,n_type2,type_ii_rate,n_detected,detection_rate,"
        "ks_train_test_d,ks_train_test_p,ks_train_ood_d,ks_train_ood_p"
    )

    def to_json_obj(self) -> dict:
        def ks(r: KsResult | None):
            if r is None:
                return None
            return {"d_statistic": r.d_statistic, "p_value": r.p_value, "n1": r.n1, "n2": r.n2}

        return {
            "threshold": self.threshold,
            "baseline_flag_rate": self.baseline_flag_rate,
            "n_test": self.n_test,
            "n_test_flagged": self.n_test_flagged,
            "test_flag_rate": self.test_flag_rate,
            "n_ood": self.n_ood,
            "n_type2": self.n_type2,
            "type_ii_rate": self.type_ii_rate,
            "n_detected": self.n_detected,
            "detection_rate": self.detection_rate,
            "ks_train_vs_test": ks(self.ks_train_vs_test),
            "ks_train_vs_ood": ks(self.ks_train_vs_ood),
        }

    def to_csv_row(self) -> str:
        def num(v):
            return "nan" if v is None else repr(v) if isinstance(v, float) else str(v)

        tt, to = self.ks_train_vs_test, self.ks_train_vs_ood
        cells = [
            self.threshold, self.baseline_flag_rate,
            self.n_test, self.n_test_flagged, self.test_flag_rate,
            self.n_ood, self.n_type2, self.type_ii_rate, self.n_detected, self.detection_rate,
            tt.d_statistic if tt else None, tt.p_value if tt else None,
            to.d_statistic if to else None, to.p_value if to else None,
        ]
        return ",".join(num(c) for c in cells)


def evaluate(
    detector: DriftDetector,
    test_nondefect: list[EmbeddingRecord],
    ood: list[EmbeddingRecord],
    train_scores: np.ndarray | None = None,
) -> EvalReport:
    """Measure type-II exposure and detection against a labeled OOD batch.

    Undefined rates (empty denominators) stay None rather than turning
    into silent zeros.
    """
    if train_scores is None:
        train_scores = detector.train_scores
    if train_scores is None:
        raise ConfigError("training scores unavailable; pass train_scores for a loaded detector")

    test_scored = score_records(detector, test_nondefect)
    n_test = len(test_scored)
    n_test_flagged = sum(1 for s in test_scored if s.flagged)

    ood_scored = score_records(detector, ood)
    n_ood = len(ood_scored)
    type2 = [s for s in ood_scored if s.pred == dataio.NONDEFECT]
    n_type2 = len(type2)
    n_detected = sum(1 for s in type2 if s.flagged)

    ks_tt = ks_test(train_scores, [s.score for s in test_scored]) if n_test else None
    ks_to = ks_test(train_scores, [s.score for s in type2]) if n_type2 else None

    return EvalReport(
        threshold=detector.threshold,
        baseline_flag_rate=detector.baseline_flag_rate,
        n_test=n_test,
        n_test_flagged=n_test_flagged,
        test_flag_rate=n_test_flagged / n_test if n_test else None,
        n_ood=n_ood,
        n_type2=n_type2,
        type_ii_rate=n_type2 / n_ood if n_ood else None,
        n_detected=n_detected,
        detection_rate=n_detected / n_type2 if n_type2 else None,
        ks_train_vs_test=ks_tt,
        ks_train_vs_ood=ks_to,
    )


def compare_distributions(scores_a, scores_b) -> KsResult:
    """KS comparison of two outlier-score samples."""
    return ks_test(scores_a, scores_b)
