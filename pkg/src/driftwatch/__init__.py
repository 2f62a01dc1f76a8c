"""Classifier supervision via isolation-forest outlier scores on embeddings.

Fit a forest on "non-defect" training embeddings, threshold at 3.5 MADs
above the median training score, flag suspect non-defect predictions,
and raise windowed drift alarms on streams.
"""
from .dataio import (
    DEFECT,
    NONDEFECT,
    OOD_TRUTH,
    UNKNOWN,
    EmbeddingRecord,
    load_detector,
    read_embeddings,
    read_embeddings_binary,
    read_embeddings_csv,
    save_detector,
    write_embeddings,
    write_embeddings_binary,
    write_embeddings_csv,
)
from .errors import (
    ConfigError,
    DriftwatchError,
    FitError,
    FormatError,
    ParseError,
    ScoreError,
    VersionError,
)
from .forest import ForestConfig, IsolationForest, IsolationTree, fit_forest, path_length, score, score_batch
from .pipeline import (
    DriftDetector,
    EvalReport,
    MonitorEvent,
    MonitorState,
    ScoredRecord,
    compare_distributions,
    evaluate,
    fit_detector,
    monitor_error,
    monitor_step,
    new_monitor,
    score_record,
    score_records,
)
from .stats import KsResult, MadSummary, c_factor, ks_pvalue, ks_statistic, ks_test, mad_summary
from .synth import DriftSchedule, SynthConfig, dim_sweep, gen_baseline, gen_ood, gen_stream

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DEFECT",
    "DriftDetector",
    "DriftSchedule",
    "DriftwatchError",
    "EmbeddingRecord",
    "EvalReport",
    "FitError",
    "ForestConfig",
    "FormatError",
    "IsolationForest",
    "IsolationTree",
    "KsResult",
    "MadSummary",
    "MonitorEvent",
    "MonitorState",
    "NONDEFECT",
    "OOD_TRUTH",
    "ParseError",
    "ScoreError",
    "ScoredRecord",
    "SynthConfig",
    "UNKNOWN",
    "VersionError",
    "c_factor",
    "compare_distributions",
    "dim_sweep",
    "evaluate",
    "fit_detector",
    "fit_forest",
    "gen_baseline",
    "gen_ood",
    "gen_stream",
    "ks_pvalue",
    "ks_statistic",
    "ks_test",
    "load_detector",
    "mad_summary",
    "monitor_error",
    "monitor_step",
    "new_monitor",
    "path_length",
    "read_embeddings",
    "read_embeddings_binary",
    "read_embeddings_csv",
    "save_detector",
    "score",
    "score_batch",
    "score_record",
    "score_records",
    "write_embeddings",
    "write_embeddings_binary",
    "write_embeddings_csv",
]
