"""Synthetic embedding streams: Gaussian class clusters, simulated classifier errors, drift schedules.

Severity is the Euclidean distance of the OOD cluster center from the
non-defect center, in units of sigma, along a seeded random direction.
Everything is a pure function of (config, schedule), so runs reproduce
byte-identically.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import dataio
from .dataio import EmbeddingRecord
from .errors import ConfigError
from .forest import ForestConfig
from .pipeline import EvalReport, evaluate, fit_detector

DEFECT_SEPARATION = 8.0  # default defect-center distance, in sigmas

# SeedSequence spawn keys, one per purpose; keeps the OOD direction stable
# per seed no matter how much data was drawn before it.
_KEY_BASELINE = (0,)
_KEY_STREAM = (1,)
_KEY_DEFECT_DIR = (2,)
_KEY_OOD_BATCH = (3,)
_KEY_OOD_DIR = (4,)


@dataclass(frozen=True)
class SynthConfig:
    """Isotropic Gaussian clusters for the two in-distribution classes.

    n_train and n_test are per class. Centers default to the origin for
    non-defect and a seeded random direction at DEFECT_SEPARATION sigmas
    for defect.
    """

    dim: int
    n_train: int = 200
    n_test: int = 100
    sigma: float = 1.0
    seed: int = 0
    nondefect_center: tuple[float, ...] | None = None
    defect_center: tuple[float, ...] | None = None
    indist_error_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.n_train < 1:
            raise ConfigError(f"n_train must be >= 1, got {self.n_train}")
        if self.n_test < 0:
            raise ConfigError(f"n_test must be >= 0, got {self.n_test}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must fit in u64, got {self.seed}")
        if not 0.0 <= self.indist_error_rate <= 1.0:
            raise ConfigError(f"indist_error_rate must lie in [0, 1], got {self.indist_error_rate}")
        for name in ("nondefect_center", "defect_center"):
            center = getattr(self, name)
            if center is not None and len(center) != self.dim:
                raise ConfigError(f"{name} has {len(center)} components, expected {self.dim}")


@dataclass(frozen=True)
class DriftSchedule:
    """OOD mixing schedule over stream indices.

    abrupt: q(t) = 0 before t0, ood_fraction_max from t0 on (t1 = t0).
    gradual: linear ramp from 0 at t0 to ood_fraction_max at t1.
    """

    mode: str
    t0: int
    t1: int | None = None
    ood_fraction_max: float = 1.0
    severity: float = 8.0
    type_ii_rate: float = 0.6

    def __post_init__(self) -> None:
        if self.mode not in ("abrupt", "gradual"):
            raise ConfigError(f"mode must be 'abrupt' or 'gradual', got {self.mode!r}")
        if self.t0 < 0:
            raise ConfigError(f"t0 must be >= 0, got {self.t0}")
        if self.t1 is None:
            object.__setattr__(self, "t1", self.t0)
        if self.mode == "abrupt" and self.t1 != self.t0:
            raise ConfigError(f"abrupt schedule requires t1 == t0, got t0={self.t0} t1={self.t1}")
        if self.t1 < self.t0:
            raise ConfigError(f"t1 must be >= t0, got t0={self.t0} t1={self.t1}")
        if not 0.0 <= self.ood_fraction_max <= 1.0:
            raise ConfigError(f"ood_fraction_max must lie in [0, 1], got {self.ood_fraction_max}")
        if not (np.isfinite(self.severity) and self.severity >= 0):
            raise ConfigError(f"severity must be >= 0, got {self.severity}")
        if not 0.0 <= self.type_ii_rate <= 1.0:
            raise ConfigError(f"type_ii_rate must lie in [0, 1], got {self.type_ii_rate}")

    def q(self, t: int) -> float:
        """OOD probability at stream index t."""
        if t < self.t0:
            return 0.0
        if t >= self.t1:
            return self.ood_fraction_max
        return self.ood_fraction_max * (t - self.t0) / (self.t1 - self.t0)


def _rng(seed: int, spawn_key: tuple[int, ...]) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=spawn_key))


def _unit_direction(dim: int, seed: int, spawn_key: tuple[int, ...]) -> np.ndarray:
    rng = _rng(seed, spawn_key)
    while True:
        v = rng.standard_normal(dim)
        norm = float(np.linalg.norm(v))
        if norm > 0.0:
            return v / norm


def nondefect_center(config: SynthConfig) -> np.ndarray:
    if config.nondefect_center is not None:
        return np.asarray(config.nondefect_center, dtype=np.float64)
    return np.zeros(config.dim, dtype=np.float64)


def defect_center(config: SynthConfig) -> np.ndarray:
    if config.defect_center is not None:
        return np.asarray(config.defect_center, dtype=np.float64)
    direction = _unit_direction(config.dim, config.seed, _KEY_DEFECT_DIR)
    return nondefect_center(config) + DEFECT_SEPARATION * config.sigma * direction


def ood_center(config: SynthConfig, severity: float) -> np.ndarray:
    """Center at distance severity*sigma from the non-defect center, seeded direction."""
    direction = _unit_direction(config.dim, config.seed, _KEY_OOD_DIR)
    return nondefect_center(config) + severity * config.sigma * direction


def _indist_record(
    rid: int, cls: int, centers: np.ndarray, config: SynthConfig, rng: np.random.Generator
) -> EmbeddingRecord:
    feats = centers[cls] + config.sigma * rng.standard_normal(config.dim)
    pred = cls
    if config.indist_error_rate > 0.0 and rng.random() < config.indist_error_rate:
        pred = 1 - cls
    # stored precision everywhere is f32; emit it here so in-memory records
    # score identically to ones written to disk and read back
    return EmbeddingRecord(id=rid, pred=pred, truth=cls, features=feats.astype(np.float32))


def gen_baseline(config: SynthConfig) -> tuple[list[EmbeddingRecord], list[EmbeddingRecord]]:
    """Train and test blocks, class 0 then class 1, sequential ids from 0."""
    centers = np.stack([nondefect_center(config), defect_center(config)])
    rng = _rng(config.seed, _KEY_BASELINE)
    next_id = 0
    train: list[EmbeddingRecord] = []
    test: list[EmbeddingRecord] = []
    for out, count in ((train, config.n_train), (test, config.n_test)):
        for cls in (dataio.NONDEFECT, dataio.DEFECT):
            for _ in range(count):
                out.append(_indist_record(next_id, cls, centers, config, rng))
                next_id += 1
    return train, test


def gen_ood(
    config: SynthConfig,
    n: int,
    severity: float,
    type_ii_rate: float,
    start_id: int = 1_000_000,
) -> list[EmbeddingRecord]:
    """OOD batch with ground-truth marker and simulated classifier predictions.

    truth is always the OOD code; pred is non-defect with probability
    type_ii_rate (the simulated type II error), defect otherwise.
    """
    if n < 0:
        raise ConfigError(f"n must be >= 0, got {n}")
    if not 0.0 <= type_ii_rate <= 1.0:
        raise ConfigError(f"type_ii_rate must lie in [0, 1], got {type_ii_rate}")
    if not (np.isfinite(severity) and severity >= 0):
        raise ConfigError(f"severity must be >= 0, got {severity}")
    center = ood_center(config, severity)
    rng = _rng(config.seed, _KEY_OOD_BATCH)
    records = []
    for i in range(n):
        feats = (center + config.sigma * rng.standard_normal(config.dim)).astype(np.float32)
        pred = dataio.NONDEFECT if rng.random() < type_ii_rate else dataio.DEFECT
        records.append(EmbeddingRecord(id=start_id + i, pred=pred, truth=dataio.OOD_TRUTH, features=feats))
    return records


def gen_stream(
    config: SynthConfig,
    schedule: DriftSchedule,
    length: int,
    start_id: int = 2_000_000,
) -> list[EmbeddingRecord]:
    """Ordered stream of length records; index t is OOD with probability q(t)."""
    if length < 0:
        raise ConfigError(f"length must be >= 0, got {length}")
    if schedule.t1 > length:
        raise ConfigError(f"schedule must finish within the stream: t1={schedule.t1}, length={length}")
    centers = np.stack([nondefect_center(config), defect_center(config)])
    center_ood = ood_center(config, schedule.severity)
    rng = _rng(config.seed, _KEY_STREAM)
    records = []
    for t in range(length):
        rid = start_id + t
        if rng.random() < schedule.q(t):
            feats = (center_ood + config.sigma * rng.standard_normal(config.dim)).astype(np.float32)
            pred = dataio.NONDEFECT if rng.random() < schedule.type_ii_rate else dataio.DEFECT
            records.append(EmbeddingRecord(id=rid, pred=pred, truth=dataio.OOD_TRUTH, features=feats))
        else:
            cls = dataio.NONDEFECT if rng.random() < 0.5 else dataio.DEFECT
            records.append(_indist_record(rid, cls, centers, config, rng))
    return records


def dim_sweep(
    config: SynthConfig,
    dims: list[int],
    schedule: DriftSchedule,
    forest_seed: int = 0,
) -> list[tuple[int, EvalReport]]:
    """Fit/evaluate at each dimensionality; detection quality versus embedding width."""
    if not dims:
        raise ConfigError("dims must be non-empty")
    rows: list[tuple[int, EvalReport]] = []
    for dim in dims:
        cfg = replace(config, dim=dim)
        train, test = gen_baseline(cfg)
        detector = fit_detector(train, ForestConfig(dim=dim, seed=forest_seed))
        test_nondefect = [r for r in test if r.truth == dataio.NONDEFECT]
        ood = gen_ood(cfg, cfg.n_test, schedule.severity, schedule.type_ii_rate)
        rows.append((dim, evaluate(detector, test_nondefect, ood)))
    return rows


def sweep_csv(rows: list[tuple[int, EvalReport]]) -> str:
    """Flat CSV of a dim_sweep result, one row per dimensionality."""
    lines = ["dim," + EvalReport.CSV_HEADER]
    lines.extend(f"{dim},{report.to_csv_row()}" for dim, report in rows)
    return "\n".join(lines) + "\n"
