"""Record and model file formats: embeddings CSV, embeddings binary, detector document, stream lines.

CSV is the canonical debuggable format, the binary layout is the compact
production path, and one-JSON-object-per-line is the live monitor path.
All three round-trip losslessly at float32 feature precision.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import FormatError, ParseError, VersionError
from .forest import ForestConfig, IsolationForest, IsolationTree

NONDEFECT = 0
DEFECT = 1
OOD_TRUTH = 2  # ground-truth marker used by the synthetic generator
UNKNOWN = 255

_CLASS_LITERALS = {"non-defect": NONDEFECT, "defect": DEFECT, "unknown": UNKNOWN}

BINARY_MAGIC = b"DFE1"
BINARY_VERSION = 1
BINARY_HEADER_SIZE = 18  # 4 magic + 2 version + 4 dim + 8 count

DETECTOR_FORMAT_VERSION = 1

_U64_MAX = 2**64 - 1


@dataclass(eq=False)
class EmbeddingRecord:
    """One sample: id, predicted class, ground-truth class, float32 feature vector."""

    id: int
    pred: int
    truth: int
    features: np.ndarray


def _as_features(values, dim: int | None = None) -> np.ndarray:
    feats = np.asarray(values, dtype=np.float32)
    if feats.ndim != 1:
        raise ParseError("features must be a flat vector")
    if dim is not None and feats.size != dim:
        raise ParseError(f"expected {dim} features, got {feats.size}")
    if not np.all(np.isfinite(feats)):
        raise ParseError("non-finite feature value")
    return feats


def _parse_class(token: str) -> int:
    token = token.strip()
    if token in _CLASS_LITERALS:
        return _CLASS_LITERALS[token]
    try:
        code = int(token)
    except ValueError:
        raise ParseError(f"bad class code {token!r}") from None
    if not 0 <= code <= 255:
        raise ParseError(f"class code {code} outside 0..255")
    return code


def _parse_id(token: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(f"bad id {token!r}") from None
    if not 0 <= value <= _U64_MAX:
        raise ParseError(f"id {value} outside unsigned 64-bit range")
    return value


def _open_text(source, mode: str):
    if hasattr(source, "read") or hasattr(source, "write"):
        return source, False
    return open(source, mode, encoding="utf-8", newline=""), True


def csv_header(dim: int) -> str:
    return ",".join(["id", "pred", "truth"] + [f"f{i}" for i in range(dim)])


def read_embeddings_csv(source) -> tuple[int, list[EmbeddingRecord]]:
    """Parse an embeddings CSV; dim comes from the header, errors name lines."""
    stream, owned = _open_text(source, "r")
    try:
        header = stream.readline()
        if not header:
            raise ParseError("empty file, expected a header row", line=1)
        cols = header.rstrip("\r\n").split(",")
        if cols[:3] != ["id", "pred", "truth"] or len(cols) < 4:
            raise ParseError("header must be id,pred,truth,f0,...", line=1)
        dim = len(cols) - 3
        if cols[3:] != [f"f{i}" for i in range(dim)]:
            raise ParseError("feature columns must be f0..f{D-1} in order", line=1)

        records: list[EmbeddingRecord] = []
        seen_ids: set[int] = set()
        for lineno, raw in enumerate(stream, start=2):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != dim + 3:
                raise ParseError(f"expected {dim + 3} columns, got {len(parts)}", line=lineno)
            try:
                rec_id = _parse_id(parts[0])
                pred = _parse_class(parts[1])
                truth = _parse_class(parts[2])
                feats = np.empty(dim, dtype=np.float32)
                for i, tok in enumerate(parts[3:]):
                    feats[i] = float(tok)
            except ParseError as exc:
                raise ParseError(str(exc), line=lineno) from None
            except ValueError:
                raise ParseError("non-numeric feature value", line=lineno) from None
            if not np.all(np.isfinite(feats)):
                raise ParseError("non-finite feature value", line=lineno)
            if rec_id in seen_ids:
                raise ParseError(f"duplicate id {rec_id}", line=lineno)
            seen_ids.add(rec_id)
            records.append(EmbeddingRecord(id=rec_id, pred=pred, truth=truth, features=feats))
        return dim, records
    finally:
        if owned:
            stream.close()


def write_embeddings_csv(target, dim: int, records: Iterable[EmbeddingRecord]) -> None:
    stream, owned = _open_text(target, "w")
    try:
        stream.write(csv_header(dim) + "\n")
        for rec in records:
            feats = np.asarray(rec.features, dtype=np.float32)
            if feats.size != dim:
                raise FormatError(f"record {rec.id} has {feats.size} features, expected {dim}")
            # str() of a float32 scalar is numpy's shortest round-trip form
            stream.write(f"{rec.id},{rec.pred},{rec.truth}," + ",".join(str(v) for v in feats) + "\n")
    finally:
        if owned:
            stream.close()


def record_size(dim: int) -> int:
    return 8 + 1 + 1 + 4 * dim


def write_embeddings_binary(path, dim: int, records: list[EmbeddingRecord]) -> None:
    """Little-endian layout: DFE1, u16 version, u32 dim, u64 count, then fixed-width records."""
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<HIQ", BINARY_VERSION, dim, len(records)))
        for rec in records:
            feats = np.asarray(rec.features, dtype="<f4")
            if feats.size != dim:
                raise FormatError(f"record {rec.id} has {feats.size} features, expected {dim}")
            fh.write(struct.pack("<QBB", rec.id, rec.pred, rec.truth))
            fh.write(feats.tobytes())


def read_embeddings_binary(path) -> tuple[int, list[EmbeddingRecord]]:
    data = Path(path).read_bytes()
    if len(data) < BINARY_HEADER_SIZE:
        raise FormatError(f"file too short for header: {len(data)} < {BINARY_HEADER_SIZE} bytes")
    if data[:4] != BINARY_MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {BINARY_MAGIC!r}")
    version, dim, count = struct.unpack_from("<HIQ", data, 4)
    if version != BINARY_VERSION:
        raise VersionError(f"unsupported binary version {version}, expected {BINARY_VERSION}")
    if dim < 1:
        raise FormatError(f"declared dim {dim} must be >= 1")
    expected = BINARY_HEADER_SIZE + count * record_size(dim)
    if len(data) != expected:
        raise FormatError(f"truncated or padded file: expected {expected} bytes for {count} records, got {len(data)}")

    records: list[EmbeddingRecord] = []
    offset = BINARY_HEADER_SIZE
    for i in range(count):
        rec_id, pred, truth = struct.unpack_from("<QBB", data, offset)
        offset += 10
        feats = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).copy()
        offset += 4 * dim
        if not np.all(np.isfinite(feats)):
            raise FormatError(f"non-finite feature value in record {i}")
        records.append(EmbeddingRecord(id=rec_id, pred=pred, truth=truth, features=feats))
    return dim, records


def read_embeddings(path, fmt: str | None = None) -> tuple[int, list[EmbeddingRecord]]:
    """Read either format; fmt overrides the extension-based guess."""
    fmt = fmt or ("bin" if str(path).endswith(".bin") else "csv")
    if fmt == "bin":
        return read_embeddings_binary(path)
    if fmt == "csv":
        return read_embeddings_csv(path)
    raise FormatError(f"unknown embeddings format {fmt!r}")


def write_embeddings(path, dim: int, records: list[EmbeddingRecord], fmt: str | None = None) -> None:
    fmt = fmt or ("bin" if str(path).endswith(".bin") else "csv")
    if fmt == "bin":
        write_embeddings_binary(path, dim, records)
    elif fmt == "csv":
        write_embeddings_csv(path, dim, records)
    else:
        raise FormatError(f"unknown embeddings format {fmt!r}")


def parse_stream_record(line: str, dim: int | None = None) -> EmbeddingRecord:
    """Parse one live-monitor line: {"id": u64, "pred": "non-defect"|"defect", "features": [...]}.

    Ground truth is unknown by construction. A dim argument enforces the
    serving detector's feature width.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ParseError("stream record must be a JSON object")
    return record_from_stream_obj(obj, dim=dim)


def record_from_stream_obj(obj: dict, dim: int | None = None) -> EmbeddingRecord:
    """Build a record from an already-decoded stream object (shared with the service)."""
    missing = [k for k in ("id", "pred", "features") if k not in obj]
    if missing:
        raise ParseError(f"missing field {missing[0]!r}")
    rec_id = obj["id"]
    if not isinstance(rec_id, int) or isinstance(rec_id, bool) or not 0 <= rec_id <= _U64_MAX:
        raise ParseError(f"id must be an unsigned 64-bit integer, got {rec_id!r}")
    pred = obj["pred"]
    if isinstance(pred, str):
        pred = _parse_class(pred)
    elif isinstance(pred, int) and not isinstance(pred, bool) and 0 <= pred <= 255:
        pass
    else:
        raise ParseError(f"bad pred {obj['pred']!r}")
    feats_raw = obj["features"]
    if not isinstance(feats_raw, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in feats_raw):
        raise ParseError("features must be a list of numbers")
    feats = _as_features(feats_raw, dim=dim)
    return EmbeddingRecord(id=rec_id, pred=pred, truth=UNKNOWN, features=feats)


def format_stream_record(record: EmbeddingRecord) -> str:
    """Render a record as one live-monitor line."""
    pred = {NONDEFECT: "non-defect", DEFECT: "defect"}.get(record.pred, record.pred)
    return json.dumps(
        {"id": record.id, "pred": pred, "features": [float(v) for v in record.features]},
        separators=(",", ":"),
    )


# --- detector document -----------------------------------------------------

def _tree_to_nodes(tree: IsolationTree) -> list[list]:
    nodes: list[list] = []
    for i in range(tree.n_nodes):
        if tree.feature[i] < 0:
            nodes.append([int(tree.size[i])])
        else:
            nodes.append([int(tree.feature[i]), float(tree.split[i]), int(tree.left[i]), int(tree.right[i])])
    return nodes


def _tree_from_nodes(nodes: list, tree_index: int) -> IsolationTree:
    n = len(nodes)
    if n == 0:
        raise FormatError(f"tree {tree_index}: empty node array")
    feature = np.full(n, -1, dtype=np.int32)
    split = np.full(n, math.nan, dtype=np.float64)
    left = np.full(n, -1, dtype=np.int32)
    right = np.full(n, -1, dtype=np.int32)
    size = np.zeros(n, dtype=np.int32)
    for i, node in enumerate(nodes):
        if not isinstance(node, list):
            raise FormatError(f"tree {tree_index} node {i}: not an array")
        if len(node) == 1:
            size[i] = int(node[0])
            if size[i] < 0:
                raise FormatError(f"tree {tree_index} node {i}: negative leaf size")
        elif len(node) == 4:
            feature[i] = int(node[0])
            split[i] = float(node[1])
            left[i] = int(node[2])
            right[i] = int(node[3])
            for child in (left[i], right[i]):
                if not 0 <= child < n:
                    raise FormatError(f"tree {tree_index} node {i}: child index {child} out of range")
            if feature[i] < 0:
                raise FormatError(f"tree {tree_index} node {i}: negative feature index")
        else:
            raise FormatError(f"tree {tree_index} node {i}: node arrays have 1 or 4 entries, got {len(node)}")
    return IsolationTree(feature=feature, split=split, left=left, right=right, size=size)


def detector_to_document(detector) -> dict:
    """Render a fitted detector as a plain JSON-ready document."""
    forest = detector.forest
    return {
        "format_version": DETECTOR_FORMAT_VERSION,
        "created_at": detector.created_at,
        "n_train": detector.n_train,
        "config": {
            "dim": forest.config.dim,
            "n_trees": forest.config.n_trees,
            "psi": forest.config.psi,
            "seed": forest.config.seed,
        },
        "c_psi": forest.c_psi,
        "trees": [{"nodes": _tree_to_nodes(t)} for t in forest.trees],
        "mad": {
            "median": detector.mad.median,
            "mad": detector.mad.mad,
            "k": detector.mad.k,
            "threshold": detector.mad.threshold,
            "degenerate": detector.mad.degenerate,
        },
        "baseline_flag_rate": detector.baseline_flag_rate,
    }


def detector_from_document(doc: dict):
    """Rebuild a detector from its document form, validating structure."""
    from .pipeline import DriftDetector
    from .stats import MadSummary

    if not isinstance(doc, dict):
        raise FormatError("detector document must be a JSON object")
    version = doc.get("format_version")
    if version != DETECTOR_FORMAT_VERSION:
        raise VersionError(f"unsupported detector format_version {version!r}, expected {DETECTOR_FORMAT_VERSION}")
    try:
        cfg = doc["config"]
        config = ForestConfig(dim=cfg["dim"], n_trees=cfg["n_trees"], psi=cfg["psi"], seed=cfg["seed"])
        n_train = int(doc["n_train"])
        trees = [_tree_from_nodes(t["nodes"], i) for i, t in enumerate(doc["trees"])]
        mad_doc = doc["mad"]
        mad = MadSummary(
            median=float(mad_doc["median"]),
            mad=float(mad_doc["mad"]),
            k=float(mad_doc["k"]),
            threshold=float(mad_doc["threshold"]),
            degenerate=bool(mad_doc.get("degenerate", False)),
        )
        baseline = float(doc["baseline_flag_rate"])
        created_at = str(doc.get("created_at", ""))
        c_psi = float(doc["c_psi"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed detector document: {exc}") from None
    if len(trees) != config.n_trees:
        raise FormatError(f"document has {len(trees)} trees, config says {config.n_trees}")
    forest = IsolationForest(config=config, trees=trees, c_psi=c_psi, eff_psi=min(config.psi, n_train))
    return DriftDetector(
        forest=forest,
        mad=mad,
        baseline_flag_rate=baseline,
        n_train=n_train,
        created_at=created_at,
    )


def save_detector(detector, path) -> None:
    document = detector_to_document(detector)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(document, fh, separators=(",", ":"))
        fh.write("\n")


def load_detector(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"detector file is not valid JSON: {exc.msg}") from None
    return detector_from_document(doc)
