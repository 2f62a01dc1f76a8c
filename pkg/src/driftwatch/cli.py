"""Command-line workflow: fit, score, monitor, kstest, simulate, report, serve.

Exit codes: 0 success (and no alarm), 2 usage or data error, 3 drift
alarm raised. Code 3 lets shell pipelines react to drift without
parsing the event output.
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import dataio
from .dataio import load_detector, parse_stream_record, read_embeddings, save_detector, write_embeddings
from .errors import DriftwatchError, ParseError
from .forest import DEFAULT_N_TREES, DEFAULT_PSI, ForestConfig
from .pipeline import DEFAULT_WINDOW, fit_detector, new_monitor, monitor_error, monitor_step, score_records
from .stats import DEFAULT_MAD_K, ks_test
from .synth import DriftSchedule, SynthConfig, gen_baseline, gen_stream


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="driftwatch", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="print the effective configuration")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a detector on non-defect training embeddings")
    p.add_argument("--train", required=True, help="training embeddings (.csv or .bin)")
    p.add_argument("--out", required=True, help="detector file to write")
    p.add_argument("--trees", type=_positive_int, default=DEFAULT_N_TREES)
    p.add_argument("--psi", type=_positive_int, default=DEFAULT_PSI)
    p.add_argument("--mad-k", type=float, default=DEFAULT_MAD_K)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--jobs", type=_positive_int, default=1, help="parallel tree fitting (outputs unchanged)")
    p.add_argument("--stamp", default="", help="created-at string stored in the model; 'now' for the current time; default empty so identical runs produce identical bytes")

    p = sub.add_parser("score", help="score embeddings against a fitted detector")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="inp", required=True, help="embeddings file (.csv or .bin)")
    p.add_argument("--out", required=True, help="scores CSV to write")

    p = sub.add_parser("monitor", help="stream records through the drift monitor")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="inp", default=None, help="input file; omit to read JSON lines from stdin")
    p.add_argument("--window", type=_positive_int, default=DEFAULT_WINDOW)
    p.add_argument("--alarm-rate", default="auto", help="window flag rate that raises the alarm; 'auto' = max(0.05, 3x baseline)")

    p = sub.add_parser("kstest", help="two-sample KS test between two score files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = sub.add_parser("simulate", help="generate synthetic baseline and drift-stream files")
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--schedule", choices=("abrupt", "gradual"), default="abrupt")
    p.add_argument("--t0", type=_nonneg_int, default=500)
    p.add_argument("--t1", type=_nonneg_int, default=None)
    p.add_argument("--severity", type=float, default=8.0)
    p.add_argument("--type2-rate", type=float, default=0.6)
    p.add_argument("--ood-frac", type=float, default=1.0)
    p.add_argument("--length", type=_nonneg_int, default=1000)
    p.add_argument("--n-train", type=_positive_int, default=200, help="training samples per class")
    p.add_argument("--n-test", type=_nonneg_int, default=100, help="test samples per class")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=_nonneg_int, default=0)
    p.add_argument("--format", choices=("csv", "bin"), default="csv")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("report", help="score-histogram report with threshold metadata")
    p.add_argument("--model", required=True)
    p.add_argument("--train-scores", required=True)
    p.add_argument("--test-scores", default=None)
    p.add_argument("--ood-scores", default=None)
    p.add_argument("--out", required=True, help="histogram CSV to write")
    p.add_argument("--svg", default=None, help="optional vector-graphic rendering")
    p.add_argument("--bins", type=_positive_int, default=50)

    p = sub.add_parser("serve", help="run the HTTP supervision service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=_positive_int, default=8000)

    return parser


def main(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    if args.verbose:
        print("config:", json.dumps({k: v for k, v in vars(args).items() if k != "verbose"}, default=str), file=sys.stderr)
    handler = {
        "fit": cmd_fit,
        "score": cmd_score,
        "monitor": cmd_monitor,
        "kstest": cmd_kstest,
        "simulate": cmd_simulate,
        "report": cmd_report,
        "serve": cmd_serve,
    }[args.command]
    try:
        return handler(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DriftwatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main(sys.argv[1:]))


def cmd_fit(args) -> int:
    dim, records = read_embeddings(args.train)
    config = ForestConfig(dim=dim, n_trees=args.trees, psi=args.psi, seed=args.seed)
    stamp = args.stamp
    if stamp == "now":
        stamp = datetime.now(timezone.utc).isoformat()
    detector = fit_detector(records, config, k=args.mad_k, created_at=stamp, n_jobs=args.jobs)
    save_detector(detector, args.out)
    print(f"model={args.out}")
    print(f"threshold={detector.threshold!r}")
    print(f"baseline_flag_rate={detector.baseline_flag_rate!r}")
    return 0


def cmd_score(args) -> int:
    detector = load_detector(args.model)
    dim, records = read_embeddings(args.inp)
    if dim != detector.dim:
        raise ParseError(f"input dim {dim} does not match detector dim {detector.dim}")
    scored = score_records(detector, records)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("id,pred,score,flagged\n")
        for s in scored:
            fh.write(f"{s.id},{s.pred},{s.score!r},{1 if s.flagged else 0}\n")
    print(f"scored={len(scored)} flagged={sum(1 for s in scored if s.flagged)}")
    return 0


def _monitor_record_iter(args, detector):
    """Yield (record, parse_error_message) pairs from file or stdin."""
    if args.inp is None:
        for line in sys.stdin:
            if not line.strip():
                continue
            try:
                yield parse_stream_record(line, dim=detector.dim), None
            except ParseError as exc:
                yield None, str(exc)
        return
    suffix = Path(args.inp).suffix.lower()
    if suffix in (".csv", ".bin"):
        dim, records = read_embeddings(args.inp)
        if dim != detector.dim:
            raise ParseError(f"input dim {dim} does not match detector dim {detector.dim}")
        for rec in records:
            yield rec, None
        return
    with open(args.inp, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            try:
                yield parse_stream_record(line, dim=detector.dim), None
            except ParseError as exc:
                yield None, str(exc)


def cmd_monitor(args) -> int:
    detector = load_detector(args.model)
    alarm_rate = None if args.alarm_rate == "auto" else float(args.alarm_rate)
    state = new_monitor(detector, window=args.window, alarm_rate=alarm_rate)
    for record, err in _monitor_record_iter(args, detector):
        if record is None:
            event = monitor_error(state, err)
            print(json.dumps(event.to_json_obj()))
            continue
        try:
            scored = score_records(detector, [record])[0]
        except DriftwatchError as exc:
            event = monitor_error(state, str(exc))
            print(json.dumps(event.to_json_obj()))
            continue
        for event in monitor_step(state, scored):
            print(json.dumps(event.to_json_obj()))
    summary = {
        "event": "summary",
        "seen": state.seen,
        "scored": state.scored,
        "flagged": state.flagged,
        "errors": state.errors,
        "alarms_raised": state.alarms_raised,
        "alarm_active": state.alarm_active,
        "window_flag_rate": state.window_flag_rate,
    }
    print(json.dumps(summary))
    return 3 if state.alarms_raised > 0 else 0


def read_scores(path: str) -> list[float]:
    """Score file = cmd_score CSV (any column named 'score') or one float per line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not rows:
        return []
    header = [c.strip() for c in rows[0][1].split(",")]
    if "score" in header:
        col = header.index("score")
        out = []
        for lineno, ln in rows[1:]:
            cells = ln.split(",")
            if len(cells) != len(header):
                raise ParseError(f"expected {len(header)} cells, got {len(cells)}", line=lineno)
            try:
                out.append(float(cells[col]))
            except ValueError:
                raise ParseError(f"bad score value {cells[col]!r}", line=lineno) from None
        return out
    out = []
    for lineno, ln in rows:
        try:
            out.append(float(ln.strip()))
        except ValueError:
            raise ParseError(f"bad score value {ln.strip()!r}", line=lineno) from None
    return out


def cmd_kstest(args) -> int:
    a = read_scores(args.a)
    b = read_scores(args.b)
    result = ks_test(a, b)
    print(f"D={result.d_statistic!r}")
    print(f"p={result.p_value!r}")
    return 0


def cmd_simulate(args) -> int:
    config = SynthConfig(
        dim=args.dim,
        n_train=args.n_train,
        n_test=args.n_test,
        sigma=args.sigma,
        seed=args.seed,
    )
    schedule = DriftSchedule(
        mode=args.schedule,
        t0=args.t0,
        t1=args.t1,
        ood_fraction_max=args.ood_frac,
        severity=args.severity,
        type_ii_rate=args.type2_rate,
    )
    train, test = gen_baseline(config)
    stream = gen_stream(config, schedule, args.length)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = ".csv" if args.format == "csv" else ".bin"
    for name, records in (("train", train), ("test", test), ("stream", stream)):
        path = out_dir / f"{name}{ext}"
        write_embeddings(path, args.dim, records, fmt=args.format)
        print(f"{name}={path}")
    return 0


def _histogram(edges: np.ndarray, scores: list[float]) -> np.ndarray:
    if not scores:
        return np.zeros(len(edges) - 1, dtype=np.int64)
    counts, _ = np.histogram(np.asarray(scores, dtype=np.float64), bins=edges)
    return counts


_SVG_COLORS = ("#4477aa", "#66ccee", "#ee6677")


def render_report_svg(edges, series, threshold: float) -> str:
    """Grouped histogram bars plus a dashed threshold line; fixed 640x360 canvas."""
    width, height, margin = 640, 360, 48
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    lo, hi = float(edges[0]), float(edges[-1])
    span = hi - lo or 1.0
    top = max((int(c.max()) for _, c in series if len(c)), default=0) or 1

    def sx(v: float) -> float:
        return margin + (v - lo) / span * plot_w

    def sy(count: float) -> float:
        return height - margin - count / top * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    n_series = len(series)
    for si, (name, counts) in enumerate(series):
        color = _SVG_COLORS[si % len(_SVG_COLORS)]
        for bi, count in enumerate(counts):
            if count == 0:
                continue
            x0 = sx(float(edges[bi]))
            x1 = sx(float(edges[bi + 1]))
            bw = (x1 - x0) / n_series
            bx = x0 + si * bw
            by = sy(float(count))
            parts.append(
                f'<rect x="{bx:.2f}" y="{by:.2f}" width="{bw:.2f}" '
                f'height="{height - margin - by:.2f}" fill="{color}" fill-opacity="0.8"/>'
            )
        ly = margin + 14 * (si + 1)
        parts.append(f'<rect x="{width - margin - 110}" y="{ly - 9}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{width - margin - 95}" y="{ly}" font-size="11" font-family="sans-serif">{name}</text>')
    tx = sx(threshold)
    parts.append(f'<line x1="{tx:.2f}" y1="{margin}" x2="{tx:.2f}" y2="{height - margin}" stroke="black" stroke-dasharray="5,4"/>')
    parts.append(f'<text x="{tx + 4:.2f}" y="{margin + 10}" font-size="11" font-family="sans-serif">threshold={threshold:.4f}</text>')
    parts.append(f'<text x="{margin}" y="{height - margin + 16}" font-size="11" font-family="sans-serif">{lo:.4f}</text>')
    parts.append(f'<text x="{width - margin - 40}" y="{height - margin + 16}" font-size="11" font-family="sans-serif">{hi:.4f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_report(args) -> int:
    detector = load_detector(args.model)
    train = read_scores(args.train_scores)
    test = read_scores(args.test_scores) if args.test_scores else []
    ood = read_scores(args.ood_scores) if args.ood_scores else []
    pooled = train + test + ood
    if not pooled:
        raise ParseError("no scores to report")
    lo, hi = min(pooled), max(pooled)
    if lo == hi:  # single point: histogram over a unit-width band around it
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, args.bins + 1)
    series = [("train", _histogram(edges, train)), ("test", _histogram(edges, test)), ("ood", _histogram(edges, ood))]
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(f"# threshold={detector.threshold!r}\n")
        fh.write("bin_lo,bin_hi,count_train,count_test,count_ood\n")
        for i in range(args.bins):
            counts = ",".join(str(int(c[i])) for _, c in series)
            fh.write(f"{float(edges[i])!r},{float(edges[i + 1])!r},{counts}\n")
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_report_svg(edges, series, detector.threshold))
    print(f"report={args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0
