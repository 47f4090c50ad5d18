"""Machine-readable reports: aggregate tables, per-SEG rows, metric-metric
correlation matrices, and plot-ready histogram / walk-line CSVs.

Emission is deterministic: keys are sorted, rows are sorted, and every float
is rendered with 6 significant digits, so re-running on identical inputs
produces byte-identical files.  No plots are rendered here, only the data
behind them.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Mapping

import numpy as np

from .errors import ValidationError
from .metametrics import AggregateReport, ScoreTable, SegMetricResult
from .seg import SegCollection, SemanticErrorGraph
from .stats import TieMode, spearman_rho
from .walks import enumerate_walks, walk_triples

Basis = Literal["rank", "sep"]

BASIS_RANGES: dict[str, tuple[float, float]] = {"rank": (-1.0, 1.0), "sep": (0.0, 1.0)}

PER_SEG_CSV_HEADER = "metric,seg_id,subset,rank,sep,delta,walks,pairs"


@dataclass(frozen=True)
class CorrelationMatrix:
    metric_names: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]
    basis: str
    subset: str | None
    method: str


def _series_by_metric(
    results: Iterable[SegMetricResult],
    basis: str,
    subset: str | None,
    collection: SegCollection | None,
) -> dict[str, dict[str, float]]:
    if basis not in ("rank", "sep", "delta"):
        raise ValueError(f"unknown basis: {basis!r}")
    if subset is not None:
        if collection is None:
            raise ValueError("subset filtering requires the collection")
        keep = {seg.id for seg in collection if seg.subset == subset}
    else:
        keep = None
    series: dict[str, dict[str, float]] = {}
    for r in results:
        if keep is not None and r.seg_id not in keep:
            continue
        series.setdefault(r.metric_name, {})[r.seg_id] = getattr(r, basis)
    return series


def _pearson(x: list[float], y: list[float]) -> float:
    xa = np.asarray(x)
    ya = np.asarray(y)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sx = float(np.sqrt(np.mean(dx * dx)))
    sy = float(np.sqrt(np.mean(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return max(-1.0, min(1.0, float(np.mean(dx * dy)) / (sx * sy)))


def metric_correlation_matrix(
    results: Iterable[SegMetricResult],
    basis: Basis = "rank",
    subset_filter: str | None = None,
    tie_mode: TieMode = "midrank",
    method: Literal["spearman", "pearson"] = "spearman",
    collection: SegCollection | None = None,
) -> CorrelationMatrix:
    """Pairwise correlation of per-SEG score series between metrics.

    Every metric must cover the same SEG set after filtering.  Constant
    series correlate as 0 with everything, themselves included.
    """
    series = _series_by_metric(results, basis, subset_filter, collection)
    if not series:
        raise ValidationError("no results to correlate" + (f" in subset {subset_filter!r}" if subset_filter else ""))
    names = tuple(sorted(series))
    seg_sets = {name: frozenset(series[name]) for name in names}
    reference = seg_sets[names[0]]
    mismatched = [n for n in names if seg_sets[n] != reference]
    if mismatched:
        raise ValidationError(
            "metrics with mismatched SEG coverage: " + ", ".join(sorted(mismatched))
        )
    order = sorted(reference)
    vectors = {name: [series[name][sid] for sid in order] for name in names}

    k = len(names)
    mat = [[0.0] * k for _ in range(k)]
    for i in range(k):
        xi = vectors[names[i]]
        constant = len(set(xi)) <= 1
        mat[i][i] = 0.0 if constant else 1.0
        for j in range(i + 1, k):
            if method == "spearman":
                c = spearman_rho(xi, vectors[names[j]], tie_mode)
            elif method == "pearson":
                c = _pearson(xi, vectors[names[j]])
            else:
                raise ValueError(f"unknown correlation method: {method!r}")
            mat[i][j] = mat[j][i] = c
    return CorrelationMatrix(
        metric_names=names,
        values=tuple(tuple(row) for row in mat),
        basis=basis,
        subset=subset_filter,
        method=method,
    )


def histogram_data(
    results: Iterable[SegMetricResult],
    metric: str,
    basis: Basis = "rank",
    bin_count: int = 20,
    subset_filter: str | None = None,
    collection: SegCollection | None = None,
) -> list[tuple[float, float, int]]:
    """Equal-width (bin_lower, bin_upper, count) triples over the basis range.

    Bins are half-open [lo, hi) with the last bin closed; counts sum to the
    number of SEGs with results.
    """
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    if basis not in BASIS_RANGES:
        raise ValueError(f"basis must be one of {sorted(BASIS_RANGES)}, got {basis!r}")
    series = _series_by_metric(results, basis, subset_filter, collection)
    if metric not in series or not series[metric]:
        raise ValidationError(
            f"no results for metric {metric!r}"
            + (f" in subset {subset_filter!r}" if subset_filter else "")
        )
    lo, hi = BASIS_RANGES[basis]
    width = (hi - lo) / bin_count
    counts = [0] * bin_count
    for value in series[metric].values():
        idx = min(bin_count - 1, int((value - lo) / (hi - lo) * bin_count))
        counts[max(0, idx)] += 1
    return [(lo + i * width, lo + (i + 1) * width, counts[i]) for i in range(bin_count)]


def walk_line_data(
    seg: SemanticErrorGraph, scores: ScoreTable
) -> list[list[tuple[float, float]]]:
    """Per-walk (normalized_rank, score) series, one point per image.

    normalized_rank = error_count / max error count in the walk, so 0 is the
    head and 1 the walk's deepest node regardless of depth.
    """
    out = []
    for walk in enumerate_walks(seg):
        triples = walk_triples(seg, walk)
        max_count = max(triples.error_counts())  # > 0: counts strictly increase
        out.append(
            [
                (count / max_count, scores.score(seg.id, img))
                for img, count in triples.entries
            ]
        )
    return out


# ---------------------------------------------------------------------------
# emission


def _fmt(x: float) -> str:
    return format(x + 0.0, ".6g")


def _round6(x: float) -> float:
    v = float(_fmt(x))
    return v + 0.0  # never emit -0.0


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", name)


def _aggregates_json(aggregates: AggregateReport) -> dict:
    metrics = {}
    for name in sorted(aggregates.metrics):
        agg = aggregates.metrics[name]
        block = {
            "overall": {
                "rank": _round6(agg.overall.rank),
                "sep": _round6(agg.overall.sep),
                "delta": _round6(agg.overall.delta),
            },
            "overall_display": {
                "rank": _round6(agg.overall.rank * 100),
                "sep": _round6(agg.overall.sep * 100),
                "delta": _round6(agg.overall.delta * 100),
            },
            "by_subset": {},
            "by_subset_display": {},
            "seg_count": agg.overall.seg_count,
            "missing_segs": list(agg.missing_segs),
        }
        for subset in sorted(agg.by_subset):
            ms = agg.by_subset[subset]
            block["by_subset"][subset] = {
                "rank": _round6(ms.rank),
                "sep": _round6(ms.sep),
                "delta": _round6(ms.delta),
                "seg_count": ms.seg_count,
            }
            block["by_subset_display"][subset] = {
                "rank": _round6(ms.rank * 100),
                "sep": _round6(ms.sep * 100),
                "delta": _round6(ms.delta * 100),
            }
        metrics[name] = block
    return metrics


def emit_report(
    aggregates: AggregateReport,
    per_seg_results: Iterable[SegMetricResult],
    out_path: str | Path,
    collection: SegCollection | None = None,
    score_tables: Mapping[str, ScoreTable] | None = None,
    tie_mode: TieMode = "midrank",
    correlation_method: Literal["spearman", "pearson"] = "spearman",
    bin_count: int = 20,
) -> list[Path]:
    """Write report.json, per_seg.csv, and plot-data CSVs under ``out_path``.

    Histograms are emitted per metric and basis; walk-line CSVs only when
    the collection and score tables are provided.  Returns written paths.
    """
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    results = sorted(per_seg_results, key=lambda r: (r.metric_name, r.seg_id))
    subset_of = {seg.id: seg.subset for seg in collection} if collection else {}
    written: list[Path] = []

    correlations = {}
    if results:
        for basis in ("rank", "sep"):
            cm = metric_correlation_matrix(
                results, basis=basis, tie_mode=tie_mode, method=correlation_method
            )
            correlations[basis] = {
                "metrics": list(cm.metric_names),
                "method": cm.method,
                "matrix": [[_round6(v) for v in row] for row in cm.values],
            }

    report = {
        "metrics": _aggregates_json(aggregates),
        "correlations": correlations,
        "seg_count": aggregates.seg_count,
        "subset_counts": dict(sorted(aggregates.subset_counts.items())),
    }
    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.append(report_path)

    per_seg_path = out / "per_seg.csv"
    lines = [PER_SEG_CSV_HEADER]
    for r in results:
        subset = subset_of.get(r.seg_id, "")
        lines.append(
            f"{r.metric_name},{r.seg_id},{subset},{_fmt(r.rank)},{_fmt(r.sep)},"
            f"{_fmt(r.delta)},{r.walk_count},{r.pair_count}"
        )
    per_seg_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    written.append(per_seg_path)

    metric_names = sorted({r.metric_name for r in results})
    for name in metric_names:
        for basis in ("rank", "sep"):
            rows = histogram_data(results, name, basis=basis, bin_count=bin_count)
            path = out / f"hist_{basis}_{_safe_name(name)}.csv"
            body = ["bin_lower,bin_upper,count"]
            body.extend(f"{_fmt(lo)},{_fmt(hi)},{n}" for lo, hi, n in rows)
            path.write_text("\n".join(body) + "\n", encoding="utf-8")
            written.append(path)

    if collection is not None and score_tables:
        for name in metric_names:
            if name not in score_tables:
                continue
            path = out / f"lines_{_safe_name(name)}.csv"
            body = ["seg_id,walk_index,normalized_rank,score"]
            for seg in collection:
                for w_idx, points in enumerate(walk_line_data(seg, score_tables[name])):
                    body.extend(
                        f"{seg.id},{w_idx},{_fmt(xr)},{_fmt(sc)}" for xr, sc in points
                    )
            path.write_text("\n".join(body) + "\n", encoding="utf-8")
            written.append(path)

    return written
