"""Run reports (JSON) and their tabular renderings."""
from __future__ import annotations

import csv
import datetime as _dt
import io
import json
from dataclasses import asdict
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import GridConfig
from .indices import Index
from .simulation import RNG_ALGORITHM, make_profile
from .study import ESTIMATORS, CellResult, efficiency_cells, true_values

__all__ = [
    "ReportError",
    "TABLES",
    "build_simulation_report",
    "dump_report",
    "load_report",
    "render_table",
]

TABLES = ("summary", "quantiles", "efficiency")
INDEX_LABELS = {
    "Shannon": "Shannon entropy H",
    "Simpson": "Simpson diversity D",
    "PMA": "PMA index I",
    "Euclidean": "Euclidean similarity E",
}
QUANTILE_ROWS = (("min", "Min"), ("q1", "1st Q."), ("median", "Median"), ("q3", "3rd Q."), ("max", "Max"))
MOMENT_ROWS = (("mean", "Mean"), ("sd", "SD"), ("bias", "Bias"), ("rmse", "RMSE"))


class ReportError(ValueError):
    pass


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def base_metadata(**extra: Any) -> dict[str, Any]:
    return {
        "tool": "ebdiversity",
        "version": __version__,
        "numpy_version": np.__version__,
        "timestamp": _timestamp(),
        **extra,
    }


def build_simulation_report(cfg: GridConfig, results: Sequence[CellResult]) -> dict[str, Any]:
    profiles = {}
    for kind in cfg.profiles:
        prof = make_profile(kind, cfg.k)
        profiles[kind.value] = {
            "k": prof.k,
            "exponent": prof.exponent,
            "calibration_constant": prof.calibration_constant,
            "true_values": {i.value: v for i, v in true_values(prof).items()},
        }
    scenarios = [
        {
            "id": r.scenario_id,
            "profile": r.scenario.profile_kind.value,
            "alpha": r.scenario.alpha,
            "beta": r.scenario.beta,
            "gamma": r.scenario.gamma,
            "k": r.scenario.k,
            "m": r.scenario.m,
            "seed": r.scenario.seed,
        }
        for r in results
    ]
    summaries = [
        r.summaries[(index.value, est)].to_dict()
        for r in results
        for index in Index
        for est in ESTIMATORS
    ]
    replicates = [
        {"scenario_id": r.scenario_id, "status_counts": r.status_counts, "excluded": r.excluded}
        for r in results
    ]
    efficiency = []
    for cell in efficiency_cells(results):
        d = asdict(cell)
        d["scope"] = cell.scope.value
        efficiency.append(d)
    return {
        "kind": "simulation",
        "metadata": base_metadata(
            seed=cfg.seed,
            rng_algorithm=RNG_ALGORITHM,
            config=cfg.to_dict(),
            profiles=profiles,
            scenarios=scenarios,
        ),
        "summaries": summaries,
        "replicates": replicates,
        "efficiency": efficiency,
    }


def dump_report(report: dict[str, Any], path: str | Path | None = None) -> str:
    text = json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def load_report(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ReportError(f"{path}: cannot read report: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ReportError(f"{path}: not a JSON report: {e}") from e
    if not isinstance(report, dict) or report.get("kind") not in ("simulation", "estimate"):
        raise ReportError(f"{path}: unrecognized report (missing or unknown 'kind')")
    return report


def body(report: dict[str, Any]) -> dict[str, Any]:
    """Report without its wall-clock timestamp, for reproducibility comparisons."""
    out = json.loads(json.dumps(report))
    out.get("metadata", {}).pop("timestamp", None)
    return out


# ---- rendering -------------------------------------------------------------


def _fmt(v: float | None, digits: int) -> str:
    if v is None:
        return "NA"
    s = f"{v:.{digits}f}"
    return "0." + "0" * digits if s == "-0." + "0" * digits else s


def _column_label(s: dict) -> str:
    return f"a={s['alpha']:g} b={s['beta']:g} g={s['gamma']:g}"


def _layout(report: dict) -> tuple[list[str], list[tuple[float, float, float]], dict]:
    scen = report["metadata"]["scenarios"]
    profiles = list(dict.fromkeys(s["profile"] for s in scen))
    triples = list(dict.fromkeys((s["alpha"], s["beta"], s["gamma"]) for s in scen))
    by_cell = {(s["profile"], (s["alpha"], s["beta"], s["gamma"])): s for s in scen}
    return profiles, triples, by_cell


def _text_table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    lines = []
    for r in [header, *rows]:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines)


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _summary_like(report: dict, as_csv: bool, rows_spec, get) -> str:
    profiles, triples, by_cell = _layout(report)
    summaries = {(d["scenario_id"], d["index"], d["estimator"]): d for d in report["summaries"]}
    true_vals = {p: report["metadata"]["profiles"][p]["true_values"] for p in profiles}
    if as_csv:
        header = ["index", "profile", "alpha", "beta", "gamma", "estimator", "true_value", *[k for k, _ in rows_spec]]
        rows = []
        for index in INDEX_LABELS:
            for p in profiles:
                for t in triples:
                    s = by_cell.get((p, t))
                    if s is None:
                        continue
                    for est in ESTIMATORS:
                        d = summaries[(s["id"], index, est)]
                        rows.append([index, p, *t, est, _fmt(d["true_value"], 3),
                                     *[_fmt(get(d, key), 3) for key, _ in rows_spec]])
        return _csv(header, rows)

    blocks = []
    for index, label in INDEX_LABELS.items():
        for p in profiles:
            cols = [t for t in triples if (p, t) in by_cell]
            header = [f"{label} | {p}, true value {_fmt(true_vals[p][index], 3)}", *[_column_label(by_cell[(p, t)]) for t in cols]]
            rows = []
            for est in ESTIMATORS:
                for key, name in rows_spec:
                    rows.append([f"{est} {name}", *[_fmt(get(summaries[(by_cell[(p, t)]["id"], index, est)], key), 3) for t in cols]])
            blocks.append(_text_table(header, rows))
    return "\n\n".join(blocks) + "\n"


def _efficiency(report: dict, as_csv: bool) -> str:
    profiles, triples, by_cell = _layout(report)
    cells = report["efficiency"]
    specific = {(c["index"], c["scenario_id"]): c["value"] for c in cells if c["scope"] == "Specific"}
    partial = {(c["index"], c["profile_kind"]): c["value"] for c in cells if c["scope"] == "Partial"}
    total = {c["index"]: c["value"] for c in cells if c["scope"] == "Total"}
    col_labels = [f"a={a:g} b={b:g} g={g:g}" for a, b, g in triples]
    if as_csv:
        header = ["index", "profile", *col_labels, "partial", "total"]
        rows = []
        for index in INDEX_LABELS:
            for p in profiles:
                vals = [_fmt(specific.get((index, by_cell[(p, t)]["id"])) if (p, t) in by_cell else None, 1) for t in triples]
                rows.append([index, p, *vals, _fmt(partial.get((index, p)), 1), _fmt(total.get(index), 1)])
        return _csv(header, rows)

    header = ["Profile", *col_labels, "Total and partial"]
    rows = []
    for index, label in INDEX_LABELS.items():
        rows.append([f"[{label}]", *[""] * len(triples), _fmt(total.get(index), 1)])
        for p in profiles:
            vals = [_fmt(specific.get((index, by_cell[(p, t)]["id"])) if (p, t) in by_cell else None, 1) for t in triples]
            rows.append([p, *vals, _fmt(partial.get((index, p)), 1)])
    return _text_table(header, rows) + "\n"


def _estimate_table(report: dict, as_csv: bool) -> str:
    header = ["sample", "n", "H_ML", "H_EB", "D_ML", "D_EB", "eta", "status"]
    rows = []
    for e in report["estimates"]:
        ml, eb = e.get("ML") or {}, e.get("EB") or {}
        rows.append([
            e["sample_id"], str(e["n"]),
            _fmt(ml.get("shannon"), 3), _fmt(eb.get("shannon"), 3),
            _fmt(ml.get("simpson"), 3), _fmt(eb.get("simpson"), 3),
            f"{eb['eta']:.4g}" if "eta" in eb else "NA", eb.get("status", "NA"),
        ])
    return _csv(header, rows) if as_csv else _text_table(header, rows) + "\n"


def render_table(report: dict[str, Any], table: str, as_csv: bool = False) -> str:
    if table not in TABLES:
        raise ReportError(f"unknown table {table!r}; valid tables: {', '.join(TABLES)}")
    if report["kind"] == "estimate":
        if table != "summary":
            raise ReportError(f"table {table!r} needs a simulation report; estimate reports only have 'summary'")
        return _estimate_table(report, as_csv)
    if table == "summary":
        return _summary_like(report, as_csv, MOMENT_ROWS, lambda d, key: d[key])
    if table == "quantiles":
        return _summary_like(report, as_csv, QUANTILE_ROWS, lambda d, key: d["quantiles"][key])
    return _efficiency(report, as_csv)
