"""Writing reports: long-form CSV, wide pivot CSV, JSON and bar charts."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .pipeline import RATE_METRICS, RECORD_FIELDS, TIERS, MetricsReport

FORMATS = ("csv", "pivot", "details", "json", "plots")
_TABLE_METRICS = ("mae", *RATE_METRICS)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def long_form_csv(report: MetricsReport) -> str:
    return _csv(RECORD_FIELDS, ([rec[f] for f in RECORD_FIELDS] for rec in report.records))


def details_csv(report: MetricsReport) -> str:
    if not report.details:
        return ""
    keys = {k for d in report.details for k in d}
    # identity columns first, in record order, then the rest alphabetically
    header = [f for f in RECORD_FIELDS if f in keys] + sorted(keys - set(RECORD_FIELDS))
    return _csv(header, ([d.get(k) for k in header] for d in report.details))


def pivot_table(report: MetricsReport) -> tuple[list[str], list[list]]:
    """Header and rows shaped like the published tables.

    direct:    (problem, representation) x {tier}/{metric}, 4 metrics x 3 tiers
    probing:   (problem, representation, model, pooling) x MAE per tier, plus
               one Direct Querying row per representation when available
    selection: (problem, source, representation, pooling) x mean accuracy per classifier
    """
    recs = report.records
    if report.experiment == "direct":
        cols = [f"{t}/{m}" for t in TIERS for m in _TABLE_METRICS]
        keys = ["problem", "representation"]
        cell = {}
        for r in recs:
            if r["metric"] in _TABLE_METRICS:
                cell[(r["problem"], r["representation"], f"{r['tier']}/{r['metric']}")] = r["value"]
    elif report.experiment == "probing":
        cols = list(TIERS)
        keys = ["problem", "representation", "model", "pooling"]
        cell = {}
        for r in list(recs) + list(report.comparison):
            if r["metric"] == "mae":
                cell[(r["problem"], r["representation"], r["model"], r["pooling"], r["tier"])] = r["value"]
    elif report.experiment == "selection":
        cols = sorted({r["model"] for r in recs})
        keys = ["problem", "source", "representation", "pooling"]
        cell = {(r["problem"], r["source"], r["representation"], r["pooling"], r["model"]): r["value"]
                for r in recs}
    else:
        raise ValueError(f"unknown experiment {report.experiment!r}")
    index = []
    for k in cell:
        if k[:-1] not in index:
            index.append(k[:-1])
    rows = [list(ix) + [cell.get((*ix, c)) for c in cols] for ix in index]
    return keys + cols, rows


def _plot(report: MetricsReport, path: Path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if report.experiment == "selection":
        metric, label = "accuracy", "set-aware accuracy"
    else:
        metric, label = "mae", "MAE"
    recs = [r for r in report.records if r["metric"] == metric and r["value"] is not None]
    names = ["/".join(str(r[k]) for k in ("problem", "source", "representation", "pooling",
                                           "model", "tier") if r[k]) for r in recs]
    fig, ax = plt.subplots(figsize=(max(6, 0.25 * len(recs) + 2), 4.5))
    ax.bar(range(len(recs)), [r["value"] for r in recs], color="tab:blue")
    ax.set_xticks(range(len(recs)))
    ax.set_xticklabels(names, rotation=90, fontsize=5)
    ax.set_ylabel(label)
    if metric == "mae":
        ax.set_yscale("symlog")
    ax.set_title(f"{report.experiment}: {label} per cell")
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata={"Software": None})
    plt.close(fig)


def emit_report(report: MetricsReport, out_dir, formats=FORMATS) -> list[Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot write reports to {out}: {exc}") from exc
    stem = report.experiment
    written = []

    def write(name, text):
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    for fmt in formats:
        if fmt == "csv":
            write(f"{stem}_long.csv", long_form_csv(report))
        elif fmt == "pivot":
            header, rows = pivot_table(report)
            write(f"{stem}_pivot.csv", _csv(header, rows))
        elif fmt == "details":
            write(f"{stem}_details.csv", details_csv(report))
        elif fmt == "json":
            write(f"{stem}.json", json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
        elif fmt == "plots":
            p = out / f"{stem}.png"
            _plot(report, p)
            written.append(p)
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    return written


def load_report(path) -> MetricsReport:
    return MetricsReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
