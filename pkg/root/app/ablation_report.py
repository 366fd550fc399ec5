from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from metrics import Metrics


class VariantResult(NamedTuple):
    """Metrics of one variant, one entry per seed."""

    name: str
    runs: Sequence[Metrics]


@dataclass(frozen=True)
class AblationRow:
    """
    One variant of an ablation, as mean and population stddev over seeds.

    Deltas are row mean minus baseline mean; None on the baseline row.
    """

    name: str
    oa: float
    macc: float
    oa_std: float = 0.0
    macc_std: float = 0.0
    delta_oa: Optional[float] = None
    delta_macc: Optional[float] = None
    seeds: int = 1


@dataclass(frozen=True)
class AblationReport:
    title: str
    rows: tuple[AblationRow, ...]
    overall_best: Optional[dict] = field(default=None)

    def row(self, name: str) -> AblationRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)


def summarize(
    title: str, variants: Sequence[VariantResult], with_overall_best: bool = False
) -> AblationReport:
    """
    Aggregates per-seed metrics into report rows; the first variant is the
    baseline. With `with_overall_best`, the best single run of the last
    variant is recorded next to the rows.
    """
    rows = []
    baseline = None
    for name, runs in variants:
        oa = np.array([m.overall_accuracy for m in runs], dtype=np.float64)
        macc = np.array([m.mean_class_accuracy for m in runs], dtype=np.float64)
        row = AblationRow(
            name=name,
            oa=float(oa.mean()),
            macc=float(macc.mean()),
            oa_std=float(oa.std()),
            macc_std=float(macc.std()),
            seeds=len(runs),
        )
        if baseline is None:
            baseline = row
        else:
            row = replace(
                row,
                delta_oa=row.oa - baseline.oa,
                delta_macc=row.macc - baseline.macc,
            )
        rows.append(row)
    overall_best = None
    if with_overall_best and variants:
        last = variants[-1].runs
        overall_best = {
            "variant": variants[-1].name,
            "oa": max(m.overall_accuracy for m in last),
            "macc": max(m.mean_class_accuracy for m in last),
        }
    return AblationReport(title, tuple(rows), overall_best)


def report_records(report: AblationReport) -> list[dict]:
    """Line-delimited records for the report, one per row."""
    records = [
        {
            "record": "ablation_row",
            "report": report.title,
            "variant": row.name,
            "oa": row.oa,
            "oa_std": row.oa_std,
            "delta_oa": row.delta_oa,
            "macc": row.macc,
            "macc_std": row.macc_std,
            "delta_macc": row.delta_macc,
            "seeds": row.seeds,
        }
        for row in report.rows
    ]
    if report.overall_best is not None:
        records.append(
            {"record": "overall_best", "report": report.title, **report.overall_best}
        )
    return records


def _pct(value: Optional[float], signed: bool = False) -> str:
    if value is None:
        return "-"
    return f"{100 * value:+.2f}" if signed else f"{100 * value:.2f}"


def render_table(report: AblationReport) -> str:
    """Plain-text table of the report in percent, built from `report_records`."""
    header = ("Variant", "OA (%)", "Delta", "mAcc (%)", "Delta")
    body = []
    for rec in report_records(report):
        if rec["record"] != "ablation_row":
            continue
        body.append(
            (
                rec["variant"],
                f"{_pct(rec['oa'])} ± {_pct(rec['oa_std'])}",
                _pct(rec["delta_oa"], signed=True),
                f"{_pct(rec['macc'])} ± {_pct(rec['macc_std'])}",
                _pct(rec["delta_macc"], signed=True),
            )
        )
    widths = [max(len(r[i]) for r in [header, *body]) for i in range(len(header))]
    line = "+".join("-" * (w + 2) for w in widths)
    out = [report.title, line]
    out.append(" | ".join(h.ljust(w) for h, w in zip(header, widths)))
    out.append(line)
    out.extend(" | ".join(c.ljust(w) for c, w in zip(row, widths)) for row in body)
    out.append(line)
    if report.overall_best is not None:
        best = report.overall_best
        out.append(
            f"Overall best ({best['variant']}): OA {_pct(best['oa'])}  mAcc {_pct(best['macc'])}"
        )
    return "\n".join(out)
