"""Time-bucketed campaign aggregation, cross-site summary and recommendations."""

from __future__ import annotations

import csv
import enum
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable, Mapping

from cosentinel.domain import HazardBand, classify


class Bucket(enum.Enum):
    Morning = 0
    Noon = 1
    Afternoon = 2
    Other = 3


# Local-time windows as [start_hour, end_hour).
BUCKET_WINDOWS = {
    Bucket.Morning: (6, 11),
    Bucket.Noon: (11, 15),
    Bucket.Afternoon: (15, 19),
}
REPORT_BUCKETS = (Bucket.Morning, Bucket.Noon, Bucket.Afternoon)
DEFAULT_TZ_OFFSET_MIN = 420


def bucket_of(ts: int, tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MIN) -> Bucket:
    seconds_of_day = (int(ts) + int(tz_offset_minutes) * 60) % 86400
    hour = seconds_of_day // 3600
    for bucket, (start, end) in BUCKET_WINDOWS.items():
        if start <= hour < end:
            return bucket
    return Bucket.Other


def format_ppm(value: float, digits: int = 5) -> str:
    """Up to ``digits`` fraction digits, trailing zeros trimmed (41.23, 46.7436)."""
    text = f"{value:.{digits}f}"
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


@dataclass(frozen=True)
class Cell:
    site_id: str
    bucket: Bucket
    mean_ppm: float
    count: int

    @property
    def band(self) -> HazardBand:
        return classify(self.mean_ppm)

    @property
    def description(self) -> str:
        return self.band.description


@dataclass(frozen=True)
class SummaryRow:
    bucket: Bucket
    mean_ppm: float
    site_count: int

    @property
    def band(self) -> HazardBand:
        return classify(self.mean_ppm)


@dataclass
class CampaignReport:
    cells: dict[tuple[str, Bucket], Cell] = field(default_factory=dict)
    start_ts: int | None = None
    end_ts: int | None = None
    other_count: int = 0
    unassigned_count: int = 0

    @classmethod
    def from_means(cls, means: Mapping[str, Mapping[Bucket, float]], count: int = 1) -> CampaignReport:
        """Build a report directly from per-site bucket means (e.g. published tables)."""
        cells = {}
        for site_id, per_bucket in means.items():
            for bucket, mean in per_bucket.items():
                cells[(site_id, bucket)] = Cell(site_id, bucket, float(mean), count)
        return cls(cells)

    def site_ids(self) -> list[str]:
        seen = {}
        for site_id, _ in self.cells:
            seen.setdefault(site_id, None)
        return list(seen)

    def cells_for(self, site_id: str) -> list[Cell]:
        return [self.cells[(site_id, b)] for b in REPORT_BUCKETS if (site_id, b) in self.cells]

    def cell(self, site_id: str, bucket: Bucket) -> Cell:
        return self.cells[(site_id, bucket)]


def campaign_report(records: Iterable) -> CampaignReport:
    """Mean ppm per (site, bucket) over site-assigned, in-window records.

    Records need ``ts``, ``ppm``, ``site_id`` and ``bucket`` attributes.
    Unassigned and Other-bucket records are counted but not tabulated.
    """
    values: dict[tuple[str, Bucket], list[float]] = defaultdict(list)
    order: dict[str, int] = {}
    start = end = None
    other = unassigned = 0
    for r in records:
        start = r.ts if start is None else min(start, r.ts)
        end = r.ts if end is None else max(end, r.ts)
        if r.site_id is None:
            unassigned += 1
            continue
        if r.bucket is Bucket.Other:
            other += 1
            continue
        order.setdefault(r.site_id, len(order))
        values[(r.site_id, r.bucket)].append(r.ppm)

    keys = sorted(values, key=lambda k: (order[k[0]], k[1].value))
    cells = {
        k: Cell(k[0], k[1], math.fsum(values[k]) / len(values[k]), len(values[k]))
        for k in keys
    }
    return CampaignReport(cells, start, end, other, unassigned)


def cross_site_summary(rep: CampaignReport) -> dict[Bucket, SummaryRow]:
    """Per bucket, the unweighted mean of the per-site means."""
    summary = {}
    for bucket in REPORT_BUCKETS:
        means = [c.mean_ppm for (_, b), c in rep.cells.items() if b is bucket]
        if means:
            summary[bucket] = SummaryRow(bucket, math.fsum(means) / len(means), len(means))
    return summary


def recommend_sites(rep: CampaignReport, min_band: HazardBand = HazardBand.Danger30Heart) -> list[str]:
    """Sites with any cell at or above ``min_band``, worst (highest max mean) first."""
    worst: dict[str, float] = {}
    flagged = set()
    for (site_id, _), cell in rep.cells.items():
        worst[site_id] = max(worst.get(site_id, -math.inf), cell.mean_ppm)
        if cell.band.severity >= min_band.severity:
            flagged.add(site_id)
    order = rep.site_ids()
    return sorted(flagged, key=lambda s: (-worst[s], order.index(s)))


def _date_span(rep: CampaignReport, tz_offset_minutes: int) -> str:
    if rep.start_ts is None:
        return "no readings"
    tz = timezone(timedelta(minutes=tz_offset_minutes))
    first = datetime.fromtimestamp(rep.start_ts, tz).date()
    last = datetime.fromtimestamp(rep.end_ts, tz).date()
    return f"{first.isoformat()} .. {last.isoformat()}"


def render_table(rep: CampaignReport, min_band: HazardBand = HazardBand.Danger30Heart,
                 tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MIN) -> str:
    header = ("site_id", "bucket", "mean_ppm", "count", "band", "description")
    rows = [
        (c.site_id, c.bucket.name, format_ppm(c.mean_ppm), str(c.count), c.band.name, c.description)
        for c in rep.cells.values()
    ]
    widths = [max([len(header[i])] + [len(r[i]) for r in rows]) for i in range(5)]

    def line(cols):
        head = "  ".join(col.ljust(w) if i != 2 and i != 3 else col.rjust(w)
                         for i, (col, w) in enumerate(zip(cols[:5], widths)))
        return f"{head}  {cols[5]}".rstrip()

    out = [f"CO campaign report ({_date_span(rep, tz_offset_minutes)})", line(header)]
    out.append("  ".join("-" * w for w in widths) + "  " + "-" * len(header[5]))
    out.extend(line(r) for r in rows)
    out.append("")
    out.append("Cross-site summary (mean of site means)")
    for row in cross_site_summary(rep).values():
        out.append(f"  {row.bucket.name:<9}  {format_ppm(row.mean_ppm):>9}  sites={row.site_count}  {row.band.name}")
    out.append(f"  excluded: {rep.other_count} outside time buckets, {rep.unassigned_count} unassigned")
    out.append("")
    recs = recommend_sites(rep, min_band)
    out.append(f"Tree-planting recommendations (band >= {min_band.name}): "
               + (", ".join(recs) if recs else "none"))
    return "\n".join(out) + "\n"


def render_csv(rep: CampaignReport, min_band: HazardBand = HazardBand.Danger30Heart) -> str:
    """Cells as CSV, then a blank line and a summary block with its own header."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["site_id", "bucket", "mean_ppm", "count", "band", "description"])
    for c in rep.cells.values():
        w.writerow([c.site_id, c.bucket.name, format_ppm(c.mean_ppm), c.count, c.band.name, c.description])
    buf.write("\n")
    w.writerow(["summary_bucket", "mean_ppm", "site_count", "band"])
    for row in cross_site_summary(rep).values():
        w.writerow([row.bucket.name, format_ppm(row.mean_ppm), row.site_count, row.band.name])
    buf.write("\n")
    w.writerow(["excluded_other_bucket", "excluded_unassigned"])
    w.writerow([rep.other_count, rep.unassigned_count])
    buf.write("\n")
    w.writerow(["recommended_site_id", "min_band"])
    for site_id in recommend_sites(rep, min_band):
        w.writerow([site_id, min_band.name])
    return buf.getvalue()
