"""Report figures: grouped bars of bucket means per site, with band edges."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from cosentinel.domain import BAND_LOWER_BOUNDS, HazardBand  # noqa: E402
from cosentinel.report import REPORT_BUCKETS, CampaignReport, cross_site_summary  # noqa: E402

BUCKET_COLORS = {"Morning": "#8fb8de", "Noon": "#f2b35e", "Afternoon": "#d9534f"}


def plot_campaign(rep: CampaignReport, path, title: str = "CO level per site and time of day") -> Path:
    path = Path(path)
    sites = rep.site_ids()
    x = np.arange(len(sites))
    width = 0.8 / len(REPORT_BUCKETS)

    fig, ax = plt.subplots(figsize=(max(6.0, 1.6 * len(sites) + 2), 4.5))
    for i, bucket in enumerate(REPORT_BUCKETS):
        heights = [rep.cells[(s, bucket)].mean_ppm if (s, bucket) in rep.cells else np.nan for s in sites]
        ax.bar(x + (i - 1) * width, heights, width, label=bucket.name,
               color=BUCKET_COLORS[bucket.name], edgecolor="black", linewidth=0.5)

    top = max([c.mean_ppm for c in rep.cells.values()] + [BAND_LOWER_BOUNDS[-1]]) * 1.1
    for band, lo in zip(HazardBand, BAND_LOWER_BOUNDS):
        if 0 < lo < top:
            ax.axhline(lo, color="grey", linestyle=":", linewidth=0.8)
            ax.text(1.01, lo, band.name, fontsize=7, va="center", ha="left", color="grey",
                    transform=ax.get_yaxis_transform())

    summary = cross_site_summary(rep)
    if summary:
        text = "  ".join(f"{row.bucket.name}: {row.mean_ppm:.5f}" for row in summary.values())
        ax.set_xlabel("cross-site mean  " + text, fontsize=8)

    ax.set_xticks(x)
    ax.set_xticklabels([s.removeprefix("SITE-") for s in sites], rotation=20, ha="right")
    ax.set_ylabel("CO (ppm)")
    ax.set_ylim(0, top)
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=8, loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
