"""Deterministic virtual sensor fleet.

Each site profile emits ``readings_per_bucket`` readings inside every
Morning/Noon/Afternoon local window of every campaign day. Noise is
Gaussian from numpy's PCG64 generator seeded with ``CampaignConfig.seed``
and clamped at 0 ppm.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from cosentinel.domain import InvalidInput, Reading, quantize, PPM_DIGITS
from cosentinel.geo import SiteRegistry
from cosentinel.protocol import encode_frame
from cosentinel.report import BUCKET_WINDOWS, DEFAULT_TZ_OFFSET_MIN, REPORT_BUCKETS

DEFAULT_START_DATE = dt.date(2020, 3, 1)
PROFILE_HEADER = ["site_id", "device_id", "lat", "lng", "morning", "noon", "afternoon", "sigma", "per_bucket"]


class ConfigError(ValueError):
    pass


class TransportError(OSError):
    def __init__(self, message: str, count: int):
        super().__init__(message)
        self.count = count


@dataclass(frozen=True)
class SiteProfile:
    site_id: str
    device_id: str
    lat: float
    lng: float
    bucket_means: tuple[float, float, float]
    # None means 10% of each bucket's mean
    noise_sigma: float | None = None
    readings_per_bucket: int = 6

    def __post_init__(self):
        object.__setattr__(self, "bucket_means", tuple(float(m) for m in self.bucket_means))
        if len(self.bucket_means) != 3:
            raise ConfigError(f"{self.site_id}: need 3 bucket means, got {len(self.bucket_means)}")
        if any(not m >= 0 for m in self.bucket_means):
            raise ConfigError(f"{self.site_id}: bucket means must be >= 0")
        if self.noise_sigma is not None and not self.noise_sigma >= 0:
            raise ConfigError(f"{self.site_id}: noise_sigma must be >= 0")
        if self.readings_per_bucket < 1:
            raise ConfigError(f"{self.site_id}: readings_per_bucket must be >= 1")

    def sigma_for(self, bucket_index: int) -> float:
        if self.noise_sigma is None:
            return 0.1 * self.bucket_means[bucket_index]
        return self.noise_sigma


@dataclass(frozen=True)
class CampaignConfig:
    profiles: tuple[SiteProfile, ...]
    days: int = 5
    seed: int = 0
    tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MIN
    start_date: dt.date = field(default=DEFAULT_START_DATE)

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        if not self.profiles:
            raise ConfigError("campaign needs at least one site profile")
        if self.days < 1:
            raise ConfigError(f"days must be >= 1, got {self.days}")
        if self.seed < 0:
            raise ConfigError(f"seed must be unsigned, got {self.seed}")
        ids = [p.site_id for p in self.profiles]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate site_id among profiles")


# Published per-site Morning/Noon/Afternoon means.
CAMPAIGN_TABLE = {
    "SITE-UNSIKA": (32.916, 36.0164, 46.7436),
    "SITE-UBP": (30.134, 30.3468, 41.23),
    "SITE-SKYBRIDGE": (26.9292, 31.6068, 41.5176),
    "SITE-BINTANGALAM": (39.0796, 62.3468, 89.79),
    "SITE-MCD": (24.038, 32.0756, 28.7016),
}

_DEFAULT_COORDS = {
    "SITE-UNSIKA": (-6.323799, 107.306427),
    "SITE-UBP": (-6.323513, 107.301137),
    "SITE-SKYBRIDGE": (-6.327190, 107.291857),
    "SITE-BINTANGALAM": (-6.332336, 107.312257),
    "SITE-MCD": (-6.329349, 107.296362),
}


def default_profiles() -> list[SiteProfile]:
    return [
        SiteProfile(site_id, f"DEV{i:02d}", *_DEFAULT_COORDS[site_id], bucket_means=means)
        for i, (site_id, means) in enumerate(CAMPAIGN_TABLE.items(), start=1)
    ]


def profiles_for_registry(reg: SiteRegistry, base: list[SiteProfile] | None = None) -> list[SiteProfile]:
    """Restrict ``base`` profiles to the registry's sites, emitting at registry coordinates."""
    by_id = {p.site_id: p for p in (base if base is not None else default_profiles())}
    out = []
    for site in reg.sites:
        if site.site_id not in by_id:
            raise ConfigError(f"no profile (bucket means) for site {site.site_id!r}")
        out.append(replace(by_id[site.site_id], lat=site.lat, lng=site.lng))
    return out


def load_profiles(path) -> list[SiteProfile]:
    """Read the profile override CSV; empty sigma/per_bucket cells take defaults."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"profile file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != PROFILE_HEADER:
        raise ConfigError(f"{path}: expected header {','.join(PROFILE_HEADER)}")
    profiles = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(PROFILE_HEADER):
            raise ConfigError(f"{path}:{lineno}: expected {len(PROFILE_HEADER)} columns, got {len(row)}")
        r = dict(zip(PROFILE_HEADER, (c.strip() for c in row)))
        try:
            profiles.append(SiteProfile(
                site_id=r["site_id"],
                device_id=r["device_id"],
                lat=float(r["lat"]),
                lng=float(r["lng"]),
                bucket_means=(float(r["morning"]), float(r["noon"]), float(r["afternoon"])),
                noise_sigma=float(r["sigma"]) if r["sigma"] else None,
                readings_per_bucket=int(r["per_bucket"]) if r["per_bucket"] else 6,
            ))
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return profiles


def _day_start_utc(day: dt.date, tz_offset_minutes: int) -> int:
    midnight = dt.datetime(day.year, day.month, day.day, tzinfo=dt.timezone.utc)
    return int(midnight.timestamp()) - tz_offset_minutes * 60


def bucket_timestamps(day_start: int, bucket_index: int, n: int) -> list[int]:
    """``n`` timestamps at slice midpoints of the bucket window (integer seconds)."""
    start_h, end_h = BUCKET_WINDOWS[REPORT_BUCKETS[bucket_index]]
    lo = day_start + start_h * 3600
    width = (end_h - start_h) * 3600
    return [lo + (2 * i + 1) * width // (2 * n) for i in range(n)]


def generate_campaign(cfg: CampaignConfig) -> list[Reading]:
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for d in range(cfg.days):
        day_start = _day_start_utc(cfg.start_date + dt.timedelta(days=d), cfg.tz_offset_minutes)
        for profile in cfg.profiles:
            for b in range(len(REPORT_BUCKETS)):
                n = profile.readings_per_bucket
                mean = profile.bucket_means[b]
                sigma = profile.sigma_for(b)
                noise = rng.standard_normal(n)
                for ts, z in zip(bucket_timestamps(day_start, b, n), noise):
                    ppm = max(0.0, mean + sigma * float(z))
                    try:
                        reading = Reading(profile.device_id, ts, profile.lat, profile.lng,
                                          quantize(ppm, PPM_DIGITS))
                    except InvalidInput as exc:
                        raise ConfigError(f"{profile.site_id}: {exc}") from None
                    rows.append((ts, profile.site_id, reading))
    rows.sort(key=lambda row: (row[0], row[1]))
    return [reading for _, _, reading in rows]


def emit_frames(readings, sink) -> int:
    """Write one encoded frame per reading to ``sink`` (anything with ``write``)."""
    count = 0
    for reading in readings:
        frame = encode_frame(reading)
        try:
            sink.write(frame)
        except (OSError, ValueError) as exc:
            raise TransportError(f"sink write failed after {count} frames: {exc}", count) from exc
        count += 1
    return count
