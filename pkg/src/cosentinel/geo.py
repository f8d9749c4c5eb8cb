"""Site registry, great-circle distance, site matching and GeoJSON export."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING

from cosentinel.domain import InvalidInput

if TYPE_CHECKING:
    from cosentinel.report import CampaignReport

EARTH_RADIUS_M = 6_371_000.0
DEFAULT_MATCH_RADIUS_M = 150.0
SITES_HEADER = ["site_id", "name", "lat", "lng"]


class RegistryError(ValueError):
    pass


def _check_point(lat: float, lng: float) -> None:
    if not (math.isfinite(lat) and math.isfinite(lng)):
        raise InvalidInput(f"non-finite coordinate ({lat}, {lng})")
    if not -90.0 <= lat <= 90.0:
        raise InvalidInput(f"lat out of range: {lat}")
    if not -180.0 <= lng <= 180.0:
        raise InvalidInput(f"lng out of range: {lng}")


@dataclass(frozen=True)
class Site:
    site_id: str
    name: str
    lat: float
    lng: float

    def __post_init__(self):
        if not self.site_id:
            raise InvalidInput("empty site_id")
        _check_point(self.lat, self.lng)


@dataclass(frozen=True)
class SiteRegistry:
    sites: tuple[Site, ...] = ()
    match_radius: float = DEFAULT_MATCH_RADIUS_M
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        if not self.match_radius > 0:
            raise RegistryError(f"match_radius must be > 0, got {self.match_radius}")
        by_id = {}
        for site in self.sites:
            if site.site_id in by_id:
                raise RegistryError(f"duplicate site_id {site.site_id!r}")
            by_id[site.site_id] = site
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self):
        return len(self.sites)

    def __iter__(self):
        return iter(self.sites)

    def __contains__(self, site_id):
        return site_id in self._by_id

    def get(self, site_id: str) -> Site:
        try:
            return self._by_id[site_id]
        except KeyError:
            raise RegistryError(f"unknown site_id {site_id!r}") from None


def haversine(a: tuple[float, float], b: tuple[float, float]) -> float:
    """Great-circle distance in meters between two (lat, lng) points."""
    lat1, lng1 = a
    lat2, lng2 = b
    _check_point(lat1, lng1)
    _check_point(lat2, lng2)
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlmb = math.radians(lng2 - lng1)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def nearest_site(p: tuple[float, float], reg: SiteRegistry) -> str | None:
    if not reg.sites:
        raise RegistryError("cannot assign against an empty registry")
    _check_point(*p)
    best, best_d = None, math.inf
    for site in reg.sites:
        d = haversine(p, (site.lat, site.lng))
        # strict < keeps the earliest site on ties
        if d < best_d:
            best, best_d = site, d
    if best_d <= reg.match_radius:
        return best.site_id
    return None


def load_site_registry(path=None, match_radius: float = DEFAULT_MATCH_RADIUS_M) -> SiteRegistry:
    """Read a ``site_id,name,lat,lng`` CSV. ``None`` loads the bundled five-site file."""
    if path is None:
        text = resources.files("cosentinel").joinpath("data/sites.csv").read_text(encoding="utf-8")
        source = "<bundled sites.csv>"
    else:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"sites file not found: {path}")
        text = path.read_text(encoding="utf-8")
        source = str(path)
    rows = list(csv.reader(text.splitlines()))
    if not rows:
        raise RegistryError(f"{source}: missing header")
    if [c.strip() for c in rows[0]] != SITES_HEADER:
        raise RegistryError(f"{source}: expected header {','.join(SITES_HEADER)}, got {','.join(rows[0])}")
    sites = []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise RegistryError(f"{source}:{lineno}: expected 4 columns, got {len(row)}")
        site_id, name, lat, lng = (c.strip() for c in row)
        if site_id in seen:
            raise RegistryError(f"{source}:{lineno}: duplicate site_id {site_id!r}")
        seen.add(site_id)
        try:
            sites.append(Site(site_id, name, float(lat), float(lng)))
        except ValueError as exc:
            raise RegistryError(f"{source}:{lineno}: {exc}") from None
    return SiteRegistry(tuple(sites), match_radius)


def export_geojson(report: CampaignReport, reg: SiteRegistry) -> str:
    """Render a report as a GeoJSON FeatureCollection of site Points.

    Properties are flat per bucket (``morning_mean_ppm``, ``morning_band``,
    ...) so GIS tools can style on them directly.
    """
    reported = report.site_ids()
    for site_id in reported:
        if site_id not in reg:
            raise RegistryError(f"report references unknown site_id {site_id!r}")
    features = []
    for site in reg.sites:
        if site.site_id not in reported:
            continue
        props = {"site_id": site.site_id, "name": site.name}
        for cell in report.cells_for(site.site_id):
            key = cell.bucket.name.lower()
            props[f"{key}_mean_ppm"] = cell.mean_ppm
            props[f"{key}_count"] = cell.count
            props[f"{key}_band"] = cell.band.name
            props[f"{key}_description"] = cell.description
        features.append({
            "type": "Feature",
            "id": site.site_id,
            "geometry": {"type": "Point", "coordinates": [site.lng, site.lat]},
            "properties": props,
        })
    doc = {"type": "FeatureCollection", "features": features}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
