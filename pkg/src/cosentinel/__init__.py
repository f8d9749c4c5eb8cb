"""Carbon-monoxide monitoring pipeline: simulated sensor fleet, framed
telemetry, hazard classification, site matching and campaign reports."""

from cosentinel.domain import (
    HazardBand,
    InvalidInput,
    Reading,
    band_description,
    classify,
    max_safe_exposure,
    severity,
)
from cosentinel.geo import Site, SiteRegistry, export_geojson, haversine, load_site_registry, nearest_site
from cosentinel.ingest import EnrichedReading, IngestStats, JsonlStore, append_reading, ingest_stream, load_store
from cosentinel.protocol import DecodeError, DecodeErrorKind, checksum, decode_frame, encode_frame
from cosentinel.report import (
    Bucket,
    CampaignReport,
    bucket_of,
    campaign_report,
    cross_site_summary,
    recommend_sites,
)
from cosentinel.simulator import CampaignConfig, SiteProfile, default_profiles, emit_frames, generate_campaign

__version__ = "0.1.0"

__all__ = [
    "HazardBand", "InvalidInput", "Reading", "band_description", "classify", "max_safe_exposure", "severity",
    "Site", "SiteRegistry", "export_geojson", "haversine", "load_site_registry", "nearest_site",
    "EnrichedReading", "IngestStats", "JsonlStore", "append_reading", "ingest_stream", "load_store",
    "DecodeError", "DecodeErrorKind", "checksum", "decode_frame", "encode_frame",
    "Bucket", "CampaignReport", "bucket_of", "campaign_report", "cross_site_summary", "recommend_sites",
    "CampaignConfig", "SiteProfile", "default_profiles", "emit_frames", "generate_campaign",
]
