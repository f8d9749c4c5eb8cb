"""Frame intake and the append-only JSONL reading store.

Store records are one JSON object per line with a fixed key order::

    {"device_id": ..., "ts": ..., "lat": ..., "lng": ..., "ppm": ...,
     "band": ..., "site_id": ... | null, "bucket": ...}

Band and site are resolved at ingest time and stored. A truncated final
line (crash tail) is skipped on load.
"""

from __future__ import annotations

import json
import logging
import os
import socketserver
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

from cosentinel.domain import HazardBand, InvalidInput, Reading, classify
from cosentinel.geo import SiteRegistry, nearest_site
from cosentinel.protocol import DecodeError, DecodeErrorKind, decode_frame
from cosentinel.report import DEFAULT_TZ_OFFSET_MIN, Bucket, bucket_of

log = logging.getLogger(__name__)

STORE_FIELDS = ("device_id", "ts", "lat", "lng", "ppm", "band", "site_id", "bucket")


@dataclass(frozen=True)
class EnrichedReading:
    device_id: str
    ts: int
    lat: float
    lng: float
    ppm: float
    band: HazardBand
    site_id: str | None
    bucket: Bucket

    @property
    def reading(self) -> Reading:
        return Reading(self.device_id, self.ts, self.lat, self.lng, self.ppm)

    def to_json(self) -> str:
        obj = {
            "device_id": self.device_id,
            "ts": self.ts,
            "lat": self.lat,
            "lng": self.lng,
            "ppm": self.ppm,
            "band": self.band.name,
            "site_id": self.site_id,
            "bucket": self.bucket.name,
        }
        return json.dumps(obj, separators=(",", ":"))


def enrich(r: Reading, reg: SiteRegistry, tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MIN) -> EnrichedReading:
    return EnrichedReading(
        r.device_id, r.ts, r.lat, r.lng, r.ppm,
        band=classify(r.ppm),
        site_id=nearest_site((r.lat, r.lng), reg),
        bucket=bucket_of(r.ts, tz_offset_minutes),
    )


@dataclass
class IngestStats:
    accepted: int = 0
    rejected: int = 0
    rejects_by_variant: Counter = field(default_factory=Counter)

    @property
    def total(self) -> int:
        return self.accepted + self.rejected

    def merge(self, other: IngestStats) -> None:
        self.accepted += other.accepted
        self.rejected += other.rejected
        self.rejects_by_variant.update(other.rejects_by_variant)

    def summary(self) -> str:
        parts = [f"accepted={self.accepted}", f"rejected={self.rejected}"]
        parts += [f"{k.value}={v}" for k, v in sorted(self.rejects_by_variant.items(), key=lambda kv: list(DecodeErrorKind).index(kv[0]))]
        return " ".join(parts)


class IngestIOError(OSError):
    def __init__(self, message: str, stats: IngestStats):
        super().__init__(message)
        self.stats = stats


class JsonlStore:
    """Single-writer append handle on a store file.

    Appends are serialized by a lock so several sources can share one store.
    Each record goes out in a single ``write`` followed by a flush; ``fsync``
    runs per append only when ``fsync=True``, otherwise on close.
    """

    def __init__(self, path, fsync: bool = False):
        self.path = Path(path)
        self.fsync = fsync
        self._lock = threading.Lock()
        self._fh = self.path.open("ab")

    def append(self, er: EnrichedReading) -> None:
        data = (er.to_json() + "\n").encode("utf-8")
        with self._lock:
            self._fh.write(data)
            self._fh.flush()
            if self.fsync:
                os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self._lock:
            if self._fh.closed:
                return
            self._fh.flush()
            os.fsync(self._fh.fileno())
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def append_reading(store: JsonlStore, er: EnrichedReading) -> None:
    store.append(er)


class LoadedStore(NamedTuple):
    records: list[EnrichedReading]
    skipped: list[tuple[int, str]]


def _parse_record(line: str) -> EnrichedReading:
    obj = json.loads(line)
    if not isinstance(obj, dict) or tuple(obj) != STORE_FIELDS:
        raise ValueError("unexpected record keys")
    try:
        r = Reading(obj["device_id"], obj["ts"], obj["lat"], obj["lng"], obj["ppm"])
        band = HazardBand[obj["band"]]
        bucket = Bucket[obj["bucket"]]
    except (KeyError, TypeError, InvalidInput) as exc:
        raise ValueError(f"invalid record: {exc}") from None
    if band is not classify(r.ppm):
        raise ValueError(f"stored band {band.name} != classify({r.ppm}) = {classify(r.ppm).name}")
    site_id = obj["site_id"]
    if site_id is not None and not isinstance(site_id, str):
        raise ValueError("site_id must be a string or null")
    return EnrichedReading(r.device_id, r.ts, r.lat, r.lng, r.ppm, band, site_id, bucket)


def load_store(path) -> LoadedStore:
    """Read all records in append order; malformed lines are skipped and reported."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"store not found: {path}")
    records, skipped = [], []
    with path.open("rb") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                if not raw.endswith(b"\n"):
                    raise ValueError("truncated final line")
                records.append(_parse_record(raw.decode("utf-8")))
            except (ValueError, UnicodeDecodeError) as exc:
                log.warning("%s:%d: skipped malformed record: %s", path, lineno, exc)
                skipped.append((lineno, str(exc)))
    return LoadedStore(records, skipped)


def ingest_stream(source: Iterable, reg: SiteRegistry, store: JsonlStore,
                  tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MIN, source_name: str = "<input>") -> IngestStats:
    """Decode, enrich and append every line of ``source``; blank lines are ignored."""
    stats = IngestStats()
    lineno = 0
    try:
        for lineno, line in enumerate(source, start=1):
            if not line.strip():
                continue
            try:
                reading = decode_frame(line, line_no=lineno)
            except DecodeError as exc:
                stats.rejected += 1
                stats.rejects_by_variant[exc.kind] += 1
                log.warning("%s: %s", source_name, exc)
                continue
            store.append(enrich(reading, reg, tz_offset_minutes))
            stats.accepted += 1
    except OSError as exc:
        raise IngestIOError(f"{source_name}: I/O error near line {lineno}: {exc}", stats) from exc
    return stats


class _FrameHandler(socketserver.StreamRequestHandler):
    def handle(self):
        server = self.server
        name = "%s:%d" % self.client_address[:2]
        try:
            stats = ingest_stream(self.rfile, server.registry, server.store,
                                  server.tz_offset_minutes, source_name=name)
        except IngestIOError as exc:
            log.error("%s", exc)
            stats = exc.stats
        with server.stats_lock:
            server.stats.merge(stats)
            server.connections_done += 1
            done = server.max_connections is not None and server.connections_done >= server.max_connections
        log.info("%s closed: %s", name, stats.summary())
        if done:
            threading.Thread(target=server.shutdown, daemon=True).start()


class FrameServer(socketserver.ThreadingTCPServer):
    """TCP listener: each connection is a line source feeding one shared store."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, registry: SiteRegistry, store: JsonlStore,
                 tz_offset_minutes: int = DEFAULT_TZ_OFFSET_MIN, max_connections: int | None = None):
        super().__init__(address, _FrameHandler)
        self.registry = registry
        self.store = store
        self.tz_offset_minutes = tz_offset_minutes
        self.max_connections = max_connections
        self.connections_done = 0
        self.stats = IngestStats()
        self.stats_lock = threading.Lock()
