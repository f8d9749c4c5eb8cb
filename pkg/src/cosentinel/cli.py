"""Command-line entry point: simulate, ingest, report, export-geojson, classify.

Exit codes: 0 success, 1 operational error, 2 usage or validation error.
Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path

from cosentinel.domain import HazardBand, InvalidInput, classify, max_safe_exposure
from cosentinel.geo import DEFAULT_MATCH_RADIUS_M, RegistryError, export_geojson, load_site_registry
from cosentinel.ingest import FrameServer, IngestIOError, JsonlStore, ingest_stream, load_store
from cosentinel.report import DEFAULT_TZ_OFFSET_MIN, campaign_report, render_csv, render_table
from cosentinel.simulator import (
    DEFAULT_START_DATE,
    CampaignConfig,
    ConfigError,
    TransportError,
    default_profiles,
    emit_frames,
    generate_campaign,
    load_profiles,
    profiles_for_registry,
)

log = logging.getLogger("cosentinel")

TZ_ENV = "COSENTINEL_TZ_OFFSET_MIN"


class UsageError(Exception):
    pass


def _default_tz() -> int:
    raw = os.environ.get(TZ_ENV)
    if raw is None or raw == "":
        return DEFAULT_TZ_OFFSET_MIN
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{TZ_ENV} must be an integer number of minutes, got {raw!r}") from None


@contextmanager
def _open_out(target: str, binary: bool = False):
    if target == "-":
        yield sys.stdout.buffer if binary else sys.stdout
        sys.stdout.flush()
    else:
        with open(target, "wb" if binary else "w", encoding=None if binary else "utf-8", newline=None if binary else "") as fh:
            yield fh


def _tz(args) -> int:
    return args.tz_offset_min if args.tz_offset_min is not None else _default_tz()


def cmd_simulate(args) -> int:
    if args.profiles:
        profiles = load_profiles(args.profiles)
    else:
        profiles = default_profiles()
    if args.sites:
        profiles = profiles_for_registry(load_site_registry(args.sites), profiles)
    overrides = {}
    if args.sigma is not None:
        overrides["noise_sigma"] = args.sigma
    if args.per_bucket is not None:
        overrides["readings_per_bucket"] = args.per_bucket
    if overrides:
        profiles = [replace(p, **overrides) for p in profiles]
    cfg = CampaignConfig(profiles, days=args.days, seed=args.seed,
                         tz_offset_minutes=_tz(args), start_date=args.start_date)
    readings = generate_campaign(cfg)
    with _open_out(args.out) as fh:
        n = emit_frames(readings, fh)
    log.info("emitted %d frames", n)
    return 0


def cmd_ingest(args) -> int:
    reg = load_site_registry(args.sites, match_radius=args.match_radius)
    if not reg.sites:
        raise RegistryError("site registry is empty; nothing to assign readings to")
    tz = _tz(args)
    with JsonlStore(args.store, fsync=args.fsync) as store:
        if args.listen is not None:
            server = FrameServer((args.host, args.listen), reg, store, tz, max_connections=args.max_connections)
            log.warning("listening on %s:%d", *server.server_address[:2])
            try:
                server.serve_forever()
            except KeyboardInterrupt:
                pass
            finally:
                server.server_close()
            stats = server.stats
        elif args.in_path == "-":
            stats = ingest_stream(sys.stdin.buffer, reg, store, tz, source_name="<stdin>")
        else:
            path = Path(args.in_path)
            if not path.exists():
                raise FileNotFoundError(f"input not found: {path}")
            with path.open("rb") as fh:
                stats = ingest_stream(fh, reg, store, tz, source_name=str(path))
    print(stats.summary(), file=sys.stderr)
    return 0


def _load_report(store_path):
    loaded = load_store(store_path)
    if loaded.skipped:
        log.warning("%s: skipped %d malformed record(s)", store_path, len(loaded.skipped))
    return campaign_report(loaded.records)


def cmd_report(args) -> int:
    rep = _load_report(args.store)
    min_band = HazardBand.parse(args.recommend_min_band)
    if args.format == "csv":
        text = render_csv(rep, min_band)
    else:
        text = render_table(rep, min_band, tz_offset_minutes=_tz(args))
    with _open_out(args.out) as fh:
        fh.write(text)
    if args.figure:
        from cosentinel.plotting import plot_campaign
        plot_campaign(rep, args.figure)
        log.info("figure written to %s", args.figure)
    return 0


def cmd_export(args) -> int:
    rep = _load_report(args.store)
    reg = load_site_registry(args.sites)
    doc = export_geojson(rep, reg)
    with _open_out(args.out) as fh:
        fh.write(doc)
    return 0


def cmd_classify(args) -> int:
    try:
        ppm = float(args.ppm)
        band = classify(ppm)
    except (ValueError, InvalidInput) as exc:
        raise UsageError(f"classify: {exc}") from None
    print(band.name)
    print(band.description)
    print(f"{max_safe_exposure(ppm)} min")
    return 0


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected YYYY-MM-DD, got {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _unsigned_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _non_negative_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be finite and >= 0, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cosentinel", description="CO monitoring pipeline")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", help="generate a campaign as telemetry frames")
    p.add_argument("--sites", help="sites CSV; restricts profiles to these sites and their coordinates")
    p.add_argument("--profiles", help="profile CSV (site_id,device_id,lat,lng,morning,noon,afternoon,sigma,per_bucket)")
    p.add_argument("--days", type=_positive_int, default=5)
    p.add_argument("--sigma", type=_non_negative_float, help="noise sigma in ppm for every profile (default: 10%% of bucket mean)")
    p.add_argument("--seed", type=_unsigned_int, default=0)
    p.add_argument("--per-bucket", type=_positive_int, help="readings per site per bucket per day (default 6)")
    p.add_argument("--out", default="-", help="output file, '-' for stdout")
    p.add_argument("--start-date", type=_date, default=DEFAULT_START_DATE)
    p.add_argument("--tz-offset-min", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="decode frames into the reading store")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--in", dest="in_path", help="frame file, '-' for stdin")
    src.add_argument("--listen", type=int, metavar="PORT", help="accept frames over TCP")
    p.add_argument("--host", default="127.0.0.1", help="bind address for --listen")
    p.add_argument("--max-connections", type=_positive_int, help="with --listen, stop after this many connections")
    p.add_argument("--sites", help="sites CSV (default: bundled five-site registry)")
    p.add_argument("--store", required=True, help="JSONL store to append to")
    p.add_argument("--match-radius", type=_non_negative_float, default=DEFAULT_MATCH_RADIUS_M)
    p.add_argument("--fsync", action="store_true", help="fsync after every appended record")
    p.add_argument("--tz-offset-min", type=int)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("report", help="per-site time-of-day report")
    p.add_argument("--store", required=True)
    p.add_argument("--format", choices=["table", "csv"], default="table")
    p.add_argument("--recommend-min-band", default=HazardBand.Danger30Heart.name,
                   choices=[b.name for b in HazardBand], metavar="BAND")
    p.add_argument("--out", default="-")
    p.add_argument("--figure", help="also render a bar chart to this image path")
    p.add_argument("--tz-offset-min", type=int)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export-geojson", help="site report as a GeoJSON FeatureCollection")
    p.add_argument("--store", required=True)
    p.add_argument("--sites", help="sites CSV (default: bundled)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("classify", help="hazard band and safe exposure for one concentration")
    p.add_argument("ppm")
    p.set_defaults(func=cmd_classify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cosentinel: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, RegistryError, InvalidInput) as exc:
        print(f"cosentinel: error: {exc}", file=sys.stderr)
        return 1
    except (IngestIOError, TransportError) as exc:
        print(f"cosentinel: I/O error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"cosentinel: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
