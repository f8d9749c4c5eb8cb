"""Core types and CO hazard classification.

Concentrations are in ppm. Bands are half-open intervals ``[lo, hi)`` over
``[0, inf)``; the 25 and 80 ppm edges are the regulatory anchors, 30/40/50
are the tightest round boundaries consistent with the campaign tables.
"""

from __future__ import annotations

import enum
import math
import re
from bisect import bisect_right
from dataclasses import dataclass

PPM_MAX = 10000.0
LATLNG_DIGITS = 6
PPM_DIGITS = 4

DEVICE_ID_RE = re.compile(r"\A[A-Z0-9_-]{1,16}\Z")


class InvalidInput(ValueError):
    pass


class HazardBand(enum.Enum):
    Safe = 0
    LittleDanger45 = 1
    Danger30 = 2
    Danger30Heart = 3
    Danger30Headache = 4
    VeryDanger15 = 5

    @property
    def severity(self) -> int:
        return self.value

    @property
    def lower_bound(self) -> float:
        return BAND_LOWER_BOUNDS[self.value]

    @property
    def description(self) -> str:
        return BAND_DESCRIPTIONS[self]

    @classmethod
    def parse(cls, name: str) -> HazardBand:
        try:
            return cls[name]
        except KeyError:
            raise InvalidInput(
                f"unknown hazard band {name!r}; expected one of "
                + ", ".join(b.name for b in cls)
            ) from None


BAND_LOWER_BOUNDS = (0.0, 25.0, 30.0, 40.0, 50.0, 80.0)

# Verbatim table text, including the "in the room" wording of the 45-minute row.
BAND_DESCRIPTIONS = {
    HazardBand.Safe: "Classified as safe for human",
    HazardBand.LittleDanger45: (
        "A little dangerous if we are in the room for more than 45 minutes"
    ),
    HazardBand.Danger30: (
        "Classified as dangerous if we are outside the room for more than 30 minutes"
    ),
    HazardBand.Danger30Heart: (
        "Classified as dangerous if we are outside the room for more than 30 minutes, "
        "can interfere with the function of the heart"
    ),
    HazardBand.Danger30Headache: (
        "Classified as dangerous if we are outside the room for more than 30 minutes, "
        "can make headaches"
    ),
    HazardBand.VeryDanger15: (
        "Very dangerous if inhalation of more than 15 minutes, "
        "will make it difficult to breathe"
    ),
}

# (ppm ceiling, max safe minutes); anything above the last ceiling gets 0.
EXPOSURE_LIMITS = ((8.0, 480), (24.0, 60), (48.0, 30), (80.0, 15))


def _check_ppm(ppm: float) -> float:
    try:
        ppm = float(ppm)
    except (TypeError, ValueError):
        raise InvalidInput(f"ppm must be a number, got {ppm!r}") from None
    if not math.isfinite(ppm) or ppm < 0:
        raise InvalidInput(f"ppm must be finite and non-negative, got {ppm!r}")
    return ppm


def classify(ppm: float) -> HazardBand:
    ppm = _check_ppm(ppm)
    return HazardBand(bisect_right(BAND_LOWER_BOUNDS, ppm) - 1)


def max_safe_exposure(ppm: float) -> int:
    """Maximum safe exposure in minutes at a constant concentration."""
    ppm = _check_ppm(ppm)
    for ceiling, minutes in EXPOSURE_LIMITS:
        if ppm <= ceiling:
            return minutes
    return 0


def band_description(band: HazardBand) -> str:
    return BAND_DESCRIPTIONS[band]


def severity(band: HazardBand) -> int:
    return band.value


def quantize(value: float, digits: int) -> float:
    # round() is correctly rounded, so quantize(quantize(x)) == quantize(x).
    return round(float(value), digits) + 0.0


@dataclass(frozen=True)
class Reading:
    """One timestamped, geolocated CO measurement from one device.

    Numeric fields are quantized on construction: lat/lng to 6 fraction
    digits, ppm to 4.
    """

    device_id: str
    ts: int
    lat: float
    lng: float
    ppm: float

    def __post_init__(self):
        if not isinstance(self.device_id, str) or not DEVICE_ID_RE.match(self.device_id):
            raise InvalidInput(f"bad device_id {self.device_id!r}")
        if isinstance(self.ts, bool) or not isinstance(self.ts, int) or self.ts < 0:
            raise InvalidInput(f"ts must be a non-negative integer, got {self.ts!r}")
        for name, digits in (("lat", LATLNG_DIGITS), ("lng", LATLNG_DIGITS), ("ppm", PPM_DIGITS)):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise InvalidInput(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, quantize(value, digits))
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidInput(f"lat out of range: {self.lat}")
        if not -180.0 <= self.lng <= 180.0:
            raise InvalidInput(f"lng out of range: {self.lng}")
        if not 0.0 <= self.ppm <= PPM_MAX:
            raise InvalidInput(f"ppm out of range: {self.ppm}")
