"""ASCII telemetry frames.

Wire layout, one LF-terminated line per reading::

    $COMO,<device_id>,<ts>,<lat>,<lng>,<ppm>*<CS>

lat/lng carry exactly 6 fraction digits and ppm exactly 4. ``CS`` is the
XOR of every byte strictly between ``$`` and ``*`` as two uppercase hex
digits. The decoder accepts 1-9 fraction digits and a CR before the LF,
and re-canonicalizes.
"""

from __future__ import annotations

import enum
import re
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation

from cosentinel.domain import LATLNG_DIGITS, PPM_DIGITS, InvalidInput, Reading

TALKER = "COMO"
PREFIX = "$" + TALKER + ","

_CS_RE = re.compile(r"\*([0-9A-Fa-f]{2})\Z")
_INT_RE = re.compile(r"\A[0-9]{1,19}\Z")
_DEC_RE = re.compile(r"\A-?[0-9]{1,5}\.[0-9]{1,9}\Z")


class DecodeErrorKind(enum.Enum):
    # Checks run in declaration order and the first failure wins. The
    # prefix check is split: the leading "$" before the checksum, the
    # "COMO," talker after it.
    MissingPrefix = "MissingPrefix"
    BadChecksum = "BadChecksum"
    FieldCount = "FieldCount"
    NumericParse = "NumericParse"
    RangeError = "RangeError"


class DecodeError(ValueError):
    def __init__(self, kind: DecodeErrorKind, detail: str, line_no: int | None = None, offset: int | None = None):
        self.kind = kind
        self.detail = detail
        self.line_no = line_no
        self.offset = offset
        super().__init__(kind, detail)

    def __str__(self):
        where = f"line {self.line_no}: " if self.line_no is not None else ""
        return f"{where}{self.kind.value}: {self.detail}"


def checksum(payload: bytes | str) -> str:
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    cs = 0
    for b in payload:
        cs ^= b
    return f"{cs:02X}"


def encode_payload(r: Reading) -> str:
    return f"{TALKER},{r.device_id},{r.ts},{r.lat:.6f},{r.lng:.6f},{r.ppm:.4f}"


def encode_frame(r: Reading) -> str:
    payload = encode_payload(r)
    return f"${payload}*{checksum(payload)}\n"


def _decimal(text: str, digits: int, field: str) -> float:
    if not _DEC_RE.match(text):
        raise DecodeError(DecodeErrorKind.NumericParse, f"{field} is not a decimal number: {text!r}")
    try:
        value = Decimal(text).quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_EVEN)
    except InvalidOperation:
        raise DecodeError(DecodeErrorKind.NumericParse, f"{field} is not a decimal number: {text!r}") from None
    return float(value)


def decode_frame(line: str | bytes, line_no: int | None = None) -> Reading:
    """Parse one frame line into a Reading.

    Raises DecodeError carrying the kind of the first check that failed.
    """
    try:
        return _decode(line)
    except DecodeError as exc:
        exc.line_no = line_no
        raise


def _decode(line: str | bytes) -> Reading:
    if isinstance(line, (bytes, bytearray)):
        raw = bytes(line)
    else:
        try:
            raw = line.encode("utf-8", errors="surrogateescape")
        except UnicodeEncodeError:
            raw = line.encode("utf-8", errors="surrogatepass")
    if raw.endswith(b"\n"):
        raw = raw[:-1]
    if raw.endswith(b"\r"):
        raw = raw[:-1]

    if not raw.startswith(b"$"):
        raise DecodeError(DecodeErrorKind.MissingPrefix, "line does not start with " + PREFIX, offset=0)

    star = raw.rfind(b"*")
    m = _CS_RE.match(raw[star:].decode("latin-1")) if star > 0 else None
    if m is None:
        raise DecodeError(DecodeErrorKind.BadChecksum, "missing or malformed *CS trailer", offset=max(star, 0))
    payload = raw[1:star]
    expected = checksum(payload)
    if m.group(1).upper() != expected:
        raise DecodeError(
            DecodeErrorKind.BadChecksum,
            f"checksum {m.group(1)} != computed {expected}",
            offset=star + 1,
        )

    # Talker is checked after the checksum so corruption inside it reads as BadChecksum.
    if not payload.startswith(PREFIX[1:].encode("ascii")):
        raise DecodeError(DecodeErrorKind.MissingPrefix, "line does not start with " + PREFIX, offset=1)

    # latin-1 maps every byte; non-ASCII then fails the numeric or device-id checks.
    fields = payload.decode("latin-1").split(",")[1:]
    if len(fields) != 5:
        raise DecodeError(DecodeErrorKind.FieldCount, f"expected 5 payload fields, got {len(fields)}")

    device_id, ts_text, lat_text, lng_text, ppm_text = fields
    if not _INT_RE.match(ts_text):
        raise DecodeError(DecodeErrorKind.NumericParse, f"ts is not an unsigned integer: {ts_text!r}")
    ts = int(ts_text)
    lat = _decimal(lat_text, LATLNG_DIGITS, "lat")
    lng = _decimal(lng_text, LATLNG_DIGITS, "lng")
    ppm = _decimal(ppm_text, PPM_DIGITS, "ppm")

    try:
        return Reading(device_id, ts, lat, lng, ppm)
    except InvalidInput as exc:
        raise DecodeError(DecodeErrorKind.RangeError, str(exc)) from None
