"""Readers and writers for AER event files.

Two formats are supported:

* jAER DVS128 recordings (AEDAT 2.0): optional ``#`` header lines, then
  8-byte big-endian records ``(address: u32, timestamp_us: u32)``.
  Address bit 0 is polarity (1 -> ON, 0 -> OFF), bits 1-7 are x,
  bits 8-14 are y; all higher bits must be zero.
* A plain text table with header ``t_us,x,y,p`` and one event per line.

All parsers are total: they return a stream or raise :class:`FormatError`
carrying the offending byte offset, record index or line number.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .events import DEFAULT_GEOMETRY, EventStream

RECORD_SIZE = 8
AEDAT_VERSION_LINE = b"#!AER-DAT2.0\r\n"
TEXT_HEADER = "t_us,x,y,p"

_ADDR_POL = 0x1
_ADDR_X_SHIFT, _ADDR_X_MASK = 1, 0x7F
_ADDR_Y_SHIFT, _ADDR_Y_MASK = 8, 0x7F
_ADDR_KNOWN_BITS = 0x7FFF
_MAX_TIMESTAMP = 2**32 - 1


class FormatError(ValueError):
    """Malformed event file. ``offset``/``record``/``line`` locate the fault."""

    def __init__(self, message, *, offset=None, record=None, line=None):
        super().__init__(message)
        self.offset = offset
        self.record = record
        self.line = line


@dataclass(frozen=True)
class AedatHeader:
    header_lines: tuple[str, ...] = ()

    @property
    def declared_version(self) -> str | None:
        for line in self.header_lines:
            if line.startswith("#!AER-DAT"):
                return line[len("#!AER-DAT"):].strip() or None
        return None


def _split_header(data: bytes) -> tuple[list[str], int]:
    lines = []
    pos = 0
    while pos < len(data) and data[pos] == ord("#"):
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise FormatError(f"unterminated header line at offset {pos}", offset=pos)
        lines.append(data[pos:nl + 1].decode("latin-1").rstrip("\r\n"))
        pos = nl + 1
    return lines, pos


def read_aedat(data: bytes, geometry=DEFAULT_GEOMETRY) -> tuple[AedatHeader, EventStream]:
    """Parse a DVS128 AEDAT 2.0 byte string into ``(header, stream)``.

    Events are returned in file order; a timestamp that goes backwards is
    not an error here (``validate_stream`` reports it).
    """
    data = bytes(data)
    lines, start = _split_header(data)
    body = len(data) - start
    n = body // RECORD_SIZE
    if body % RECORD_SIZE:
        # offset relative to the first record, i.e. after the header
        off = n * RECORD_SIZE
        raise FormatError(f"truncated record at offset {off}", offset=off)

    words = np.frombuffer(data, dtype=">u4", count=2 * n, offset=start).reshape(n, 2)
    addr = words[:, 0].astype(np.int64)
    ts = words[:, 1].astype(np.int64)

    bad = np.flatnonzero(addr & ~_ADDR_KNOWN_BITS)
    if bad.size:
        i = int(bad[0])
        raise FormatError(
            f"address 0x{int(addr[i]):08X} uses undocumented bits in record {i}", record=i
        )
    p = np.where(addr & _ADDR_POL, 1, -1)
    x = (addr >> _ADDR_X_SHIFT) & _ADDR_X_MASK
    y = (addr >> _ADDR_Y_SHIFT) & _ADDR_Y_MASK
    return AedatHeader(tuple(lines)), EventStream(x, y, ts, p, geometry)


def write_aedat(stream: EventStream, header_lines=None) -> bytes:
    """Encode a stream as DVS128 AEDAT 2.0.

    Raises ``ValueError`` for coordinates that do not fit 7 bits or
    timestamps past the 32-bit wrap (about 71.6 minutes).
    """
    if len(stream):
        if stream.x.min() < 0 or stream.x.max() > _ADDR_X_MASK:
            raise ValueError("x does not fit the 7-bit DVS128 address field")
        if stream.y.min() < 0 or stream.y.max() > _ADDR_Y_MASK:
            raise ValueError("y does not fit the 7-bit DVS128 address field")
        if stream.t.min() < 0 or stream.t.max() > _MAX_TIMESTAMP:
            raise ValueError("timestamps exceed the 32-bit range; wraparound is not supported")
    if header_lines is None:
        head = AEDAT_VERSION_LINE
    else:
        head = b"".join(line.encode("latin-1") + b"\r\n" for line in header_lines)
    addr = (stream.y << _ADDR_Y_SHIFT) | (stream.x << _ADDR_X_SHIFT) | (stream.p > 0)
    words = np.empty((len(stream), 2), dtype=">u4")
    words[:, 0] = addr
    words[:, 1] = stream.t
    return head + words.tobytes()


def write_events_text(stream: EventStream) -> bytes:
    rows = np.column_stack([stream.t, stream.x, stream.y, stream.p.astype(np.int64)])
    out = [TEXT_HEADER]
    out.extend(f"{t},{x},{y},{p}" for t, x, y, p in rows.tolist())
    return ("\n".join(out) + "\n").encode("ascii")


_POLARITY_TOKENS = {"1": 1, "+1": 1, "-1": -1}


def _parse_int(tok: str, lineno: int, name: str) -> int:
    tok = tok.strip()
    if not tok or not (tok.isdigit() or (tok[0] in "+-" and tok[1:].isdigit())):
        raise FormatError(f"line {lineno}: bad {name} field {tok!r}", line=lineno)
    return int(tok)


def read_events_text(data: bytes, geometry=DEFAULT_GEOMETRY) -> EventStream:
    try:
        text = bytes(data).decode("ascii")
    except UnicodeDecodeError as exc:
        raise FormatError(f"non-ASCII byte at offset {exc.start}", offset=exc.start) from None
    lines = text.splitlines()
    if not lines or lines[0].strip() != TEXT_HEADER:
        raise FormatError(f"line 1: expected header {TEXT_HEADER!r}", line=1)

    n = len(lines) - 1
    cols = np.empty((4, n), dtype=np.int64)
    k = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise FormatError(f"line {lineno}: expected 4 fields, got {len(parts)}", line=lineno)
        t = _parse_int(parts[0], lineno, "timestamp")
        x = _parse_int(parts[1], lineno, "x")
        y = _parse_int(parts[2], lineno, "y")
        p = _POLARITY_TOKENS.get(parts[3].strip())
        if p is None:
            raise FormatError(f"line {lineno}: bad polarity {parts[3].strip()!r}", line=lineno)
        cols[:, k] = (t, x, y, p)
        k += 1
    cols = cols[:, :k]
    return EventStream(cols[1], cols[2], cols[0], cols[3], geometry)


def sniff_format(data: bytes) -> str:
    """Return ``"text"`` or ``"aedat"`` for an event file's contents."""
    return "text" if bytes(data[: len(TEXT_HEADER)]) == TEXT_HEADER.encode() else "aedat"


def read_events(data: bytes, geometry=DEFAULT_GEOMETRY) -> EventStream:
    if sniff_format(data) == "text":
        return read_events_text(data, geometry)
    return read_aedat(data, geometry)[1]
