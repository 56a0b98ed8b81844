"""Reading and writing the canonical CSV flow-record format.

This is the only I/O boundary for traffic data.  The wire format is
bit-exact: fixed column order, lowercase enum values, lowercase hex for the
payload prefix, and decimal seconds with up to six fractional digits.
"""

from __future__ import annotations

import math

from .model import FlowRecord, Proto, TcpState, validate_flow

HEADER = "start_ts,duration,proto,sip,sport,dip,dport,npkts,nbytes,tcp_state,payload_prefix_hex"
_COLUMNS = HEADER.count(",") + 1

_PROTO_BY_NAME = {p.value: p for p in Proto}
_STATE_BY_NAME = {s.value: s for s in TcpState}


class FlowFileError(ValueError):
    """Base error for unreadable flow files."""


class BadHeader(FlowFileError):
    pass


class MalformedRow(FlowFileError):
    def __init__(self, lineno: int, reason: str):
        super().__init__(f"line {lineno}: {reason}")
        self.lineno = lineno
        self.reason = reason


def format_seconds(value: float) -> str:
    """Render seconds with six fractional digits, trimmed.

    Falls back to ``repr`` for values that six digits cannot represent
    exactly, so parse(write(x)) always reproduces x.
    """
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    if not text:
        text = "0"
    if float(text) == value:
        return text
    return repr(value)


def _parse_seconds(name: str, text: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(lineno, f"bad {name}: {text!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(lineno, f"{name} must be finite, got {text!r}")
    return value


def _parse_int(name: str, text: str, lineno: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise MalformedRow(lineno, f"bad {name}: {text!r}") from None


def _parse_row(parts: list[str], lineno: int) -> FlowRecord:
    proto = _PROTO_BY_NAME.get(parts[2])
    if proto is None:
        raise MalformedRow(lineno, f"unknown proto: {parts[2]!r}")
    state = _STATE_BY_NAME.get(parts[9])
    if state is None:
        raise MalformedRow(lineno, f"unknown tcp_state: {parts[9]!r}")
    try:
        payload = bytes.fromhex(parts[10])
    except ValueError:
        raise MalformedRow(lineno, f"bad payload_prefix_hex: {parts[10]!r}") from None
    rec = FlowRecord(
        start_ts=_parse_seconds("start_ts", parts[0], lineno),
        duration=_parse_seconds("duration", parts[1], lineno),
        proto=proto,
        sip=parts[3],
        sport=_parse_int("sport", parts[4], lineno),
        dip=parts[5],
        dport=_parse_int("dport", parts[6], lineno),
        npkts=_parse_int("npkts", parts[7], lineno),
        nbytes=_parse_int("nbytes", parts[8], lineno),
        tcp_state=state,
        payload_prefix=payload,
    )
    problems = validate_flow(rec)
    if problems:
        raise MalformedRow(lineno, "; ".join(problems))
    return rec


def parse_flow_file(data: bytes) -> list[FlowRecord]:
    """Parse a flow CSV into records, preserving row order.

    Raises :class:`BadHeader` on a schema mismatch and :class:`MalformedRow`
    (with its line number) on the first bad row.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FlowFileError(f"flow file is not valid UTF-8: {exc}") from None
    records: list[FlowRecord] = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != HEADER:
                raise BadHeader(f"line {lineno}: expected header {HEADER!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != _COLUMNS:
            raise MalformedRow(lineno, f"expected {_COLUMNS} columns, got {len(parts)}")
        records.append(_parse_row(parts, lineno))
    if not header_seen:
        raise BadHeader("missing header line")
    return records


def write_flow_file(flows: list[FlowRecord]) -> bytes:
    """Serialize flows; inverse of :func:`parse_flow_file` field-for-field."""
    lines = [HEADER]
    for rec in flows:
        lines.append(
            ",".join(
                (
                    format_seconds(rec.start_ts),
                    format_seconds(rec.duration),
                    rec.proto.value,
                    rec.sip,
                    str(rec.sport),
                    rec.dip,
                    str(rec.dport),
                    str(rec.npkts),
                    str(rec.nbytes),
                    rec.tcp_state.value,
                    rec.payload_prefix.hex(),
                )
            )
        )
    return ("\n".join(lines) + "\n").encode("utf-8")
