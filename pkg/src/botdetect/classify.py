"""Application classifier: label flows IRC, HTTP, or OTHER from payload bytes.

The label is decided purely from (proto, payload_prefix).  Port numbers are
deliberately ignored: C&C servers routinely listen on uncommon ports, so the
destination port carries no signal here.  Traffic with no recognizable
prefix (including encrypted traffic) falls through to OTHER and is handled
by the peer-to-peer path.
"""

from __future__ import annotations

import enum

from .model import FlowRecord, Proto

# Client-side IRC commands; each must start a line and be followed by a space.
IRC_TOKENS = (b"NICK ", b"PASS ", b"USER ", b"JOIN ", b"OPER ", b"PRIVMSG ")

# HTTP request methods; must start the payload itself.
HTTP_METHODS = (b"GET ", b"POST ", b"HEAD ")


class AppLabel(enum.Enum):
    IRC = "irc"
    HTTP = "http"
    OTHER = "other"


def _payload_lines(payload: bytes) -> list[bytes]:
    lines = payload.split(b"\n")
    return [line[:-1] if line.endswith(b"\r") else line for line in lines]


def classify_flow(rec: FlowRecord) -> AppLabel:
    """Classify one flow.

    IRC: TCP and any payload line starts with an IRC command token
    (uppercase, case-sensitive).  HTTP: TCP, not IRC, and the payload itself
    starts with a request method.  Everything else: OTHER.  Prefixes shorter
    than a token never match.
    """
    if rec.proto is not Proto.TCP or not rec.payload_prefix:
        return AppLabel.OTHER
    for line in _payload_lines(rec.payload_prefix):
        if line.startswith(IRC_TOKENS):
            return AppLabel.IRC
    if rec.payload_prefix.startswith(HTTP_METHODS):
        return AppLabel.HTTP
    return AppLabel.OTHER


def partition_by_label(
    flows: list[FlowRecord],
) -> tuple[list[FlowRecord], list[FlowRecord], list[FlowRecord]]:
    """Split flows into (irc, http, other) streams, order preserved."""
    irc: list[FlowRecord] = []
    http: list[FlowRecord] = []
    other: list[FlowRecord] = []
    buckets = {AppLabel.IRC: irc, AppLabel.HTTP: http, AppLabel.OTHER: other}
    for rec in flows:
        buckets[classify_flow(rec)].append(rec)
    return irc, http, other
