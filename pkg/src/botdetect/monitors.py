"""Per-window traffic monitors for the P2P and IRC paths.

Both paths share the same machinery: carve the stream into fixed windows,
group flows by a key, turn each group's feature points into a curve, and
cluster similar curves.  The paths differ only in the grouping key — the
IRC key additionally includes the source port and the quantized flow start
time (its "packet arrival time" bin), because pushed C&C traffic from one
server reaches all its clients over persistent connections at nearly the
same moment.

Flows whose protocol is neither TCP nor UDP carry no grouping semantics
here and are skipped (counted).  So are flows with zero packets, whose
features are undefined.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .model import DetectorConfig, FlowRecord, HostId, Proto
from .similarity import FlowFeatures, FlowGroup, SimilarityCluster, cluster_groups, flow_features

_GROUPABLE = (Proto.TCP, Proto.UDP)


@dataclass(frozen=True)
class WindowIndex:
    """Half-open analysis interval [start, end), aligned to absolute time."""

    index: int
    start: float
    end: float


def window_partition(
    flows: list[FlowRecord], window_seconds: float
) -> list[tuple[WindowIndex, list[FlowRecord]]]:
    """Assign each flow to window floor(start_ts / window_seconds).

    Windows come out in ascending index order; empty windows are omitted.
    """
    buckets: dict[int, list[FlowRecord]] = {}
    for rec in flows:
        buckets.setdefault(int(rec.start_ts // window_seconds), []).append(rec)
    return [
        (WindowIndex(index=i, start=i * window_seconds, end=(i + 1) * window_seconds), buckets[i])
        for i in sorted(buckets)
    ]


@dataclass(frozen=True)
class P2PGroupKey:
    sip: HostId
    dip: HostId
    dport: int
    proto: Proto

    def sort_key(self) -> tuple:
        return (self.sip, self.dip, self.dport, self.proto.value)

    def label(self) -> str:
        return f"{self.proto.value}:{self.sip}->{self.dip}:{self.dport}"


@dataclass(frozen=True)
class IRCGroupKey:
    sip: HostId
    dip: HostId
    sport: int
    dport: int
    pat_bin: int
    proto: Proto

    def sort_key(self) -> tuple:
        return (self.sip, self.dip, self.sport, self.dport, self.pat_bin, self.proto.value)

    def label(self) -> str:
        return f"{self.proto.value}:{self.sip}:{self.sport}->{self.dip}:{self.dport}@b{self.pat_bin}"


class GroupingResult(NamedTuple):
    groups: list[FlowGroup]
    skipped: int


def _collect_groups(flows, key_fn, duration_floor: float) -> GroupingResult:
    points: dict[object, list[FlowFeatures]] = {}
    skipped = 0
    for rec in flows:
        if rec.proto not in _GROUPABLE or rec.npkts < 1:
            skipped += 1
            continue
        points.setdefault(key_fn(rec), []).append(flow_features(rec, duration_floor))
    groups = [
        FlowGroup(key=key, points=tuple(pts), members=frozenset({key.sip}))
        for key, pts in points.items()
    ]
    groups.sort(key=lambda g: g.key.sort_key())
    return GroupingResult(groups=groups, skipped=skipped)


def group_flows_p2p(flows: list[FlowRecord], duration_floor: float) -> GroupingResult:
    """Group one window's flows by (sip, dip, dport, proto)."""

    def key_fn(rec: FlowRecord) -> P2PGroupKey:
        return P2PGroupKey(
            sip=HostId.parse(rec.sip), dip=HostId.parse(rec.dip), dport=rec.dport, proto=rec.proto
        )

    return _collect_groups(flows, key_fn, duration_floor)


def group_flows_irc(flows: list[FlowRecord], cfg: DetectorConfig) -> GroupingResult:
    """Group one window's flows by (sip, dip, sport, dport, PAT bin, proto).

    The PAT bin is floor(start_ts / pat_bin_seconds): exact-time equality
    would never aggregate flow records, while binning captures one-to-many
    push synchrony.
    """

    def key_fn(rec: FlowRecord) -> IRCGroupKey:
        return IRCGroupKey(
            sip=HostId.parse(rec.sip),
            dip=HostId.parse(rec.dip),
            sport=rec.sport,
            dport=rec.dport,
            pat_bin=int(rec.start_ts // cfg.pat_bin_seconds),
            proto=rec.proto,
        )

    return _collect_groups(flows, key_fn, cfg.duration_floor)


def _multi_host(clusters: list[SimilarityCluster]) -> list[SimilarityCluster]:
    # a cluster confined to one source host carries no cross-host evidence
    return [c for c in clusters if len(c.hosts) >= 2]


def detect_p2p_candidates(
    flows: list[FlowRecord], cfg: DetectorConfig
) -> list[tuple[WindowIndex, list[SimilarityCluster]]]:
    """Window the OTHER-labeled stream and emit multi-host similarity clusters."""
    out = []
    for window, window_flows in window_partition(flows, cfg.window_seconds):
        groups, _ = group_flows_p2p(window_flows, cfg.duration_floor)
        clusters = cluster_groups(groups, cfg.similarity_threshold, cfg.resample_points)
        out.append((window, _multi_host(clusters)))
    return out


def detect_irc_groups(
    flows: list[FlowRecord], cfg: DetectorConfig
) -> list[tuple[WindowIndex, list[SimilarityCluster]]]:
    """Window the IRC-labeled stream and emit multi-host similarity clusters."""
    out = []
    for window, window_flows in window_partition(flows, cfg.window_seconds):
        groups, _ = group_flows_irc(window_flows, cfg)
        clusters = cluster_groups(groups, cfg.similarity_threshold, cfg.resample_points)
        out.append((window, _multi_host(clusters)))
    return out
