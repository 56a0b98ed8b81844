"""Correlation of similarity clusters with malicious activity, and the report.

A P2P botnet group is the intersection of a similarity cluster's hosts with
the window's malicious host set, kept only when at least ``min_group_size``
hosts survive.  IRC clusters are emitted directly at the same size gate:
their grouping key (source port + arrival-time bin) is already strong
evidence of one-to-many C&C pushes.  Setting ``irc_require_malicious``
applies the malicious-intersection rule to the IRC path as well.

The report is a pure function of its inputs and serializes to stable JSON:
top-level keys ``config``, ``counters``, ``groups``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from .activity import HostActivity
from .model import DetectorConfig, HostId
from .monitors import WindowIndex
from .similarity import SimilarityCluster


class BotPath(enum.Enum):
    P2P = "p2p"
    IRC = "irc"


@dataclass(frozen=True)
class BotnetGroup:
    window: WindowIndex
    path: BotPath
    hosts: tuple[HostId, ...]
    cluster_keys: tuple[str, ...]
    activity_flags: Mapping[str, dict[str, bool]]


@dataclass(frozen=True)
class BotnetReport:
    groups: tuple[BotnetGroup, ...]
    counters: dict
    config: DetectorConfig


def _flags_for(
    hosts: Iterable[HostId], activity: Mapping[HostId, HostActivity]
) -> dict[str, dict[str, bool]]:
    flags = {}
    for host in hosts:
        act = activity.get(host)
        flags[str(host)] = {
            "isd": bool(act and act.isd_flagged),
            "osd": bool(act and act.scores.flagged),
            "spam": bool(act and act.spam.flagged),
        }
    return flags


def correlate_p2p(
    clusters: list[SimilarityCluster],
    malicious: Iterable[HostId],
    cfg: DetectorConfig,
    window: WindowIndex,
    activity: Mapping[HostId, HostActivity] | None = None,
) -> list[BotnetGroup]:
    """Intersect each cluster with the malicious set; keep groups of min size."""
    malicious_set = set(malicious)
    groups = []
    for cluster in clusters:
        common = tuple(sorted(h for h in cluster.hosts if h in malicious_set))
        if len(common) >= cfg.min_group_size:
            groups.append(
                BotnetGroup(
                    window=window,
                    path=BotPath.P2P,
                    hosts=common,
                    cluster_keys=tuple(k.label() for k in cluster.group_keys),
                    activity_flags=_flags_for(common, activity or {}),
                )
            )
    return groups


def correlate_irc(
    clusters: list[SimilarityCluster],
    cfg: DetectorConfig,
    window: WindowIndex,
    malicious: Iterable[HostId] = (),
    activity: Mapping[HostId, HostActivity] | None = None,
) -> list[BotnetGroup]:
    """Emit IRC clusters of min size, optionally gated on malicious activity."""
    groups = []
    for cluster in clusters:
        hosts = cluster.hosts
        if cfg.irc_require_malicious:
            malicious_set = set(malicious)
            hosts = tuple(sorted(h for h in hosts if h in malicious_set))
        if len(hosts) >= cfg.min_group_size:
            groups.append(
                BotnetGroup(
                    window=window,
                    path=BotPath.IRC,
                    hosts=hosts,
                    cluster_keys=tuple(k.label() for k in cluster.group_keys),
                    activity_flags=_flags_for(hosts, activity or {}),
                )
            )
    return groups


def build_report(
    groups: Iterable[BotnetGroup], counters: dict, cfg: DetectorConfig
) -> BotnetReport:
    """Assemble the final report with canonical group ordering."""
    ordered = tuple(
        sorted(groups, key=lambda g: (g.window.index, g.path.value, g.hosts[0]))
    )
    return BotnetReport(groups=ordered, counters=counters, config=cfg)


def config_echo(cfg: DetectorConfig) -> dict:
    return {
        "window_seconds": cfg.window_seconds,
        "similarity_threshold": cfg.similarity_threshold,
        "resample_points": cfg.resample_points,
        "min_group_size": cfg.min_group_size,
        "pat_bin_seconds": cfg.pat_bin_seconds,
        "w1": cfg.w1,
        "w2": cfg.w2,
        "isd_threshold": cfg.isd_threshold,
        "osd_mode": cfg.osd_mode.value,
        "osd_s1_threshold": cfg.osd_s1_threshold,
        "osd_s2_threshold": cfg.osd_s2_threshold,
        "osd_s3_threshold": cfg.osd_s3_threshold,
        "osd_min_scans": cfg.osd_min_scans,
        "spam_distinct_servers": cfg.spam_distinct_servers,
        "spam_total_flows": cfg.spam_total_flows,
        "hs_ports": sorted(f"{proto.value}:{port}" for proto, port in cfg.hs_ports),
        "duration_floor": cfg.duration_floor,
        "irc_require_malicious": cfg.irc_require_malicious,
    }


def report_to_dict(report: BotnetReport) -> dict:
    return {
        "config": config_echo(report.config),
        "counters": report.counters,
        "groups": [
            {
                "window": {
                    "index": g.window.index,
                    "start": g.window.start,
                    "end": g.window.end,
                },
                "path": g.path.value,
                "hosts": [str(h) for h in g.hosts],
                "evidence": {
                    "cluster_keys": list(g.cluster_keys),
                    "activity": dict(g.activity_flags),
                },
            }
            for g in report.groups
        ],
    }


def report_to_json(report: BotnetReport) -> str:
    """Deterministic JSON rendering: same report, same bytes."""
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"
