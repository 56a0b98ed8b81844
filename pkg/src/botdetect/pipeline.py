"""End-to-end detection: filter, classify, monitor, score, correlate."""

from __future__ import annotations

from ipaddress import IPv4Network

from .activity import window_activity
from .classify import partition_by_label
from .filtering import Whitelist, run_filter
from .model import DetectorConfig, FlowRecord
from .monitors import WindowIndex, group_flows_irc, group_flows_p2p, window_partition
from .report import BotnetReport, build_report, correlate_irc, correlate_p2p
from .similarity import cluster_groups


def run_detection(
    flows: list[FlowRecord],
    whitelist: Whitelist,
    internal: IPv4Network,
    cfg: DetectorConfig,
) -> BotnetReport:
    """Run the whole pipeline over one flow list and build the report.

    Deterministic: the report (and its JSON) is a pure function of the
    inputs, invariant under permutation of the flow rows.
    """
    filtered = run_filter(flows, whitelist)
    irc_flows, http_flows, other_flows = partition_by_label(filtered.clean)

    streams = {
        "clean": filtered.clean,
        "failed": filtered.failed,
        "irc": irc_flows,
        "other": other_flows,
    }
    per_window: dict[int, dict[str, list[FlowRecord]]] = {}
    window_meta: dict[int, WindowIndex] = {}
    for name, stream in streams.items():
        for window, window_flows in window_partition(stream, cfg.window_seconds):
            window_meta[window.index] = window
            per_window.setdefault(window.index, {})[name] = window_flows

    groups = []
    for index in sorted(per_window):
        window = window_meta[index]
        chunks = per_window[index]
        activity = window_activity(
            chunks.get("clean", []), chunks.get("failed", []), internal, cfg
        )
        malicious = {host for host, act in activity.items() if act.malicious}

        p2p_groups, _ = group_flows_p2p(chunks.get("other", []), cfg.duration_floor)
        p2p_clusters = [
            c
            for c in cluster_groups(p2p_groups, cfg.similarity_threshold, cfg.resample_points)
            if len(c.hosts) >= 2
        ]
        groups.extend(correlate_p2p(p2p_clusters, malicious, cfg, window, activity))

        irc_groups, _ = group_flows_irc(chunks.get("irc", []), cfg)
        irc_clusters = [
            c
            for c in cluster_groups(irc_groups, cfg.similarity_threshold, cfg.resample_points)
            if len(c.hosts) >= 2
        ]
        groups.extend(
            correlate_irc(irc_clusters, cfg, window, malicious=malicious, activity=activity)
        )

    counters = {
        "flows_ingested": len(flows),
        "whitelisted": filtered.whitelisted_count,
        "failed_handshake": len(filtered.failed),
        "labels": {
            "irc": len(irc_flows),
            "http": len(http_flows),
            "other": len(other_flows),
        },
    }
    return build_report(groups, counters, cfg)
