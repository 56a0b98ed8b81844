"""Batch botnet detection over network flow records.

The pipeline filters whitelisted and half-open traffic, labels flows by
application from payload prefixes, clusters hosts whose per-destination
flow shapes match, scores hosts for scanning and spam fan-out, and reports
groups of hosts that are both behaviorally similar and malicious.
"""

from .classify import AppLabel, classify_flow, partition_by_label
from .filtering import FilterOutput, Whitelist, apply_whitelist, parse_whitelist, run_filter, split_handshake
from .flowfile import parse_flow_file, write_flow_file
from .model import (
    DetectorConfig,
    FlowRecord,
    HostId,
    OsdMode,
    Proto,
    TcpState,
    default_config,
    parse_config,
    validate_flow,
)
from .pipeline import run_detection
from .report import BotnetGroup, BotnetReport, report_to_json
from .similarity import FlowFeatures, build_curve, cluster_groups, curve_similarity, flow_features
from .synth import GroundTruth, PlantedGroup, PlantedKind, ScenarioSpec, generate

__all__ = [
    "AppLabel",
    "BotnetGroup",
    "BotnetReport",
    "DetectorConfig",
    "FilterOutput",
    "FlowFeatures",
    "FlowRecord",
    "GroundTruth",
    "HostId",
    "OsdMode",
    "PlantedGroup",
    "PlantedKind",
    "Proto",
    "ScenarioSpec",
    "TcpState",
    "Whitelist",
    "apply_whitelist",
    "build_curve",
    "classify_flow",
    "cluster_groups",
    "curve_similarity",
    "default_config",
    "flow_features",
    "generate",
    "parse_config",
    "parse_flow_file",
    "parse_whitelist",
    "partition_by_label",
    "report_to_json",
    "run_detection",
    "run_filter",
    "split_handshake",
    "validate_flow",
    "write_flow_file",
]
