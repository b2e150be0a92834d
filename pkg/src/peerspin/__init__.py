"""Dependency-resolution simulator with peer-dependency loop detection."""

from .errors import (
    EmptySnapshot,
    MalformedRange,
    MalformedVersion,
    NoSatisfyingVersion,
    PackageNotFound,
    PeerspinError,
    SinkUnwritable,
    SourceUnreadable,
)
from .semver import (
    Version,
    VersionRange,
    max_satisfying,
    parse_range,
    parse_version,
    satisfies,
)
from .registry import (
    Manifest,
    Packument,
    RemoteRegistry,
    SnapshotStore,
    import_snapshot,
    packument_from_json,
    select_version,
)
from .depmodel import (
    DependencyEdge,
    EdgeKind,
    EdgeStatus,
    NodeTree,
    PackageNode,
    PeerSet,
    compute_peer_set,
    resolve_name,
    revalidate_edges,
    tree_position,
)
from .detector import PeerSpinReport, RiskLedger, loop_log_oracle, on_replace
from .resolver import (
    ResolutionConfig,
    ResolutionOutcome,
    ResolutionStatus,
    rescan_valid,
    resolve,
)
from .scanner import (
    ScanResult,
    ScanTask,
    gen_pattern_fixture,
    peer_usage_stats,
    scan_batch,
    top_peer_dependents,
    yearly_affected_counts,
)

__version__ = "0.1.0"

__all__ = [
    "PeerspinError", "MalformedVersion", "MalformedRange", "SourceUnreadable",
    "EmptySnapshot", "PackageNotFound", "NoSatisfyingVersion", "SinkUnwritable",
    "Version", "VersionRange", "parse_version", "parse_range", "satisfies",
    "max_satisfying",
    "Manifest", "Packument", "SnapshotStore", "RemoteRegistry",
    "import_snapshot", "packument_from_json", "select_version",
    "NodeTree", "PackageNode", "DependencyEdge", "EdgeKind", "EdgeStatus",
    "PeerSet", "compute_peer_set", "resolve_name", "revalidate_edges",
    "tree_position",
    "PeerSpinReport", "RiskLedger", "on_replace", "loop_log_oracle",
    "ResolutionConfig", "ResolutionOutcome", "ResolutionStatus", "resolve",
    "rescan_valid",
    "ScanTask", "ScanResult", "scan_batch", "peer_usage_stats",
    "yearly_affected_counts", "top_peer_dependents", "gen_pattern_fixture",
    "__version__",
]
