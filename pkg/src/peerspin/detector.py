"""Replacement-conflict loop detection.

A node replacement that breaks the dependency satisfaction of a peer
set's source or of a peer edge inside the set marks the incoming node as
risky. Risky placements are counted per (name, version, tree position);
a repeat at the same key is the loop verdict. A log-suffix oracle over
capped, detector-disabled runs provides independent ground truth for
differential tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .depmodel import (
    DependencyEdge,
    EdgeKind,
    EdgeStatus,
    NodeTree,
    PackageNode,
    TreePosition,
    tree_position,
)
from .semver import Version

PositionKey = Tuple[str, Version, TreePosition]


@dataclass
class ReplacementEvent:
    seq: int
    name: str
    old_version: Version
    new_version: Version
    position: TreePosition
    risky: bool
    iteration: int

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "name": self.name,
            "oldVersion": str(self.old_version),
            "newVersion": str(self.new_version),
            "position": list(self.position),
            "risky": self.risky,
        }


@dataclass
class RiskLedger:
    """Position-count state for one resolution task."""

    pos_count: Dict[PositionKey, int] = field(default_factory=dict)
    trace: List[ReplacementEvent] = field(default_factory=list)
    _seq: int = 0

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq


@dataclass
class PeerSpinReport:
    package: str
    versions: Tuple[Version, Version]
    position: TreePosition
    peer_source: Optional[Tuple[str, Version]]
    peer_entry: Optional[Tuple[str, Version]]
    pattern_hint: str                      # "A", "B" or "unknown"
    iterations: int
    trace: List[ReplacementEvent]

    def to_json(self) -> dict:
        def pair(p):
            return None if p is None else {"name": p[0], "version": str(p[1])}
        return {
            "package": self.package,
            "versions": [str(v) for v in self.versions],
            "position": list(self.position),
            "peerSource": pair(self.peer_source),
            "peerEntry": pair(self.peer_entry),
            "patternHint": self.pattern_hint,
            "iterations": self.iterations,
            "trace": [e.to_json() for e in self.trace],
        }


@dataclass
class _RiskFinding:
    source: Optional[Tuple[str, Version]]
    entry: Tuple[str, Version]
    pattern_hint: str


def _entry_candidates(tree: NodeTree):
    """Nodes currently targeted by a regular dependency edge, together
    with their live source nodes."""
    sources: Dict[int, List[PackageNode]] = {}
    entries: Dict[int, PackageNode] = {}
    for edge in tree.edges():
        if edge.kind is not EdgeKind.REGULAR or edge.resolved is None:
            continue
        entries[edge.resolved.id] = edge.resolved
        sources.setdefault(edge.resolved.id, []).append(edge.from_node)
    return entries, sources


def _peer_closure(entry: PackageNode) -> List[PackageNode]:
    """Entry plus the nodes reachable from it via peer-kind edges."""
    seen: Set[int] = {entry.id}
    order = [entry]
    queue = [entry]
    while queue:
        node = queue.pop(0)
        for edge in node.edges_out:
            if edge.kind is not EdgeKind.PEER or edge.resolved is None:
                continue
            target = edge.resolved
            if target.id not in seen:
                seen.add(target.id)
                order.append(target)
                queue.append(target)
    return order


def _closure_names(entry: PackageNode) -> Set[str]:
    names = {n.name for n in _peer_closure(entry)}
    for node in _peer_closure(entry):
        for edge in node.edges_out:
            if edge.kind is EdgeKind.PEER:
                names.add(edge.to_name)
    return names


def _assess(old: PackageNode, new: PackageNode,
            tree: NodeTree) -> Optional[_RiskFinding]:
    """Risk analysis after a swap has been applied and edges revalidated.

    For every peer set whose closure involves the swapped name: risky if
    a source's regular edge into the entry broke, or if any peer edge
    inside the set targeting the swapped name is unsatisfied."""
    name = new.name
    entries, sources = _entry_candidates(tree)
    for entry_id in sorted(entries):
        entry = entries[entry_id]
        if name not in _closure_names(entry):
            continue
        entry_pair = (entry.name, entry.version)
        source_nodes = sources.get(entry_id, [])
        source_pair = None
        for source in source_nodes:
            for edge in source.edges_out:
                if (edge.kind is EdgeKind.REGULAR and edge.to_name == entry.name
                        and edge.status is not EdgeStatus.VALID):
                    return _RiskFinding((source.name, source.version),
                                        entry_pair, "A")
            if source_pair is None:
                source_pair = (source.name, source.version)
        for member in _peer_closure(entry):
            for edge in member.edges_out:
                if (edge.kind is EdgeKind.PEER and edge.to_name == name
                        and not edge.optional
                        and edge.status is not EdgeStatus.VALID):
                    return _RiskFinding(source_pair, entry_pair, "B")
    return None


def check_risky(old: PackageNode, new: PackageNode, tree: NodeTree) -> bool:
    """True when the swap broke a peer set's source or peer satisfaction."""
    return _assess(old, new, tree) is not None


def record_position(ledger: RiskLedger, node: Tuple[str, Version],
                    pos: TreePosition) -> int:
    key: PositionKey = (node[0], node[1], pos)
    ledger.pos_count[key] = ledger.pos_count.get(key, 0) + 1
    return ledger.pos_count[key]


def on_replace(old: PackageNode, new: PackageNode, tree: NodeTree,
               ledger: RiskLedger, iteration: int = 0) -> Optional[PeerSpinReport]:
    """Detector hook invoked at the moment of a REPLACE, after the swap
    is reflected in edge statuses but before pruning."""
    finding = _assess(old, new, tree)
    position = tree_position(new)
    event = ReplacementEvent(
        seq=ledger.next_seq(), name=new.name,
        old_version=old.version, new_version=new.version,
        position=position, risky=finding is not None, iteration=iteration)
    ledger.trace.append(event)
    if finding is None:
        return None
    count = record_position(ledger, (new.name, new.version), position)
    if count <= 1:
        return None
    return PeerSpinReport(
        package=new.name,
        versions=(old.version, new.version),
        position=position,
        peer_source=finding.source,
        peer_entry=finding.entry,
        pattern_hint=finding.pattern_hint,
        iterations=iteration,
        trace=list(ledger.trace),
    )


def loop_log_oracle(log: Sequence, max_window: int) -> bool:
    """Ground-truth loop check over a placement log: true iff the log
    ends with two consecutive repetitions of some window of entries."""
    keys = [(e.action, e.name, str(e.version), tuple(e.position)) for e in log]
    n = len(keys)
    for window in range(1, max_window + 1):
        if n >= 2 * window and keys[-window:] == keys[-2 * window:-window]:
            return True
    return False
