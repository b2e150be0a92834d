"""Breadth-first dependency resolution with loop detection hooks.

The engine maintains the directory tree and a FIFO of nodes whose edges
need work. Each round loads the target of an unsatisfied edge together
with its peer closure, hoists every loaded node as shallowly as possible
(ADD / KEEP / REPLACE / CONFLICT), prunes whatever the change broke, and
re-queues the affected sources. Replacements feed the detector.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from .depmodel import (
    DependencyEdge,
    EdgeKind,
    EdgeStatus,
    NodeTree,
    PackageNode,
    PeerSet,
    TreePosition,
    compute_peer_set,
    edge_target_status,
    resolve_name,
    revalidate_edges,
    tree_position,
)
from .detector import PeerSpinReport, RiskLedger, on_replace
from .errors import (
    MalformedRange,
    NoSatisfyingVersion,
    PackageNotFound,
    PeerspinError,
)
from .registry import Manifest, select_version
from .semver import Version, VersionRange, parse_range, parse_version, satisfies


class PlacementType(str, Enum):
    ADD = "ADD"
    KEEP = "KEEP"
    REPLACE = "REPLACE"
    CONFLICT = "CONFLICT"


@dataclass(frozen=True)
class PlacementLogEntry:
    seq: int
    action: str
    name: str
    version: Version
    position: TreePosition

    def to_json(self) -> dict:
        return {"seq": self.seq, "action": self.action, "name": self.name,
                "version": str(self.version), "position": list(self.position)}


@dataclass
class ResolutionConfig:
    max_iterations: int = 10000      # queue pops, safety net only
    detector_enabled: bool = True
    emit_placement_log: bool = False

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


class ResolutionStatus(str, Enum):
    SUCCESS = "success"
    PEERSPIN = "peerspin"
    UNRESOLVABLE = "unresolvable"
    ITERATION_LIMIT = "iteration-limit"


@dataclass
class ResolutionOutcome:
    status: ResolutionStatus
    tree: Optional[NodeTree] = None
    report: Optional[PeerSpinReport] = None
    diagnostic: str = ""
    placement_log: List[PlacementLogEntry] = field(default_factory=list)
    iterations: int = 0


class WorkQueue:
    """FIFO of pending nodes; a node is never pending twice."""

    def __init__(self):
        self._queue: deque = deque()
        self._pending: Set[int] = set()

    def __len__(self) -> int:
        return len(self._queue)

    def push(self, node: PackageNode) -> None:
        if node.id not in self._pending:
            self._pending.add(node.id)
            self._queue.append(node)

    def pop(self, tree: NodeTree) -> Optional[PackageNode]:
        while self._queue:
            node = self._queue.popleft()
            self._pending.discard(node.id)
            if tree.is_alive(node):
                return node
        return None


class _Unplaceable(PeerspinError):
    """No non-conflicting position exists for a node."""


@dataclass
class _LoadedNode:
    manifest: Manifest
    req: Optional[VersionRange]
    peer_driven: bool
    start: PackageNode


class _Resolution:
    def __init__(self, tree: NodeTree, store, config: ResolutionConfig):
        self.tree = tree
        self.store = store
        self.config = config
        self.queue = WorkQueue()
        self.ledger = RiskLedger()
        self.log: List[PlacementLogEntry] = []
        self.pops = 0
        self._seq = 0
        # per-pop accumulators
        self.placed_this_pop: List[PackageNode] = []
        self.invalidated_sources: Dict[int, PackageNode] = {}

    # -- logging --------------------------------------------------------

    def _log(self, action: PlacementType, name: str, version: Version,
             position: TreePosition) -> None:
        self._seq += 1
        self.log.append(PlacementLogEntry(self._seq, action.value, name,
                                          version, position))

    # -- node loading ---------------------------------------------------

    def _context_for(self, node: PackageNode):
        def lookup(name: str):
            found = resolve_name(self.tree, node, name)
            if found is None:
                return None
            return found.version, found.manifest
        return lookup

    def load_nodes(self, current: PackageNode) -> List[Tuple[DependencyEdge, PeerSet]]:
        """For each unsatisfied edge of ``current``, select the target
        version and compute its peer closure. Conflicting peer
        requirements stay as invalid edges rather than aborting."""
        loads = []
        for edge in list(current.edges_out):
            if edge.status is EdgeStatus.VALID or edge.optional:
                continue
            if edge.req is None:
                raise NoSatisfyingVersion(
                    f"{edge.to_name}: unsupported requirement "
                    f"{edge.req_text!r} (declared by {current.name})")
            _version, manifest = select_version(self.store, edge.to_name,
                                                edge.req)
            peer_set = compute_peer_set(manifest, self.store,
                                        self._context_for(current))
            loads.append((edge, peer_set))
        return loads

    # -- node placing ---------------------------------------------------

    def can_place(self, name: str, version: Version,
                  req: Optional[VersionRange], peer_driven: bool,
                  pos: PackageNode) -> PlacementType:
        child = pos.children.get(name)
        if child is not None:
            if child.version == version:
                return PlacementType.KEEP
            if req is not None and satisfies(child.version, req):
                return PlacementType.KEEP
            # Peer-driven placement cannot nest deeper, so it swaps the
            # incumbent; a regular dependency nests below instead.
            return (PlacementType.REPLACE if peer_driven
                    else PlacementType.CONFLICT)
        # Shadowing check: adding here must not flip a currently valid
        # edge anywhere in this directory's subtree.
        for node in pos.walk():
            for edge in node.edges_out:
                if edge.to_name != name or edge.status is not EdgeStatus.VALID:
                    continue
                if self._would_shadow(edge.from_node, pos, name):
                    if edge.req is None or not satisfies(version, edge.req):
                        return PlacementType.CONFLICT
        return PlacementType.ADD

    @staticmethod
    def _would_shadow(from_node: PackageNode, pos: PackageNode,
                      name: str) -> bool:
        """Would a new child ``name`` at ``pos`` capture resolution of
        ``name`` from ``from_node``?"""
        directory: Optional[PackageNode] = from_node
        while directory is not None and directory is not pos:
            if name in directory.children:
                return False
            directory = directory.parent
        return directory is pos

    def _place_one(self, loaded: _LoadedNode) -> Tuple[PlacementType,
                                                       Optional[PackageNode],
                                                       Optional[PeerSpinReport]]:
        manifest = loaded.manifest
        name, version = manifest.name, manifest.version
        pos: Optional[PackageNode] = loaded.start
        last: Optional[Tuple[PackageNode, PlacementType]] = None
        while pos is not None:
            kind = self.can_place(name, version, loaded.req,
                                  loaded.peer_driven, pos)
            if kind is PlacementType.CONFLICT:
                break
            last = (pos, kind)
            if kind in (PlacementType.KEEP, PlacementType.REPLACE):
                break
            pos = pos.parent
        if last is None:
            raise _Unplaceable(
                f"no conflict-free position for {name}@{version}")
        target_pos, action = last
        if action is PlacementType.KEEP:
            incumbent = target_pos.children[name]
            # refresh requester edges created before the incumbent existed
            revalidate_edges(self.tree, {name})
            self._log(action, incumbent.name, incumbent.version,
                      tree_position(incumbent))
            return action, incumbent, None

        node = self.tree.new_node(manifest)
        own_targets = {e.to_name for e in node.edges_out}
        report: Optional[PeerSpinReport] = None
        if action is PlacementType.ADD:
            self.tree.attach(target_pos, node)
            changed = revalidate_edges(self.tree, {name} | own_targets)
            self._log(action, name, version, tree_position(node))
            self._prune(changed)
        else:  # REPLACE
            old = self.tree.replace_child(target_pos, node)
            touched = {name} | own_targets | {n.name for n in old.walk()}
            changed = revalidate_edges(self.tree, touched)
            self._log(action, name, version, tree_position(node))
            if self.config.detector_enabled:
                report = on_replace(old, node, self.tree, self.ledger,
                                    iteration=self.pops)
            if report is None:
                self._prune(changed)
        if self.tree.is_alive(node):
            self.placed_this_pop.append(node)
        return action, node, report

    def place_set(self, requesting_edge: DependencyEdge,
                  peer_set: PeerSet) -> Optional[PeerSpinReport]:
        """Place a peer set: the entry first, then every member that
        needs a node, each at the shallowest conflict-free position."""
        requester = requesting_edge.from_node
        peer_driven = requesting_edge.kind is EdgeKind.PEER
        start = requester.parent if peer_driven else requester
        if start is None:
            start = requester
        entry_member = peer_set.members[0]
        action, entry_node, report = self._place_one(_LoadedNode(
            manifest=entry_member.manifest, req=requesting_edge.req,
            peer_driven=peer_driven, start=start))
        if report is not None:
            return report
        for member in peer_set.members[1:]:
            if not member.needs_placement or member.manifest is None:
                continue
            if entry_node is None or not self.tree.is_alive(entry_node):
                break
            member_start = entry_node.parent or entry_node
            try:
                member_req = (parse_range(member.req_text)
                              if member.req_text else None)
            except MalformedRange:
                member_req = None
            _action, _node, report = self._place_one(_LoadedNode(
                manifest=member.manifest, req=member_req,
                peer_driven=True, start=member_start))
            if report is not None:
                return report
        return None

    # -- pruning --------------------------------------------------------

    def _prune(self, changed: Set[DependencyEdge]) -> Set[int]:
        """Remove what a placement broke: nodes whose peer contract
        flipped invalid, then orphans with no valid incoming edge that no
        pending requirement wants. Sources of broken edges re-queue."""
        removed_ids: Set[int] = set()
        flipped = {e for e in changed if e.status is not EdgeStatus.VALID}
        broken = {e for e in changed if e.broke}
        while True:
            for edge in flipped:
                if (edge.status is not EdgeStatus.VALID and not edge.optional
                        and self.tree.is_alive(edge.from_node)):
                    self.invalidated_sources[edge.from_node.id] = edge.from_node
            victims: List[PackageNode] = []
            for node in self.tree.nodes():
                if node.is_root:
                    continue
                if any(e.kind is EdgeKind.PEER and not e.optional
                       and e in broken and e.status is not EdgeStatus.VALID
                       for e in node.edges_out):
                    victims.append(node)
            if not victims:
                victims = self._orphans()
            if not victims:
                break
            touched: Set[str] = set()
            for victim in victims:
                if not self.tree.is_alive(victim):
                    continue
                for gone in self.tree.detach(victim):
                    removed_ids.add(gone.id)
                    touched.add(gone.name)
            newly_changed = revalidate_edges(self.tree, touched)
            flipped |= {e for e in newly_changed
                        if e.status is not EdgeStatus.VALID}
            broken |= {e for e in newly_changed if e.broke}
        return removed_ids

    def _orphans(self) -> List[PackageNode]:
        """Nodes with no valid incoming edge that no pending (invalid or
        missing) edge could be satisfied by."""
        supported: Set[int] = set()
        pending: List[DependencyEdge] = []
        for edge in self.tree.edges():
            if edge.status is EdgeStatus.VALID and edge.resolved is not None:
                supported.add(edge.resolved.id)
            elif not edge.optional:
                pending.append(edge)
        orphans = []
        for node in self.tree.nodes():
            if node.is_root or node.id in supported:
                continue
            wanted = any(
                e.to_name == node.name and e.req is not None
                and satisfies(node.version, e.req)
                for e in pending)
            if not wanted:
                orphans.append(node)
        return orphans

    # -- queue update ---------------------------------------------------

    def update_queue(self) -> None:
        """Enqueue this round's placements, then the sources of edges the
        round invalidated, both in position order."""
        placed = [n for n in self.placed_this_pop if self.tree.is_alive(n)]
        placed.sort(key=tree_position)
        for node in placed:
            self.queue.push(node)
        sources = [n for n in self.invalidated_sources.values()
                   if self.tree.is_alive(n)]
        sources.sort(key=tree_position)
        for node in sources:
            self.queue.push(node)
        self.placed_this_pop = []
        self.invalidated_sources = {}


def _root_manifest(root_spec, store) -> Manifest:
    if isinstance(root_spec, Manifest):
        return root_spec
    name, spec = root_spec
    if isinstance(spec, VersionRange):
        req_text = spec.text or str(spec)
    else:
        req_text = str(spec)
        try:
            parse_range(req_text)
        except MalformedRange:
            # dist-tag: pin to the concrete version it names
            version, _manifest = select_version(store, name, req_text)
            req_text = str(version)
    return Manifest(name="<project>", version=parse_version("0.0.0"),
                    dependencies=((name, req_text),))


def resolve(root_spec, store,
            config: Optional[ResolutionConfig] = None) -> ResolutionOutcome:
    """Run dependency resolution for a package spec or inline manifest.

    Returns success with the finished tree, a loop report from the
    detector, an unresolvable diagnostic, or the iteration-limit verdict
    with the tail of the placement log."""
    config = config or ResolutionConfig()
    try:
        root_manifest = _root_manifest(root_spec, store)
    except (PackageNotFound, NoSatisfyingVersion) as exc:
        return ResolutionOutcome(ResolutionStatus.UNRESOLVABLE,
                                 diagnostic=str(exc))
    tree = NodeTree(root_manifest)
    state = _Resolution(tree, store, config)
    state.queue.push(tree.root)

    while True:
        current = state.queue.pop(tree)
        if current is None:
            break
        if state.pops >= config.max_iterations:
            return ResolutionOutcome(
                ResolutionStatus.ITERATION_LIMIT, tree=tree,
                diagnostic=f"stopped after {state.pops} queue pops",
                placement_log=state.log[-200:], iterations=state.pops)
        state.pops += 1
        try:
            loads = state.load_nodes(current)
            for edge, peer_set in loads:
                if not tree.is_alive(current):
                    break
                if edge.status is EdgeStatus.VALID:
                    continue
                report = state.place_set(edge, peer_set)
                if report is not None:
                    return ResolutionOutcome(
                        ResolutionStatus.PEERSPIN, tree=tree, report=report,
                        placement_log=state.log, iterations=state.pops)
        except (PackageNotFound, NoSatisfyingVersion, _Unplaceable) as exc:
            return ResolutionOutcome(
                ResolutionStatus.UNRESOLVABLE, tree=tree,
                diagnostic=str(exc), placement_log=state.log,
                iterations=state.pops)
        state.update_queue()

    bad = [e for e in tree.edges()
           if e.status is not EdgeStatus.VALID and not e.optional]
    if bad:
        return ResolutionOutcome(
            ResolutionStatus.UNRESOLVABLE, tree=tree,
            diagnostic=f"queue drained with unsatisfied edges: {bad[:3]}",
            placement_log=state.log, iterations=state.pops)
    return ResolutionOutcome(ResolutionStatus.SUCCESS, tree=tree,
                             placement_log=state.log, iterations=state.pops)


def rescan_valid(tree: NodeTree) -> bool:
    """Full independent recheck: every non-optional edge must resolve to
    a satisfying node via the directory-walk rules."""
    for edge in tree.edges():
        target = resolve_name(tree, edge.from_node, edge.to_name)
        status = edge_target_status(edge, target)
        if edge.optional:
            continue
        if status is not EdgeStatus.VALID:
            return False
    return True
