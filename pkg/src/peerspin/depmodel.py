"""The dual tree/graph dependency model.

Nodes form the simulated installation directory tree; edges carry the
declared requirements together with a cached validity status. Name
resolution walks the ancestor directories lowest-to-highest, mirroring
the module loading rules the tree exists to serve.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Set, Tuple, Union

from .errors import MalformedRange, NoSatisfyingVersion, PackageNotFound
from .registry import Manifest, select_version
from .semver import Version, VersionRange, parse_range, satisfies

ROOT_NAME = "<root>"

TreePosition = Tuple[str, ...]


class EdgeKind(str, Enum):
    REGULAR = "regular"
    PEER = "peer"


class EdgeStatus(str, Enum):
    VALID = "valid"
    INVALID = "invalid"
    MISSING = "missing"


@dataclass(eq=False)
class DependencyEdge:
    from_node: "PackageNode"
    to_name: str
    req_text: str
    kind: EdgeKind
    optional: bool = False
    req: Optional[VersionRange] = None      # None when req_text is malformed
    status: EdgeStatus = EdgeStatus.MISSING
    previous_status: EdgeStatus = EdgeStatus.MISSING
    resolved: Optional["PackageNode"] = None

    @property
    def broke(self) -> bool:
        """Flipped from valid to non-valid in the last revalidation."""
        return (self.previous_status is EdgeStatus.VALID
                and self.status is not EdgeStatus.VALID)

    def __repr__(self):
        return (f"<edge {self.from_node.name}@{self.from_node.version} "
                f"-{self.kind.value}-> {self.to_name}@{self.req_text} "
                f"[{self.status.value}]>")


@dataclass(eq=False)
class PackageNode:
    id: int
    name: str
    version: Version
    manifest: Manifest
    parent: Optional["PackageNode"] = None
    children: Dict[str, "PackageNode"] = field(default_factory=dict)
    edges_out: List[DependencyEdge] = field(default_factory=list)

    @property
    def is_root(self) -> bool:
        return self.parent is None and self.name == ROOT_NAME

    def walk(self) -> Iterator["PackageNode"]:
        """This node and its whole subtree, children in name order."""
        yield self
        for name in sorted(self.children):
            yield from self.children[name].walk()

    def __repr__(self):
        return f"<node #{self.id} {self.name}@{self.version}>"


def _edges_from_manifest(node: PackageNode) -> List[DependencyEdge]:
    edges = []
    optional = set(node.manifest.optional_peers)
    for to_name, req_text in node.manifest.dependencies:
        edges.append(_make_edge(node, to_name, req_text, EdgeKind.REGULAR))
    for to_name, req_text in node.manifest.peer_dependencies:
        edges.append(_make_edge(node, to_name, req_text, EdgeKind.PEER,
                                optional=to_name in optional))
    return edges


def _make_edge(node: PackageNode, to_name: str, req_text: str,
               kind: EdgeKind, optional: bool = False) -> DependencyEdge:
    try:
        req = parse_range(req_text)
    except MalformedRange:
        req = None
    return DependencyEdge(from_node=node, to_name=to_name, req_text=req_text,
                          kind=kind, optional=optional, req=req)


class NodeTree:
    """The installation directory tree for one resolution task."""

    def __init__(self, root_manifest: Manifest):
        self._ids = itertools.count()
        self._alive: Set[int] = set()
        self.root = self._instantiate(ROOT_NAME, root_manifest)

    def _instantiate(self, name: str, manifest: Manifest) -> PackageNode:
        node = PackageNode(id=next(self._ids), name=name,
                           version=manifest.version, manifest=manifest)
        node.edges_out = _edges_from_manifest(node)
        self._alive.add(node.id)
        return node

    def new_node(self, manifest: Manifest) -> PackageNode:
        return self._instantiate(manifest.name, manifest)

    def is_alive(self, node: PackageNode) -> bool:
        return node.id in self._alive

    def attach(self, parent: PackageNode, node: PackageNode) -> None:
        assert node.name not in parent.children, \
            f"duplicate child {node.name} under {parent!r}"
        parent.children[node.name] = node
        node.parent = parent

    def detach(self, node: PackageNode) -> List[PackageNode]:
        """Remove a node and its subtree; returns the removed nodes."""
        if node.parent is not None:
            node.parent.children.pop(node.name, None)
        node.parent = None
        removed = list(node.walk())
        for n in removed:
            self._alive.discard(n.id)
        return removed

    def replace_child(self, parent: PackageNode, node: PackageNode) -> PackageNode:
        """Swap the same-name child of ``parent`` for ``node``; the old
        node is detached (subtree included) and returned."""
        old = parent.children[node.name]
        parent.children.pop(node.name)
        old.parent = None
        for n in old.walk():
            self._alive.discard(n.id)
        self.attach(parent, node)
        return old

    def nodes(self) -> Iterator[PackageNode]:
        return self.root.walk()

    def edges(self) -> Iterator[DependencyEdge]:
        for node in self.nodes():
            yield from node.edges_out

    def node_count(self) -> int:
        return sum(1 for _ in self.nodes())


def resolve_name(tree: NodeTree, from_node: PackageNode,
                 name: str) -> Optional[PackageNode]:
    """First node called ``name`` visible from ``from_node``: its own
    directory first, then each ancestor directory up to the root."""
    directory: Optional[PackageNode] = from_node
    while directory is not None:
        child = directory.children.get(name)
        if child is not None:
            return child
        directory = directory.parent
    return None


def edge_target_status(edge: DependencyEdge,
                       target: Optional[PackageNode]) -> EdgeStatus:
    if target is None:
        return EdgeStatus.MISSING
    if edge.req is None:
        return EdgeStatus.INVALID
    return (EdgeStatus.VALID if satisfies(target.version, edge.req)
            else EdgeStatus.INVALID)


def revalidate_edges(tree: NodeTree,
                     touched_names: Set[str]) -> Set[DependencyEdge]:
    """Recompute resolution and status of every edge targeting one of
    ``touched_names``; returns the edges whose status changed."""
    changed: Set[DependencyEdge] = set()
    if not touched_names:
        return changed
    for edge in tree.edges():
        if edge.to_name not in touched_names:
            continue
        target = resolve_name(tree, edge.from_node, edge.to_name)
        status = edge_target_status(edge, target)
        if status != edge.status or target is not edge.resolved:
            if status != edge.status:
                changed.add(edge)
                edge.previous_status = edge.status
            edge.status = status
            edge.resolved = target
    return changed


def tree_position(node: PackageNode) -> TreePosition:
    """Root-to-node name path; two equal positions denote the same slot."""
    parts: List[str] = []
    current: Optional[PackageNode] = node
    while current is not None:
        parts.append(current.name)
        current = current.parent
    return tuple(reversed(parts))


# --- PeerSet closure ---------------------------------------------------

ContextLookup = Union[
    Mapping[str, Tuple[Version, Optional[Manifest]]],
    Callable[[str], Optional[Tuple[Version, Optional[Manifest]]]],
]


@dataclass(frozen=True)
class PeerConflict:
    required_by: str
    name: str
    req_text: str
    chosen: Version
    from_context: bool


@dataclass
class PeerMember:
    name: str
    version: Version
    manifest: Optional[Manifest]
    required_by: Optional[str]    # None for the entry itself
    req_text: Optional[str]
    needs_placement: bool         # False when bound to a context version


@dataclass
class PeerSet:
    """A peer-dependency closure rooted at its entry manifest."""

    entry: Manifest
    members: List[PeerMember]
    conflicts: List[PeerConflict] = field(default_factory=list)
    skipped_optional: List[str] = field(default_factory=list)

    def member_names(self) -> Set[str]:
        return {m.name for m in self.members}

    def member_tuples(self) -> Set[Tuple[str, Version]]:
        return {(m.name, m.version) for m in self.members}


def _lookup(context: Optional[ContextLookup], name: str):
    if context is None:
        return None
    if callable(context):
        return context(name)
    return context.get(name)


def compute_peer_set(entry_manifest: Manifest, store,
                     context: Optional[ContextLookup] = None) -> PeerSet:
    """Breadth-first closure over peerDependencies declarations.

    A peer name already visible in the context binds that version; a
    requirement the bound/chosen version fails is recorded as a conflict
    (the edge will be created invalid) rather than aborting. Optional
    peers are skipped entirely."""
    entry = PeerMember(entry_manifest.name, entry_manifest.version,
                       entry_manifest, None, None, needs_placement=True)
    members: Dict[str, PeerMember] = {entry.name: entry}
    order: List[PeerMember] = [entry]
    conflicts: List[PeerConflict] = []
    skipped: List[str] = []
    queue: List[PeerMember] = [entry]
    while queue:
        member = queue.pop(0)
        if member.manifest is None:
            continue
        optional = set(member.manifest.optional_peers)
        for peer_name, req_text in member.manifest.peer_dependencies:
            if peer_name in optional:
                skipped.append(peer_name)
                continue
            try:
                req = parse_range(req_text)
            except MalformedRange:
                req = None
            existing = members.get(peer_name)
            if existing is not None:
                if req is None or not satisfies(existing.version, req):
                    conflicts.append(PeerConflict(
                        member.name, peer_name, req_text, existing.version,
                        from_context=not existing.needs_placement))
                continue
            bound = _lookup(context, peer_name)
            if bound is not None:
                bound_version, bound_manifest = bound
                record = PeerMember(peer_name, bound_version, bound_manifest,
                                    member.name, req_text,
                                    needs_placement=False)
                members[peer_name] = record
                order.append(record)
                if req is None or not satisfies(bound_version, req):
                    conflicts.append(PeerConflict(
                        member.name, peer_name, req_text, bound_version,
                        from_context=True))
                continue
            if req is None:
                raise NoSatisfyingVersion(
                    f"{peer_name}: unsupported requirement {req_text!r} "
                    f"(declared by {member.name})")
            version, manifest = select_version(store, peer_name, req)
            record = PeerMember(peer_name, version, manifest,
                                member.name, req_text, needs_placement=True)
            members[peer_name] = record
            order.append(record)
            queue.append(record)
    return PeerSet(entry=entry_manifest, members=order,
                   conflicts=conflicts, skipped_optional=skipped)
