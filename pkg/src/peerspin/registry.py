"""Package metadata ingestion and version selection.

Packuments are served from a file-based snapshot store (NDJSON stream or
a directory of per-package JSON documents). An optional remote registry
adapter with a write-once on-disk cache exposes the same lookup surface.
"""

from __future__ import annotations

import io
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, IO, Iterable, List, Optional, Tuple, Union
from urllib.parse import quote, unquote

from .errors import (
    EmptySnapshot,
    MalformedRange,
    MalformedVersion,
    NoSatisfyingVersion,
    PackageNotFound,
    SourceUnreadable,
)
from .semver import Version, VersionRange, max_satisfying, parse_range, parse_version

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class Manifest:
    """One package version's metadata, normalized.

    A name listed in both dependencies and peerDependencies is kept as a
    peer dependency only, mirroring npm's manifest normalization."""

    name: str
    version: Version
    dependencies: Tuple[Tuple[str, str], ...] = ()
    peer_dependencies: Tuple[Tuple[str, str], ...] = ()
    optional_peers: Tuple[str, ...] = ()

    @property
    def dependency_map(self) -> Dict[str, str]:
        return dict(self.dependencies)

    @property
    def peer_map(self) -> Dict[str, str]:
        return dict(self.peer_dependencies)

    @property
    def has_peers(self) -> bool:
        return bool(self.peer_dependencies)


@dataclass
class Packument:
    name: str
    versions: Dict[str, Manifest]
    dist_tags: Dict[str, str] = field(default_factory=dict)
    times: Dict[str, Optional[datetime]] = field(default_factory=dict)

    def release_time(self, version_key: str) -> datetime:
        """Release timestamp; missing entries default to the epoch."""
        t = self.times.get(version_key)
        return t if t is not None else EPOCH

    def has_time(self, version_key: str) -> bool:
        return self.times.get(version_key) is not None

    def sorted_versions(self) -> List[Tuple[Version, Manifest]]:
        pairs = [(m.version, m) for m in self.versions.values()]
        pairs.sort(key=lambda p: p[0].precedence_key())
        return pairs


def manifest_from_json(doc: dict, fallback_name: str = "",
                       fallback_version: str = "") -> Manifest:
    name = doc.get("name") or fallback_name
    version_text = doc.get("version") or fallback_version
    if not name:
        raise MalformedVersion("manifest without a name")
    version = parse_version(version_text)

    def dep_pairs(key: str) -> Dict[str, str]:
        raw = doc.get(key) or {}
        if not isinstance(raw, dict):
            raise MalformedVersion(f"{key} is not an object in {name}")
        out = {}
        for dep_name, req in raw.items():
            if not isinstance(dep_name, str) or not isinstance(req, str):
                raise MalformedVersion(f"bad {key} entry in {name}")
            out[dep_name] = req
        return out

    deps = dep_pairs("dependencies")
    peers = dep_pairs("peerDependencies")
    meta = doc.get("peerDependenciesMeta") or {}
    optional = tuple(sorted(
        n for n, m in meta.items()
        if isinstance(m, dict) and m.get("optional") and n in peers
    ))
    # peerDependencies wins over a duplicate regular declaration
    for peer_name in peers:
        deps.pop(peer_name, None)
    return Manifest(
        name=name,
        version=version,
        dependencies=tuple(sorted(deps.items())),
        peer_dependencies=tuple(sorted(peers.items())),
        optional_peers=optional,
    )


def _parse_time(raw) -> Optional[datetime]:
    if not isinstance(raw, str):
        return None
    try:
        return datetime.fromisoformat(raw.replace("Z", "+00:00"))
    except ValueError:
        return None


def packument_from_json(doc: dict) -> Packument:
    if not isinstance(doc, dict):
        raise MalformedVersion("packument is not an object")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise MalformedVersion("packument without a name")
    raw_versions = doc.get("versions")
    if not isinstance(raw_versions, dict) or not raw_versions:
        raise MalformedVersion(f"packument {name} has no versions")
    versions: Dict[str, Manifest] = {}
    for key, vdoc in raw_versions.items():
        if not isinstance(vdoc, dict):
            raise MalformedVersion(f"bad version entry {name}@{key}")
        manifest = manifest_from_json(vdoc, fallback_name=name,
                                      fallback_version=key)
        if manifest.version != parse_version(key):
            raise MalformedVersion(f"version key mismatch {name}@{key}")
        versions[str(manifest.version)] = manifest
    dist_tags = doc.get("dist-tags") or {}
    if not isinstance(dist_tags, dict):
        raise MalformedVersion(f"bad dist-tags in {name}")
    for tag, target in dist_tags.items():
        if target not in raw_versions:
            raise MalformedVersion(f"dist-tag {tag} of {name} targets "
                                   f"unknown version {target}")
    times = {}
    raw_times = doc.get("time") or {}
    if isinstance(raw_times, dict):
        for key in versions:
            times[key] = _parse_time(raw_times.get(key))
    return Packument(name=name, versions=versions,
                     dist_tags=dict(dist_tags), times=times)


@dataclass
class ImportDiagnostics:
    total_records: int = 0
    skipped: int = 0
    messages: List[str] = field(default_factory=list)


class SnapshotStore:
    """Immutable-after-import index of packuments by package name."""

    def __init__(self, packuments: Dict[str, Packument], source: str = "<memory>",
                 diagnostics: Optional[ImportDiagnostics] = None):
        self._packuments = packuments
        self.source = source
        self.diagnostics = diagnostics or ImportDiagnostics(
            total_records=len(packuments))

    @classmethod
    def from_packuments(cls, packuments: Iterable[Packument],
                        source: str = "<memory>") -> "SnapshotStore":
        return cls({p.name: p for p in packuments}, source=source)

    def package_names(self) -> List[str]:
        return sorted(self._packuments)

    def __len__(self) -> int:
        return len(self._packuments)

    def __contains__(self, name: str) -> bool:
        return name in self._packuments

    def get_packument(self, name: str) -> Packument:
        try:
            return self._packuments[name]
        except KeyError:
            raise PackageNotFound(name) from None

    def iter_packuments(self) -> Iterable[Packument]:
        for name in self.package_names():
            yield self._packuments[name]


def encode_package_filename(name: str) -> str:
    return quote(name, safe="@") + ".json"


def decode_package_filename(filename: str) -> str:
    stem = filename[:-len(".json")] if filename.endswith(".json") else filename
    return unquote(stem)


def _iter_ndjson(stream: IO[str]):
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if line:
            yield f"line {lineno}", line


def import_snapshot(source: Union[str, Path, IO[str]],
                    format: str = "ndjson") -> SnapshotStore:
    """Build a store from an NDJSON stream or a snapshot directory.

    Malformed records are skipped and counted; an import that yields zero
    valid packuments raises :class:`EmptySnapshot`."""
    if format not in ("ndjson", "directory"):
        raise ValueError(f"unknown snapshot format: {format!r}")
    diagnostics = ImportDiagnostics()
    packuments: Dict[str, Packument] = {}

    def ingest(label: str, text: str):
        diagnostics.total_records += 1
        try:
            doc = json.loads(text)
            packument = packument_from_json(doc)
        except (json.JSONDecodeError, MalformedVersion, MalformedRange) as exc:
            diagnostics.skipped += 1
            diagnostics.messages.append(f"{label}: {exc}")
            return
        packuments[packument.name] = packument

    source_label = "<stream>"
    if format == "directory":
        root = Path(source)
        source_label = str(root)
        if not root.is_dir():
            raise SourceUnreadable(f"not a directory: {root}")
        for path in sorted(root.glob("*.json")):
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise SourceUnreadable(str(exc)) from exc
            ingest(path.name, text)
    else:
        if isinstance(source, (str, Path)):
            source_label = str(source)
            try:
                stream = open(source, "r", encoding="utf-8")
            except OSError as exc:
                raise SourceUnreadable(str(exc)) from exc
            with stream:
                for label, line in _iter_ndjson(stream):
                    ingest(label, line)
        elif isinstance(source, io.IOBase) or hasattr(source, "read"):
            for label, line in _iter_ndjson(source):
                ingest(label, line)
        else:
            raise SourceUnreadable(f"unreadable source: {source!r}")

    if not packuments:
        raise EmptySnapshot(
            f"no valid packuments in {source_label} "
            f"({diagnostics.skipped} records skipped)")
    return SnapshotStore(packuments, source=source_label, diagnostics=diagnostics)


def get_packument(store, name: str) -> Packument:
    return store.get_packument(name)


def select_version(store, name: str,
                   spec: Union[VersionRange, str]) -> Tuple[Version, Manifest]:
    """Resolve a range (highest satisfying) or a dist-tag to a concrete
    version and its manifest. Deterministic for a fixed store."""
    packument = store.get_packument(name)
    if isinstance(spec, str):
        try:
            spec = parse_range(spec)
        except MalformedRange:
            # not a range: treat as a dist-tag lookup
            target = packument.dist_tags.get(spec)
            if target is None:
                raise NoSatisfyingVersion(f"{name}: no dist-tag {spec!r}")
            manifest = packument.versions[str(parse_version(target))]
            return manifest.version, manifest
    candidates = [m.version for m in packument.versions.values()]
    best = max_satisfying(candidates, spec)
    if best is None:
        raise NoSatisfyingVersion(f"{name}: nothing satisfies {spec}")
    manifest = packument.versions[str(best)]
    return best, manifest


def write_directory_snapshot(packuments: Iterable[Packument],
                             directory: Union[str, Path]) -> Path:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for packument in packuments:
        path = root / encode_package_filename(packument.name)
        path.write_text(json.dumps(packument_to_json(packument)),
                        encoding="utf-8")
    return root


def write_ndjson_snapshot(packuments: Iterable[Packument],
                          path: Union[str, Path]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for packument in packuments:
            fh.write(json.dumps(packument_to_json(packument)) + "\n")
    return out


def packument_to_json(packument: Packument) -> dict:
    versions = {}
    for key, manifest in packument.versions.items():
        vdoc: dict = {"name": manifest.name, "version": key}
        if manifest.dependencies:
            vdoc["dependencies"] = dict(manifest.dependencies)
        if manifest.peer_dependencies:
            vdoc["peerDependencies"] = dict(manifest.peer_dependencies)
        if manifest.optional_peers:
            vdoc["peerDependenciesMeta"] = {
                n: {"optional": True} for n in manifest.optional_peers}
        versions[key] = vdoc
    doc: dict = {"name": packument.name, "versions": versions}
    if packument.dist_tags:
        doc["dist-tags"] = dict(packument.dist_tags)
    times = {k: t.isoformat() for k, t in packument.times.items()
             if t is not None}
    if times:
        doc["time"] = times
    return doc


class RemoteRegistry:
    """HTTP packument client with a write-once on-disk cache.

    Exposes the same ``get_packument`` surface as :class:`SnapshotStore`
    so the resolver and scanner can run against either."""

    def __init__(self, base_url: str, cache_dir: Union[str, Path],
                 session=None):
        self.base_url = base_url.rstrip("/")
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        if session is None:
            import requests
            session = requests.Session()
        self._session = session
        self._locks: Dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock_for(self, name: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(name, threading.Lock())

    def get_packument(self, name: str) -> Packument:
        cache_path = self.cache_dir / encode_package_filename(name)
        with self._lock_for(name):
            if cache_path.exists():
                doc = json.loads(cache_path.read_text(encoding="utf-8"))
                return packument_from_json(doc)
            url = f"{self.base_url}/{quote(name, safe='@')}"
            response = self._session.get(url)
            if response.status_code == 404:
                raise PackageNotFound(name)
            response.raise_for_status()
            doc = response.json()
            packument = packument_from_json(doc)
            tmp = cache_path.with_suffix(".tmp")
            tmp.write_text(json.dumps(doc), encoding="utf-8")
            os.replace(tmp, cache_path)
            return packument
