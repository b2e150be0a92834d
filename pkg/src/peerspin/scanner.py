"""Batch detection over a snapshot, ecosystem statistics, and synthetic
loop-pattern fixture generation.

Scan results stream to an NDJSON sink one line per completed task, so an
interrupted run can be resumed by diffing completed (name, version) keys.
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, IO, Iterable, List, Optional, Tuple, Union

from .errors import PackageNotFound, SinkUnwritable
from .registry import (
    Manifest,
    Packument,
    SnapshotStore,
    packument_from_json,
    write_directory_snapshot,
    write_ndjson_snapshot,
)
from .resolver import ResolutionConfig, ResolutionStatus, resolve
from .semver import Version, parse_range, parse_version, satisfies


@dataclass(frozen=True)
class ScanTask:
    name: str
    version: str = "all"     # version string or "all"


@dataclass
class ScanResult:
    name: str
    version: str
    verdict: str             # peerspin | clean | unresolvable | error | iteration-limit
    elapsed_ms: float
    report: Optional[dict] = None
    diagnostic: str = ""

    def to_json(self) -> dict:
        doc = {"name": self.name, "version": self.version,
               "verdict": self.verdict,
               "elapsed_ms": round(self.elapsed_ms, 3)}
        if self.report is not None:
            doc["report"] = self.report
        if self.diagnostic:
            doc["diagnostic"] = self.diagnostic
        return doc


_VERDICT_BY_STATUS = {
    ResolutionStatus.SUCCESS: "clean",
    ResolutionStatus.PEERSPIN: "peerspin",
    ResolutionStatus.UNRESOLVABLE: "unresolvable",
    ResolutionStatus.ITERATION_LIMIT: "iteration-limit",
}


def expand_tasks(store: SnapshotStore,
                 tasks: Iterable[ScanTask]) -> List[Tuple[str, str]]:
    """Expand "all"-version tasks against the store index, newest first.
    A task naming a missing package stays in the list; it becomes an
    error result at execution time."""
    expanded: List[Tuple[str, str]] = []
    for task in tasks:
        if task.version != "all":
            expanded.append((task.name, task.version))
            continue
        try:
            packument = store.get_packument(task.name)
        except PackageNotFound:
            expanded.append((task.name, "all"))
            continue
        for version, _manifest in reversed(packument.sorted_versions()):
            expanded.append((task.name, str(version)))
    return expanded


def run_one(store, name: str, version: str,
            config: ResolutionConfig) -> ScanResult:
    started = time.perf_counter()
    try:
        outcome = resolve((name, version), store, config)
    except Exception as exc:  # a single bad task must not kill the batch
        elapsed = (time.perf_counter() - started) * 1000.0
        return ScanResult(name, version, "error", elapsed,
                          diagnostic=f"{type(exc).__name__}: {exc}")
    elapsed = (time.perf_counter() - started) * 1000.0
    report = outcome.report.to_json() if outcome.report else None
    return ScanResult(name, version, _VERDICT_BY_STATUS[outcome.status],
                      elapsed, report=report, diagnostic=outcome.diagnostic)


def scan_batch(store, tasks: Iterable[ScanTask], jobs: int = 1,
               config: Optional[ResolutionConfig] = None,
               out: Union[None, str, Path, IO[str]] = None) -> Dict[str, int]:
    """Resolve every task with up to ``jobs`` workers, appending one
    NDJSON line per completed task to ``out``. Returns verdict counts."""
    config = config or ResolutionConfig()
    pairs = expand_tasks(store, list(tasks))
    summary: Dict[str, int] = {}
    sink: Optional[IO[str]] = None
    own_sink = False
    if out is not None:
        if isinstance(out, (str, Path)):
            try:
                sink = open(out, "w", encoding="utf-8")
            except OSError as exc:
                raise SinkUnwritable(str(exc)) from exc
            own_sink = True
        else:
            sink = out
    write_lock = threading.Lock()

    def emit(result: ScanResult):
        summary[result.verdict] = summary.get(result.verdict, 0) + 1
        if sink is not None:
            line = json.dumps(result.to_json())
            with write_lock:
                try:
                    sink.write(line + "\n")
                except OSError as exc:
                    raise SinkUnwritable(str(exc)) from exc

    try:
        if jobs <= 1:
            for name, version in pairs:
                emit(run_one(store, name, version, config))
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(run_one, store, name, version, config)
                           for name, version in pairs]
                for future in futures:
                    emit(future.result())
    finally:
        if own_sink and sink is not None:
            sink.close()
    return summary


# --- ecosystem statistics ----------------------------------------------

@dataclass
class EcosystemStats:
    package_categories: Dict[str, int] = field(default_factory=dict)
    version_categories: Dict[str, int] = field(default_factory=dict)
    peer_usage_fraction: float = 0.0
    yearly: Dict[int, Dict[str, int]] = field(default_factory=dict)
    skipped_no_timestamp: int = 0
    top_peer_dependents: List[Tuple[str, str, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "packageCategories": dict(self.package_categories),
            "versionCategories": dict(self.version_categories),
            "peerUsageFraction": self.peer_usage_fraction,
            "yearly": {str(y): dict(v) for y, v in sorted(self.yearly.items())},
            "skippedNoTimestamp": self.skipped_no_timestamp,
            "topPeerDependents": [
                {"name": n, "version": v, "peerDependents": c}
                for n, v, c in self.top_peer_dependents],
        }


def _manifest_category(manifest: Manifest) -> str:
    if manifest.has_peers:
        return "has-peer"
    if manifest.dependencies:
        return "regular-only"
    return "none"


def peer_usage_stats(store: SnapshotStore) -> EcosystemStats:
    """Package and version counts per dependency category; the usage
    fraction is packages with at least one peer-declaring version."""
    stats = EcosystemStats()
    pkg_counts = {"none": 0, "regular-only": 0, "has-peer": 0}
    ver_counts = {"none": 0, "regular-only": 0, "has-peer": 0}
    with_peers = 0
    total = 0
    for packument in store.iter_packuments():
        total += 1
        categories = set()
        for manifest in packument.versions.values():
            category = _manifest_category(manifest)
            ver_counts[category] += 1
            categories.add(category)
        if "has-peer" in categories:
            pkg_counts["has-peer"] += 1
            with_peers += 1
        elif "regular-only" in categories:
            pkg_counts["regular-only"] += 1
        else:
            pkg_counts["none"] += 1
    stats.package_categories = pkg_counts
    stats.version_categories = ver_counts
    stats.peer_usage_fraction = (with_peers / total) if total else 0.0
    return stats


def yearly_affected_counts(store: SnapshotStore,
                           scan_results: Iterable[ScanResult]) -> EcosystemStats:
    """Bucket released / peer-declaring / loop-affected versions by
    release year; versions without a timestamp are skipped and counted."""
    stats = EcosystemStats()
    yearly: Dict[int, Dict[str, int]] = {}
    skipped = 0

    def bucket(year: int) -> Dict[str, int]:
        return yearly.setdefault(
            year, {"released": 0, "with_peers": 0, "peerspin_affected": 0})

    for packument in store.iter_packuments():
        for key, manifest in packument.versions.items():
            if not packument.has_time(key):
                skipped += 1
                continue
            year = packument.release_time(key).year
            entry = bucket(year)
            entry["released"] += 1
            if manifest.has_peers:
                entry["with_peers"] += 1
    for result in scan_results:
        if result.verdict != "peerspin":
            continue
        try:
            packument = store.get_packument(result.name)
        except PackageNotFound:
            continue
        key = str(parse_version(result.version))
        if key not in packument.versions or not packument.has_time(key):
            skipped += 1
            continue
        bucket(packument.release_time(key).year)["peerspin_affected"] += 1
    stats.yearly = yearly
    stats.skipped_no_timestamp = skipped
    return stats


def top_peer_dependents(store: SnapshotStore,
                        n: int) -> List[Tuple[str, str, int]]:
    """For each package version, how many other manifest versions declare
    a peer requirement it satisfies; top ``n``, ties by name then version."""
    if n <= 0:
        return []
    declarations: List[Tuple[str, str, str]] = []   # (declarer, name, req)
    for packument in store.iter_packuments():
        for manifest in packument.versions.values():
            for peer_name, req_text in manifest.peer_dependencies:
                declarations.append((manifest.name, peer_name, req_text))
    counts: Dict[Tuple[str, Version], int] = {}
    for declarer, peer_name, req_text in declarations:
        try:
            packument = store.get_packument(peer_name)
            req = parse_range(req_text)
        except Exception:
            continue
        for manifest in packument.versions.values():
            if satisfies(manifest.version, req):
                key = (peer_name, manifest.version)
                counts[key] = counts.get(key, 0) + 1
    ranked = sorted(counts.items(),
                    key=lambda kv: (-kv[1], kv[0][0], kv[0][1].precedence_key()))
    return [(name, str(version), count)
            for (name, version), count in ranked[:n]]


# --- loop-pattern fixture synthesis ------------------------------------

@dataclass
class FixtureDescriptor:
    pattern: str
    intermediates: int
    root: Tuple[str, str]
    expected_verdict: str
    package_names: List[str]
    path: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "pattern": self.pattern,
            "intermediates": self.intermediates,
            "root": {"name": self.root[0], "version": self.root[1]},
            "expectedVerdict": self.expected_verdict,
            "packages": list(self.package_names),
            "path": self.path,
        }


def _packument(name: str, versions: Dict[str, dict],
               year: int = 2021) -> Packument:
    doc = {
        "name": name,
        "versions": {v: dict(m, version=v) for v, m in versions.items()},
        "dist-tags": {"latest": max(versions, key=lambda s: parse_version(s).precedence_key())},
        "time": {v: f"{year}-06-01T00:00:00+00:00" for v in versions},
    }
    return packument_from_json(doc)


def pattern_packuments(pattern: str, intermediates: int = 0,
                       prefix: str = "") -> List[Packument]:
    """Minimal packument set realizing loop pattern A or B, optionally
    with pass-through packages spliced into the triggering chain (regular
    chain for A, peer chain for B)."""
    if pattern not in ("A", "B"):
        raise ValueError(f"unknown pattern: {pattern!r}")
    if not 0 <= intermediates <= 8:
        raise ValueError("intermediates must be in 0..8")
    p = prefix
    docs: List[Packument] = []
    if pattern == "A":
        mids = [f"{p}M{i}" for i in range(1, intermediates + 1)]
        chain = mids + [f"{p}B"]
        docs.append(_packument(f"{p}A", {"1.0.0": {
            "dependencies": {chain[0]: "^2.0.0" if not mids else "1.0.0"}}}))
        for i, mid in enumerate(mids):
            nxt = chain[i + 1]
            docs.append(_packument(mid, {"1.0.0": {
                "dependencies": {nxt: "^2.0.0" if nxt == f"{p}B" else "1.0.0"}}}))
        docs.append(_packument(f"{p}B", {
            "1.0.0": {},
            "2.0.0": {"dependencies": {f"{p}C": "1.0.0"}}}))
        docs.append(_packument(f"{p}C", {"1.0.0": {
            "peerDependencies": {f"{p}B": "^1.0.0"}}}))
    else:
        mids = [f"{p}P{i}" for i in range(1, intermediates + 1)]
        chain = mids + [f"{p}C"]
        docs.append(_packument(f"{p}A", {"1.0.0": {
            "dependencies": {f"{p}B": "1.0.0"}}}))
        docs.append(_packument(f"{p}B", {"1.0.0": {
            "peerDependencies": {
                chain[0]: "^2.0.0" if not mids else "1.0.0",
                f"{p}D": "1.0.0"}}}))
        for i, mid in enumerate(mids):
            nxt = chain[i + 1]
            docs.append(_packument(mid, {"1.0.0": {
                "peerDependencies": {nxt: "^2.0.0" if nxt == f"{p}C" else "1.0.0"}}}))
        docs.append(_packument(f"{p}C", {"1.0.0": {}, "2.0.0": {}}))
        docs.append(_packument(f"{p}D", {"1.0.0": {
            "peerDependencies": {f"{p}C": "^1.0.0"}}}))
    return docs


def gen_pattern_fixture(pattern: str, intermediates: int = 0,
                        out: Union[None, str, Path] = None,
                        out_format: str = "directory") -> Tuple[SnapshotStore, FixtureDescriptor]:
    """Emit a loop-pattern snapshot and return it as a store plus a
    descriptor carrying the expected verdict."""
    docs = pattern_packuments(pattern, intermediates)
    store = SnapshotStore.from_packuments(docs, source=f"pattern-{pattern}")
    path = None
    if out is not None:
        if out_format == "directory":
            path = str(write_directory_snapshot(docs, out))
        elif out_format == "ndjson":
            path = str(write_ndjson_snapshot(docs, out))
        else:
            raise ValueError(f"unknown snapshot format: {out_format!r}")
    descriptor = FixtureDescriptor(
        pattern=pattern, intermediates=intermediates,
        root=("A", "1.0.0"), expected_verdict="peerspin",
        package_names=[d.name for d in docs], path=path)
    return store, descriptor
