"""Command-line front end.

Exit codes: 0 success/clean, 2 loop detected, 3 unresolvable, 4
iteration limit hit, 1 usage or I/O error. Machine-readable output goes
to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional, Tuple

import click

from .errors import PeerspinError
from .registry import RemoteRegistry, import_snapshot
from .resolver import ResolutionConfig, ResolutionOutcome, ResolutionStatus, resolve
from .scanner import (
    ScanTask,
    gen_pattern_fixture,
    peer_usage_stats,
    scan_batch,
    top_peer_dependents,
    yearly_affected_counts,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PEERSPIN = 2
EXIT_UNRESOLVABLE = 3
EXIT_ITERATION_LIMIT = 4

_EXIT_BY_STATUS = {
    ResolutionStatus.SUCCESS: EXIT_OK,
    ResolutionStatus.PEERSPIN: EXIT_PEERSPIN,
    ResolutionStatus.UNRESOLVABLE: EXIT_UNRESOLVABLE,
    ResolutionStatus.ITERATION_LIMIT: EXIT_ITERATION_LIMIT,
}


def split_spec(spec: str) -> Tuple[str, str]:
    """Split ``name@range`` into (name, range); scoped names keep their
    leading ``@``. A bare name means the ``latest`` tag."""
    if spec.startswith("@"):
        head, _, tail = spec[1:].partition("@")
        return ("@" + head, tail) if tail else ("@" + head, "latest")
    head, _, tail = spec.partition("@")
    return (head, tail) if tail else (head, "latest")


def _load_store(snapshot: Optional[str], snapshot_format: Optional[str],
                registry_url: Optional[str], cache_dir: Optional[str]):
    if (snapshot is None) == (registry_url is None):
        raise click.UsageError(
            "provide exactly one registry source: --snapshot or --registry-url")
    if registry_url is not None:
        return RemoteRegistry(registry_url, cache_dir or ".peerspin-cache")
    if snapshot_format is None:
        snapshot_format = "directory" if Path(snapshot).is_dir() else "ndjson"
    return import_snapshot(snapshot, format=snapshot_format)


def render_tree(outcome: ResolutionOutcome, format: str = "json") -> str:
    """Deterministic rendering of a resolution outcome; a loop outcome
    renders its report, never a partial tree."""
    if outcome.status is ResolutionStatus.PEERSPIN:
        return json.dumps(outcome.report.to_json(), indent=2, sort_keys=True)
    if outcome.status is not ResolutionStatus.SUCCESS:
        return json.dumps({"status": outcome.status.value,
                           "diagnostic": outcome.diagnostic},
                          indent=2, sort_keys=True)

    def node_json(node) -> dict:
        return {
            "version": str(node.version),
            "edges": {
                e.to_name: {"req": e.req_text, "kind": e.kind.value,
                            "status": e.status.value}
                for e in sorted(node.edges_out, key=lambda e: e.to_name)
            },
            "children": {name: node_json(node.children[name])
                         for name in sorted(node.children)},
        }

    if format == "tree-text":
        lines = []

        def walk(node, depth):
            lines.append("  " * depth + f"{node.name}@{node.version}")
            for name in sorted(node.children):
                walk(node.children[name], depth + 1)

        walk(outcome.tree.root, 0)
        return "\n".join(lines)
    return json.dumps(node_json(outcome.tree.root), indent=2, sort_keys=True)


def _emit_placement_log(outcome: ResolutionOutcome, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in outcome.placement_log:
            fh.write(json.dumps(entry.to_json()) + "\n")


def _source_options(fn):
    fn = click.option("--snapshot", type=click.Path(), default=None,
                      help="snapshot path (NDJSON file or directory)")(fn)
    fn = click.option("--snapshot-format",
                      type=click.Choice(["ndjson", "directory"]),
                      default=None)(fn)
    fn = click.option("--registry-url", default=None,
                      help="remote registry base URL (cached on disk)")(fn)
    fn = click.option("--cache-dir", type=click.Path(), default=None)(fn)
    return fn


@click.group()
def cli():
    """Dependency-resolution simulator with peer-dependency loop detection."""


def _run_resolution(spec, snapshot, snapshot_format, registry_url, cache_dir,
                    max_iterations, emit_log) -> ResolutionOutcome:
    store = _load_store(snapshot, snapshot_format, registry_url, cache_dir)
    name, range_text = split_spec(spec)
    config = ResolutionConfig(max_iterations=max_iterations,
                              emit_placement_log=bool(emit_log))
    outcome = resolve((name, range_text), store, config)
    if emit_log:
        _emit_placement_log(outcome, emit_log)
    return outcome


@cli.command("resolve")
@click.argument("spec")
@_source_options
@click.option("--format", "fmt", type=click.Choice(["json", "tree-text"]),
              default="json")
@click.option("--max-iterations", type=int, default=10000)
@click.option("--emit-log", type=click.Path(), default=None)
def resolve_cmd(spec, snapshot, snapshot_format, registry_url, cache_dir,
                fmt, max_iterations, emit_log):
    """Resolve SPEC (name@range) and print the resulting tree."""
    try:
        outcome = _run_resolution(spec, snapshot, snapshot_format,
                                  registry_url, cache_dir, max_iterations,
                                  emit_log)
    except PeerspinError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    click.echo(render_tree(outcome, fmt))
    if outcome.diagnostic:
        click.echo(outcome.diagnostic, err=True)
    sys.exit(_EXIT_BY_STATUS[outcome.status])


@cli.command("detect")
@click.argument("spec")
@_source_options
@click.option("--format", "fmt", type=click.Choice(["json"]), default="json")
@click.option("--max-iterations", type=int, default=10000)
@click.option("--emit-log", type=click.Path(), default=None)
def detect_cmd(spec, snapshot, snapshot_format, registry_url, cache_dir,
               fmt, max_iterations, emit_log):
    """Check SPEC for a peer-dependency resolution loop."""
    try:
        outcome = _run_resolution(spec, snapshot, snapshot_format,
                                  registry_url, cache_dir, max_iterations,
                                  emit_log)
    except PeerspinError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    if outcome.status is ResolutionStatus.PEERSPIN:
        click.echo(json.dumps(outcome.report.to_json(), indent=2,
                              sort_keys=True))
    else:
        click.echo(json.dumps({"verdict": outcome.status.value,
                               "diagnostic": outcome.diagnostic},
                              sort_keys=True))
    sys.exit(_EXIT_BY_STATUS[outcome.status])


@cli.command("scan")
@click.argument("specs", nargs=-1)
@_source_options
@click.option("--jobs", type=int, default=1)
@click.option("--max-iterations", type=int, default=10000)
@click.option("--out", type=click.Path(), default=None,
              help="result NDJSON path (default: stdout)")
def scan_cmd(specs, snapshot, snapshot_format, registry_url, cache_dir,
             jobs, max_iterations, out):
    """Batch-scan SPECS (name@version, name@all, or bare name = all
    versions); with no SPECS, scans every package in the snapshot."""
    try:
        store = _load_store(snapshot, snapshot_format, registry_url, cache_dir)
        if specs:
            tasks = []
            for spec in specs:
                name, version = split_spec(spec)
                tasks.append(ScanTask(name, "all" if version == "latest"
                                      else version))
        elif hasattr(store, "package_names"):
            tasks = [ScanTask(name, "all") for name in store.package_names()]
        else:
            raise click.UsageError(
                "a remote registry cannot be enumerated; pass explicit SPECS")
        config = ResolutionConfig(max_iterations=max_iterations)
        sink = out if out is not None else sys.stdout
        summary = scan_batch(store, tasks, jobs=jobs, config=config, out=sink)
    except PeerspinError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    click.echo(json.dumps({"summary": summary}, sort_keys=True), err=True)
    sys.exit(EXIT_PEERSPIN if summary.get("peerspin") else EXIT_OK)


@cli.command("stats")
@_source_options
@click.option("--scan-results", type=click.Path(), default=None,
              help="NDJSON results from a previous scan")
@click.option("--top", type=int, default=5)
def stats_cmd(snapshot, snapshot_format, registry_url, cache_dir,
              scan_results, top):
    """Peer-dependency usage statistics for a snapshot."""
    from .scanner import ScanResult
    try:
        store = _load_store(snapshot, snapshot_format, registry_url, cache_dir)
    except PeerspinError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    stats = peer_usage_stats(store)
    stats.top_peer_dependents = top_peer_dependents(store, top)
    if scan_results:
        results = []
        with open(scan_results, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    doc = json.loads(line)
                    results.append(ScanResult(
                        doc["name"], doc["version"], doc["verdict"],
                        doc.get("elapsed_ms", 0.0)))
        yearly = yearly_affected_counts(store, results)
        stats.yearly = yearly.yearly
        stats.skipped_no_timestamp = yearly.skipped_no_timestamp
    click.echo(json.dumps(stats.to_json(), indent=2, sort_keys=True))
    sys.exit(EXIT_OK)


@cli.command("gen-fixture")
@click.option("--pattern", type=click.Choice(["A", "B"]), required=True)
@click.option("--intermediates", type=int, default=0)
@click.option("--out", type=click.Path(), required=True)
@click.option("--out-format", type=click.Choice(["directory", "ndjson"]),
              default="directory")
def gen_fixture_cmd(pattern, intermediates, out, out_format):
    """Write a synthetic loop-pattern snapshot and print its descriptor."""
    try:
        _store, descriptor = gen_pattern_fixture(
            pattern, intermediates, out=out, out_format=out_format)
    except (ValueError, PeerspinError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_USAGE)
    click.echo(json.dumps(descriptor.to_json(), indent=2, sort_keys=True))
    sys.exit(EXIT_OK)


def main(argv=None) -> None:
    """Console entry point; maps usage errors onto exit code 1."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except (click.UsageError, click.ClickException) as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(EXIT_USAGE)
    except click.exceptions.Abort:
        sys.exit(EXIT_USAGE)


if __name__ == "__main__":
    main()
