import json

import pytest

from peerspin.errors import EmptySnapshot, NoSatisfyingVersion, PackageNotFound
from peerspin.registry import (
    SnapshotStore,
    decode_package_filename,
    encode_package_filename,
    import_snapshot,
    packument_from_json,
    packument_to_json,
    select_version,
    write_directory_snapshot,
    write_ndjson_snapshot,
)
from peerspin.semver import parse_range

from .conftest import MOTIVATING_DOCS, make_store, pkg


def test_manifest_normalization():
    doc = pkg("x", {"1.0.0": {
        "dependencies": {"dup": "^1.0.0", "plain": "2.0.0"},
        "peerDependencies": {"dup": "^2.0.0", "peer": "*"},
        "peerDependenciesMeta": {"peer": {"optional": True}},
    }})
    manifest = packument_from_json(doc).versions["1.0.0"]
    # a duplicate declaration is kept as a peer dependency only
    assert dict(manifest.dependencies) == {"plain": "2.0.0"}
    assert dict(manifest.peer_dependencies) == {"dup": "^2.0.0", "peer": "*"}
    assert manifest.optional_peers == ("peer",)


@pytest.mark.parametrize("doc", [
    {},
    {"name": "x"},
    {"name": "x", "versions": {}},
    {"name": "x", "versions": {"1.0.0": {"version": "2.0.0"}}},
    {"name": "x", "versions": {"1.0.0": {}}, "dist-tags": {"latest": "9.9.9"}},
    {"name": "x", "versions": {"not-a-version": {}}},
])
def test_packument_rejects_malformed(doc):
    from peerspin.errors import MalformedVersion
    with pytest.raises(MalformedVersion):
        packument_from_json(doc)


def test_ndjson_import_skips_malformed(tmp_path):
    path = tmp_path / "snap.ndjson"
    lines = [json.dumps(d) for d in MOTIVATING_DOCS[:3]]
    lines.insert(1, "{not json")
    lines.insert(3, json.dumps({"name": "bad", "versions": {}}))
    path.write_text("\n".join(lines) + "\n")
    store = import_snapshot(path, format="ndjson")
    assert len(store) == 3
    assert store.diagnostics.skipped == 2
    assert store.diagnostics.total_records == 5


def test_empty_snapshot_raises(tmp_path):
    path = tmp_path / "empty.ndjson"
    path.write_text("{broken\n")
    with pytest.raises(EmptySnapshot):
        import_snapshot(path, format="ndjson")


def test_directory_round_trip(tmp_path):
    docs = [packument_from_json(d) for d in MOTIVATING_DOCS]
    docs.append(packument_from_json(pkg("@scope/pkg", {"1.0.0": {}})))
    root = write_directory_snapshot(docs, tmp_path / "snap")
    store = import_snapshot(root, format="directory")
    assert store.package_names() == sorted(d.name for d in docs)
    again = store.get_packument("@scope/pkg")
    assert packument_to_json(again)["name"] == "@scope/pkg"


def test_ndjson_round_trip(tmp_path):
    docs = [packument_from_json(d) for d in MOTIVATING_DOCS]
    path = write_ndjson_snapshot(docs, tmp_path / "snap.ndjson")
    store = import_snapshot(path, format="ndjson")
    assert store.package_names() == sorted(d.name for d in docs)
    original = make_store(MOTIVATING_DOCS)
    for name in store.package_names():
        assert (packument_to_json(store.get_packument(name))
                == packument_to_json(original.get_packument(name)))


def test_scoped_filename_encoding():
    filename = encode_package_filename("@scope/pkg")
    assert "/" not in filename
    assert decode_package_filename(filename) == "@scope/pkg"


def test_get_packument_missing():
    store = make_store(MOTIVATING_DOCS)
    with pytest.raises(PackageNotFound):
        store.get_packument("nope")


def test_select_version_highest_satisfying():
    store = make_store(MOTIVATING_DOCS)
    version, manifest = select_version(store, "react", parse_range(">=16"))
    assert str(version) == "18.2.0"
    assert manifest.name == "react"


def test_select_version_dist_tag():
    store = make_store(MOTIVATING_DOCS)
    version, _ = select_version(store, "react", "latest")
    assert str(version) == "18.2.0"
    with pytest.raises(NoSatisfyingVersion):
        select_version(store, "react", "next")


def test_select_version_no_match():
    store = make_store(MOTIVATING_DOCS)
    with pytest.raises(NoSatisfyingVersion):
        select_version(store, "react", parse_range("^99.0.0"))


def test_select_version_deterministic():
    store = make_store(MOTIVATING_DOCS)
    results = {select_version(store, "react", parse_range("*"))[0]
               for _ in range(20)}
    assert len(results) == 1


def test_iteration_order_is_sorted():
    store = make_store(list(reversed(MOTIVATING_DOCS)))
    names = [p.name for p in store.iter_packuments()]
    assert names == sorted(names)
