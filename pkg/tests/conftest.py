import pytest

from peerspin.registry import SnapshotStore, packument_from_json
from peerspin.scanner import pattern_packuments


def make_store(docs) -> SnapshotStore:
    """Build an in-memory store from raw packument dicts."""
    return SnapshotStore.from_packuments(
        [packument_from_json(d) for d in docs])


def pkg(name, versions) -> dict:
    return {
        "name": name,
        "versions": {v: dict(m, name=name, version=v)
                     for v, m in versions.items()},
        "dist-tags": {"latest": sorted(versions)[-1]},
    }


MOTIVATING_DOCS = [
    pkg("xydesign", {"1.0.0": {
        "dependencies": {"antd": "^5.0.0", "draft-js": "^0.11.7"}}}),
    pkg("antd", {"5.0.0": {
        "peerDependencies": {"react-dom": "^18.0.0"}}}),
    pkg("react-dom", {"18.2.0": {
        "peerDependencies": {"react": "^18.2.0"}}}),
    pkg("draft-js", {"0.11.7": {
        "peerDependencies": {"react": "^16.0.0"}}}),
    pkg("react", {"16.14.0": {}, "18.2.0": {}}),
]


@pytest.fixture
def motivating_store():
    return make_store(MOTIVATING_DOCS)


@pytest.fixture
def pattern_store():
    def build(pattern, intermediates=0):
        return SnapshotStore.from_packuments(
            pattern_packuments(pattern, intermediates))
    return build


CLEAN_CHAIN_DOCS = [
    pkg("app", {"1.0.0": {"dependencies": {"lib-a": "^1.0.0"}}}),
    pkg("lib-a", {"1.2.0": {"dependencies": {"lib-b": "^2.0.0"}}}),
    pkg("lib-b", {"2.3.1": {"dependencies": {"lib-c": "~1.1.0"}}}),
    pkg("lib-c", {"1.1.4": {}}),
]


@pytest.fixture
def clean_store():
    return make_store(CLEAN_CHAIN_DOCS)
