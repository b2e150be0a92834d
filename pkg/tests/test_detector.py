from dataclasses import dataclass

from peerspin.detector import (
    RiskLedger,
    loop_log_oracle,
    record_position,
)
from peerspin.resolver import ResolutionConfig, ResolutionStatus, resolve
from peerspin.semver import parse_version

from .conftest import make_store, pkg


def test_record_position_counts_per_key():
    ledger = RiskLedger()
    v1 = parse_version("1.0.0")
    v2 = parse_version("2.0.0")
    pos = ("<root>", "x")
    assert record_position(ledger, ("x", v1), pos) == 1
    assert record_position(ledger, ("x", v2), pos) == 1    # other version
    assert record_position(ledger, ("x", v1), ("<root>",)) == 1  # other slot
    assert record_position(ledger, ("x", v1), pos) == 2


def test_report_shape(pattern_store):
    outcome = resolve(("A", "1.0.0"), pattern_store("A"))
    doc = outcome.report.to_json()
    assert set(doc) == {"package", "versions", "position", "peerSource",
                       "peerEntry", "patternHint", "iterations", "trace"}
    assert doc["package"] == "B"
    assert sorted(doc["versions"]) == ["1.0.0", "2.0.0"]
    assert doc["patternHint"] in ("A", "B", "unknown")
    assert doc["iterations"] > 0
    assert len(doc["trace"]) >= 2
    for event in doc["trace"]:
        assert set(event) == {"seq", "name", "oldVersion", "newVersion",
                              "position", "risky"}


def test_pattern_hints(pattern_store, motivating_store):
    assert resolve(("A", "1.0.0"),
                   pattern_store("A")).report.pattern_hint == "A"
    assert resolve(("A", "1.0.0"),
                   pattern_store("B")).report.pattern_hint == "B"
    assert resolve(("xydesign", "1.0.0"),
                   motivating_store).report.pattern_hint in ("A", "B")


def test_benign_replacement_is_not_flagged():
    # b forces a downgrade of react, but a's open range still holds, so
    # the swap heals the tree: one replacement, no loop verdict
    docs = [
        pkg("top", {"1.0.0": {"dependencies": {"a": "1.0.0",
                                               "b": "1.0.0"}}}),
        pkg("a", {"1.0.0": {"peerDependencies": {"react": ">=16.0.0"}}}),
        pkg("b", {"1.0.0": {"peerDependencies": {"react": "16.2.0"}}}),
        pkg("react", {"16.2.0": {}, "16.14.0": {}}),
    ]
    outcome = resolve(("top", "1.0.0"), make_store(docs))
    assert outcome.status is ResolutionStatus.SUCCESS
    actions = [e.action for e in outcome.placement_log if e.name == "react"]
    assert "REPLACE" in actions


# --- placement-log oracle ----------------------------------------------

@dataclass
class FakeEntry:
    action: str
    name: str
    version: str
    position: tuple


def entries(pattern):
    return [FakeEntry(a, n, v, p) for a, n, v, p in pattern]


def test_oracle_detects_period_two():
    log = entries([
        ("ADD", "a", "1.0.0", ("<root>", "a")),
        ("REPLACE", "x", "1.0.0", ("<root>", "x")),
        ("REPLACE", "x", "2.0.0", ("<root>", "x")),
        ("REPLACE", "x", "1.0.0", ("<root>", "x")),
        ("REPLACE", "x", "2.0.0", ("<root>", "x")),
    ])
    assert loop_log_oracle(log, max_window=10)


def test_oracle_rejects_progress():
    log = entries([
        ("ADD", "a", "1.0.0", ("<root>", "a")),
        ("ADD", "b", "1.0.0", ("<root>", "b")),
        ("REPLACE", "x", "1.0.0", ("<root>", "x")),
        ("ADD", "c", "1.0.0", ("<root>", "c")),
    ])
    assert not loop_log_oracle(log, max_window=10)


def test_oracle_matches_brute_force_on_random_logs():
    import random
    rng = random.Random(5)
    alphabet = [("ADD", "a", "1.0.0", ("<root>", "a")),
                ("REPLACE", "x", "1.0.0", ("<root>", "x")),
                ("REPLACE", "x", "2.0.0", ("<root>", "x")),
                ("KEEP", "b", "3.0.0", ("<root>", "b"))]
    for _ in range(300):
        log = entries([rng.choice(alphabet)
                       for _ in range(rng.randrange(0, 14))])
        keys = [(e.action, e.name, e.version, e.position) for e in log]
        expected = any(
            keys[-w:] == keys[-2 * w:-w]
            for w in range(1, 7) if len(keys) >= 2 * w)
        assert loop_log_oracle(log, max_window=6) == expected


def test_oracle_agrees_with_detector_on_patterns(pattern_store):
    for pattern in ("A", "B"):
        store = pattern_store(pattern)
        detected = resolve(("A", "1.0.0"), store)
        assert detected.status is ResolutionStatus.PEERSPIN
        capped = resolve(("A", "1.0.0"), store,
                         ResolutionConfig(max_iterations=200,
                                          detector_enabled=False))
        assert loop_log_oracle(capped.placement_log, max_window=40)


def test_oracle_negative_on_clean(clean_store):
    outcome = resolve(("app", "1.0.0"), clean_store,
                      ResolutionConfig(detector_enabled=False))
    assert outcome.status is ResolutionStatus.SUCCESS
    assert not loop_log_oracle(outcome.placement_log, max_window=40)
