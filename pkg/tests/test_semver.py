import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from peerspin.errors import MalformedRange, MalformedVersion
from peerspin.semver import (
    Version,
    max_satisfying,
    parse_range,
    parse_version,
    satisfies,
)

CORPUS = json.loads(
    (Path(__file__).parent / "data" / "semver_corpus.json").read_text())


def test_corpus_is_substantial():
    assert len(CORPUS["satisfies"]) >= 500


def test_corpus_satisfies_agreement():
    mismatches = [
        (version, range_text, expected)
        for version, range_text, expected in CORPUS["satisfies"]
        if satisfies(parse_version(version), range_text) != expected
    ]
    assert mismatches == []


def test_corpus_max_satisfying_agreement():
    versions = [parse_version(v) for v in CORPUS["versions"]]
    for range_text, expected in CORPUS["max_satisfying"]:
        got = max_satisfying(versions, parse_range(range_text))
        assert (str(got) if got else None) == expected, range_text


def test_corpus_parse_agreement():
    for text, parts in CORPUS["parsed"]:
        v = parse_version(text)
        assert (v.major, v.minor, v.patch) == (
            parts["major"], parts["minor"], parts["patch"])
        assert list(v.prerelease) == [str(p) for p in parts["prerelease"]]


def test_corpus_sort_agreement():
    unique = list(dict.fromkeys(CORPUS["versions"]))
    ours = sorted(unique, key=lambda s: parse_version(s).precedence_key())
    assert ours == CORPUS["sorted"]


@pytest.mark.parametrize("text,expected", [
    ("1.2.3", (1, 2, 3)),
    ("v1.2.3", (1, 2, 3)),
    (" 10.20.30 ", (10, 20, 30)),
])
def test_parse_version_basic(text, expected):
    v = parse_version(text)
    assert (v.major, v.minor, v.patch) == expected


@pytest.mark.parametrize("text", [
    "", "1", "1.2", "1.2.3.4", "01.2.3", "1.2.3-", "a.b.c", "1.2.-3",
])
def test_parse_version_rejects(text):
    with pytest.raises(MalformedVersion):
        parse_version(text)


@pytest.mark.parametrize("text", [
    "git+https://example.com/x.git", "file:../x", ">=1.2.3 <<2", "^",
])
def test_parse_range_rejects(text):
    with pytest.raises(MalformedRange):
        parse_range(text)


def test_build_metadata_ignored():
    a = parse_version("1.2.3+001")
    b = parse_version("1.2.3+exp.sha.5114f85")
    assert a == b
    assert hash(a) == hash(b)
    assert not a < b and not b < a


def test_prerelease_ordering():
    order = ["1.0.0-alpha", "1.0.0-alpha.1", "1.0.0-alpha.beta",
             "1.0.0-beta", "1.0.0-beta.2", "1.0.0-beta.11",
             "1.0.0-rc.1", "1.0.0"]
    parsed = [parse_version(t) for t in order]
    assert parsed == sorted(parsed)


def test_prerelease_gate():
    # a prerelease only matches when a comparator names a prerelease of
    # the same core version
    assert satisfies(parse_version("1.2.3-beta.2"), ">=1.2.3-beta")
    assert not satisfies(parse_version("1.2.4-beta"), ">=1.2.3-beta")
    assert not satisfies(parse_version("2.0.0-alpha"), "^1.0.0 || ^2.0.0")


versions_st = st.builds(
    Version,
    major=st.integers(0, 40),
    minor=st.integers(0, 40),
    patch=st.integers(0, 40),
    prerelease=st.one_of(
        st.just(()),
        st.tuples(st.sampled_from(["alpha", "beta", "rc", "0", "1", "12"]))),
)


@given(versions_st)
def test_str_parse_round_trip(v):
    assert parse_version(str(v)) == v


@given(versions_st, versions_st, versions_st)
def test_ordering_is_total_and_transitive(a, b, c):
    assert (a < b) or (b < a) or (a == b)
    if a < b and b < c:
        assert a < c


@given(versions_st)
def test_exact_range_matches_itself(v):
    if not v.prerelease:
        assert satisfies(v, str(v))
        assert satisfies(v, f"^{v}") or v.major >= 0


@given(st.lists(versions_st, min_size=1, max_size=20))
def test_max_satisfying_star_is_max(vs):
    releases = [v for v in vs if not v.prerelease]
    got = max_satisfying(vs, parse_range("*"))
    if releases:
        assert got == max(releases)
    else:
        assert got is None
