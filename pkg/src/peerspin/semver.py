"""Semantic version values and npm-dialect range expressions.

Implements the node-semver flavour of ranges (caret, tilde, x-ranges,
hyphen ranges, ``||`` alternatives, comparators, ``*``), since the input
data is npm registry metadata. Exotic specifiers (git URLs, tags, file
paths) are rejected with :class:`MalformedRange`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Iterable, Optional, Sequence, Tuple, Union

from .errors import MalformedRange, MalformedVersion

_NUM = r"(?:0|[1-9]\d*)"
_IDENT = r"[0-9A-Za-z-]+"
_VERSION_RE = re.compile(
    rf"^({_NUM})\.({_NUM})\.({_NUM})"
    rf"(?:-({_IDENT}(?:\.{_IDENT})*))?"
    rf"(?:\+({_IDENT}(?:\.{_IDENT})*))?$"
)
_XR = rf"(?:{_NUM}|x|X|\*)"
_PARTIAL_RE = re.compile(
    rf"^({_XR})(?:\.({_XR})(?:\.({_XR})"
    rf"(?:-({_IDENT}(?:\.{_IDENT})*))?"
    rf"(?:\+({_IDENT}(?:\.{_IDENT})*))?)?)?$"
)
_NUMERIC_ID_RE = re.compile(rf"^{_NUM}$")


def _prerelease_key(prerelease: Tuple[str, ...]):
    # Numeric identifiers sort below alphanumeric ones; a release (no
    # prerelease) sorts above every prerelease of the same core.
    if not prerelease:
        return (1, ())
    ids = tuple(
        (0, int(p)) if _NUMERIC_ID_RE.match(p) else (1, p) for p in prerelease
    )
    return (0, ids)


@total_ordering
@dataclass(frozen=True)
class Version:
    """A parsed semantic version. Build metadata is carried but ignored
    for equality and precedence."""

    major: int
    minor: int
    patch: int
    prerelease: Tuple[str, ...] = ()
    build: Tuple[str, ...] = ()

    @property
    def core(self) -> Tuple[int, int, int]:
        return (self.major, self.minor, self.patch)

    def precedence_key(self):
        return (self.major, self.minor, self.patch, _prerelease_key(self.prerelease))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Version):
            return NotImplemented
        return self.precedence_key() == other.precedence_key()

    def __lt__(self, other: "Version") -> bool:
        return self.precedence_key() < other.precedence_key()

    def __hash__(self) -> int:
        return hash(self.precedence_key())

    def __str__(self) -> str:
        s = f"{self.major}.{self.minor}.{self.patch}"
        if self.prerelease:
            s += "-" + ".".join(self.prerelease)
        if self.build:
            s += "+" + ".".join(self.build)
        return s


def parse_version(text: str) -> Version:
    """Parse a strict semver string. Tolerates surrounding whitespace and
    a leading ``v``; everything else must follow the 2.0.0 grammar."""
    if not isinstance(text, str):
        raise MalformedVersion(f"not a string: {text!r}")
    cleaned = text.strip()
    if cleaned.startswith(("v", "V")):
        cleaned = cleaned[1:].strip()
    if not cleaned:
        raise MalformedVersion("empty version string")
    m = _VERSION_RE.match(cleaned)
    if not m:
        raise MalformedVersion(f"invalid version: {text!r}")
    major, minor, patch, pre, build = m.groups()
    prerelease = tuple(pre.split(".")) if pre else ()
    for ident in prerelease:
        if ident.isdigit() and not _NUMERIC_ID_RE.match(ident):
            raise MalformedVersion(f"leading zero in prerelease: {text!r}")
    return Version(
        int(major), int(minor), int(patch),
        prerelease, tuple(build.split(".")) if build else (),
    )


# A comparator is (op, Version) with op in {"=", "<", "<=", ">", ">="}.
Comparator = Tuple[str, Version]

_OPS = {
    "=": lambda c: c == 0,
    "<": lambda c: c < 0,
    "<=": lambda c: c <= 0,
    ">": lambda c: c > 0,
    ">=": lambda c: c >= 0,
}


@dataclass(frozen=True)
class VersionRange:
    """Disjunction of comparator-sets; each set is a conjunction.

    An empty comparator-set matches every non-prerelease version."""

    alternatives: Tuple[Tuple[Comparator, ...], ...]
    text: str = field(default="", compare=False)

    def __str__(self) -> str:
        return " || ".join(
            " ".join(f"{op}{v}" for op, v in alt) or "*"
            for alt in self.alternatives
        )


class _Partial:
    __slots__ = ("major", "minor", "patch", "prerelease")

    def __init__(self, text: str):
        m = _PARTIAL_RE.match(text)
        if not m:
            raise MalformedRange(f"invalid version component: {text!r}")
        maj, mi, pa, pre, _build = m.groups()
        self.major = None if maj in ("x", "X", "*") else int(maj)
        self.minor = None if mi in ("x", "X", "*", None) else int(mi)
        self.patch = None if pa in ("x", "X", "*", None) else int(pa)
        self.prerelease = tuple(pre.split(".")) if pre else ()
        if self.major is None:
            self.minor = self.patch = None
        if self.minor is None:
            self.patch = None

    @property
    def full(self) -> bool:
        return self.patch is not None

    def version(self) -> Version:
        return Version(self.major or 0, self.minor or 0, self.patch or 0,
                       self.prerelease)


def _v(major: int, minor: int = 0, patch: int = 0) -> Version:
    return Version(major, minor, patch)


def _strip_v(token: str) -> str:
    if token.startswith(("v", "V")) and len(token) > 1:
        return token[1:]
    return token


def _desugar_plain(p: _Partial) -> list:
    if p.major is None:
        return []
    if p.minor is None:
        return [(">=", _v(p.major)), ("<", _v(p.major + 1))]
    if p.patch is None:
        return [(">=", _v(p.major, p.minor)), ("<", _v(p.major, p.minor + 1))]
    return [("=", p.version())]


def _desugar_tilde(p: _Partial) -> list:
    if p.major is None:
        return []
    if p.minor is None:
        return [(">=", _v(p.major)), ("<", _v(p.major + 1))]
    return [(">=", p.version()), ("<", _v(p.major, p.minor + 1))]


def _desugar_caret(p: _Partial) -> list:
    if p.major is None:
        return []
    if p.minor is None:
        return [(">=", _v(p.major)), ("<", _v(p.major + 1))]
    if p.patch is None:
        if p.major == 0:
            return [(">=", _v(0, p.minor)), ("<", _v(0, p.minor + 1))]
        return [(">=", _v(p.major, p.minor)), ("<", _v(p.major + 1))]
    low = p.version()
    if p.major > 0:
        return [(">=", low), ("<", _v(p.major + 1))]
    if p.minor > 0:
        return [(">=", low), ("<", _v(0, p.minor + 1))]
    return [(">=", low), ("<", _v(0, 0, p.patch + 1))]


def _desugar_primitive(op: str, p: _Partial) -> list:
    if op == "=":
        return _desugar_plain(p)
    if p.major is None:
        # e.g. ">*": matches everything for >=, nothing sensible otherwise;
        # node-semver treats all of these as the universal range.
        return [] if op in (">=", "<=") else [("<", _v(0))]
    if op == ">":
        if p.minor is None:
            return [(">=", _v(p.major + 1))]
        if p.patch is None:
            return [(">=", _v(p.major, p.minor + 1))]
        return [(">", p.version())]
    if op == ">=":
        return [(">=", p.version())]
    if op == "<":
        return [("<", p.version())]
    # op == "<="
    if p.minor is None:
        return [("<", _v(p.major + 1))]
    if p.patch is None:
        return [("<", _v(p.major, p.minor + 1))]
    return [("<=", p.version())]


_HYPHEN_RE = re.compile(r"\s+-\s+")
_SIMPLE_RE = re.compile(r"^(>=|<=|>|<|=|\^|~)?\s*(.*)$")


def _parse_comparator_set(part: str) -> Tuple[Comparator, ...]:
    part = part.strip()
    if not part or part in ("*", "x", "X"):
        return ()
    comparators: list = []
    if _HYPHEN_RE.search(part):
        pieces = _HYPHEN_RE.split(part)
        if len(pieces) != 2:
            raise MalformedRange(f"invalid hyphen range: {part!r}")
        lo = _Partial(_strip_v(pieces[0].strip()))
        hi = _Partial(_strip_v(pieces[1].strip()))
        if lo.major is not None:
            comparators.append((">=", lo.version()))
        if hi.major is None:
            pass
        elif hi.minor is None:
            comparators.append(("<", _v(hi.major + 1)))
        elif hi.patch is None:
            comparators.append(("<", _v(hi.major, hi.minor + 1)))
        else:
            comparators.append(("<=", hi.version()))
        return tuple(comparators)
    for token in part.split():
        m = _SIMPLE_RE.match(token)
        op, rest = m.group(1), m.group(2)
        if not rest:
            raise MalformedRange(f"dangling operator in range: {part!r}")
        partial = _Partial(_strip_v(rest))
        if op == "^":
            comparators.extend(_desugar_caret(partial))
        elif op == "~":
            comparators.extend(_desugar_tilde(partial))
        elif op:
            comparators.extend(_desugar_primitive(op, partial))
        else:
            comparators.extend(_desugar_plain(partial))
    return tuple(comparators)


def parse_range(text: str) -> VersionRange:
    """Parse an npm-dialect range expression into normalized comparator
    form. Empty string and ``*`` both mean "any released version"."""
    if not isinstance(text, str):
        raise MalformedRange(f"not a string: {text!r}")
    cleaned = text.strip()
    alternatives = []
    for part in cleaned.split("||"):
        alternatives.append(_parse_comparator_set(part))
    return VersionRange(tuple(alternatives), text=text)


def _set_matches(v: Version, comparators: Sequence[Comparator]) -> bool:
    for op, bound in comparators:
        key_v, key_b = v.precedence_key(), bound.precedence_key()
        cmp = (key_v > key_b) - (key_v < key_b)
        if not _OPS[op](cmp):
            return False
    if v.prerelease:
        # node-semver gate: a prerelease only matches a set that names a
        # prerelease of the identical major.minor.patch tuple.
        return any(bound.prerelease and bound.core == v.core
                   for _op, bound in comparators)
    return True


def satisfies(v: Version, r: Union[VersionRange, str]) -> bool:
    """True iff ``v`` satisfies at least one comparator-set of ``r``."""
    if isinstance(r, str):
        r = parse_range(r)
    return any(_set_matches(v, alt) for alt in r.alternatives)


def max_satisfying(versions: Iterable[Version],
                   r: Union[VersionRange, str]) -> Optional[Version]:
    """Highest-precedence member of ``versions`` satisfying ``r``."""
    if isinstance(r, str):
        r = parse_range(r)
    best: Optional[Version] = None
    for v in versions:
        if satisfies(v, r) and (best is None or v > best):
            best = v
    return best
