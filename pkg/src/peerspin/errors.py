"""Exception types shared across the package."""


class PeerspinError(Exception):
    """Base class for all errors raised by this package."""


class MalformedVersion(PeerspinError):
    """A version string does not parse under strict semver rules."""


class MalformedRange(PeerspinError):
    """A range expression does not parse under the npm range dialect."""


class SourceUnreadable(PeerspinError):
    """The snapshot source path or stream cannot be read."""


class EmptySnapshot(PeerspinError):
    """A snapshot import produced zero valid packuments."""


class PackageNotFound(PeerspinError):
    """No packument exists for the requested package name."""


class NoSatisfyingVersion(PeerspinError):
    """A packument exists but no version satisfies the requested range."""


class SinkUnwritable(PeerspinError):
    """The scan result sink cannot be opened or written."""
