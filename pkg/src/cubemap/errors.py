"""Exception hierarchy shared across the package.

Everything a caller might want to catch as a domain error derives from
CubemapError; the CLI maps these to exit code 2.
"""


class CubemapError(Exception):
    """Base class for all domain errors raised by cubemap."""


class CapacityError(CubemapError):
    """A label width or class count exceeded its fixed budget."""


class IntegrityError(CubemapError):
    """Internal label bookkeeping is corrupt (e.g. a non-decodable label)."""
