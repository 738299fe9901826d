"""Exception types. Names are stable: the CLI prints them verbatim."""

from __future__ import annotations


class HardyLorentzError(Exception):
    """Base class for every error raised by this package."""


# filtration
class NonPositiveMass(HardyLorentzError):
    pass


class MassMismatch(HardyLorentzError):
    pass


class EmptyLevel(HardyLorentzError):
    pass


class LevelOutOfRange(HardyLorentzError):
    pass


class MissingLeafValue(HardyLorentzError):
    pass


# process
class NonCenteredTerminal(HardyLorentzError):
    pass


class NotAMartingale(HardyLorentzError):
    pass


class TreeMismatch(HardyLorentzError):
    pass


class NotAnAntichain(HardyLorentzError):
    pass


class EnumerationCapExceeded(HardyLorentzError):
    pass


class NotMeasurable(HardyLorentzError):
    pass


# lorentz
class NegativeThreshold(HardyLorentzError):
    pass


class InvalidIndex(HardyLorentzError):
    pass


class PropertyViolated(HardyLorentzError):
    def __init__(self, which: str, witness: object):
        super().__init__(f"{which} violated at {witness!r}")
        self.which = which
        self.witness = witness


# bmo / atomic
class InvalidExponent(HardyLorentzError):
    pass


class ChainViolated(HardyLorentzError):
    def __init__(self, k: int, link: str, detail: str = ""):
        super().__init__(f"k={k}: {link} {detail}".rstrip())
        self.k = k
        self.link = link


class DegenerateSequence(HardyLorentzError):
    pass


# fracint
class NegativeAlpha(HardyLorentzError):
    pass


class PreconditionFailed(HardyLorentzError):
    pass


class ExponentMismatch(HardyLorentzError):
    pass


class ParameterOutOfRange(HardyLorentzError):
    pass


# harness
class InvalidSpec(HardyLorentzError):
    pass


class ConfigError(HardyLorentzError):
    pass
