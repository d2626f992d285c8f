"""
Error types for conewave.

Every failure the library reports is a ConeWaveError carrying a human-readable
`detail` and the process `exit_code` the CLI should use:
- ConfigError and its subclasses (exit code 2) reject a run before any work.
- The remaining errors (exit code 1) are numerical contracts that did not hold.
"""

from __future__ import annotations


class ConeWaveError(Exception):
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class ConfigError(ConeWaveError):
    exit_code = 2


class InvalidDimension(ConfigError):
    pass


class PositivityViolated(ConfigError):
    pass


class InvalidSpan(ConfigError):
    pass


class ResolutionTooLow(ConfigError):
    pass


class AdmissibilityViolated(ConfigError):
    pass


class RegimeUnavailable(ConfigError):
    pass


class WeightNotIntegrable(ConfigError):
    pass


class NotConverged(ConeWaveError):
    pass


class TailNotNegligible(ConeWaveError):
    pass


class OscillationUnderResolved(ConeWaveError):
    pass


class UnderResolvedTime(ConeWaveError):
    pass


class TruncationTooCoarse(ConeWaveError):
    pass


class DegenerateInput(ConeWaveError):
    pass


class IoError(ConeWaveError):
    pass
