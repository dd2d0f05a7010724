"""Exception taxonomy shared across the package.

Every failure mode that callers are expected to branch on gets its own class;
plain ValueError is reserved for programming errors in arguments.
"""

from __future__ import annotations


class ScumlabError(Exception):
    """Base class for all package-specific errors."""


class NormalizationError(ScumlabError):
    """Enumerated probabilities plus truncation mass do not add up to one."""


class SupportCapError(ScumlabError):
    """Support enumeration exceeded the configured cap before reaching 1 - tau."""


class TruncationHit(ScumlabError):
    """A uniform draw landed in the truncated tail and no extender was supplied."""


class IntractableError(ScumlabError):
    """Requested exhaustive enumeration exceeds the configured budget."""


class DegenerateLagError(ScumlabError):
    """A variation upper bound reaches 1, so the product certificate collapses."""


class UncertifiedTailError(ScumlabError):
    """A constant was requested but no certified tail bound is available."""


class NonPositiveMarginError(ScumlabError):
    """The oscillation margin is not certifiably positive where it is required."""


class NotApplicableError(ScumlabError):
    """Neither concentration constant is certifiably positive for this kernel."""


class TailUnboundedError(ScumlabError):
    """No geometric tail control is available (contraction coefficient is 1)."""


class OrderMismatchError(ScumlabError):
    """A mixture component matrix does not match its declared memory length."""


class NegativeEntryError(ScumlabError):
    """Inclusion-exclusion on the coupling tail function produced a negative
    cell beyond rounding tolerance, which means the inputs were corrupted."""


class UndeterminedError(ScumlabError):
    """The tail family admits no closed-form classification."""


class ZeroKernelValueError(ScumlabError):
    """A relative-entropy rate was requested against a kernel that assigns
    zero probability to a symbol the sampling kernel can emit."""


class NoStationaryMeasureError(ScumlabError):
    """The inter-arrival law has no finite mean, so no stationary measure exists."""


class TailExhaustedError(ScumlabError):
    """The inter-arrival mass is exhausted before the requested state cap."""


class ReferenceUncertainError(ScumlabError):
    """The reference block law's error budget is too large for the check."""


class VarianceBlowupError(ScumlabError):
    """A Monte Carlo confidence interval is too wide for a meaningful verdict."""


class GuardError(ScumlabError):
    """A numerical guard tripped (for instance theta * range too large)."""


class ConfigError(ScumlabError):
    """Experiment configuration failed validation.

    Carries a list of field-level messages so CLI output can show all
    problems at once.
    """

    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        self.messages = list(messages)
        super().__init__("; ".join(self.messages))


class RefutationError(ScumlabError):
    """An empirical estimate exceeded a proved bound beyond its confidence slack.

    This signals an implementation bug (the theorems hold) and maps to a
    dedicated process exit status in the CLI.
    """
