"""Exception hierarchy shared across the toolkit.

Validation problems (bad records, unknown language codes, malformed
configuration) raise :class:`CorpusValidationError`; anything that went
wrong talking to an external scorer or generator raises
:class:`BackendError`.  The CLI maps the former to exit code 1 and the
latter (together with IO failures) to exit code 2.
"""


class DetoxkitError(Exception):
    """Base class for all toolkit errors."""


class CorpusValidationError(DetoxkitError):
    """A record, lexicon or configuration value failed validation."""


class BackendError(DetoxkitError):
    """A scorer or generator backend is unreachable or misbehaving."""


class TemplateNotFoundError(DetoxkitError):
    """No system-prompt template exists for the requested language."""


class DegenerateDataError(DetoxkitError):
    """ANOVA input where every observation is identical (SSB == SSW == 0)."""
