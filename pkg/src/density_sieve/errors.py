"""Exception hierarchy shared by every density-sieve module.

The CLI maps these onto exit codes:

  2  :class:`SpecError` (bad input, bad document, out-of-range parameter)
  3  :class:`BudgetExceeded` / :class:`CertificationError`
"""


class SieveError(Exception):
    """Base class for all density-sieve failures."""


class SpecError(SieveError, ValueError):
    """Malformed input: parameters, windows, JSON documents, rules."""


class BudgetExceeded(SieveError, RuntimeError):
    """An iteration or size cap was hit before the computation finished."""


class CertificationError(SieveError):
    """A mathematical check that must hold did not hold on the checked range."""


class FamilyRangeError(SieveError, IndexError):
    """A finite cover family was queried past its last set."""
