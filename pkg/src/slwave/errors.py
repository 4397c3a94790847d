"""Exception hierarchy shared by all modules."""


class SlwaveError(Exception):
    """Base class for package errors."""


class ConfigurationError(SlwaveError, ValueError):
    """Bad user input: grid parameters, config files, expressions."""


class NumericalError(SlwaveError, RuntimeError):
    """A numerical procedure failed or left its validity region."""


class AdmissibilityError(NumericalError):
    """Problem data violates an admissibility requirement (lower bound,
    degenerate kernel basis, inadmissible gauge)."""


class ContractError(SlwaveError, ValueError):
    """An argument does not carry the data the operation requires."""


class InternalError(SlwaveError, RuntimeError):
    """A cross-assertion between two internal routes disagreed."""


class VerificationFailure(SlwaveError, RuntimeError):
    """One or more verification checks failed."""
