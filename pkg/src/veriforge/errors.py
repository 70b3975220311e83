"""Exception hierarchy shared across the pipeline."""


class VeriforgeError(Exception):
    """Base class for all pipeline errors."""


class InvalidInput(VeriforgeError):
    """A precondition on caller-supplied data was violated."""


class BackendUnavailable(VeriforgeError):
    """The completion backend could not be reached after retries."""


class MalformedResponse(VeriforgeError):
    """The backend reply did not contain generated text."""


class MockMiss(VeriforgeError):
    """No mock rule matched the prompt and no default was configured."""


class ParseError(VeriforgeError):
    """Model output could not be parsed into the required structure."""


class DuplicateTopic(VeriforgeError):
    """Two corpus documents share the same topic key."""


class UnknownTopic(VeriforgeError):
    """The requested topic is not present in the index."""


class MissingContext(VeriforgeError):
    """A contextualized verification was requested without its context."""


class DimensionMismatch(VeriforgeError):
    """Matrix and weight dimensions disagree."""


class LengthMismatch(VeriforgeError):
    """Aligned judgment lists have different lengths."""


class ConfigError(VeriforgeError):
    """The run configuration is invalid or incomplete."""
