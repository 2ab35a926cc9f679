"""Exception hierarchy shared by every ctxbias module."""


class CtxBiasError(Exception):
    """Base class for all package errors."""


class DataError(CtxBiasError):
    """Malformed or inconsistent input data (CLI exit code 1)."""


class FormatError(DataError):
    """A file or in-memory table violates its declared format."""


class ConfigError(CtxBiasError):
    """Inconsistent configuration, e.g. a scorer lacking required tokens (CLI exit code 2)."""


class AlphabetError(CtxBiasError):
    """Two machines were combined over different symbol alphabets."""


class UnsupportedStructureError(CtxBiasError):
    """The machine has structure an algorithm does not handle (cycles)."""


class PreconditionError(CtxBiasError):
    """An operation's input does not satisfy its precondition."""


class EmptyLanguageError(CtxBiasError):
    """The machine accepts no string."""


class NoPronunciationMatch(CtxBiasError):
    """No word sequence in the mapping transducer matches a pronunciation."""


class EmptyResultError(CtxBiasError):
    """Beam search finished without any complete hypothesis."""
