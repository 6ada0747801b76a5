"""Exception types shared across the package."""


class ClaspError(Exception):
    """Base class for all errors raised by this package."""


class ShapeError(ClaspError):
    """Operands have incompatible shapes."""

    def __init__(self, op, *shapes):
        super().__init__(f"{op}: incompatible shapes {' vs '.join(str(tuple(s)) for s in shapes)}")


class NumericalError(ClaspError):
    """A value that must be finite is NaN or infinite."""


class ContractError(ClaspError):
    """An operation was called outside its contract."""


class MissingParamError(ClaspError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"missing generation parameter: {name}")


class InvalidParamError(ClaspError):
    """A generation parameter is non-finite or out of range."""


class TemplateError(ClaspError):
    """Unknown caption template id."""


class ConfigError(ClaspError):
    """Invalid generator or training configuration."""


class SplitError(ClaspError):
    """Corpus too small to split."""


class ParseError(ClaspError):
    def __init__(self, message, line_no=None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class VersionError(ClaspError):
    """Schema or file-format version mismatch."""


class VocabError(ClaspError):
    """Token index outside the vocabulary."""


class InputTooShortError(ClaspError):
    """Signal shorter than the encoder's minimum length."""


class InvalidSignalError(ClaspError):
    """Signal contains non-finite samples or is empty."""


class DivergenceError(ClaspError):
    """Training loss became non-finite."""


class CheckpointError(ClaspError):
    """Corrupt, truncated, or wrong-version checkpoint file."""


class IndexError_(ClaspError):
    """Cannot build an index from zero items."""


class ModalityError(ClaspError):
    """Query modality does not match the index modality."""


class StaleIndexError(ClaspError):
    """Index was built with a different model than the one supplied."""


class LeakageError(ClaspError):
    """Evaluation set overlaps the training set."""
