"""Exception hierarchy shared by all corefpipe modules."""


class CorefPipeError(Exception):
    """Base class for every error raised on purpose by this package."""


class TreebankParseError(CorefPipeError, ValueError):
    """Malformed bracketed tree. ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class ConllFormatError(CorefPipeError, ValueError):
    pass


class IntegrityError(CorefPipeError, ValueError):
    pass


class SchemaVersionError(CorefPipeError, ValueError):
    pass


class AlignmentError(CorefPipeError, ValueError):
    pass


class ManifestError(CorefPipeError, ValueError):
    pass
