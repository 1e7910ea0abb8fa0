"""Exception hierarchy shared by every burstloc module."""


class BurstLocError(Exception):
    """Base class for all library errors."""


class ValidationError(BurstLocError, ValueError):
    """A domain object violates one of its invariants."""


class MalformedSection(BurstLocError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DanglingEndpoint(BurstLocError):
    def __init__(self, pipe, node):
        self.pipe = pipe
        self.node = node
        super().__init__(f"pipe {pipe} references unknown node {node}")


class DuplicateId(BurstLocError):
    def __init__(self, kind, ident):
        self.ident = ident
        super().__init__(f"duplicate {kind} id {ident}")


class MissingFlow(BurstLocError):
    def __init__(self, pipe):
        self.pipe = pipe
        super().__init__(f"no flow entry for pipe {pipe}")


class UnknownNode(BurstLocError, KeyError):
    def __init__(self, node):
        self.node = node
        super().__init__(f"unknown node {node}")

    def __str__(self):
        return self.args[0]


class UnknownLink(BurstLocError, KeyError):
    def __init__(self, link):
        self.link = link
        super().__init__(f"unknown pipe {link}")

    def __str__(self):
        return self.args[0]


class PositionOutOfRange(ValidationError):
    pass


class MalformedRow(BurstLocError):
    def __init__(self, message, line):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NonMonotoneTime(BurstLocError):
    pass


class LengthMismatch(BurstLocError, ValueError):
    pass


class WindowTooShort(BurstLocError, ValueError):
    pass


class NoEvents(BurstLocError):
    pass


class NoPredecessor(BurstLocError):
    pass


class FeedClosed(BurstLocError):
    pass


class NoBurstFound(BurstLocError):
    pass


class ZeroTotal(BurstLocError, ZeroDivisionError):
    pass
