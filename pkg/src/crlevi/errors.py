"""Exception hierarchy shared by every crlevi module."""


class CRLeviError(Exception):
    pass


class ExprSyntaxError(CRLeviError):
    def __init__(self, message, text="", offset=0):
        self.offset = offset
        self.line, self.column = _line_col(text, offset)
        super().__init__(f"{message} (line {self.line}, column {self.column})")


class UnknownIdentifier(ExprSyntaxError):
    pass


class BadExponent(ExprSyntaxError):
    pass


class UnboundVariable(CRLeviError):
    pass


class ManifestError(CRLeviError):
    pass


class GenericityFailure(CRLeviError):
    pass


class NearSingularFrame(CRLeviError):
    pass


class ZeroCodirection(CRLeviError):
    pass


class NotAtOrigin(CRLeviError):
    pass


class NotGraphMode(CRLeviError):
    pass


class NuTooSmall(CRLeviError):
    pass


class QuadratureNotConverged(CRLeviError):
    def __init__(self, message, estimate=None):
        self.estimate = estimate
        super().__init__(message)


class InsufficientSpan(CRLeviError):
    pass


class DegenerateFit(CRLeviError):
    pass


def _line_col(text, offset):
    before = text[:offset]
    line = before.count("\n") + 1
    column = offset - (before.rfind("\n") + 1) + 1
    return line, column
