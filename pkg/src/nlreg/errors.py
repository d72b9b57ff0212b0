"""Exception types raised by nlreg.

Three families matter to callers (and to the CLI exit codes): bad input
(`ConfigError`, `ParameterOutOfRange` and friends), numerical breakdown
(`NumericalFailure` subclasses) and failed invariant checks
(`VerificationFailure`).
"""


class NlregError(Exception):
    pass


class ConfigError(NlregError):
    pass


class ParameterOutOfRange(NlregError, ValueError):
    pass


class SupportViolation(NlregError, ValueError):
    pass


class ShiftTooLarge(NlregError, ValueError):
    pass


class DegenerateGap(NlregError, ValueError):
    pass


class BallNotCompactlyContained(NlregError, ValueError):
    pass


class WindowTooNarrow(NlregError, ValueError):
    pass


class NumericalFailure(NlregError, ArithmeticError):
    pass


class TailNotIntegrable(NumericalFailure):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class SingularSystem(NumericalFailure):
    pass


class PVDivergence(NumericalFailure):
    pass


class VerificationFailure(NlregError):
    pass
