"""Exception hierarchy.

Every error carries the CLI exit code of its family so the command line
front end can map failures without a lookup table:

    2  validation (bad parameters, bad input data)
    3  estimation (the regression cannot be formed or solved)
    4  numerical (quadrature, divergence, Monte Carlo breakdown)
"""


class CklsError(Exception):
    exit_code = 1


class ValidationError(CklsError, ValueError):
    exit_code = 2


class EstimationError(CklsError):
    exit_code = 3


class NumericalError(CklsError, ArithmeticError):
    exit_code = 4


# -- model / input validation --------------------------------------------

class NonPositiveParameter(ValidationError):
    pass


class AlphaOutOfRange(ValidationError):
    pass


class InvalidDynamics(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


class StepTooLarge(ValidationError):
    pass


class TargetEqualsStart(ValidationError):
    pass


class AtAsymptoticMean(ValidationError):
    pass


class FellerViolated(ValidationError):
    pass


class NonUniformGrid(ValidationError):
    pass


class NonPositiveRates(ValidationError):
    pass


# -- estimation ------------------------------------------------------------

class TooFewUsableSteps(EstimationError):
    pass


class ExcessiveDropping(EstimationError):
    pass


class SingularDesign(EstimationError):
    pass


# -- numerics --------------------------------------------------------------

class NonFiniteEvaluation(NumericalError):
    pass


class DivergentTail(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class MomentDiverges(NumericalError):
    pass


class DiffusionUndefined(NumericalError):
    pass


class StationaryAbsent(NumericalError):
    pass


class ExcessiveCensoring(NumericalError):
    pass
