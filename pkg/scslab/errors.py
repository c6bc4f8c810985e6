class ScslabError(Exception):
    """ Base class for every error raised by scslab. """


class ConfigurationError(ScslabError):
    """ Invalid run configuration or command line (exit status 2). """


class DomainError(ScslabError, ValueError):
    """ Argument outside the mathematical domain of a function. """


class UnsupportedWeightError(DomainError):
    pass


class SeriesArithmeticError(ScslabError):
    pass


class CRTCapacityError(ScslabError):
    pass


class CacheCorruptionError(ScslabError):
    pass


class ContourDivergenceError(ScslabError):
    pass


class QuadratureError(ScslabError):
    pass


class KernelError(ScslabError):
    pass


class InsufficientCoefficientsError(ScslabError):
    """ The eigenform was built with too few coefficients for the request.

    Args:
        required (int): smallest truncation N that satisfies the request.
        available (int): truncation N of the eigenform at hand.
        what (str): short description of the request.
    """

    def __init__(self, required, available, what=''):
        self.required = int(required)
        self.available = int(available)
        msg = f'{what} needs N >= {self.required} coefficients, eigenform has N = {self.available}'
        super().__init__(msg.strip())
