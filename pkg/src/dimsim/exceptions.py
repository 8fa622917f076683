class DimsimError(Exception):
    """Base class of every error raised by dimsim."""


class ValidationError(DimsimError, ValueError):
    """An input violates a documented precondition."""


class GridError(ValidationError):
    """A time index or horizon does not exist on the simulation grid."""


class DegenerateDistributionError(DimsimError):
    """The data carry no spread (zero variance or collapsed percentiles)."""


class NoFitError(DimsimError):
    """A Johnson moment fit did not converge."""


class ConvergenceError(DimsimError):
    """An iterative optimizer failed.

    Parameters
    ----------
    diagnostics : :obj:`dict`
        Iteration count, last loss and gradient norm at failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class EstimationError(DimsimError):
    """An estimator failed at a given time step.

    Parameters
    ----------
    method_id : :obj:`str`
    t : :obj:`float`
        Simulation time of the failing cross-section, None if the failure is
        not tied to a time step.
    """

    def __init__(self, message, method_id="", t=None):
        if t is not None:
            message = f"{method_id} at t={t:.6g}: {message}"
        elif method_id:
            message = f"{method_id}: {message}"
        super().__init__(message)
        self.method_id = method_id
        self.t = t
