class IntegrationError(RuntimeError):
    """Norm drift beyond the failure threshold; usually a too-large time step."""


class ModelInconsistencyError(RuntimeError):
    """Numerical and analytic free decay rates disagree (grid too coarse)."""


class OracleError(RuntimeError):
    pass
