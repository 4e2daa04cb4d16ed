"""Exception hierarchy shared by solvers, models and the scenario runner.

Admissibility failures carry a machine-readable ``condition`` string so that
guards can be asserted on and reported in run manifests.  Exit-code mapping
used by the CLI / service: config error -> 1, admissibility loss -> 2,
solver failure or blow-up -> 3.
"""


class BilayerError(Exception):
    """Base class for everything raised by this package."""


class ConfigError(BilayerError):
    """Invalid scenario configuration.

    ``violations`` is a list of (line, key, message) tuples; line is None for
    violations introduced by command-line overrides.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(
            f"line {ln if ln is not None else '-'}: {key}: {msg}"
            for ln, key, msg in self.violations
        )
        super().__init__(f"invalid configuration: {lines}")


class AdmissibilityError(BilayerError):
    """A pointwise admissibility condition fails (named in ``condition``)."""

    def __init__(self, condition, margin, location=None, time=None, message=None):
        self.condition = condition
        self.margin = float(margin)
        self.location = location
        self.time = time
        text = message or (
            f"admissibility condition '{condition}' violated "
            f"(margin {self.margin:.3e}"
            + (f" at x={location}" if location is not None else "")
            + (f", t={time:.6g}" if time is not None else "")
            + ")"
        )
        super().__init__(text)


class DepthError(AdmissibilityError):
    """Layer depth h1 or h2 reaches the configured floor."""


class EllipticityError(AdmissibilityError):
    """The variable-coefficient elliptic operator loses positivity."""


class HyperbolicityError(AdmissibilityError):
    """The first-order system loses its symmetrizable-hyperbolic margin."""


class ContractionError(AdmissibilityError):
    """The Neumann-series coefficient fails |xi|_inf < 1."""


class SolverError(BilayerError):
    """Base class for iterative-solver failures."""


class IterationLimitError(SolverError):
    """An iterative solve did not reach tolerance within its budget."""

    def __init__(self, solver, iterations, residual, tol):
        self.solver = solver
        self.iterations = int(iterations)
        self.residual = float(residual)
        self.tol = float(tol)
        super().__init__(
            f"{solver}: no convergence after {iterations} iterations "
            f"(residual {residual:.3e}, tol {tol:.3e})"
        )


class BlowUpError(SolverError):
    """Non-finite values appeared during time integration."""

    def __init__(self, time, what="state"):
        self.time = float(time)
        self.what = what
        super().__init__(f"non-finite {what} at t={time:.6g}")
