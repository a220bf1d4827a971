"""Exception types shared across the package.

Two failure classes are distinguished because the CLI maps them to exit
codes: malformed or inconsistent inputs (exit 2) versus numerical
failures inside an otherwise well-posed computation (exit 3).
"""


class InputError(Exception):
    """Raised for malformed, inconsistent, or out-of-range input data."""


class NumericalError(Exception):
    """Raised when a numerical procedure cannot produce a result
    (degenerate regression, non-convergent bootstrap, arbitrage-violating
    quotes)."""
