"""Exception types shared across the package."""


class PricingError(Exception):
    """Base class for every error raised by this package."""


class ArgumentError(PricingError, ValueError):
    """An argument is malformed or violates an ordering constraint."""


class DomainError(PricingError, ValueError):
    """A time lies outside the domain on which a curve is defined."""


class ExpiryError(PricingError, ValueError):
    """Valuation time is at or beyond an expiry/maturity."""


class DegenerateVarianceError(PricingError, ValueError):
    """Accumulated variance between two expiries vanishes."""


class ContractViolationError(PricingError, ValueError):
    """Inputs do not satisfy the precondition of a pricing identity."""


class NumericError(PricingError, ArithmeticError):
    """A numerical kernel failed (non-PD matrix, non-positive price, ...)."""


class ConfigError(PricingError, ValueError):
    """A run configuration or numerical grid is invalid."""
