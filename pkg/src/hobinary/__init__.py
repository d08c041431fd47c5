"""Higher-order binary options with time-dependent coefficients and
defaultable bonds with discrete default information."""

from .binary_engine import BinaryQuote, BinarySpec, price_binary, shift_rate_equivalence
from .bond_pricer import (
    BondContract,
    BondQuote,
    Endogenous,
    Exogenous,
    PricedCurve,
    PricerSettings,
    base_contract,
    credit_spread,
    price_bond,
    relative_price,
    spread_curve,
)
from .errors import PricingError
from .mvn import InverseCovariance, bivariate_cdf, mvn_cdf
from .short_rate import FirmParams, VasicekParams, zcb_price
from .term_structure import CoefficientCurve

__version__ = "0.1.0"

__all__ = [
    "BinaryQuote",
    "BinarySpec",
    "BondContract",
    "BondQuote",
    "CoefficientCurve",
    "Endogenous",
    "Exogenous",
    "FirmParams",
    "InverseCovariance",
    "PricedCurve",
    "PricerSettings",
    "PricingError",
    "VasicekParams",
    "base_contract",
    "bivariate_cdf",
    "credit_spread",
    "mvn_cdf",
    "price_binary",
    "price_bond",
    "relative_price",
    "shift_rate_equivalence",
    "spread_curve",
    "zcb_price",
]
