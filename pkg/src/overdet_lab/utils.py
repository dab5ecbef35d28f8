"""
Utility functions shared across the laboratory.
"""

import logging
import math
from functools import wraps
from typing import Any, Callable, Iterable, List, Optional, Union

from .constants import FLOAT_FORMAT, ErrorMessages, Limits
from .errors import BadDimension, InvalidP, ResolutionOutOfRange

logger = logging.getLogger(__name__)

Number = Union[int, float]


# Simple error handling
def safe_execute(error_message: str = "Operation failed",
                 return_value: Any = None,
                 log_errors: bool = True):
    """Decorator for optional diagnostics: log the failure and return a fallback."""
    def decorator(func: Callable) -> Callable:
        @wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                if log_errors:
                    logger.warning("%s in %s: %s", error_message, func.__name__, e)
                return return_value
        return wrapper
    return decorator


# Validation utilities
class ValidationUtils:
    """Input validation utilities."""

    @staticmethod
    def validate_positive_number(value: Number, name: str = "value") -> Number:
        """Validate that a number is positive."""
        if not value > 0:
            raise ValueError(f"{name} must be positive, got {value}")
        return value

    @staticmethod
    def validate_range(value: Number, min_val: Number, max_val: Number,
                       name: str = "value") -> Number:
        """Validate that a value is within a range."""
        if value < min_val or value > max_val:
            raise ResolutionOutOfRange(ErrorMessages.RESOLUTION_OUT_OF_RANGE.format(
                name=name, min_val=min_val, max_val=max_val, value=value))
        return value

    @staticmethod
    def validate_resolution(n_r: int, n_theta: int) -> tuple:
        """Validate a tensor-grid resolution against the supported bounds."""
        ValidationUtils.validate_range(n_r, Limits.MIN_N_R, Limits.MAX_N_R, "n_r")
        ValidationUtils.validate_range(n_theta, Limits.MIN_N_THETA, Limits.MAX_N_THETA, "n_theta")
        if n_theta % 2:
            raise ResolutionOutOfRange(ErrorMessages.ODD_N_THETA.format(value=n_theta))
        return int(n_r), int(n_theta)

    @staticmethod
    def validate_p(p: Number) -> float:
        """Validate a Lebesgue exponent (math.inf allowed)."""
        if math.isnan(p) or p < Limits.MIN_P:
            raise InvalidP(ErrorMessages.INVALID_P.format(p=p))
        return float(p)

    @staticmethod
    def validate_dimension(n: int) -> int:
        """Validate a space dimension for the radial reference."""
        if isinstance(n, bool) or int(n) != n or n < Limits.MIN_DIMENSION:
            raise BadDimension(ErrorMessages.BAD_DIMENSION.format(n=n))
        return int(n)


def parse_number_list(text: str) -> List[float]:
    """Parse '0.04,0.02,inf' into floats; 'inf' and '∞' mean math.inf."""
    values = []
    for item in text.split(","):
        item = item.strip().lower()
        if not item:
            continue
        values.append(math.inf if item in ("inf", "infinity", "∞") else float(item))
    return values


def format_float(value: Optional[float]) -> str:
    """Fixed 17-significant-digit rendering; None renders as an empty string."""
    if value is None:
        return ""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(float(value), FLOAT_FORMAT)


def format_p(p: float) -> str:
    """Short label for an exponent: 2 -> '2', 1.5 -> '1.5', inf -> 'inf'."""
    if math.isinf(p):
        return "inf"
    return format(p, "g")


def finite_or_none(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def max_min_ratio(values: Iterable[Optional[float]]) -> Optional[float]:
    """max/min of the defined positive values, None when undefined."""
    defined = [v for v in values if v is not None and v > 0]
    if not defined:
        return None
    return max(defined) / min(defined)
