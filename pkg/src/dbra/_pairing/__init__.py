"""Self-contained BLS12 pairing backend (gmpy2 bignum arithmetic)."""

from .pairing import Curve, get_curve

__all__ = ["Curve", "get_curve"]
