"""Bregman distance generator type."""
from dataclasses import dataclass, field
from typing import Callable, Optional
import enum

from models.matrix import Matrix


class DomainTag(str, enum.Enum):
    """Domain of a Bregman generator."""
    ALL_REALS = "all_reals"
    POSITIVE_ORTHANT = "positive_orthant"


@dataclass(frozen=True)
class BregmanDistance:
    """
    Generator phi of the Bregman distance
    D_phi(x, y) = phi(x) - phi(y) - <grad phi(y), x - y>.

    strong_convexity_mu is the modulus of phi (0 when phi is not globally
    strongly convex); grad_lipschitz_ell the Lipschitz constant of grad phi
    (0 when unavailable). closed_form, when set, evaluates the distance
    directly and takes precedence over the defining formula. metric, set
    only for quadratic generators, returns the Hessian Q of phi for n-row
    operands, so that grad phi(x) = Qx.
    """

    name: str
    phi: Callable[[Matrix], float]
    grad_phi: Callable[[Matrix], Matrix]
    strong_convexity_mu: float
    grad_lipschitz_ell: float
    domain_tag: DomainTag = DomainTag.ALL_REALS
    closed_form: Optional[Callable[[Matrix, Matrix], float]] = field(default=None, compare=False)
    metric: Optional[Callable[[int], Matrix]] = field(default=None, compare=False)

    @property
    def supports_descent_constants(self) -> bool:
        """True when the constants are usable by the descent-constant validators."""
        return self.domain_tag == DomainTag.ALL_REALS
