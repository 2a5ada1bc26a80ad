"""Bregman distance generators.

Config names: ``sq_euclid:<gamma>``, ``mahalanobis:<matrix-file>``,
``itakura_saito``, ``kullback_leibler`` and ``none``.

Note on normalization: ``mahalanobis(Q)`` is generated by phi(x) = ½<Qx, x>,
so its distance is ½<Q(x-y), x-y>. With Q = γI it coincides with
``squared_euclidean(γ)``. The unhalved form ||x-y||²_Q is twice this value.
"""
from typing import Callable, Optional

import numpy as np

from core.errors import DomainError, ShapeError
from models.bregman import BregmanDistance, DomainTag
from models.matrix import Matrix, as_matrix, require_same_shape


def _check_domain(d: BregmanDistance, x: Matrix, label: str) -> None:
    if d.domain_tag == DomainTag.POSITIVE_ORTHANT and not np.all(x > 0):
        raise DomainError(f"{d.name}: {label} must have strictly positive entries")


def distance(d: BregmanDistance, x: Matrix, y: Matrix) -> float:
    """
    Evaluate D_phi(x, y).

    Raises:
        ShapeError: If x and y differ in shape
        DomainError: If x or y lies outside the generator's domain
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    require_same_shape(x, y, "Bregman distance operands")
    _check_domain(d, x, "x")
    _check_domain(d, y, "y")
    if d.closed_form is not None:
        return float(d.closed_form(x, y))
    return float(d.phi(x) - d.phi(y) - np.vdot(d.grad_phi(y), x - y))


def squared_euclidean(gamma: float) -> BregmanDistance:
    """phi(x) = (γ/2)||x||², distance (γ/2)||x-y||², mu = ell = γ."""
    if not gamma > 0:
        raise DomainError(f"squared_euclidean requires gamma > 0, got {gamma}")
    gamma = float(gamma)

    def closed_form(x: Matrix, y: Matrix) -> float:
        diff = x - y
        return 0.5 * gamma * float(np.vdot(diff, diff))

    return BregmanDistance(
        name=f"sq_euclid:{gamma!r}",
        phi=lambda x: 0.5 * gamma * float(np.vdot(x, x)),
        grad_phi=lambda x: gamma * np.asarray(x, dtype=np.float64),
        strong_convexity_mu=gamma,
        grad_lipschitz_ell=gamma,
        closed_form=closed_form,
        metric=lambda n: gamma * np.eye(n),
    )


def null_distance() -> BregmanDistance:
    """phi ≡ 0. For blocks whose own objective is strongly convex."""
    return BregmanDistance(
        name="none",
        phi=lambda x: 0.0,
        grad_phi=lambda x: np.zeros_like(np.asarray(x, dtype=np.float64)),
        strong_convexity_mu=0.0,
        grad_lipschitz_ell=0.0,
        closed_form=lambda x, y: 0.0,
        metric=lambda n: np.zeros((n, n)),
    )


def mahalanobis(q: Matrix) -> BregmanDistance:
    """
    phi(x) = ½<Qx, x> for symmetric positive definite Q.

    The distance is ½<Q(x-y), x-y>; mu = λ_min(Q), ell = λ_max(Q).
    Matrix arguments are multiplied by Q from the left (Q must have as many
    columns as they have rows).

    Raises:
        DomainError: If Q is not symmetric to 1e-10 or not positive definite
    """
    q = as_matrix(q, "Mahalanobis matrix")
    if q.shape[0] != q.shape[1]:
        raise ShapeError(f"Mahalanobis matrix must be square, got {q.shape}")
    scale = max(1.0, float(np.max(np.abs(q))))
    if np.max(np.abs(q - q.T)) > 1e-10 * scale:
        raise DomainError("Mahalanobis matrix is not symmetric")
    eigenvalues = np.linalg.eigvalsh(0.5 * (q + q.T))
    if not eigenvalues[0] > 0:
        raise DomainError(f"Mahalanobis matrix is not positive definite (λ_min = {eigenvalues[0]:.3e})")

    def apply(x: Matrix) -> Matrix:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return q @ x
        if x.shape[0] != q.shape[1]:
            raise ShapeError(f"Mahalanobis operand has {x.shape[0]} rows, Q is {q.shape}")
        return q @ x

    def metric(n: int) -> Matrix:
        if n != q.shape[0]:
            raise ShapeError(f"Mahalanobis matrix is {q.shape}, block has {n} rows")
        return q

    def closed_form(x: Matrix, y: Matrix) -> float:
        diff = x - y
        return 0.5 * float(np.vdot(apply(diff), diff))

    return BregmanDistance(
        name="mahalanobis",
        phi=lambda x: 0.5 * float(np.vdot(apply(x), x)),
        grad_phi=apply,
        strong_convexity_mu=float(eigenvalues[0]),
        grad_lipschitz_ell=float(eigenvalues[-1]),
        closed_form=closed_form,
        metric=metric,
    )


def itakura_saito() -> BregmanDistance:
    """
    Distance Σ x log(x/y) - Σ (x - y) on the positive orthant.

    Generated by phi(x) = Σ (x log x - x). Not globally strongly convex and
    grad phi is not globally Lipschitz: mu = ell = 0.
    """

    def phi(x: Matrix) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(np.sum(x * np.log(x) - x))

    def closed_form(x: Matrix, y: Matrix) -> float:
        return float(np.sum(x * np.log(x / y)) - np.sum(x - y))

    return BregmanDistance(
        name="itakura_saito",
        phi=phi,
        grad_phi=lambda x: np.log(np.asarray(x, dtype=np.float64)),
        strong_convexity_mu=0.0,
        grad_lipschitz_ell=0.0,
        domain_tag=DomainTag.POSITIVE_ORTHANT,
        closed_form=closed_form,
    )


def kullback_leibler() -> BregmanDistance:
    """
    Divergence Σ x log(x/y) on the positive orthant.

    Generated by phi(x) = Σ x log x; the closed form agrees with the
    defining Bregman formula for pairs with equal totals (Σx = Σy), which is
    where it is nonnegative. mu = ell = 0.
    """

    def phi(x: Matrix) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float(np.sum(x * np.log(x)))

    def closed_form(x: Matrix, y: Matrix) -> float:
        return float(np.sum(x * np.log(x / y)))

    return BregmanDistance(
        name="kullback_leibler",
        phi=phi,
        grad_phi=lambda x: np.log(np.asarray(x, dtype=np.float64)) + 1.0,
        strong_convexity_mu=0.0,
        grad_lipschitz_ell=0.0,
        domain_tag=DomainTag.POSITIVE_ORTHANT,
        closed_form=closed_form,
    )


def from_config_name(
    spec: str,
    matrix_loader: Optional[Callable[[str], Matrix]] = None,
) -> BregmanDistance:
    """
    Build a generator from its config name.

    Args:
        spec: One of "sq_euclid:<gamma>", "mahalanobis:<matrix-file>",
            "itakura_saito", "kullback_leibler", "none"
        matrix_loader: Reads the Mahalanobis matrix file

    Raises:
        DomainError: If the name is unknown or its argument is invalid
    """
    kind, _, arg = spec.strip().partition(":")
    if kind == "sq_euclid":
        try:
            gamma = float(arg)
        except ValueError as e:
            raise DomainError(f"Invalid gamma in Bregman spec '{spec}'") from e
        return squared_euclidean(gamma)
    if kind == "mahalanobis":
        if not arg or matrix_loader is None:
            raise DomainError(f"Bregman spec '{spec}' needs a matrix file and a loader")
        return mahalanobis(matrix_loader(arg))
    if kind == "itakura_saito" and not arg:
        return itakura_saito()
    if kind == "kullback_leibler" and not arg:
        return kullback_leibler()
    if kind == "none" and not arg:
        return null_distance()
    raise DomainError(f"Unknown Bregman spec: {spec}")
