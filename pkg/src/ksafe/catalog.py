"""Shipped example operators.

Each :class:`Example` bundles an operator with the Sobolev order and grid size
its index is computed at.  Rough examples use power-law coefficients whose
grade sits exactly at the safeness threshold for the listed ``l``.
"""

from __future__ import annotations

from dataclasses import dataclass



from .coefficients import Coefficient
from .operators import DiffOp, derivative_operator, divergence_form_laplacian, identity, laplacian, schroedinger_like


@dataclass(frozen=True)
class Example:
    name: str
    operator: DiffOp
    l: int
    N: int
    self_adjoint: bool
    expected_index: tuple[int, int, int]


def smooth_conductivity() -> Coefficient:
    """``1 + cos(x)/2``."""
    return Coefficient.const(1.0, 1) + Coefficient.trig(1, [1], [0.5])


def rough_conductivity(K: int = 4096) -> Coefficient:
    """``1 + 0.3 * PowerLaw(beta=3)``: grade 2, bounded below by about 0.62."""
    return Coefficient.const(1.0, 1) + Coefficient.powerlaw(1, 3, K, seed=0, amp=0.3)


def rough_potential(K: int = 256) -> Coefficient:
    """``1 + 0.5 * PowerLaw(beta=2)``: grade 1."""
    return Coefficient.const(1.0, 1) + Coefficient.powerlaw(1, 2, K, seed=5, amp=0.5)


def positive_laplacian(n: int = 1) -> DiffOp:
    """``1 - Laplacian``."""
    return identity(n) - laplacian(n)


def rough_divergence_laplacian(K: int = 4096) -> DiffOp:
    return divergence_form_laplacian(rough_conductivity(K))


def rough_schroedinger(K: int = 256) -> DiffOp:
    return schroedinger_like(rough_conductivity(K), rough_potential(K), 1.0)


def safe_sweep_operator(K: int = 4096) -> DiffOp:
    """``(1 + cos(x)/2) d^2 + PowerLaw(beta=2)``, 3-safe with a grade-1 potential."""
    return DiffOp.from_terms(1, {(2,): smooth_conductivity(), (0,): Coefficient.powerlaw(1, 2, K, seed=3)})


def unsafe_sweep_operator(K: int = 4096, beta: float = 0.55) -> DiffOp:
    """``a d`` with ``a`` of grade 0; not 1-safe, so unbounded on ``H^1``."""
    return DiffOp.from_terms(1, {(1,): Coefficient.powerlaw(1, beta, K, seed=0)})


def shipped_examples() -> list[Example]:
    return [
        Example("positive_laplacian", positive_laplacian(1), 2, 64, True, (0, 0, 0)),
        Example("derivative", derivative_operator((1,)), 1, 64, False, (1, 1, 0)),
        Example("smooth_divergence_laplacian", divergence_form_laplacian(smooth_conductivity()), 2, 64, True, (1, 1, 0)),
        Example("rough_divergence_laplacian", rough_divergence_laplacian(), 3, 64, True, (1, 1, 0)),
        Example("rough_schroedinger", rough_schroedinger(), 3, 64, True, (0, 0, 0)),
        Example("laplacian_2d", laplacian(2), 2, 16, True, (1, 1, 0)),
    ]


def example(name: str) -> Example:
    for ex in shipped_examples():
        if ex.name == name:
            return ex
    raise KeyError(name)


SWEEP_NS = (128, 256, 512, 1024)
SMOOTHING_CUTOFFS = (16, 32, 64, 128, 256)
EPSILON_MS = (8, 16, 32, 64)


