"""Frozen-coefficient parametrix on the torus.

Coefficients are averaged over small balls around the lattice ``eps Z^n``
(``eps = 2 pi / m``), the frozen constant-coefficient operators are inverted
as Fourier multipliers away from a low-frequency ball, and the localized
pieces are glued with a bump partition of unity.  :func:`splitting_check`
assembles the resulting four-term representation of ``u`` and reports how
well it reproduces ``u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import j1

from .coefficients import sample
from .grid import SpectralField, TorusGrid, sobolev_norm
from .operators import DiffOp
from .spectral import apply


# -- bump profiles ---------------------------------------------------------


def _bump(t: np.ndarray, radius: float) -> np.ndarray:
    """``exp(-1 / (1 - (t/radius)^2))`` inside ``|t| < radius``, zero outside."""
    r = np.abs(t) / radius
    out = np.zeros_like(r, dtype=float)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def profile(t: np.ndarray, radius: float = 1.5) -> np.ndarray:
    """1D partition profile in cell units: the bump divided by its integer
    translates' sum, so that ``sum_k profile(t - k) == 1``."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    reach = math.ceil(radius) + 1
    for k in range(-reach, reach + 1):
        total += _bump(t - k, radius)
    return np.where(_bump(t, radius) > 0.0, _bump(t, radius) / np.where(total > 0, total, 1.0), 0.0)


def smooth_step(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    t = np.asarray(t, dtype=float)

    def h(v):
        return np.where(v > 0, np.exp(-1.0 / np.where(v > 0, v, 1.0)), 0.0)

    a, b = h(t), h(1.0 - t)
    return a / (a + b)


def cutoff_function(xi_norm: np.ndarray, K_c: float, width: float = 1.0) -> np.ndarray:
    """``kappa``: 1 on the ball of radius ``K_c``, 0 beyond ``K_c + width``."""
    return 1.0 - smooth_step((np.asarray(xi_norm) - K_c) / width)


# -- partition -------------------------------------------------------------


@dataclass(frozen=True)
class BumpPartition:
    """Partition of unity ``phi_j(x) = phi_0((x - eps j)/eps)`` on ``T^n``.

    In ``n = 2`` the profile is the tensor product of the 1D profile.
    """

    m: int
    n: int = 1
    radius: float = 1.5

    @property
    def epsilon(self) -> float:
        return 2 * np.pi / self.m

    @cached_property
    def center_indices(self) -> list[tuple]:
        return [tuple(j) for j in np.ndindex(*([self.m] * self.n))]

    def center(self, j: tuple) -> np.ndarray:
        return self.epsilon * np.asarray(j, dtype=float)

    def displacement(self, x: np.ndarray, j: tuple) -> np.ndarray:
        """Periodic displacement ``(x - eps j)/eps`` in cell units, shape like ``x``."""
        c = self.center(j).reshape((self.n,) + (1,) * (x.ndim - 1))
        d = np.mod(x - c + np.pi, 2 * np.pi) - np.pi
        return d / self.epsilon

    def phi(self, x: np.ndarray, j: tuple) -> np.ndarray:
        """Values of ``phi_j`` at points ``x`` of shape ``(n, ...)``."""
        t = self.displacement(x, j)
        out = np.ones(x.shape[1:])
        for c in range(self.n):
            out = out * profile(t[c], self.radius)
        return out

    def support_mask(self, x: np.ndarray, j: tuple) -> np.ndarray:
        t = self.displacement(x, j)
        return np.all(np.abs(t) < self.radius, axis=0)

    def values(self, grid: TorusGrid, padded: bool = True) -> np.ndarray:
        """All ``phi_j`` on the grid, shape ``(m^n, ...)`` in center order."""
        x = grid.points(padded)
        return np.array([self.phi(x, j) for j in self.center_indices])


def build_partition(m: int, n: int = 1, radius: float = 1.5) -> BumpPartition:
    if m < 4:
        raise ValueError(f"need at least 4 cells, got m={m}")
    if radius <= 0.5:
        raise ValueError(f"support radius {radius} cells is too narrow to cover the torus")
    if radius * 2 * np.pi / m >= np.pi:
        raise ValueError("bump support wraps around the torus")
    return BumpPartition(m, n, radius)


# -- averaging and freezing ------------------------------------------------


def _ball_mean_multiplier(grid: TorusGrid, epsilon: float) -> np.ndarray:
    """Fourier multiplier of the ball average of radius ``epsilon``."""
    t = np.sqrt(grid.xi_sq) * epsilon
    if grid.n == 1:
        return np.sinc(t / np.pi)
    safe = np.where(t > 0, t, 1.0)
    return np.where(t > 0, 2 * j1(safe) / safe, 1.0)


def _check_resolution(grid: TorusGrid, epsilon: float):
    cells = 2 * epsilon / (2 * np.pi / grid.N)
    if cells < 4:
        raise ValueError(f"ball of radius {epsilon:.4g} spans only {cells:.2f} grid cells (need 4)")


def average_coefficient(a: SpectralField, center, epsilon: float) -> np.ndarray:
    """Mean of ``a`` over the ball of radius ``epsilon`` about ``center``.

    Evaluated exactly for the sampled (bandlimited) field: each Fourier mode
    averages to ``exp(i xi . c)`` times the ball multiplier.  Returns one value
    per component.
    """
    grid = a.grid
    _check_resolution(grid, epsilon)
    c = np.asarray(center, dtype=float).reshape(grid.n, *([1] * grid.n))
    phase = np.exp(1j * np.sum(grid.xi * c, axis=0))
    vals = np.sum(a.data * _ball_mean_multiplier(grid, epsilon) * phase, axis=tuple(range(1, grid.n + 1)))
    return vals.real if a.real else vals


def ball_averages(a: SpectralField, epsilon: float) -> np.ndarray:
    """Ball means of ``a`` centered at every point of the unpadded grid."""
    _check_resolution(a.grid, epsilon)
    smoothed = a.data * _ball_mean_multiplier(a.grid, epsilon)
    vals = a.grid.to_physical(smoothed, padded=False)
    return vals.real if a.real else vals


@dataclass
class FrozenOperator:
    """Constant-coefficient operator ``sum_i ahat_i d^i`` frozen at a lattice point."""

    center: tuple
    coeffs: dict
    n: int
    q: int
    s: int

    def symbol(self, grid: TorusGrid) -> np.ndarray:
        """Full symbol ``sum_i ahat_i (i xi)^i``, shape ``(q, q, N, ..., N)``."""
        out = np.zeros((self.q, self.q) + grid.shape, dtype=complex)
        for i, A in self.coeffs.items():
            out += A.reshape(self.q, self.q, *([1] * grid.n)) * grid.derivative_symbol(i)
        return out

    def apply(self, u: SpectralField) -> SpectralField:
        return SpectralField(u.grid, _mult(self.symbol(u.grid), u.data), u.real, check=False)


def _mult(sym: np.ndarray, data: np.ndarray) -> np.ndarray:
    return np.einsum("ab...,b...->a...", sym, data)


def freeze(P: DiffOp, partition: BumpPartition, grid: TorusGrid) -> list[FrozenOperator]:
    """One frozen operator per lattice center, coefficients by ball averaging."""
    if grid.N % partition.m:
        raise ValueError(f"grid N={grid.N} is not a multiple of m={partition.m}")
    step = grid.N // partition.m
    averaged = {}
    for i, A in P.coeffs:
        field = sample(A, grid)
        vals = ball_averages(field, partition.epsilon)
        averaged[i] = vals
    out = []
    for j in partition.center_indices:
        pos = tuple(step * jc for jc in j)
        coeffs = {i: vals[(slice(None),) + pos].reshape(P.q, P.q) for i, vals in averaged.items()}
        out.append(FrozenOperator(j, coeffs, P.n, P.q, P.s))
    return out


# -- near inverse ----------------------------------------------------------


@dataclass
class NearInverse:
    """Fourier multiplier ``(1 - kappa) Ptilde^{-1}`` of a frozen operator."""

    multiplier: np.ndarray
    kappa: np.ndarray
    s: int

    def apply(self, v: SpectralField) -> SpectralField:
        return SpectralField(v.grid, _mult(self.multiplier, v.data), v.real, check=False)

    def smoothing(self, v: SpectralField) -> SpectralField:
        """The remainder ``rho = E P - 1``, i.e. the multiplier ``-kappa``."""
        return SpectralField(v.grid, -self.kappa * v.data, v.real, check=False)

    def sobolev_gain_norm(self, grid: TorusGrid) -> float:
        """``||E||_{H^sigma -> H^(sigma+s)}``; independent of sigma for multipliers."""
        m = np.moveaxis(self.multiplier, (0, 1), (-2, -1))
        norms = np.linalg.norm(m, ord=2, axis=(-2, -1))
        return float(np.max(norms * grid.sobolev_weight(self.s / 2)))


def near_inverse(F: FrozenOperator, grid: TorusGrid, K_c: float = 2.0, tol: float = 1e-12) -> NearInverse:
    sym = F.symbol(grid)
    kappa = cutoff_function(np.sqrt(grid.xi_sq), K_c)
    active = kappa < 1.0
    m = np.moveaxis(sym, (0, 1), (-2, -1))
    det = np.abs(np.linalg.det(m))
    if np.any(det[active] <= tol * max(1.0, float(np.max(det)))):
        raise ValueError("frozen symbol vanishes outside the cutoff ball; operator is not elliptic there")
    inv = np.zeros_like(m)
    inv[active] = np.linalg.inv(m[active])
    mult = np.moveaxis(inv * (1.0 - kappa)[..., None, None], (-2, -1), (0, 1))
    return NearInverse(mult, kappa, F.s)


# -- splitting identity ----------------------------------------------------


@dataclass
class SplittingResult:
    residual: float
    u_norm: float
    source_term: float
    freezing_term: float
    commutator_term: float
    smoothing_term: float

    @property
    def relative_residual(self) -> float:
        return self.residual / self.u_norm if self.u_norm else self.residual

    @property
    def er_coefficient(self) -> float:
        return self.freezing_term / self.u_norm if self.u_norm else 0.0

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "u_norm": self.u_norm,
            "relative_residual": self.relative_residual,
            "terms": {
                "source": self.source_term,
                "freezing": self.freezing_term,
                "commutator": self.commutator_term,
                "smoothing": self.smoothing_term,
            },
        }


def splitting_check(
    P: DiffOp, u: SpectralField, partition: BumpPartition, K_c: float = 2.0, l: float | None = None
) -> SplittingResult:
    """Rebuild ``u`` from ``f = P u`` through the localized frozen inverses.

    For every center ``j`` (with ``M_j`` multiplication by ``phi_j``):

        M_j u = E_j(M_j f) - E_j R_j u + E_j Q_j u - rho_j(M_j u),

    where ``R_j u = M_j (P - P_j) u`` and ``Q_j = P_j M_j - M_j P_j``.  The sum
    over ``j`` is finite and reproduces ``u``; the residual measures the
    discrete failure of that identity in ``H^l``.
    """
    grid = u.grid
    l = P.s if l is None else l
    f = apply(P, u)
    frozen = freeze(P, partition, grid)
    phis = partition.values(grid, padded=True)

    def mul(k: int, v: SpectralField) -> SpectralField:
        data = grid.from_physical(phis[k] * grid.to_physical(v.data))
        return SpectralField(grid, data, v.real, check=False)

    zeros = np.zeros_like(u.data)
    acc = {name: SpectralField(grid, zeros, u.real, check=False) for name in ("src", "frz", "com", "smo")}
    for k, F in enumerate(frozen):
        E = near_inverse(F, grid, K_c)
        Fu = F.apply(u)
        phi_u = mul(k, u)
        R_u = mul(k, f - Fu)
        Q_u = F.apply(phi_u) - mul(k, Fu)
        acc["src"] = acc["src"] + E.apply(mul(k, f))
        acc["frz"] = acc["frz"] - E.apply(R_u)
        acc["com"] = acc["com"] + E.apply(Q_u)
        acc["smo"] = acc["smo"] - E.smoothing(phi_u)
    rhs = acc["src"] + acc["frz"] + acc["com"] + acc["smo"]
    return SplittingResult(
        residual=sobolev_norm(u - rhs, l),
        u_norm=sobolev_norm(u, l),
        source_term=sobolev_norm(acc["src"], l),
        freezing_term=sobolev_norm(acc["frz"], l),
        commutator_term=sobolev_norm(acc["com"], l),
        smoothing_term=sobolev_norm(acc["smo"], l),
    )


# -- freezing error --------------------------------------------------------


def freezing_error(P: DiffOp, partition: BumpPartition, grid: TorusGrid) -> float:
    """``A(eps)``: largest deviation of a top-order coefficient from its frozen
    value over the support of the matching bump."""
    x = grid.points(padded=True)
    step = grid.N // partition.m
    worst = 0.0
    for i, A in P.leading().items():
        field = sample(A, grid)
        vals = field.values(padded=True)
        avg = ball_averages(field, partition.epsilon)
        for j in partition.center_indices:
            pos = tuple(step * jc for jc in j)
            mask = partition.support_mask(x, j)
            diff = np.abs(vals[(slice(None),) + (mask,)] - avg[(slice(None),) + pos][:, None])
            worst = max(worst, float(np.max(diff)))
    return worst


def freezing_error_sweep(P: DiffOp, ms, grid: TorusGrid, radius: float = 1.5) -> list[tuple[float, float]]:
    """``[(eps, A(eps))]`` for ``eps = 2 pi / m``, sorted by ``eps``."""
    rows = [(2 * np.pi / m, freezing_error(P, build_partition(m, P.n, radius), grid)) for m in ms]
    return sorted(rows)


def fitted_rate(rows) -> float:
    """Slope of ``log A`` against ``log eps``."""
    eps, err = np.array(rows, dtype=float).T
    return float(np.polyfit(np.log(eps), np.log(err), 1)[0])


def near_inverse_norms(P: DiffOp, ms, grid: TorusGrid, K_c: float = 2.0) -> list[tuple[float, float]]:
    """``[(eps, max_j ||E_{j,eps}||)]`` over an epsilon sweep."""
    rows = []
    for m in ms:
        part = build_partition(m, P.n)
        norms = [near_inverse(F, grid, K_c).sobolev_gain_norm(grid) for F in freeze(P, part, grid)]
        rows.append((2 * np.pi / m, max(norms)))
    return sorted(rows)


def parametrix_sweep(P: DiffOp, u: SpectralField, ms, K_c: float = 2.0, l: float | None = None) -> list[dict]:
    """Rows ``(epsilon, A_eps, ER_coefficient, residual)`` for each lattice size."""
    rows = []
    for m in ms:
        part = build_partition(m, P.n)
        res = splitting_check(P, u, part, K_c, l)
        rows.append({
            "epsilon": part.epsilon,
            "A_eps": freezing_error(P, part, u.grid),
            "ER_coefficient": res.er_coefficient,
            "residual": res.residual,
        })
    return sorted(rows, key=lambda r: r["epsilon"])
