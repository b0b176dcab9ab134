"""Fourier-spectral numerics for graded operators on ``T^1`` and ``T^2``.

Operator matrices are written in Sobolev-orthonormal bases: the domain basis
is ``e_xi / (1+|xi|^2)^(l/2)`` and the codomain basis
``e_eta / (1+|eta|^2)^((l-s)/2)``, so singular values of the matrix are the
``H^l -> H^(l-s)`` operator data of the Galerkin truncation.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .coefficients import Coefficient, PowerLaw, map_leaves, powerlaw_as_trig
from .grid import SpectralField, TorusGrid, random_field, sobolev_norm
from .operators import DiffOp, formal_adjoint, is_elliptic, is_safe

log = logging.getLogger(__name__)

DENSE_LIMIT = 4096


@lru_cache(maxsize=256)
def _coefficient_physical(c: Coefficient, grid: TorusGrid) -> np.ndarray:
    out = grid.to_physical(c.spectrum(grid)).real
    out.setflags(write=False)
    return out


def apply(P: DiffOp, u: SpectralField) -> SpectralField:
    """``P u`` with spectral derivatives and dealiased coefficient products."""
    grid = u.grid
    if grid.n != P.n or u.q != P.q:
        raise ValueError(f"field (n={grid.n}, q={u.q}) does not fit operator (n={P.n}, q={P.q})")
    acc = np.zeros((P.q,) + grid.padded_shape, dtype=complex)
    for i, A in P.coeffs:
        du = grid.to_physical(grid.derivative_symbol(i) * u.data)
        acc += np.einsum("ab...,b...->a...", _coefficient_physical(A, grid), du)
    return SpectralField(grid, grid.from_physical(acc), real=u.real, check=False)


def apply_transpose(P: DiffOp, v: SpectralField) -> SpectralField:
    """Conjugate transpose of the discrete operator in the plain Fourier basis."""
    grid = v.grid
    out = np.zeros((P.q,) + grid.shape, dtype=complex)
    pv = grid.to_physical(v.data)
    for i, A in P.coeffs:
        prod = grid.from_physical(np.einsum("ba...,b...->a...", _coefficient_physical(A, grid), pv))
        out += np.conj(grid.derivative_symbol(i)) * prod
    return SpectralField(grid, out, real=v.real, check=False)


# -- matrices --------------------------------------------------------------


def _modes(grid: TorusGrid) -> np.ndarray:
    """Wavevectors of all retained modes, shape ``(N^n, n)`` in C order."""
    return grid.xi.reshape(grid.n, -1).T


def _weights(grid: TorusGrid, P: DiffOp, l: float, order: int | None = None):
    s = P.s if order is None else order
    sq = grid.xi_sq.ravel()
    w_in = np.tile((1.0 + sq) ** (-l / 2), P.q)
    w_out = np.tile((1.0 + sq) ** ((l - s) / 2), P.q)
    return w_in, w_out


def fourier_matrix(P: DiffOp, grid: TorusGrid) -> np.ndarray:
    """Matrix of the truncated operator in the plain Fourier basis.

    Entry ``[(a, eta), (b, xi)]`` is ``sum_i A_i[a, b]^(eta - xi) (i xi)^i``,
    the convolution form of :func:`apply`.  Block layout is component-major.
    """
    if grid.n != P.n:
        raise ValueError("grid dimension does not match the operator")
    m = grid.size
    total = P.q * m
    if total > DENSE_LIMIT:
        raise ValueError(f"{total} modes exceed the dense limit of {DENSE_LIMIT}")
    k = _modes(grid)
    h = grid.N // 2
    diff = (k[:, None, :] - k[None, :, :]).astype(np.int32)
    valid = np.all((diff > -h) & (diff <= h), axis=-1)
    lookup = tuple(diff[..., c] % grid.N for c in range(grid.n))
    out = np.zeros((total, total), dtype=complex)
    for i, A in P.coeffs:
        spec = A.spectrum(grid)
        dsym = grid.derivative_symbol(i).ravel()
        for a in range(P.q):
            for b in range(P.q):
                conv = np.where(valid, spec[a, b][lookup], 0.0)
                out[a * m:(a + 1) * m, b * m:(b + 1) * m] += conv * dsym[None, :]
    return out


def operator_matrix(P: DiffOp, grid: TorusGrid, l: float, order: int | None = None) -> np.ndarray:
    """Dense ``H^l -> H^(l-s)`` matrix in Sobolev-orthonormal bases.

    ``order`` overrides ``s`` in the codomain weight, e.g. for a difference of
    two order-s operators whose leading parts cancel.
    """
    w_in, w_out = _weights(grid, P, l, order)
    return w_out[:, None] * fourier_matrix(P, grid) * w_in[None, :]


# -- norms -----------------------------------------------------------------


@dataclass(frozen=True)
class NormEstimate:
    value: float
    iterations: int
    converged: bool

    def __float__(self):
        return self.value


def power_iteration(matvec, rmatvec, dim: int, rng, maxiter=200, rtol=1e-10) -> NormEstimate:
    """Largest singular value by power iteration on the normal operator."""
    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    sigma = 0.0
    for it in range(1, maxiter + 1):
        y = rmatvec(matvec(x))
        lam = np.linalg.norm(y)
        if lam == 0.0:
            return NormEstimate(0.0, it, True)
        new = float(np.sqrt(lam))
        x = y / lam
        if sigma and abs(new - sigma) <= rtol * new:
            return NormEstimate(new, it, True)
        sigma = new
    return NormEstimate(sigma, maxiter, False)


def operator_norm_estimate(
    P: DiffOp, grid: TorusGrid, l: float, trials: int = 1, seed: int = 0,
    maxiter: int = 200, rtol: float = 1e-10, order: int | None = None,
) -> NormEstimate:
    """Estimate ``||P||_{H^l -> H^(l-s)}`` of the Galerkin truncation.

    Dense when the mode count allows it, matrix-free otherwise; the best of
    ``trials`` random starts is returned.
    """
    rng = np.random.default_rng(seed)
    w_in, w_out = _weights(grid, P, l, order)
    dim = len(w_in)
    if dim <= DENSE_LIMIT:
        mat = operator_matrix(P, grid, l, order)
        matvec = mat.__matmul__
        rmatvec = mat.conj().T.__matmul__
    else:
        shape = (P.q,) + grid.shape

        def matvec(x):
            u = SpectralField(grid, (w_in * x).reshape(shape), check=False)
            return w_out * apply(P, u).data.ravel()

        def rmatvec(y):
            v = SpectralField(grid, (w_out * y).reshape(shape), check=False)
            return w_in * apply_transpose(P, v).data.ravel()

    best = None
    for _ in range(trials):
        est = power_iteration(matvec, rmatvec, dim, rng, maxiter, rtol)
        if best is None or est.value > best.value:
            best = est
    if not best.converged:
        log.debug("power iteration did not reach rtol=%g in %d iterations", rtol, maxiter)
    return best


# -- index -----------------------------------------------------------------


@dataclass
class IndexReport:
    l: float
    dim_ker: int
    dim_coker: int
    index: int
    singular_value_gap: float
    resolved: bool
    sigma_max: float
    zero_cluster: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "l": self.l,
            "dim_ker": self.dim_ker,
            "dim_coker": self.dim_coker,
            "index": self.index,
            "singular_value_gap": _finite(self.singular_value_gap),
            "resolved": self.resolved,
            "sigma_max": self.sigma_max,
            "zero_cluster": [float(x) for x in self.zero_cluster],
            "flags": list(self.flags),
        }


def _finite(x):
    return x if np.isfinite(x) else "inf"


def zero_cluster(sigma: np.ndarray, rel_threshold: float = 1e-7) -> tuple[int, float]:
    """Number of singular values in the zero cluster and the gap ratio.

    The gap is the smallest retained singular value divided by the largest
    clustered one, or by the cutoff ``rel_threshold * sigma_max`` when the
    cluster is empty.
    """
    sigma = np.sort(np.asarray(sigma))[::-1]
    cut = rel_threshold * sigma[0]
    zeros = sigma[sigma < cut]
    kept = sigma[sigma >= cut]
    ref = zeros[0] if len(zeros) else cut
    if len(kept) == 0:
        return len(zeros), 0.0
    gap = np.inf if ref == 0.0 else float(kept[-1] / ref)
    return len(zeros), gap


def index_report(
    P: DiffOp, l: float, grid: TorusGrid, rel_threshold: float = 1e-7,
    gap_threshold: float = 1e3, check_preconditions: bool = True,
) -> IndexReport:
    """Kernel, cokernel and index of the truncated ``P : H^l -> H^(l-s)``.

    Preconditions (ellipticity, l-safeness) and an unresolved singular-value
    gap are recorded in ``flags``; nothing is raised.
    """
    flags = []
    if check_preconditions:
        if not is_elliptic(P).elliptic:
            flags.append("precondition failed: operator is not elliptic")
        if not is_safe(P, l).overall:
            flags.append(f"precondition failed: operator is not {l}-safe")
    mat = operator_matrix(P, grid, l)
    sigma = np.linalg.svd(mat, compute_uv=False)
    count, gap = zero_cluster(sigma, rel_threshold)
    rank = mat.shape[1] - count
    dim_ker = mat.shape[1] - rank
    dim_coker = mat.shape[0] - rank
    resolved = gap >= gap_threshold
    if not resolved:
        flags.append(f"unresolved singular value gap {gap:.3g} < {gap_threshold:g}")
    zeros = np.sort(sigma)[:count]
    return IndexReport(l, dim_ker, dim_coker, dim_ker - dim_coker, gap, resolved,
                       float(sigma.max()), list(zeros), flags)


def kernel_dimension(P: DiffOp, l: float, grid: TorusGrid, rel_threshold: float = 1e-7) -> int:
    sigma = np.linalg.svd(operator_matrix(P, grid, l), compute_uv=False)
    return zero_cluster(sigma, rel_threshold)[0]


def cokernel_duality(P: DiffOp, l: float, grid: TorusGrid, g=None, w=None) -> tuple[int, int]:
    """``(dim coker P^(l), dim ker P'^(l-s))`` with the cokernel read from left
    singular vectors and the adjoint kernel from the formal adjoint's matrix."""
    mat = operator_matrix(P, grid, l)
    u, sigma, _ = np.linalg.svd(mat)
    count, _ = zero_cluster(sigma)
    coker = u.shape[1] - (len(sigma) - count)
    adj = formal_adjoint(P, g, w)
    return coker, kernel_dimension(adj, l - P.s, grid)


# -- elliptic estimate probe -------------------------------------------------


def garding_ratio(P: DiffOp, u: SpectralField, p: float) -> float:
    """``||u||_{p+s} / (||P u||_p + ||u||_{p+s-1})``."""
    s = P.s
    num = sobolev_norm(u, p + s)
    den = sobolev_norm(apply(P, u), p) + sobolev_norm(u, max(p + s - 1, 0))
    return num / den


def elliptic_constant_probe(
    P: DiffOp, p: float, grid: TorusGrid, trials: int = 16, seed: int = 0
) -> float:
    """Largest elliptic-estimate ratio over random fields bandlimited to ``N/4``.

    Probe spectra are flat in ``H^(p+s)``: Gaussian coefficients scaled by
    ``(1+|xi|^2)^(-(p+s)/2)``.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        u = random_field(grid, rng, q=P.q, decay=p + P.s)
        best = max(best, garding_ratio(P, u, p))
    return best


# -- smoothing -------------------------------------------------------------


def smooth_coefficient(c: Coefficient, cutoff: int) -> Coefficient:
    """Replace every power-law term by its explicit partial sum up to ``cutoff``."""

    def leaf(t):
        return powerlaw_as_trig(t, cutoff) if isinstance(t, PowerLaw) else t

    return c.map_entries(lambda t: map_leaves(t, leaf))


def smooth_approximation(P: DiffOp, cutoff: int) -> DiffOp:
    """``P`` with all power-law series truncated at ``min(K, cutoff)``; every
    coefficient of the result is a trigonometric polynomial (grade ``INF``)."""
    return P.map_coefficients(lambda c: smooth_coefficient(c, cutoff))


def difference_norm(P: DiffOp, Q: DiffOp, grid: TorusGrid, l: float, seed: int = 0) -> float:
    """``||P - Q||_{H^l -> H^(l-s)}`` with the codomain order of ``P``.

    The difference is taken between the two discretizations, so operators
    that sample to identical matrices are exactly at distance zero.
    """
    if (P.n, P.q) != (Q.n, Q.q):
        raise ValueError("operators act on different bundles")
    w_in, w_out = _weights(grid, P, l, P.s)
    dim = len(w_in)
    rng = np.random.default_rng(seed)
    if dim <= DENSE_LIMIT:
        D = operator_matrix(P, grid, l, P.s) - operator_matrix(Q, grid, l, P.s)
        if not np.any(D):
            return 0.0
        return power_iteration(D.__matmul__, D.conj().T.__matmul__, dim, rng).value
    shape = (P.q,) + grid.shape

    def matvec(x):
        u = SpectralField(grid, (w_in * x).reshape(shape), check=False)
        return w_out * (apply(P, u).data - apply(Q, u).data).ravel()

    def rmatvec(y):
        v = SpectralField(grid, (w_out * y).reshape(shape), check=False)
        return w_in * (apply_transpose(P, v).data - apply_transpose(Q, v).data).ravel()

    return power_iteration(matvec, rmatvec, dim, rng).value
