"""Differential operators with graded coefficients and their symbolic calculus.

An operator of order ``s`` on the trivial rank-q bundle over ``T^n`` is

    P u = sum_{|i| <= s} A_i(x) d^i u,

with ``A_i`` a ``q x q`` :class:`~ksafe.coefficients.Coefficient`.  Missing
multiindices stand for the zero coefficient, which has grade ``INF``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import qmc

from . import grades as G
from .coefficients import Coefficient, Const, GradeError, reciprocal
from .grades import INF, Regularity


@dataclass(frozen=True)
class DiffOp:
    n: int
    q: int
    s: int
    coeffs: tuple = field(default=())

    def __post_init__(self):
        items = dict(self.coeffs.items() if isinstance(self.coeffs, Mapping) else self.coeffs)
        clean = {}
        for idx, c in items.items():
            idx = tuple(int(e) for e in idx)
            if len(idx) != self.n:
                raise ValueError(f"multiindex {idx} does not have length n={self.n}")
            if min(idx) < 0:
                raise ValueError(f"negative entry in multiindex {idx}")
            if sum(idx) > self.s:
                raise ValueError(f"multiindex {idx} exceeds the order s={self.s}")
            if c.n != self.n or c.shape != (self.q, self.q):
                raise ValueError(f"coefficient at {idx} must be {self.q}x{self.q} on T^{self.n}")
            if not c.is_zero():
                clean[idx] = c
        if not any(sum(i) == self.s for i in clean):
            raise ValueError(f"operator of order {self.s} has no nonzero coefficient of order {self.s}")
        ordered = tuple(sorted(clean.items(), key=lambda kv: G.graded_key(kv[0])))
        object.__setattr__(self, "coeffs", ordered)

    @classmethod
    def from_terms(cls, n: int, terms: Mapping, q: int = 1) -> "DiffOp":
        """Build from ``{multiindex: Coefficient}``; the order is inferred."""
        nonzero = [i for i, c in terms.items() if not c.is_zero()]
        if not nonzero:
            raise ValueError("the zero operator has no order")
        s = max(sum(i) for i in nonzero)
        return cls(n, q, s, dict(terms))

    @property
    def indices(self) -> list[tuple]:
        return [i for i, _ in self.coeffs]

    def coeff(self, i: Sequence[int]) -> Coefficient:
        i = tuple(i)
        for j, c in self.coeffs:
            if j == i:
                return c
        return Coefficient.zeros(self.n, self.q)

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def leading(self) -> dict:
        return {i: c for i, c in self.coeffs if sum(i) == self.s}

    def map_coefficients(self, fn) -> "DiffOp":
        return DiffOp(self.n, self.q, self.s, {i: fn(c) for i, c in self.coeffs})

    def __add__(self, other: "DiffOp") -> "DiffOp":
        if (other.n, other.q) != (self.n, self.q):
            raise ValueError("operators act on different bundles")
        terms = self.as_dict()
        for i, c in other.coeffs:
            terms[i] = terms[i] + c if i in terms else c
        return DiffOp.from_terms(self.n, terms, self.q)

    def __neg__(self) -> "DiffOp":
        return self.map_coefficients(lambda c: -c)

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def scale(self, factor: float) -> "DiffOp":
        return self.map_coefficients(lambda c: c.scale(factor))

    def __repr__(self):
        keys = ", ".join(str(i) for i in self.indices)
        return f"DiffOp(n={self.n}, q={self.q}, s={self.s}, indices=[{keys}])"


def identity(n: int, q: int = 1) -> DiffOp:
    return DiffOp(n, q, 0, {G.zero(n): Coefficient.const(1.0, n, q)})


def derivative_operator(index: Sequence[int], q: int = 1) -> DiffOp:
    """The constant-coefficient operator ``d^index``."""
    index = tuple(index)
    n = len(index)
    return DiffOp(n, q, sum(index), {index: Coefficient.const(1.0, n, q)})


def laplacian(n: int, q: int = 1) -> DiffOp:
    one = Coefficient.const(1.0, n, q)
    return DiffOp(n, q, 2, {tuple(2 * e for e in G.unit(n, c)): one for c in range(n)})


# -- safeness --------------------------------------------------------------


@dataclass(frozen=True)
class SafenessRow:
    index: tuple
    required: Regularity
    actual: Regularity
    passed: bool


@dataclass(frozen=True)
class SafenessReport:
    k: Regularity
    n: int
    s: int
    rows: tuple
    overall: bool
    max_safe_k: Regularity | None
    notes: tuple = ()

    def failing(self) -> list[SafenessRow]:
        return [r for r in self.rows if not r.passed]

    def to_dict(self) -> dict:
        return {
            "k": _jsonable(self.k),
            "n": self.n,
            "s": self.s,
            "overall": self.overall,
            "max_safe_k": _jsonable(self.max_safe_k),
            "rows": [
                {"index": list(r.index), "required": _jsonable(r.required),
                 "actual": _jsonable(r.actual), "pass": r.passed}
                for r in self.rows
            ],
            "notes": list(self.notes),
        }


def _jsonable(r):
    if r is None:
        return None
    return "inf" if r == INF else int(r)


def _rows(P: DiffOp, k: Regularity, grades: dict) -> tuple:
    rows = []
    for i in G.enumerate_multiindices(P.n, P.s):
        required = G.safeness_threshold(sum(i), k, P.s, P.n)
        actual = grades.get(i, INF)
        rows.append(SafenessRow(i, required, actual, actual >= required))
    return tuple(rows)


def is_safe(P: DiffOp, k: Regularity, k_max: int | None = None) -> SafenessReport:
    """Check the k-safeness grading of every coefficient of ``P``.

    ``max_safe_k`` is the largest ``k' <= k_max`` (default ``max(k, s)``) for
    which ``P`` is k'-safe, or ``None`` if it is not even ``s``-safe.
    """
    grades = {i: c.grade for i, c in P.coeffs}
    rows = _rows(P, k, grades)
    notes = []
    if k != INF and P.s > k:
        notes.append(f"operator order {P.s} exceeds k={k}")
    if not G.embeds_in_continuous(k, P.n):
        notes.append(f"k={k} does not exceed n/2; Fredholm statements do not apply")
    top = max(k, P.s) if k_max is None else k_max
    best = None
    if top != INF:
        for kk in range(P.s, int(top) + 1):
            if all(r.passed for r in _rows(P, kk, grades)):
                best = kk
            else:
                break
    return SafenessReport(k, P.n, P.s, rows, all(r.passed for r in rows), best, tuple(notes))


# -- adjoint and composition ------------------------------------------------


def _inverse_constant(g: Coefficient) -> Coefficient:
    mat = np.array([[t.value for t in row] for row in g.entries])
    inv = np.linalg.inv(mat)
    return Coefficient(g.n, tuple(tuple(Const(float(v)) for v in row) for row in inv))


def _check_metric(g: Coefficient, q: int):
    if g.shape != (q, q):
        raise ValueError(f"metric must be {q}x{q}")
    x = _probe_points(g.n, 64)
    vals = g.evaluate(x)
    if not np.allclose(vals, np.swapaxes(vals, 1, 2), atol=1e-12):
        raise ValueError("metric is not symmetric")
    if np.min(np.linalg.eigvalsh(vals)) <= 0.0:
        raise ValueError("metric is not positive definite")


def _check_density(w: Coefficient):
    if w.shape != (1, 1):
        raise ValueError("density must be a scalar coefficient")
    if np.min(w.evaluate(_probe_points(w.n, 64))) <= 0.0:
        raise ValueError("density is not positive")


def formal_adjoint(P: DiffOp, g: Coefficient | None = None, w: Coefficient | None = None) -> DiffOp:
    """Formal adjoint with respect to ``<u, v> = int v^T g u w dx``.

    The coefficients are

        A'_j = (g w)^{-1} sum_{l >= j} (-1)^{|l|} C(l, j) d^{l-j}(A_l^T g w),

    which for ``g = 1`` and ``w = 1`` is the plain transpose rule.  A
    non-constant metric is only supported for ``q = 1``.  Grades are certified
    through every product and derivative; :class:`GradeError` is raised when
    that fails.
    """
    n, q = P.n, P.q
    if g is not None:
        _check_metric(g, q)
    if w is not None:
        _check_density(w)
    # weight = g * w sits inside the derivatives, its inverse outside
    if g is None:
        inner = outer = None
    elif g.is_constant():
        inner, outer = g, _inverse_constant(g)
    elif q == 1:
        inner, outer = g, reciprocal(g)
    else:
        raise NotImplementedError("non-constant metrics are only supported for q = 1")
    if w is not None:
        wq = Coefficient.diagonal(w, q)
        inner = wq if inner is None else inner.multiply(wq)
        winv = Coefficient.diagonal(reciprocal(w), q)
        outer = winv if outer is None else outer.multiply(winv)

    terms: dict = {}
    for l, A in P.coeffs:
        B = A.transpose() if inner is None else A.transpose().multiply(inner)
        sign = -1.0 if sum(l) % 2 else 1.0
        for j in G.below(l):
            c = B.derivative(G.sub(l, j)).scale(sign * G.binom(l, j))
            terms[j] = terms[j] + c if j in terms else c
    if outer is not None:
        terms = {j: outer.multiply(c) for j, c in terms.items()}
    for c in terms.values():
        c.exact_grade()
    return DiffOp(n, q, P.s, terms)


def compose(P1: DiffOp, P2: DiffOp) -> DiffOp:
    """The composition ``P1 o P2`` by Leibniz expansion.

    ``A_J = sum C(j1, m) A1_{j1} d^m A2_{j2}`` over ``m <= j1`` with
    ``j1 - m + j2 = J`` (all inequalities componentwise).
    """
    if (P1.n, P1.q) != (P2.n, P2.q):
        raise ValueError("operators act on different bundles")
    terms: dict = {}
    for j1, A1 in P1.coeffs:
        for j2, A2 in P2.coeffs:
            for m in G.below(j1):
                J = G.add(G.sub(j1, m), j2)
                c = A1.multiply(A2.derivative(m)).scale(G.binom(j1, m))
                if c.is_zero():
                    continue
                terms[J] = terms[J] + c if J in terms else c
    s = P1.s + P2.s
    if not any(sum(J) == s for J in terms):
        raise ValueError(f"leading part of the composition vanishes at order {s}")
    return DiffOp(P1.n, P1.q, s, terms)


# -- symbols and ellipticity ------------------------------------------------


@dataclass(frozen=True)
class SymbolSample:
    x: tuple
    xi: tuple
    value: np.ndarray = field(compare=False)
    det_abs: float = 0.0


def _monomial(xi: np.ndarray, i: tuple) -> np.ndarray:
    """``prod_c xi_c^{i_c}`` for covectors ``xi`` of shape (n, P)."""
    out = np.ones(xi.shape[1])
    for c, e in enumerate(i):
        if e:
            out = out * xi[c] ** e
    return out


def symbol_values(P: DiffOp, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Principal symbol ``sum_{|i|=s} A_i(x) xi^i`` at paired columns of ``x``, ``xi``.

    Returns shape ``(P, q, q)``.  Monomials are real; no powers of the imaginary
    unit are attached.
    """
    x = np.asarray(x, dtype=float).reshape(P.n, -1)
    xi = np.asarray(xi, dtype=float).reshape(P.n, -1)
    out = np.zeros((x.shape[1], P.q, P.q))
    for i, A in P.leading().items():
        out += A.evaluate(x) * _monomial(xi, i)[:, None, None]
    return out


def principal_symbol(P: DiffOp, x, xi) -> SymbolSample:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    value = symbol_values(P, x[:, None], xi[:, None])[0]
    return SymbolSample(tuple(x), tuple(xi), value, float(abs(np.linalg.det(value))))


def _probe_points(n: int, count: int, skip: int = 0) -> np.ndarray:
    sampler = qmc.Halton(d=n, scramble=False)
    if skip:
        sampler.fast_forward(skip)
    return 2 * np.pi * sampler.random(count).T


class Ellipticity(NamedTuple):
    elliptic: bool
    worst_margin: float


def is_elliptic(
    P: DiffOp, sample_budget: int = 256, seed: int = 0, margin_tolerance: float = 1e-8
) -> Ellipticity:
    """Sample ``|det sigma(P)(x, xi)|`` over unit covectors.

    Points come from an unscrambled Halton sequence (advanced by ``seed``): in
    ``n = 1`` the positions are paired with both unit covectors ``+1, -1``; in
    ``n = 2`` a third Halton coordinate gives the covector angle.

    Characteristic directions form a set of measure zero, so in ``n = 2`` the
    worst samples are then polished: the angle is scanned at that position and
    the best angle refined by bounded scalar minimization.
    """
    pts = qmc.Halton(d=P.n + (P.n > 1), scramble=False)
    if seed:
        pts.fast_forward(seed)
    raw = pts.random(sample_budget).T
    x = 2 * np.pi * raw[: P.n]
    if P.n == 1:
        x = np.concatenate([x, x], axis=1)
        xi = np.concatenate([np.ones(sample_budget), -np.ones(sample_budget)])[None]
    else:
        theta = 2 * np.pi * raw[P.n]
        xi = np.array([np.cos(theta), np.sin(theta)])
    sym = symbol_values(P, x, xi)
    dets = np.abs(np.linalg.det(sym))
    worst = float(np.min(dets))
    if P.n > 1:
        worst = min(worst, _polish_angles(P, x[:, np.argsort(dets)[:_POLISH]]))
    return Ellipticity(worst >= margin_tolerance, worst)


_POLISH = 8
_SCAN = 256


def _polish_angles(P: DiffOp, positions: np.ndarray) -> float:
    def det_at(x, theta):
        theta = np.atleast_1d(theta)
        xs = np.repeat(x[:, None], theta.size, axis=1)
        xi = np.array([np.cos(theta), np.sin(theta)])
        return np.abs(np.linalg.det(symbol_values(P, xs, xi)))

    worst = np.inf
    step = np.pi / _SCAN
    angles = np.arange(_SCAN) * step  # |det| is even in xi, half circle suffices
    for x in positions.T:
        vals = det_at(x, angles)
        t0 = angles[int(np.argmin(vals))]
        res = minimize_scalar(
            lambda t: float(det_at(x, t)[0]), bounds=(t0 - step, t0 + step), method="bounded",
            options={"xatol": 1e-13},
        )
        worst = min(worst, float(np.min(vals)), float(res.fun))
    return worst


# -- example constructors ---------------------------------------------------


def _check_positive(a: Coefficient):
    vals = a.evaluate(_probe_points(a.n, 256))
    if a.shape == (1, 1):
        ok = np.min(vals) > 0.0
    else:
        ok = np.allclose(vals, np.swapaxes(vals, 1, 2)) and np.min(np.linalg.eigvalsh(vals)) > 0.0
    if not ok:
        raise ValueError("divergence-form coefficient is not positive at every sample point")


def divergence_form_laplacian(a: Coefficient, k: int | None = None) -> DiffOp:
    """``sum_c d_c (a d_c)`` expanded as ``a d_c^2 + (d_c a) d_c``.

    With ``a`` of grade ``k - 1`` the result is k-safe.  Passing ``k`` checks
    that grade up front.
    """
    n = a.n
    q = a.shape[0]
    if a.shape != (q, q):
        raise ValueError("coefficient must be square")
    if k is not None and a.grade < k - 1:
        raise GradeError(f"coefficient of grade {a.grade} is too rough for a {k}-safe Laplacian")
    _check_positive(a)
    terms: dict = {}
    for c in range(n):
        e = G.unit(n, c)
        terms[tuple(2 * v for v in e)] = a
        da = a.derivative(e)
        if not da.is_zero():
            terms[e] = da
    return DiffOp(n, q, 2, terms)


def schroedinger_like(a: Coefficient, V: Coefficient, C: float, k: int | None = None) -> DiffOp:
    """``div(a grad) - C V``, an order-0 perturbation of the divergence-form Laplacian."""
    L = divergence_form_laplacian(a, k)
    if V.shape != (L.q, L.q):
        raise ValueError("potential must match the bundle rank")
    terms = L.as_dict()
    z = G.zero(L.n)
    pot = V.scale(-C)
    terms[z] = terms[z] + pot if z in terms else pot
    return DiffOp(L.n, L.q, 2, terms)
