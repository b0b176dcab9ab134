"""Coefficient functions on the torus with known Sobolev grade.

Scalar coefficients are expression trees over three leaf families:

* :class:`Const` -- a constant, grade ``INF``;
* :class:`Trig` -- ``sum_m amp_m cos(xi_m . x + phase_m)``, grade ``INF``;
* :class:`PowerLaw` -- ``amp * sum_xi |xi|^(-beta) cos(xi . x + theta_xi)`` over
  the lattice half-space with ``0 < max_c |xi_c| <= K``.

Composite nodes (:class:`Sum`, :class:`Scaled`, :class:`Product`,
:class:`Derivative`, :class:`Reciprocal`) are kept opaque; their grades are
certified by the product rule and by derivative decrements, and they are
evaluated lazily (pointwise by Leibniz expansion, spectrally by dealiased
products).

A PowerLaw term is graded by its ``K -> infinity`` limit: the largest integer
``s < beta - n/2``.  Its phases come from the seed: seed 0 gives all phases
zero, a coherent series with a cusp at the origin (the periodic analogue of
``|x|^(beta - n)``); any other seed gives phases uniform on
``[0, 2*pi)`` drawn from ``numpy.random.default_rng(seed)`` in a fixed
frequency order, so truncations at a smaller ``K`` are exact partial sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import grades as G
from .grades import INF, Regularity
from .grid import SpectralField, TorusGrid


class GradeError(ValueError):
    """Raised when grade bookkeeping cannot certify a non-negative grade."""


# -- leaves ----------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Trig:
    freqs: tuple
    amps: tuple
    phases: tuple

    def __post_init__(self):
        if not (len(self.freqs) == len(self.amps) == len(self.phases)):
            raise ValueError("trig term needs equally many freqs, amps and phases")
        object.__setattr__(self, "freqs", tuple(tuple(int(c) for c in f) for f in self.freqs))
        object.__setattr__(self, "amps", tuple(float(a) for a in self.amps))
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))


@dataclass(frozen=True)
class PowerLaw:
    n: int
    beta: Fraction
    K: int
    seed: int = 0
    amp: float = 1.0

    def __post_init__(self):
        beta = Fraction(str(self.beta)) if not isinstance(self.beta, Fraction) else self.beta
        object.__setattr__(self, "beta", beta)
        if 2 * beta <= self.n:
            raise ValueError(f"power law needs beta > n/2, got beta={beta}, n={self.n}")
        if self.K < 1:
            raise ValueError(f"power law cutoff K must be >= 1, got {self.K}")

    @property
    def exact_grade(self) -> int:
        # largest integer s with s < beta - n/2
        return math.ceil(self.beta - Fraction(self.n, 2)) - 1

    def lattice(self, cap: int | None = None):
        """Frequencies, amplitudes and phases with ``max_c |xi_c| <= min(K, cap)``."""
        freqs, phases = _powerlaw_lattice(self.n, self.K, self.seed)
        top = self.K if cap is None else min(self.K, cap)
        count = _shell_count(self.n, top)
        freqs = freqs[:count]
        amps = self.amp * np.sum(freqs.astype(float) ** 2, axis=1) ** (-float(self.beta) / 2)
        return freqs, amps, phases[:count]


# -- composite nodes -------------------------------------------------------


@dataclass(frozen=True)
class Sum:
    terms: tuple


@dataclass(frozen=True)
class Scaled:
    factor: float
    term: object


@dataclass(frozen=True)
class Product:
    left: object
    right: object


@dataclass(frozen=True)
class Derivative:
    term: object
    index: tuple


@dataclass(frozen=True)
class Reciprocal:
    term: object


ZERO = Const(0.0)
ONE = Const(1.0)


def _shell_count(n: int, r: int) -> int:
    # half of the nonzero lattice points in the box [-r, r]^n
    return ((2 * r + 1) ** n - 1) // 2


@lru_cache(maxsize=64)
def _powerlaw_lattice(n: int, K: int, seed: int):
    if n == 1:
        freqs = np.arange(1, K + 1)[:, None]
    else:
        rows = []
        for r in range(1, K + 1):
            shell = [(a, b) for a in range(0, r + 1) for b in range(-r, r + 1)
                     if max(abs(a), abs(b)) == r and (a > 0 or b > 0)]
            shell.sort()
            rows.extend(shell)
        freqs = np.array(rows, dtype=int)
    if seed == 0:
        phases = np.zeros(len(freqs))
    else:
        phases = np.random.default_rng(seed).uniform(0.0, 2 * np.pi, size=len(freqs))
    freqs.setflags(write=False)
    phases.setflags(write=False)
    return freqs, phases


# -- simplifying constructors ----------------------------------------------


def is_zero(t) -> bool:
    if isinstance(t, Const):
        return t.value == 0.0
    if isinstance(t, Trig):
        return all(a == 0.0 for a in t.amps)
    if isinstance(t, PowerLaw):
        return t.amp == 0.0
    if isinstance(t, Sum):
        return all(is_zero(s) for s in t.terms)
    if isinstance(t, Scaled):
        return t.factor == 0.0 or is_zero(t.term)
    if isinstance(t, Product):
        return is_zero(t.left) or is_zero(t.right)
    if isinstance(t, Derivative):
        return is_zero(t.term)
    return False


def add_terms(*terms):
    flat = []
    for t in terms:
        if isinstance(t, Sum):
            flat.extend(t.terms)
        elif not is_zero(t):
            flat.append(t)
    flat = [t for t in flat if not is_zero(t)]
    consts = [t for t in flat if isinstance(t, Const)]
    rest = [t for t in flat if not isinstance(t, Const)]
    if consts:
        total = sum(c.value for c in consts)
        if total != 0.0:
            rest.insert(0, Const(total))
    if not rest:
        return ZERO
    if len(rest) == 1:
        return rest[0]
    return Sum(tuple(rest))


def scale_term(factor: float, t):
    factor = float(factor)
    if factor == 0.0 or is_zero(t):
        return ZERO
    if factor == 1.0:
        return t
    if isinstance(t, Const):
        return Const(factor * t.value)
    if isinstance(t, Scaled):
        return scale_term(factor * t.factor, t.term)
    if isinstance(t, Sum):
        return add_terms(*(scale_term(factor, s) for s in t.terms))
    return Scaled(factor, t)


def multiply_terms(a, b):
    if is_zero(a) or is_zero(b):
        return ZERO
    if isinstance(a, Const):
        return scale_term(a.value, b)
    if isinstance(b, Const):
        return scale_term(b.value, a)
    return Product(a, b)


def differentiate_term(t, j: tuple):
    if not any(j):
        return t
    if isinstance(t, Const):
        return ZERO
    if isinstance(t, Trig):
        return _trig_derivative(t, j)
    if isinstance(t, Sum):
        return add_terms(*(differentiate_term(s, j) for s in t.terms))
    if isinstance(t, Scaled):
        return scale_term(t.factor, differentiate_term(t.term, j))
    if isinstance(t, Derivative):
        return Derivative(t.term, G.add(t.index, j))
    return Derivative(t, tuple(j))


def _trig_derivative(t: Trig, j):
    freqs, amps, phases = [], [], []
    order = sum(j)
    for f, a, p in zip(t.freqs, t.amps, t.phases):
        factor = math.prod(fc**jc for fc, jc in zip(f, j))
        if factor == 0:
            continue
        freqs.append(f)
        amps.append(a * factor)
        phases.append(math.remainder(p + order * math.pi / 2, 2 * math.pi))
    if not freqs:
        return ZERO
    return Trig(tuple(freqs), tuple(amps), tuple(phases))


def map_leaves(t, fn: Callable):
    """Rebuild ``t`` with every leaf replaced by ``fn(leaf)``.

    Derivative nodes are kept as nodes so that leaves which sample to the same
    spectrum give bit-identical derivatives.
    """
    if isinstance(t, (Const, Trig, PowerLaw)):
        return fn(t)
    if isinstance(t, Sum):
        return add_terms(*(map_leaves(s, fn) for s in t.terms))
    if isinstance(t, Scaled):
        return scale_term(t.factor, map_leaves(t.term, fn))
    if isinstance(t, Product):
        return multiply_terms(map_leaves(t.left, fn), map_leaves(t.right, fn))
    if isinstance(t, Derivative):
        inner = map_leaves(t.term, fn)
        return ZERO if is_zero(inner) else Derivative(inner, t.index)
    if isinstance(t, Reciprocal):
        return Reciprocal(map_leaves(t.term, fn))
    raise TypeError(f"unknown term {t!r}")


def powerlaw_as_trig(t: PowerLaw, cutoff: int | None = None) -> Trig:
    """The explicit trigonometric polynomial of a (truncated) power-law series."""
    freqs, amps, phases = t.lattice(cutoff)
    return Trig(tuple(map(tuple, freqs.tolist())), tuple(amps.tolist()), tuple(phases.tolist()))


# -- grades ----------------------------------------------------------------


@dataclass(frozen=True)
class GradeCertificate:
    """Grade of a term together with the rule that produced it.

    ``rule`` is one of ``const``, ``trig``, ``powerlaw``, ``zero``, ``min``,
    ``scale``, ``product``, ``derivative``, ``reciprocal``.  :meth:`replay`
    re-runs the rule on the recorded inputs.
    """

    grade: Regularity
    rule: str
    inputs: tuple = ()
    detail: dict = field(default_factory=dict, compare=False, hash=False)

    def replay(self, n: int) -> Regularity:
        child = [c.replay(n) for c in self.inputs]
        if self.rule in ("const", "trig", "zero"):
            return INF
        if self.rule == "powerlaw":
            beta = Fraction(self.detail["beta"])
            return math.ceil(beta - Fraction(n, 2)) - 1
        if self.rule in ("min", "scale"):
            return min(child) if child else INF
        if self.rule == "product":
            return G.product_grade(child[0], child[1], n)
        if self.rule == "derivative":
            return child[0] - self.detail["order"]
        if self.rule == "reciprocal":
            return child[0]
        raise ValueError(f"unknown rule {self.rule}")

    def verify(self, n: int) -> bool:
        ok = self.replay(n) == self.grade
        return ok and all(c.verify(n) for c in self.inputs)


def certify(t, n: int) -> GradeCertificate:
    if is_zero(t):
        return GradeCertificate(INF, "zero")
    if isinstance(t, Const):
        return GradeCertificate(INF, "const")
    if isinstance(t, Trig):
        return GradeCertificate(INF, "trig")
    if isinstance(t, PowerLaw):
        if t.n != n:
            raise ValueError(f"power law of dimension {t.n} used in dimension {n}")
        return GradeCertificate(t.exact_grade, "powerlaw", detail={"beta": str(t.beta)})
    if isinstance(t, Sum):
        kids = tuple(certify(s, n) for s in t.terms)
        return GradeCertificate(min(c.grade for c in kids), "min", kids)
    if isinstance(t, Scaled):
        kid = certify(t.term, n)
        return GradeCertificate(kid.grade, "scale", (kid,))
    if isinstance(t, Product):
        a, b = certify(t.left, n), certify(t.right, n)
        g = G.product_grade(a.grade, b.grade, n)
        if g is None:
            raise GradeError(f"ungraded product: H^{a.grade} * H^{b.grade} in dimension {n}")
        return GradeCertificate(g, "product", (a, b))
    if isinstance(t, Derivative):
        kid = certify(t.term, n)
        order = sum(t.index)
        g = kid.grade - order
        if g < 0:
            raise GradeError(f"derivative of order {order} of an H^{kid.grade} function has negative grade")
        return GradeCertificate(g, "derivative", (kid,), {"order": order})
    if isinstance(t, Reciprocal):
        kid = certify(t.term, n)
        if not G.embeds_in_continuous(kid.grade, n):
            raise GradeError(f"reciprocal of an H^{kid.grade} function is ungraded in dimension {n}")
        return GradeCertificate(kid.grade, "reciprocal", (kid,))
    raise TypeError(f"unknown term {t!r}")


def term_grade(t, n: int) -> Regularity:
    return certify(t, n).grade


# -- pointwise evaluation --------------------------------------------------


def _series_eval(freqs, amps, phases, x, d, chunk=2048):
    """``sum amp * Re((i xi)^d exp(i (xi.x + phase)))`` at points ``x`` (n, P)."""
    freqs = np.asarray(freqs, dtype=float).reshape(len(amps), -1)
    amps = np.asarray(amps, dtype=float)
    phases = np.asarray(phases, dtype=float)
    if len(amps) == 0:
        return np.zeros(x.shape[1])
    weight = amps.astype(complex) * np.exp(1j * phases)
    for c, e in enumerate(d):
        if e:
            weight = weight * (1j * freqs[:, c]) ** e
    out = np.empty(x.shape[1])
    for start in range(0, x.shape[1], chunk):
        xs = x[:, start:start + chunk]
        out[start:start + chunk] = np.real(np.exp(1j * (xs.T @ freqs.T)) @ weight)
    return out


def evaluate_term(t, x: np.ndarray, d: tuple | None = None) -> np.ndarray:
    """Values of ``d^d t`` at points ``x`` of shape ``(n, P)``."""
    n = x.shape[0]
    d = G.zero(n) if d is None else tuple(d)
    if isinstance(t, Const):
        return np.full(x.shape[1], t.value if not any(d) else 0.0)
    if isinstance(t, Trig):
        return _series_eval(t.freqs, t.amps, t.phases, x, d)
    if isinstance(t, PowerLaw):
        freqs, amps, phases = t.lattice()
        return _series_eval(freqs, amps, phases, x, d)
    if isinstance(t, Sum):
        return sum(evaluate_term(s, x, d) for s in t.terms)
    if isinstance(t, Scaled):
        return t.factor * evaluate_term(t.term, x, d)
    if isinstance(t, Product):
        out = np.zeros(x.shape[1])
        for m in G.below(d):
            out = out + G.binom(d, m) * evaluate_term(t.left, x, m) * evaluate_term(t.right, x, G.sub(d, m))
        return out
    if isinstance(t, Derivative):
        return evaluate_term(t.term, x, G.add(d, t.index))
    if isinstance(t, Reciprocal):
        return _reciprocal_eval(t.term, x, d)
    raise TypeError(f"unknown term {t!r}")


def _reciprocal_eval(w, x, d):
    # w r = 1  =>  d^d r = -(1/w) sum_{0 < m <= d} C(d, m) d^m w d^(d-m) r
    wv = evaluate_term(w, x)
    if np.any(wv == 0.0):
        raise ValueError("reciprocal of a function with zeros")
    if not any(d):
        return 1.0 / wv
    acc = np.zeros(x.shape[1])
    for m in G.below(d):
        if any(m):
            acc = acc + G.binom(d, m) * evaluate_term(w, x, m) * _reciprocal_eval(w, x, G.sub(d, m))
    return -acc / wv


# -- spectra ---------------------------------------------------------------


def _place_series(grid: TorusGrid, freqs, amps, phases, out):
    if len(amps) == 0:
        return out
    freqs = np.asarray(freqs, dtype=int).reshape(len(amps), -1)
    half = 0.5 * np.asarray(amps) * np.exp(1j * np.asarray(phases))
    pos = tuple((freqs[:, c] % grid.N) for c in range(grid.n))
    neg = tuple(((-freqs[:, c]) % grid.N) for c in range(grid.n))
    np.add.at(out, pos, half)
    np.add.at(out, neg, np.conj(half))
    return out


@lru_cache(maxsize=1024)
def term_spectrum(t, grid: TorusGrid) -> np.ndarray:
    """Spectrum of ``t`` restricted to the grid's retained (real) modes."""
    out = np.zeros(grid.shape, dtype=complex)
    if isinstance(t, Const):
        out[(0,) * grid.n] = t.value
    elif isinstance(t, Trig):
        top = max((max(abs(c) for c in f) for f in t.freqs), default=0)
        if top > grid.N // 2 - 1:
            raise ValueError(f"grid N={grid.N} cannot hold trig frequency {top}")
        _place_series(grid, t.freqs, t.amps, t.phases, out)
    elif isinstance(t, PowerLaw):
        if t.n != grid.n:
            raise ValueError("power-law dimension does not match the grid")
        freqs, amps, phases = t.lattice(grid.N // 2 - 1)
        _place_series(grid, freqs, amps, phases, out)
    elif isinstance(t, Sum):
        for s in t.terms:
            out = out + term_spectrum(s, grid)
    elif isinstance(t, Scaled):
        out = t.factor * term_spectrum(t.term, grid)
    elif isinstance(t, Product):
        out = grid.multiply(term_spectrum(t.left, grid), term_spectrum(t.right, grid))
    elif isinstance(t, Derivative):
        out = grid.derivative_symbol(t.index) * term_spectrum(t.term, grid)
    elif isinstance(t, Reciprocal):
        vals = grid.to_physical(term_spectrum(t.term, grid)).real
        if np.min(vals) <= 0.0 <= np.max(vals):
            raise ValueError("reciprocal of a function that vanishes or changes sign")
        out = grid.from_physical(1.0 / vals)
    else:
        raise TypeError(f"unknown term {t!r}")
    out.setflags(write=False)
    return out


# -- matrix-valued coefficients --------------------------------------------


def _entries(rows) -> tuple:
    return tuple(tuple(r) for r in rows)


@dataclass(frozen=True)
class Coefficient:
    """A ``q_out x q_in`` matrix of scalar coefficient terms on ``T^n``.

    The grade of a matrix is the minimum entry grade.  ``declared_grade`` may
    lower the grade that is reported, never raise it.
    """

    n: int
    entries: tuple
    declared_grade: Regularity | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", _entries(self.entries))
        widths = {len(r) for r in self.entries}
        if not self.entries or len(widths) != 1 or 0 in widths:
            raise ValueError("coefficient entries must form a non-empty rectangular matrix")
        for t in self.terms():
            _check_dimension(t, self.n)
        if self.declared_grade is not None and self.declared_grade > self.exact_grade():
            raise ValueError(
                f"declared grade {self.declared_grade} exceeds the certified grade {self.exact_grade()}"
            )

    # constructors
    @classmethod
    def scalar(cls, term, n: int) -> "Coefficient":
        return cls(n, ((term,),))

    @classmethod
    def const(cls, value: float, n: int, q: int = 1) -> "Coefficient":
        return cls(n, tuple(tuple(Const(float(value)) if r == c else ZERO for c in range(q)) for r in range(q)))

    @classmethod
    def zeros(cls, n: int, q: int = 1) -> "Coefficient":
        return cls.const(0.0, n, q)

    @classmethod
    def trig(cls, n: int, freqs, amps, phases=None) -> "Coefficient":
        phases = [0.0] * len(amps) if phases is None else phases
        freqs = [(f,) if isinstance(f, (int, np.integer)) else f for f in freqs]
        return cls.scalar(Trig(tuple(freqs), tuple(amps), tuple(phases)), n)

    @classmethod
    def powerlaw(cls, n: int, beta, K: int, seed: int = 0, amp: float = 1.0) -> "Coefficient":
        return cls.scalar(PowerLaw(n, beta, K, seed, amp), n)

    @classmethod
    def diagonal(cls, scalar: "Coefficient", q: int) -> "Coefficient":
        t = scalar.entry(0, 0)
        return cls(scalar.n, tuple(tuple(t if r == c else ZERO for c in range(q)) for r in range(q)))

    # structure
    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    @property
    def q(self) -> int:
        qo, qi = self.shape
        if qo != qi:
            raise ValueError("non-square coefficient has no rank q")
        return qo

    def entry(self, r: int, c: int):
        return self.entries[r][c]

    def terms(self):
        for row in self.entries:
            yield from row

    def is_zero(self) -> bool:
        return all(is_zero(t) for t in self.terms())

    def is_constant(self) -> bool:
        return all(isinstance(t, Const) for t in self.terms())

    def map_entries(self, fn: Callable) -> "Coefficient":
        return Coefficient(self.n, tuple(tuple(fn(t) for t in row) for row in self.entries))

    # grades
    def exact_grade(self) -> Regularity:
        return min(term_grade(t, self.n) for t in self.terms())

    @property
    def grade(self) -> Regularity:
        return self.exact_grade() if self.declared_grade is None else self.declared_grade

    def certificate(self) -> GradeCertificate:
        kids = tuple(certify(t, self.n) for t in self.terms())
        return GradeCertificate(min(c.grade for c in kids), "min", kids)

    # algebra
    def __add__(self, other: "Coefficient") -> "Coefficient":
        self._check_compatible(other, same_shape=True)
        return Coefficient(self.n, tuple(
            tuple(add_terms(a, b) for a, b in zip(ra, rb)) for ra, rb in zip(self.entries, other.entries)
        ))

    def __neg__(self) -> "Coefficient":
        return self.scale(-1.0)

    def __sub__(self, other: "Coefficient") -> "Coefficient":
        return self + (-other)

    def scale(self, factor: float) -> "Coefficient":
        return self.map_entries(lambda t: scale_term(factor, t))

    def transpose(self) -> "Coefficient":
        return Coefficient(self.n, tuple(zip(*self.entries)))

    def multiply(self, other: "Coefficient") -> "Coefficient":
        """Pointwise matrix product; raises :class:`GradeError` when ungraded."""
        self._check_compatible(other)
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"cannot multiply {self.shape} by {other.shape}")
        rows = []
        for r in range(self.shape[0]):
            row = []
            for c in range(other.shape[1]):
                t = add_terms(*(multiply_terms(self.entry(r, m), other.entry(m, c)) for m in range(self.shape[1])))
                term_grade(t, self.n)
                row.append(t)
            rows.append(tuple(row))
        return Coefficient(self.n, tuple(rows))

    __matmul__ = multiply

    def derivative(self, j: Sequence[int]) -> "Coefficient":
        """Spectral derivative ``d^j``; rejects ``|j|`` above the grade."""
        j = tuple(j)
        if len(j) != self.n:
            raise ValueError(f"multiindex {j} does not have length n={self.n}")
        g = self.exact_grade()
        if sum(j) > g:
            raise GradeError(f"cannot take {sum(j)} derivatives of an H^{g} coefficient")
        return self.map_entries(lambda t: differentiate_term(t, j))

    # numerics
    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Values at points ``x`` of shape ``(n, P)``; returns ``(P, q_out, q_in)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[0] != self.n:
            x = x.reshape(self.n, -1)
        qo, qi = self.shape
        out = np.zeros((x.shape[1], qo, qi))
        for r in range(qo):
            for c in range(qi):
                t = self.entry(r, c)
                if not is_zero(t):
                    out[:, r, c] = evaluate_term(t, x)
        return out

    def spectrum(self, grid: TorusGrid) -> np.ndarray:
        """Spectra of all entries, shape ``(q_out, q_in, N, ..., N)``."""
        if grid.n != self.n:
            raise ValueError(f"grid dimension {grid.n} does not match coefficient dimension {self.n}")
        qo, qi = self.shape
        out = np.zeros((qo, qi) + grid.shape, dtype=complex)
        for r in range(qo):
            for c in range(qi):
                t = self.entry(r, c)
                if not is_zero(t):
                    out[r, c] = term_spectrum(t, grid)
        return out

    def _check_compatible(self, other, same_shape=False):
        if not isinstance(other, Coefficient):
            raise TypeError(f"expected a Coefficient, got {type(other).__name__}")
        if other.n != self.n:
            raise ValueError("coefficients live on tori of different dimension")
        if same_shape and other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")


def _check_dimension(t, n):
    if isinstance(t, PowerLaw) and t.n != n:
        raise ValueError(f"power law of dimension {t.n} in a dimension-{n} coefficient")
    if isinstance(t, Trig) and any(len(f) != n for f in t.freqs):
        raise ValueError(f"trig frequencies must have {n} components")
    for child in _children(t):
        _check_dimension(child, n)
    if isinstance(t, Derivative) and len(t.index) != n:
        raise ValueError(f"derivative index {t.index} does not have length {n}")


def _children(t):
    if isinstance(t, Sum):
        return t.terms
    if isinstance(t, (Scaled, Derivative, Reciprocal)):
        return (t.term,)
    if isinstance(t, Product):
        return (t.left, t.right)
    return ()


# -- module-level operations ------------------------------------------------


def exact_grade(c: Coefficient) -> Regularity:
    return c.exact_grade()


def derivative(c: Coefficient, j: Sequence[int]) -> Coefficient:
    return c.derivative(j)


def multiply(a: Coefficient, b: Coefficient) -> Coefficient:
    return a.multiply(b)


def reciprocal(c: Coefficient) -> Coefficient:
    """Pointwise inverse of a positive scalar coefficient."""
    if c.shape != (1, 1):
        raise ValueError("reciprocal is only defined for scalar coefficients")
    t = c.entry(0, 0)
    if isinstance(t, Const):
        if t.value == 0.0:
            raise ValueError("reciprocal of zero")
        return Coefficient.const(1.0 / t.value, c.n)
    m = 1024 if c.n == 1 else 128
    axis = 2 * np.pi * np.arange(m) / m
    probe = np.array(np.meshgrid(*([axis] * c.n), indexing="ij")).reshape(c.n, -1)
    vals = evaluate_term(t, probe)
    if np.min(vals) <= 0.0 <= np.max(vals):
        raise ValueError("reciprocal of a function that vanishes or changes sign")
    out = Coefficient.scalar(Reciprocal(t), c.n)
    out.exact_grade()
    return out


def sample(c: Coefficient, grid: TorusGrid) -> SpectralField:
    """The coefficient as a real :class:`SpectralField` (entries flattened row-major)."""
    spec = c.spectrum(grid)
    qo, qi = c.shape
    return SpectralField(grid, spec.reshape((qo * qi,) + grid.shape), real=True, check=False)
