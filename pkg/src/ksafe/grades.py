"""Integer arithmetic of Sobolev grades and multiindices.

A regularity is either a non-negative ``int`` or ``INF`` (``math.inf``), the
grade of a smooth function.  Using the float infinity keeps ``min``, ``max``
and comparisons total without special casing.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence, Union

INF = math.inf

Regularity = Union[int, float]
MultiIndex = tuple


def is_infinite(r: Regularity) -> bool:
    return r == INF


def ceil_half(n: int) -> int:
    return (n + 1) // 2


def product_grade(u: Regularity, l: Regularity, n: int) -> Regularity | None:
    """Grade of a product of an ``H^u`` and an ``H^l`` function on an n-manifold.

    Returns ``min(u, l, u + l - ceil(n/2) - 1)`` when the last entry is at
    least 1, ``INF`` for two smooth factors and ``None`` (no conclusion)
    otherwise.
    """
    if u < 0 or l < 0:
        raise ValueError(f"grades must be non-negative, got u={u}, l={l}")
    if u == INF and l == INF:
        return INF
    excess = u + l - ceil_half(n) - 1
    if excess < 1:
        return None
    return _as_int(min(u, l, excess))


def safeness_threshold(order: int, k: Regularity, s: int, n: int) -> Regularity:
    """``max(k - s, order - s + floor(n/2) + 1)`` without checking admissibility."""
    return _as_int(max(k - s, order - s + n // 2 + 1))


def safe_grade(i: Sequence[int] | int, k: Regularity, s: int, n: int) -> Regularity:
    """Regularity required of the coefficient at multiindex ``i`` for a k-safe
    operator of order ``s`` in dimension ``n``.

    Parameters
    ----------
    i : multiindex or int
        The multiindex (only its order ``|i|`` matters) or the order itself.
    k : int
        Target safeness grade, finite.
    s : int
        Order of the operator.
    n : int
        Ambient dimension.
    """
    order = i if isinstance(i, int) else sum(i)
    if k == INF:
        raise ValueError("safe_grade needs a finite k")
    if order > s:
        raise ValueError(f"|i| = {order} exceeds the operator order s = {s}")
    if s > k:
        raise ValueError(f"operator order s = {s} exceeds k = {k}")
    return safeness_threshold(order, k, s, n)


def embeds_in_continuous(r: Regularity, n: int) -> bool:
    return r == INF or 2 * r > n


def _as_int(r):
    return r if r == INF else int(r)


# -- multiindices ----------------------------------------------------------


def order(i: Sequence[int]) -> int:
    return sum(i)


def enumerate_multiindices(n: int, s: int) -> list[MultiIndex]:
    """All multiindices in ``n`` variables of order at most ``s``.

    Graded-lexicographic: by total order, then with the first variable
    dominating, e.g. ``(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)``.
    """
    if n < 1 or s < 0:
        raise ValueError(f"need n >= 1 and s >= 0, got n={n}, s={s}")
    out = []
    for r in range(s + 1):
        level = [c for c in itertools.product(range(r + 1), repeat=n) if sum(c) == r]
        level.sort(reverse=True)
        out.extend(level)
    return out


def graded_key(i: Sequence[int]) -> tuple:
    """Sort key reproducing the order of :func:`enumerate_multiindices`."""
    return (sum(i), tuple(-e for e in i))


def leq(j: Sequence[int], l: Sequence[int]) -> bool:
    """Componentwise ``j <= l``."""
    if len(j) != len(l):
        raise ValueError(f"length mismatch: {j} vs {l}")
    return all(a <= b for a, b in zip(j, l))


def sub(l: Sequence[int], j: Sequence[int]) -> MultiIndex:
    if not leq(j, l):
        raise ValueError(f"cannot subtract {tuple(j)} from {tuple(l)}")
    return tuple(a - b for a, b in zip(l, j))


def add(l: Sequence[int], j: Sequence[int]) -> MultiIndex:
    if len(j) != len(l):
        raise ValueError(f"length mismatch: {j} vs {l}")
    return tuple(a + b for a, b in zip(l, j))


def binom(l: Sequence[int], j: Sequence[int]) -> int:
    """Multiindex binomial coefficient ``prod_c C(l_c, j_c)``."""
    if not leq(j, l):
        raise ValueError(f"binom undefined: {tuple(j)} is not <= {tuple(l)}")
    return math.prod(math.comb(a, b) for a, b in zip(l, j))


def below(l: Sequence[int]) -> list[MultiIndex]:
    """All multiindices ``j <= l`` componentwise."""
    return [tuple(c) for c in itertools.product(*(range(e + 1) for e in l))]


def unit(n: int, c: int) -> MultiIndex:
    return tuple(1 if d == c else 0 for d in range(n))


def zero(n: int) -> MultiIndex:
    return (0,) * n
