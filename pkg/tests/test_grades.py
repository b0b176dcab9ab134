import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ksafe import grades as G
from ksafe.grades import INF

grade = st.one_of(st.integers(0, 12), st.just(INF))


# product rule


@pytest.mark.parametrize(
    "u, l, n, expected",
    [(2, 2, 1, 2), (3, 2, 2, 2), (1, 1, 2, None), (INF, 5, 3, 5), (INF, INF, 4, INF)],
)
def test_product_grade_examples(u, l, n, expected):
    assert G.product_grade(u, l, n) == expected


def test_product_grade_undefined_is_not_an_error():
    assert G.product_grade(0, 0, 1) is None


def test_product_grade_rejects_negative():
    with pytest.raises(ValueError):
        G.product_grade(-1, 2, 1)


@given(grade, grade, st.integers(1, 4))
def test_product_grade_symmetric(u, l, n):
    assert G.product_grade(u, l, n) == G.product_grade(l, u, n)


@given(grade, grade, st.integers(1, 4))
def test_product_grade_bounded_by_factors(u, l, n):
    g = G.product_grade(u, l, n)
    if g is not None:
        assert g <= min(u, l)


@given(st.integers(0, 10), st.integers(0, 10), st.integers(1, 4))
def test_product_grade_monotone(u, l, n):
    g = G.product_grade(u, l, n)
    g_up = G.product_grade(u + 1, l, n)
    if g is not None:
        assert g_up is not None and g_up >= g


# safeness grading


@pytest.mark.parametrize(
    "order, k, s, n, expected",
    [(2, 3, 2, 1, 1), (0, 4, 2, 2, 2)],
)
def test_safe_grade_examples(order, k, s, n, expected):
    assert G.safe_grade(order, k, s, n) == expected


def test_safe_grade_accepts_multiindex():
    assert G.safe_grade((1, 1), 3, 2, 2) == max(1, 2 - 2 + 1 + 1)


@pytest.mark.parametrize("args", [(3, 4, 2, 1), (0, 1, 2, 1), (0, INF, 2, 1)])
def test_safe_grade_rejects_inadmissible(args):
    with pytest.raises(ValueError):
        G.safe_grade(*args)


@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 8))
def test_leading_threshold_is_continuous(n, s, extra):
    k = s + extra
    assert G.embeds_in_continuous(G.safe_grade(s, k, s, n), n)


@given(st.integers(1, 3), st.integers(0, 4), st.integers(0, 6), st.integers(0, 4))
def test_safe_grade_monotone(n, s, extra, order):
    order = min(order, s)
    k = s + extra
    assert G.safe_grade(order, k + 1, s, n) >= G.safe_grade(order, k, s, n)
    if order < s:
        assert G.safe_grade(order + 1, k, s, n) >= G.safe_grade(order, k, s, n)


@pytest.mark.parametrize("r, n, expected", [(1, 1, True), (1, 2, False), (INF, 7, True), (0, 1, False)])
def test_embeds_in_continuous(r, n, expected):
    assert G.embeds_in_continuous(r, n) is expected


# multiindices


def test_enumerate_examples():
    assert G.enumerate_multiindices(1, 2) == [(0,), (1,), (2,)]
    assert G.enumerate_multiindices(2, 1) == [(0, 0), (1, 0), (0, 1)]


@given(st.integers(1, 3), st.integers(0, 5))
def test_enumerate_count_and_order(n, s):
    out = G.enumerate_multiindices(n, s)
    assert len(out) == math.comb(n + s, s)
    assert len(set(out)) == len(out)
    assert out == sorted(out, key=G.graded_key)
    assert all(len(i) == n and sum(i) <= s for i in out)


def test_binom_and_sub_examples():
    assert G.binom((2, 1), (1, 0)) == 2
    assert G.sub((2, 1), (1, 1)) == (1, 0)


@pytest.mark.parametrize("fn", [G.binom, G.sub])
def test_binom_sub_reject_incomparable(fn):
    with pytest.raises(ValueError):
        fn((1, 0), (0, 1))


@given(st.integers(1, 2), st.integers(0, 4), st.data())
def test_binom_vandermonde(n, s, data):
    # sum over j <= l of binom(l, j) equals 2^|l|
    l = data.draw(st.sampled_from(G.enumerate_multiindices(n, s)))
    assert sum(G.binom(l, j) for j in G.below(l)) == 2 ** sum(l)
    # Pascal recursion componentwise: C(l, j) = C(l - e, j) + C(l - e, j - e)
    for c in range(n):
        if l[c] == 0:
            continue
        e = G.unit(n, c)
        lm = G.sub(l, e)
        for j in G.below(l):
            left = G.binom(lm, j) if G.leq(j, lm) else 0
            right = G.binom(lm, G.sub(j, e)) if j[c] > 0 else 0
            assert G.binom(l, j) == left + right


def test_add_sub_roundtrip():
    assert G.sub(G.add((1, 2), (3, 0)), (3, 0)) == (1, 2)
