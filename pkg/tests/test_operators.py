import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ksafe.catalog import rough_conductivity, smooth_conductivity
from ksafe.coefficients import Coefficient, Const, GradeError, Trig
from ksafe.grades import INF
from ksafe.grid import TorusGrid, random_field
from ksafe.operators import (
    DiffOp,
    compose,
    derivative_operator,
    divergence_form_laplacian,
    formal_adjoint,
    identity,
    is_elliptic,
    is_safe,
    laplacian,
    principal_symbol,
    schroedinger_like,
    symbol_values,
)
from ksafe.spectral import apply

PROBE = np.linspace(0.1, 2 * np.pi, 16)[None]


def same_coefficients(P, Q, x=PROBE, tol=1e-9):
    keys = set(P.indices) | set(Q.indices)
    for i in keys:
        a = P.coeff(i).evaluate(x)
        b = Q.coeff(i).evaluate(x)
        np.testing.assert_allclose(a, b, atol=tol, err_msg=str(i))


def trig_coefficient(rng, q=1, top=4):
    rows = []
    for _ in range(q):
        row = []
        for _ in range(q):
            k = int(rng.integers(1, top + 1))
            row.append(Trig(((0,), (k,)), (float(rng.normal()), float(rng.normal())), (0.0, float(rng.uniform(0, 6)))))
        rows.append(tuple(row))
    return Coefficient(1, tuple(rows))


def random_operator(rng, s, q=1):
    return DiffOp(1, q, s, {(j,): trig_coefficient(rng, q) for j in range(s + 1)})


def pairing(u, v, g=None, w=None):
    """int v^T g u w by trapezoid quadrature on the padded grid."""
    grid = u.grid
    U, V = u.values(padded=True), v.values(padded=True)
    pts = grid.points(padded=True).reshape(grid.n, -1)
    shape = U.shape[1:]
    G = np.eye(u.q)[:, :, None] if g is None else np.moveaxis(g.evaluate(pts), 0, -1)
    W = 1.0 if w is None else w.evaluate(pts)[:, 0, 0].reshape(shape)
    GU = np.einsum("abp,bp->ap", G.reshape(u.q, u.q, -1) if g is not None else np.broadcast_to(G, (u.q, u.q, U[0].size)), U.reshape(u.q, -1))
    return float(np.mean(np.sum(V.reshape(u.q, -1) * GU, axis=0) * np.ravel(W)))


# safeness


def test_safeness_rough_potential():
    P = DiffOp.from_terms(1, {(2,): Coefficient.const(1.0, 1), (0,): Coefficient.powerlaw(1, 2, 64)})
    r = is_safe(P, 3)
    rows = {row.index: row for row in r.rows}
    assert (rows[(2,)].required, rows[(2,)].actual, rows[(2,)].passed) == (1, INF, True)
    assert (rows[(0,)].required, rows[(0,)].actual, rows[(0,)].passed) == (1, 1, True)
    assert rows[(1,)].actual == INF
    assert r.overall and r.max_safe_k == 3


def test_safeness_rough_first_order_fails():
    P = DiffOp.from_terms(1, {(1,): Coefficient.powerlaw(1, "0.55", 64)})
    r = is_safe(P, 1)
    assert not r.overall
    assert r.failing()[0].index == (1,) and r.failing()[0].required == 1
    assert r.max_safe_k is None


@given(st.integers(2, 9))
def test_smooth_operators_are_safe_for_all_k(k):
    P = divergence_form_laplacian(smooth_conductivity())
    assert is_safe(P, k).overall


def test_safeness_notes():
    r = is_safe(laplacian(2), 1)
    assert any("exceeds" in note for note in r.notes)
    assert any("n/2" in note for note in r.notes)


def test_difop_validation():
    with pytest.raises(ValueError):
        DiffOp(1, 1, 2, {(1,): Coefficient.const(1.0, 1)})
    with pytest.raises(ValueError):
        DiffOp(1, 1, 1, {(2,): Coefficient.const(1.0, 1)})


# adjoint


def test_adjoint_of_first_order():
    a = Coefficient.trig(1, [2], [0.8], [0.4]) + Coefficient.const(1.0, 1)
    P = DiffOp.from_terms(1, {(1,): a})
    expected = DiffOp.from_terms(1, {(1,): -a, (0,): -a.derivative((1,))})
    same_coefficients(formal_adjoint(P), expected)


def test_adjoint_of_second_derivative_and_multiplication():
    same_coefficients(formal_adjoint(laplacian(1)), laplacian(1))
    c = Coefficient.trig(1, [1], [1.5])
    M = DiffOp.from_terms(1, {(0,): c})
    same_coefficients(formal_adjoint(M), M)


@pytest.mark.parametrize("q", [1, 2])
def test_adjoint_inner_product_identity(q):
    rng = np.random.default_rng(7 + q)
    grid = TorusGrid(1, 256)
    for s in (1, 2):
        P = random_operator(rng, s, q)
        A = formal_adjoint(P)
        u = random_field(grid, rng, q=q)
        v = random_field(grid, rng, q=q)
        lhs = pairing(apply(P, u), v)
        rhs = pairing(u, apply(A, v))
        scale = np.linalg.norm(u.data) * np.linalg.norm(v.data) * 256**s
        assert abs(lhs - rhs) <= 1e-9 * scale


def test_weighted_adjoint_identity():
    rng = np.random.default_rng(3)
    grid = TorusGrid(1, 128)
    w = Coefficient.const(2.0, 1) + Coefficient.trig(1, [1], [0.7], [0.2])
    P = random_operator(rng, 2)
    A = formal_adjoint(P, w=w)
    u, v = random_field(grid, rng), random_field(grid, rng)
    lhs = pairing(apply(P, u), v, w=w)
    rhs = pairing(u, apply(A, v), w=w)
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


def test_constant_metric_adjoint_identity():
    rng = np.random.default_rng(4)
    grid = TorusGrid(1, 128)
    g = Coefficient(1, ((Const(2.0), Const(0.5)), (Const(0.5), Const(1.0))))
    P = random_operator(rng, 1, q=2)
    A = formal_adjoint(P, g=g)
    u, v = random_field(grid, rng, q=2), random_field(grid, rng, q=2)
    lhs = pairing(apply(P, u), v, g=g)
    rhs = pairing(u, apply(A, v), g=g)
    assert abs(lhs - rhs) <= 1e-9 * abs(lhs)


def test_scalar_nonconstant_metric_adjoint_identity():
    rng = np.random.default_rng(5)
    grid = TorusGrid(1, 128)
    g = Coefficient.const(3.0, 1) + Coefficient.trig(1, [1], [1.0])
    P = random_operator(rng, 2)
    A = formal_adjoint(P, g=g)
    u, v = random_field(grid, rng), random_field(grid, rng)
    lhs = pairing(apply(P, u), v, g=g)
    rhs = pairing(u, apply(A, v), g=g)
    assert abs(lhs - rhs) <= 1e-8 * abs(lhs)


def test_adjoint_metric_validation():
    P = random_operator(np.random.default_rng(0), 1, q=2)
    bad = Coefficient(1, ((Const(1.0), Const(0.5)), (Const(0.0), Const(1.0))))
    with pytest.raises(ValueError, match="symmetric"):
        formal_adjoint(P, g=bad)
    rough = Coefficient(1, ((Const(2.0), Const(0.0)), (Const(0.0), Trig(((0,), (1,)), (2.0, 1.0), (0.0, 0.0)))))
    with pytest.raises(NotImplementedError):
        formal_adjoint(P, g=rough)
    with pytest.raises(ValueError, match="positive"):
        formal_adjoint(laplacian(1), w=Coefficient.trig(1, [1], [1.0]))


def test_adjoint_involution():
    rng = np.random.default_rng(11)
    for s in (1, 2):
        P = random_operator(rng, s)
        same_coefficients(formal_adjoint(formal_adjoint(P)), P)


def test_adjoint_preserves_safeness():
    k = 3
    P = DiffOp.from_terms(1, {(2,): rough_conductivity(64), (1,): Coefficient.powerlaw(1, 3, 64, seed=1),
                              (0,): Coefficient.powerlaw(1, 2, 64, seed=2)})
    assert is_safe(P, k).overall
    assert is_safe(formal_adjoint(P), k - P.s).overall


def test_adjoint_rejects_insufficient_grades():
    P = DiffOp.from_terms(1, {(2,): Coefficient.const(1.0, 1) + Coefficient.powerlaw(1, 2, 32)})
    with pytest.raises(GradeError):
        formal_adjoint(P)


# composition


def test_compose_first_order_pair():
    a = Coefficient.trig(1, [1], [1.0]) + Coefficient.const(2.0, 1)
    b = Coefficient.trig(1, [2], [0.5], [1.0])
    C = compose(DiffOp.from_terms(1, {(1,): a}), DiffOp.from_terms(1, {(1,): b}))
    expected = DiffOp.from_terms(1, {(2,): a @ b, (1,): a @ b.derivative((1,))})
    same_coefficients(C, expected)


def test_compose_with_identity():
    P = random_operator(np.random.default_rng(2), 2)
    same_coefficients(compose(P, identity(1)), P)
    same_coefficients(compose(identity(1), P), P)


def test_compose_derivative_with_multiplication(rng):
    c = Coefficient.trig(1, [3], [1.0], [0.5])
    C = compose(derivative_operator((1,)), DiffOp.from_terms(1, {(0,): c}))
    grid = TorusGrid(1, 128)
    u = random_field(grid, rng)
    expected = apply(DiffOp.from_terms(1, {(1,): c, (0,): c.derivative((1,))}), u)
    np.testing.assert_allclose(apply(C, u).data, expected.data, atol=1e-10)


def test_compose_matches_sequential_application():
    rng = np.random.default_rng(21)
    grid = TorusGrid(1, 256)
    for s1, s2 in [(1, 1), (2, 1), (1, 2), (0, 2), (1, 0)]:
        A, B = random_operator(rng, s1), random_operator(rng, s2)
        u = random_field(grid, rng)
        lhs = apply(compose(A, B), u).data
        rhs = apply(A, apply(B, u)).data
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)


def test_compose_associative():
    rng = np.random.default_rng(8)
    grid = TorusGrid(1, 128)
    A, B, C = (random_operator(rng, 1) for _ in range(3))
    u = random_field(grid, rng)
    lhs = apply(compose(A, compose(B, C)), u).data
    rhs = apply(compose(compose(A, B), C), u).data
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)


def test_symbol_multiplicative():
    rng = np.random.default_rng(9)
    A, B = random_operator(rng, 1, q=2), random_operator(rng, 2, q=2)
    C = compose(A, B)
    x = rng.uniform(0, 2 * np.pi, (1, 10))
    xi = rng.normal(size=(1, 10))
    lhs = symbol_values(C, x, xi)
    rhs = symbol_values(A, x, xi) @ symbol_values(B, x, xi)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_composition_preserves_safeness():
    k = 3
    A = DiffOp.from_terms(1, {(2,): Coefficient.const(1.0, 1), (0,): Coefficient.powerlaw(1, 2, 64)})
    B = DiffOp.from_terms(1, {(1,): rough_conductivity(64), (0,): Coefficient.powerlaw(1, 3, 64, seed=4)})
    assert is_safe(A, k).overall and is_safe(B, k).overall
    assert is_safe(compose(A, B), k).overall


def test_compose_vanishing_leading_part():
    P = DiffOp(1, 2, 1, {(1,): Coefficient(1, ((Const(1.0), Const(0.0)), (Const(0.0), Const(0.0))))})
    Q = DiffOp(1, 2, 1, {(1,): Coefficient(1, ((Const(0.0), Const(0.0)), (Const(0.0), Const(1.0))))})
    with pytest.raises(ValueError, match="vanishes"):
        compose(P, Q)


# symbols and ellipticity


def test_principal_symbol_examples():
    assert principal_symbol(laplacian(1), [0.3], [2.0]).value[0, 0] == pytest.approx(4.0)
    P = DiffOp.from_terms(1, {(1,): Coefficient.trig(1, [1], [1.0])})
    assert principal_symbol(P, [0.0], [3.0]).value[0, 0] == pytest.approx(3.0)


def test_adjoint_symbol_relation():
    rng = np.random.default_rng(10)
    a = Coefficient.trig(1, [1, 2], [1.0, 0.3], [0.0, 1.0])
    P = DiffOp.from_terms(1, {(1,): a})
    A = formal_adjoint(P)
    x = rng.uniform(0, 2 * np.pi, (1, 10))
    xi = rng.normal(size=(1, 10))
    np.testing.assert_allclose(symbol_values(A, x, xi), -symbol_values(P, x, xi), atol=1e-12)


def test_ellipticity_examples():
    r = is_elliptic(laplacian(2))
    assert r.elliptic and r.worst_margin == pytest.approx(1.0)
    wave = laplacian(2) - derivative_operator((0, 2)) - derivative_operator((0, 2))
    assert not is_elliptic(wave).elliptic
    r = is_elliptic(DiffOp.from_terms(1, {(2,): smooth_conductivity()}))
    assert r.elliptic and r.worst_margin == pytest.approx(0.5, abs=1e-3)


def test_ellipticity_deterministic():
    P = divergence_form_laplacian(rough_conductivity(256))
    assert is_elliptic(P, seed=3) == is_elliptic(P, seed=3)


# constructors


def test_divergence_laplacian_constant():
    same_coefficients(divergence_form_laplacian(Coefficient.const(1.0, 1)), laplacian(1))
    same_coefficients(divergence_form_laplacian(Coefficient.const(1.0, 2)), laplacian(2), x=np.zeros((2, 3)))


def test_divergence_laplacian_smooth():
    P = divergence_form_laplacian(smooth_conductivity())
    x = PROBE
    np.testing.assert_allclose(P.coeff((2,)).evaluate(x)[:, 0, 0], 1 + 0.5 * np.cos(x[0]), atol=1e-14)
    np.testing.assert_allclose(P.coeff((1,)).evaluate(x)[:, 0, 0], -0.5 * np.sin(x[0]), atol=1e-14)
    assert is_safe(P, 7).overall


@pytest.mark.parametrize("k", [2, 3, 4])
def test_divergence_laplacian_sharp_safeness(k):
    beta = {2: "5/2", 3: 3, 4: 4}[k]  # grade k - 1
    a = Coefficient.const(1.0, 1) + Coefficient.powerlaw(1, beta, 128, amp=0.05)
    assert a.grade == k - 1
    P = divergence_form_laplacian(a, k)
    assert is_safe(P, k).overall
    assert not is_safe(P, k + 1).overall


def test_divergence_laplacian_rejects_nonpositive():
    with pytest.raises(ValueError):
        divergence_form_laplacian(Coefficient.trig(1, [1], [1.0]))
    with pytest.raises(GradeError):
        divergence_form_laplacian(Coefficient.const(1.0, 1) + Coefficient.powerlaw(1, 2, 16, amp=0.1), k=3)


def test_schroedinger_examples():
    one = Coefficient.const(1.0, 1)
    same_coefficients(schroedinger_like(one, Coefficient.zeros(1), 1.0), laplacian(1))
    same_coefficients(schroedinger_like(one, one, -1.0), identity(1) + laplacian(1))
    P = schroedinger_like(one, Coefficient.powerlaw(1, 2, 64), 1.0)
    assert is_safe(P, 3).overall
