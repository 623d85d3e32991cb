import numpy as np
import pytest
import sympy as sp

from oracles import derivative_tensor, jet_of, polynomial_of, symbols
from umbra.errors import ArgumentError
from umbra.tensor_jets import (
    BoundaryJet,
    SymTensor,
    contract,
    gauge_cubic,
    random_canonical_jet,
    random_symtensor,
    rotate_domain,
    shear_jet,
    sym_apply,
)


def random_rotation(d, rng):
    Q, R = np.linalg.qr(rng.normal(size=(d, d)))
    return Q * np.sign(np.diag(R))


def test_identity_form_is_inner_product(rng):
    a, b = rng.normal(size=(2, 4))
    assert sym_apply(SymTensor.identity(4), [a, b]) == pytest.approx(a @ b, abs=1e-14)


def test_zero_tensor_vanishes(rng):
    assert sym_apply(SymTensor.zeros(3, 3), list(rng.normal(size=(3, 3)))) == 0.0


def test_sym_apply_matches_symbolic_polynomial():
    xs = symbols(2)
    T = derivative_tensor(xs[0] ** 2 * xs[1], xs, 3)
    e1, e2 = np.eye(2)
    # D^3(x0^2 x1)[e1, e1, e2] = 2
    assert sym_apply(T, [e1, e1, e2]) == pytest.approx(2.0)
    assert sym_apply(T, [e1, e1, e1]) == 0.0


def test_sym_apply_argument_checks():
    T = SymTensor.zeros(2, 3)
    with pytest.raises(ArgumentError):
        sym_apply(T, [np.zeros(3)])
    with pytest.raises(ArgumentError):
        sym_apply(T, [np.zeros(2), np.zeros(2)])


def test_contract_identity_gives_covector(rng):
    u = rng.normal(size=3)
    c = contract(SymTensor.identity(3), u)
    assert np.allclose(c.full(), u)


def test_contract_of_zero_is_zero(rng):
    assert contract(SymTensor.zeros(3, 4), rng.normal(size=4)).max_abs() == 0.0


def test_contract_against_polynomial_oracle(rng):
    xs = symbols(3)
    w = rng.normal(size=3)
    u = rng.normal(size=3)
    u -= (u @ w) / (w @ w) * w
    expr = sum(x * x for x in xs) * sum(float(wi) * x for wi, x in zip(w, xs))
    T = derivative_tensor(expr, xs, 3)
    # directional derivative of expr along u, then its Hessian at 0
    du = sum(float(ui) * sp.diff(expr, x) for ui, x in zip(u, xs))
    assert np.allclose(contract(T, u).full(), derivative_tensor(du, xs, 2).full(), atol=1e-12)


def test_symmetry_check_on_from_array():
    with pytest.raises(ArgumentError):
        SymTensor.from_array(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_polynomial_round_trip(rng):
    T = random_symtensor(4, 3, rng)
    assert np.allclose(SymTensor.from_polynomial(T.to_polynomial(), 4).full(), T.full(), atol=1e-12)


def test_rotate_identity_and_inverse(rng):
    J = random_canonical_jet(3, 5, rng)
    assert rotate_domain(J, np.eye(3)).max_diff(J) == 0.0
    R = random_rotation(3, rng)
    assert rotate_domain(rotate_domain(J, R), R.T).max_diff(J) <= 1e-12


def test_rotate_matches_substitution_oracle(rng):
    xs = symbols(3)
    J = random_canonical_jet(3, 3, rng)
    t = 0.7
    R = np.eye(3)
    R[np.ix_([0, 2], [0, 2])] = [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]
    f = polynomial_of(J, xs)
    y = sp.Matrix(R) * sp.Matrix(xs)
    g = sp.expand(f.subs(dict(zip(xs, y)), simultaneous=True))
    oracle = jet_of(g, xs, 3)
    assert rotate_domain(J, R).max_diff(oracle) <= 1e-12


def test_rotation_rejects_non_orthogonal(rng):
    J = random_canonical_jet(2, 3, rng)
    with pytest.raises(ArgumentError):
        rotate_domain(J, np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_shear_zero_is_identity(rng):
    J = random_canonical_jet(3, 4, rng)
    assert shear_jet(J, np.zeros(3)).max_diff(J) <= 1e-14


def test_shear_inverse_up_to_order_three(rng):
    J = random_canonical_jet(3, 4, rng)
    eta = rng.normal(size=3)
    back = shear_jet(shear_jet(J, eta), -eta)
    assert back.max_diff(J, upto=3) <= 1e-10


def test_shear_of_quadric_constant(rng):
    """D^3 F[x,x,x] = c <x,x><x,eta> with c = -3 for every eta."""
    Q = BoundaryJet.canonical(3, [SymTensor.zeros(3, 3)])
    cs = []
    for _ in range(10):
        eta = rng.normal(size=3)
        F = shear_jet(Q, eta)
        x = rng.normal(size=3)
        cs.append(sym_apply(F[3], [x] * 3) / ((x @ x) * (x @ eta)))
        assert np.allclose(F[3].full(), -gauge_cubic(3, eta).full(), atol=1e-12)
    assert np.ptp(cs) <= 1e-10
    assert cs[0] == pytest.approx(-3.0, abs=1e-10)


def test_shear_matches_direct_composition(rng):
    """F(y) = f(y - eta F(y)) solved symbolically by fixed-point iteration."""
    xs = symbols(2)
    J = random_canonical_jet(2, 4, rng)
    eta = rng.normal(size=2)
    f = polynomial_of(J, xs)
    F = f
    for _ in range(4):
        F = sp.expand(f.subs({x: x - float(e) * F for x, e in zip(xs, eta)}, simultaneous=True))
        F = sum(t for t in sp.Add.make_args(F) if sp.Poly(t, *xs).total_degree() <= 4)
    assert shear_jet(J, eta).max_diff(jet_of(F, xs, 4)) <= 1e-9


def test_shear_argument_checks(rng):
    J = random_canonical_jet(3, 3, rng)
    with pytest.raises(ArgumentError):
        shear_jet(J, np.zeros(2))
    with pytest.raises(ArgumentError):
        shear_jet(J, np.array([np.inf, 0, 0]))


def test_jet_serialization_round_trip(rng):
    J = random_canonical_jet(3, 4, rng)
    assert BoundaryJet.from_dict(J.to_dict()).max_diff(J) == 0.0
    assert J.is_canonical()


def test_jet_evaluation_matches_polynomial(rng):
    xs = symbols(3)
    J = random_canonical_jet(3, 4, rng)
    x = rng.normal(size=3) * 0.3
    f = polynomial_of(J, xs)
    assert J(x) == pytest.approx(float(f.subs(dict(zip(xs, x)))), rel=1e-12)
