import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spincalogero.errors import ConstraintError
from spincalogero.phase import (
    Gradient,
    PhasePoint,
    constrained_hamiltonian,
    first_class_residual,
    gauge_transform,
    hamiltonian,
    invariant_bracket,
    lax_pullback_gradient,
    poisson_bracket,
    potential,
    lax_bracket_residual,
    quasi_lax,
)
from spincalogero.sampling import sample_phase_point
from spincalogero.suites import build_rmatrices


def fd_gradient(r, point, f, h=1e-6):
    """B-gradients of ``f`` by central differences in the allowed coordinates."""
    alg, chain = r.algebra, r.chain
    G = alg.gram
    k = chain.k_indices
    out = []
    for slot, idx in (("q", k), ("p", k), ("xi", np.arange(alg.dim))):
        base = getattr(point, slot)
        partial = np.zeros(alg.dim)
        for i in idx:
            e = np.zeros(alg.dim)
            e[i] = h
            partial[i] = (f(point.replace(**{slot: base + e})) - f(point.replace(**{slot: base - e}))) / (2 * h)
        grad = np.zeros(alg.dim)
        grad[idx] = np.linalg.solve(G[np.ix_(idx, idx)], partial[idx])
        out.append(grad)
    return Gradient(*out)


def test_closed_form_potential():
    r = build_rmatrices("sl(2)")[0]
    for t, a, b in [(1.0, 2.0, -2.0), (0.4, 1.0, -3.0), (2.0, -1.5, 0.5)]:
        point = PhasePoint(np.array([t, 0, 0]), np.zeros(3), np.array([0.0, a, b]))
        assert abs(potential(r, point) - (-a * b / (4 * np.sinh(t) ** 2))) < 1e-10


def test_trigonometric_potential_su2():
    # su(2) basis: K = i diag(1,-1); for q = tK the root values are 2it, so
    # the pair potential goes like 1/sin^2 t and is periodic in pi
    r = build_rmatrices("su(2)")[0]
    rng = np.random.default_rng(0)
    xi = r.chain.project(rng.normal(size=3), "Kperp")
    vals = [potential(r, PhasePoint(r.chain.embed_k(np.array([t])), np.zeros(3), xi)) for t in (0.5, 0.5 + np.pi)]
    assert abs(vals[0] - vals[1]) < 1e-10
    v1 = potential(r, PhasePoint(r.chain.embed_k(np.array([0.5])), np.zeros(3), xi))
    v2 = potential(r, PhasePoint(r.chain.embed_k(np.array([1.0])), np.zeros(3), xi))
    ratio = v1 / v2
    assert abs(ratio - np.sin(1.0) ** 2 / np.sin(0.5) ** 2) < 1e-10


def test_lax_gradient_against_finite_difference(r_cartan, rng):
    point = sample_phase_point(rng, r_cartan)
    Z = rng.normal(size=r_cartan.algebra.dim)
    analytic = lax_pullback_gradient(r_cartan, point, Z)
    numeric = fd_gradient(r_cartan, point, lambda pt: r_cartan.algebra.bilinear(quasi_lax(r_cartan, pt), Z))
    for a, n in zip(analytic, numeric):
        assert np.allclose(a, n, atol=1e-6)


def test_lax_bracket_everywhere(r_cartan, rng):
    for _ in range(10):
        point = sample_phase_point(rng, r_cartan)
        assert np.max(np.abs(lax_bracket_residual(r_cartan, point))) < 1e-9


def test_poisson_bracket_antisymmetric(r_cartan, rng):
    point = sample_phase_point(rng, r_cartan)
    f = Gradient(*rng.normal(size=(3, r_cartan.algebra.dim)))
    g = Gradient(*rng.normal(size=(3, r_cartan.algebra.dim)))
    assert abs(poisson_bracket(r_cartan.algebra, f, g, point) + poisson_bracket(r_cartan.algebra, g, f, point)) < 1e-12


def test_first_class(r_cartan, rng):
    point = sample_phase_point(rng, r_cartan)
    assert np.max(np.abs(first_class_residual(point, r_cartan.chain))) < 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_invariants_commute_on_constraint(seed):
    r = build_rmatrices("sl(3)")[0]
    point = sample_phase_point(np.random.default_rng(seed), r, constrained=True)
    assert abs(invariant_bracket(r, point, 2, 3)) < 1e-8


def test_invariants_do_not_commute_off_constraint():
    r = build_rmatrices("sl(3)")[0]
    rng = np.random.default_rng(5)
    worst = max(abs(invariant_bracket(r, sample_phase_point(rng, r), 2, 3)) for _ in range(5))
    assert worst > 1e-6


def test_hamiltonian_forms_agree_and_gauge_invariant(r_cartan, rng):
    point = sample_phase_point(rng, r_cartan, constrained=True)
    assert abs(hamiltonian(r_cartan, point) - constrained_hamiltonian(r_cartan, point)) < 1e-10
    kappa = r_cartan.chain.project(rng.normal(size=r_cartan.algebra.dim), "K")
    assert abs(hamiltonian(r_cartan, gauge_transform(point, kappa, r_cartan.chain)) - hamiltonian(r_cartan, point)) < 1e-10


def test_constraint_required(rng):
    r = build_rmatrices("sl(2)")[0]
    point = sample_phase_point(rng, r)
    point = point.replace(xi=point.xi + np.array([1.0, 0, 0]))
    with pytest.raises(ConstraintError):
        constrained_hamiltonian(r, point)
