import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from spincalogero.errors import DomainError
from spincalogero.lie import build_algebra
from spincalogero.rmatrix import (
    CartanRMatrix,
    DualRMatrix,
    PerturbedRMatrix,
    cdybe_residual,
    compatibility_residual,
    dirac_reduce,
    equivariance_residual,
    nonabelian_extend,
    quasi_triangularity_residual,
)
from spincalogero.sampling import SamplerConfig, sample_base_point, sample_cartan
from spincalogero.suites import build_rmatrices


def dense_am(built, auto, q):
    """R(q) straight from the definition: dense expm and a linear solve."""
    alg, chain = built.algebra, built.chain
    theta = built.automorphisms[auto].theta
    d = alg.dim
    kp = chain.kperp_indices
    e = scipy.linalg.expm(-alg.ad(q))
    a = np.eye(d) - np.linalg.inv(theta) @ e
    R = np.zeros((d, d))
    k = chain.k_indices
    R[np.ix_(k, k)] = 0.5 * np.eye(len(k))
    R[np.ix_(kp, kp)] = np.linalg.inv(a[np.ix_(kp, kp)])
    return R


def test_sl2_closed_form():
    # basis (H, E, F), q = tH: ad_q E = 2t E, ad_q F = -2t F
    r = build_rmatrices("sl(2)")[0]
    for t in (0.3, 1.0, -0.7):
        R = r.evaluate(np.array([t, 0.0, 0.0]))
        expect = np.diag([0.5, 1 / (1 - np.exp(-2 * t)), 1 / (1 - np.exp(2 * t))])
        assert np.allclose(R, expect, atol=1e-14)


@pytest.mark.parametrize("label,auto", [("sl(3)", "identity"), ("su(3)", "identity"), ("sl(2)^3", "cyclic")])
def test_matches_dense_definition(label, auto, rng):
    built = build_algebra(label)
    r = CartanRMatrix(built.chain, built.automorphisms[auto])
    for _ in range(5):
        q = sample_cartan(rng, r)
        assert np.allclose(r.evaluate(q), dense_am(built, auto, q), atol=1e-11)


def test_derivative_against_finite_difference(r_cartan, rng):
    q = sample_cartan(rng, r_cartan)
    for i in r_cartan.chain.k_indices:
        v = np.eye(r_cartan.algebra.dim)[i]
        assert np.allclose(r_cartan.derivative(q, v), r_cartan.derivative_fd(q, v), atol=1e-8)


def test_structural_properties(r_cartan, rng):
    for _ in range(10):
        q = sample_cartan(rng, r_cartan)
        assert quasi_triangularity_residual(r_cartan, q) < 1e-10
        assert compatibility_residual(r_cartan, q) < 1e-10
        x = r_cartan.chain.project(rng.normal(size=r_cartan.algebra.dim), "K")
        assert np.max(np.abs(equivariance_residual(r_cartan, q, x))) < 1e-12


@given(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_cdybe_sl3(a, b, seed):
    r = build_rmatrices("sl(3)")[0]
    q = r.chain.embed_k(np.array([a, b]))
    if np.min(np.abs(r.chain.root_values(q, "KperpF"))) < 0.2:
        return
    X, Y = np.random.default_rng(seed).normal(size=(2, r.algebra.dim))
    assert np.max(np.abs(cdybe_residual(r, q, X, Y))) < 1e-9


def test_cdybe_catalog(r_cartan, rng):
    for _ in range(10):
        q = sample_cartan(rng, r_cartan)
        X, Y = rng.normal(size=(2, r_cartan.algebra.dim))
        assert np.max(np.abs(cdybe_residual(r_cartan, q, X, Y))) < 1e-9


def test_perturbation_breaks_only_cdybe(r_cartan, rng):
    bad = PerturbedRMatrix(r_cartan, 1e-3)
    q = sample_cartan(rng, r_cartan)
    X, Y = rng.normal(size=(2, r_cartan.algebra.dim))
    assert quasi_triangularity_residual(bad, q) < 1e-10
    assert compatibility_residual(bad, q) < 1e-10
    worst = max(
        np.max(np.abs(cdybe_residual(bad, sample_cartan(rng, r_cartan), *rng.normal(size=(2, r_cartan.algebra.dim)))))
        for _ in range(10)
    )
    assert worst > 1e-5


def test_dual_is_complementary(r_cartan, rng):
    q = sample_cartan(rng, r_cartan)
    dual = DualRMatrix(r_cartan)
    assert np.allclose(dual.evaluate(q) + r_cartan.evaluate(q), np.eye(r_cartan.algebra.dim))


def test_domain_rejects_walls_and_off_cartan():
    r = build_rmatrices("sl(2)")[0]
    with pytest.raises(DomainError):
        r.evaluate(np.zeros(3))
    with pytest.raises(DomainError):
        r.evaluate(np.array([1.0, 0.5, 0.0]))
    assert not r.in_domain(np.array([1e-12, 0, 0]))


def test_compact_domain_is_periodic():
    r = build_rmatrices("su(2)")[0]
    q = r.chain.embed_k(np.array([np.pi / 2]))
    r.evaluate(q)
    assert not r.in_domain(r.chain.embed_k(np.array([np.pi])))


@pytest.mark.parametrize("label", ["sl(2)", "sl(3)", "su(3)", "sl(2)^3"])
def test_nonabelian_extension(label, rng):
    r_k = build_rmatrices(label)[0]
    r_f = nonabelian_extend(r_k)
    cfg = SamplerConfig()
    for _ in range(5):
        Q = sample_base_point(rng, r_f, cfg)
        x = r_f.chain.project(rng.normal(size=r_f.algebra.dim), "F")
        X, Y = rng.normal(size=(2, r_f.algebra.dim))
        assert np.max(np.abs(cdybe_residual(r_f, Q, X, Y))) < 1e-9
        assert np.max(np.abs(equivariance_residual(r_f, Q, x))) < 1e-8
        assert quasi_triangularity_residual(r_f, Q) < 1e-10
        q = sample_cartan(rng, r_k, cfg)
        assert np.allclose(dirac_reduce(r_f).evaluate(q), r_k.evaluate(q), atol=1e-9)


def test_nonabelian_exact_derivative_matches_fd(rng):
    r_f = nonabelian_extend(build_rmatrices("sl(3)")[0])
    Q = sample_base_point(rng, r_f)
    v = r_f.chain.project(rng.normal(size=8), "F")
    assert np.allclose(r_f.derivative(Q, v), r_f.derivative_fd(Q, v), atol=1e-7)
