import numpy as np
import pytest

from spincalogero.dynamics import IntegratorConfig
from spincalogero.errors import ConstraintError
from spincalogero.lie import weyl_group
from spincalogero.phase import PhasePoint, gauge_transform, hamiltonian
from spincalogero.reduction import (
    OrbitTangent,
    check_tangent,
    map_m,
    map_m_inverse,
    random_tangent,
    reach_slice,
    slice_gauge,
    two_form_match,
    verify_quasi_lax_match,
    weyl_covariance_residual,
    weyl_identify,
    weyl_transform,
)
from spincalogero.rmatrix import DualRMatrix, nonabelian_extend
from spincalogero.sampling import sample_phase_point
from spincalogero.suites import build_rmatrices

LABELS = ["sl(2)", "sl(3)", "su(3)", "sl(2)^3"]


@pytest.fixture(params=LABELS)
def pair(request):
    r_k = build_rmatrices(request.param)[0]
    return nonabelian_extend(r_k), r_k


def test_slice_constraint_holds(pair, rng):
    r_f, r_k = pair
    alg, chain = r_k.algebra, r_k.chain
    for _ in range(5):
        point = sample_phase_point(rng, r_k, constrained=True)
        sp = map_m(point, chain)
        # direct check of [q, P] + xi_F = 0 and that P keeps the K part p
        assert np.max(np.abs(alg.bracket(sp.q, sp.P) + chain.project(sp.xi, "F"))) < 1e-12
        assert np.allclose(chain.project(sp.P, "K"), point.p, atol=1e-14)
        assert np.allclose(map_m_inverse(sp, chain).as_vector(), point.as_vector(), atol=1e-14)


def test_lax_and_hamiltonian_match(pair, rng):
    r_f, r_k = pair
    for _ in range(10):
        point = sample_phase_point(rng, r_k, constrained=True)
        res = verify_quasi_lax_match(r_f, r_k, point)
        assert res.lax < 1e-9 and res.hamiltonian < 1e-9
        sp = map_m(point, r_k.chain)
        H_f = hamiltonian(r_f, sp.as_phase_point())
        assert abs(H_f - hamiltonian(r_k, point)) < 1e-9


def test_product_case_has_fperp_spin(rng):
    r_k = build_rmatrices("sl(2)^3")[0]
    point = sample_phase_point(rng, r_k, constrained=True)
    assert np.max(np.abs(r_k.chain.project(point.xi, "Fperp"))) > 1e-3
    assert verify_quasi_lax_match(nonabelian_extend(r_k), r_k, point).lax < 1e-9


def test_mismatched_pair_fails(pair, rng):
    r_f, r_k = pair
    bad = nonabelian_extend(DualRMatrix(r_k))
    point = sample_phase_point(rng, r_k, constrained=True)
    assert verify_quasi_lax_match(bad, r_k, point).lax > 1e-4


def test_gauge_equivariance(pair, rng):
    _, r_k = pair
    chain = r_k.chain
    point = sample_phase_point(rng, r_k, constrained=True)
    kappa = chain.project(rng.normal(size=chain.algebra.dim), "K")
    a = map_m(gauge_transform(point, kappa, chain), chain)
    b = slice_gauge(map_m(point, chain), kappa, chain)
    assert np.allclose(a.P, b.P, atol=1e-12) and np.allclose(a.xi, b.xi, atol=1e-12)


def test_two_form(pair, rng):
    _, r_k = pair
    chain = r_k.chain
    point = sample_phase_point(rng, r_k, constrained=True)
    for _ in range(3):
        u, v = random_tangent(rng, point, chain), random_tangent(rng, point, chain)
        assert two_form_match(point, u, v, chain) < 1e-7


def test_tangent_must_respect_constraint(rng):
    r_k = build_rmatrices("sl(3)")[0]
    chain = r_k.chain
    point = sample_phase_point(rng, r_k, constrained=True)
    x = np.zeros(8)
    x[chain.kperp_indices[0]] = 1.0
    bad = OrbitTangent(np.zeros(8), np.zeros(8), x)
    if np.max(np.abs(chain.project(r_k.algebra.bracket(x, point.xi), "K"))) > 1e-8:
        with pytest.raises(ConstraintError):
            check_tangent(point, bad, chain)


def test_reach_slice(pair, rng):
    r_f, r_k = pair
    for _ in range(5):
        na = sample_phase_point(rng, r_f, constrained=True)
        sp, conj = reach_slice(na.q, na.p, na.xi, r_k.chain)
        assert sp.constraint_residual(r_k.chain) < 1e-9
        assert np.allclose(conj.Ad @ na.q, sp.q, atol=1e-9)


def test_weyl_identification(pair, rng):
    _, r_k = pair
    chain = r_k.chain
    group = weyl_group(chain)
    for w in group:
        point = sample_phase_point(rng, r_k, constrained=True)
        kappa = chain.project(rng.normal(size=chain.algebra.dim), "K")
        image = gauge_transform(weyl_transform(w, point), kappa, chain)
        found = weyl_identify(point, image, chain)
        assert found is not None and found.permutation == w.permutation
        other = sample_phase_point(rng, r_k, constrained=True)
        assert weyl_identify(point, other, chain) is None


def test_weyl_rejects_spin_mismatch(rng):
    # same q and p, spin on a different orbit of the diagonal gauge
    r_k = build_rmatrices("sl(3)")[0]
    chain = r_k.chain
    point = sample_phase_point(rng, r_k, constrained=True)
    other = PhasePoint(point.q, point.p, 1.3 * point.xi)
    assert weyl_identify(point, other, chain) is None


def test_weyl_covariance_of_flow(rng):
    r_k = build_rmatrices("sl(3)")[0]
    point = sample_phase_point(rng, r_k, constrained=True)
    for w in weyl_group(r_k.chain):
        assert weyl_covariance_residual(r_k, point, w, IntegratorConfig(1e-2, 0.1)) < 1e-10
