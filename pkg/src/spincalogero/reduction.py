"""Matching the F-equivariant construction with the Abelian one on K.

The gauge slice fixes ``Q = q`` in the Cartan subalgebra.  On the Abelian
constraint surface ``xi_K = 0`` the map

    m(q, p, xi) = (q, p - (ad_q|_{K-perp in F})^{-1} xi_{K-perp in F}, xi)

lands on the slice, and carries the Abelian quasi-Lax operator, Hamiltonian
and symplectic form to the non-Abelian ones.  The leftover freedom is the
Weyl group, handled by :func:`weyl_identify`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import ConstraintError, DomainError
from .lie import SubalgebraChain, diagonalize_to_cartan, weyl_group
from .phase import PhasePoint, hamiltonian, require_constrained
from .rmatrix import FD_STEP, inverse_ad_on_kperp_f

SLICE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GaugeSlicePoint:
    """Point ``(q, P, xi)`` of the gauge slice: ``q`` regular in K, ``[q, P] + xi_F = 0``."""

    q: np.ndarray
    P: np.ndarray
    xi: np.ndarray

    def as_phase_point(self) -> PhasePoint:
        """The same data read as a point of the non-Abelian phase space."""
        return PhasePoint(self.q, self.P, self.xi)

    def constraint_residual(self, chain: SubalgebraChain) -> float:
        chi = chain.algebra.bracket(self.q, self.P) + chain.project(self.xi, "F")
        return float(np.max(np.abs(chi), initial=0.0))


def _scale(x) -> float:
    return max(1.0, float(np.max(np.abs(x), initial=0.0)))


def _check_in(chain, x, name, what):
    x = np.asarray(x, dtype=float)
    if np.max(np.abs(x - chain.project(x, name)), initial=0.0) > SLICE_TOL * _scale(x):
        raise ConstraintError(f"{what} must lie in {name}")
    return x


def _slice_momentum(chain, q, p, xi):
    s = inverse_ad_on_kperp_f(chain, q)
    return p - s @ xi


def solve_constraint(q, p, xi, chain: SubalgebraChain) -> GaugeSlicePoint:
    """Unique ``P`` in F with K-part ``p`` solving ``[q, P] + xi_F = 0``.

    Requires ``xi_K = 0`` and ``q`` regular; only ``xi`` on K-perp inside F
    enters the correction.
    """
    q = _check_in(chain, q, "K", "q")
    p = _check_in(chain, p, "K", "p")
    xi = np.asarray(xi, dtype=float)
    require_constrained(PhasePoint(q, p, xi), chain)
    P = _slice_momentum(chain, q, p, xi)
    return GaugeSlicePoint(q, P, xi)


def map_m(point: PhasePoint, chain: SubalgebraChain) -> GaugeSlicePoint:
    return solve_constraint(point.q, point.p, point.xi, chain)


def map_m_inverse(point: GaugeSlicePoint, chain: SubalgebraChain) -> PhasePoint:
    """Recover ``(q, p, xi)``; ``p`` is the K-part of ``P``."""
    if point.constraint_residual(chain) > 1e-10 * _scale(point.P) * _scale(point.q):
        raise ConstraintError("point does not satisfy the slice constraint")
    return PhasePoint(point.q, chain.project(point.P, "K"), point.xi)


def slice_gauge(point: GaugeSlicePoint, kappa, chain: SubalgebraChain) -> GaugeSlicePoint:
    """Action of ``exp(kappa)``, ``kappa`` in K, on the slice (q is fixed)."""
    kappa = _check_in(chain, kappa, "K", "gauge parameter")
    g = chain.algebra.exp_ad(kappa)
    return GaugeSlicePoint(point.q, g @ point.P, g @ point.xi)


def reach_slice(Q, P, xi, chain: SubalgebraChain) -> tuple:
    """Conjugate a non-Abelian constrained point with regular ``Q`` onto the slice.

    Returns the slice point and the conjugation used.
    """
    conj = diagonalize_to_cartan(chain, Q)
    return GaugeSlicePoint(conj.q, conj.Ad @ np.asarray(P, float), conj.Ad @ np.asarray(xi, float)), conj


class MatchResult(NamedTuple):
    lax: float
    hamiltonian: float


def verify_quasi_lax_match(r_f, r_k, point: PhasePoint) -> MatchResult:
    """Compare ``L_F(m(point))`` with ``L_K(point)`` and the two Hamiltonians."""
    chain = r_k.chain
    sp = map_m(point, chain)
    L_k = point.p - r_k.evaluate(point.q) @ point.xi
    L_f = sp.P - r_f.evaluate(sp.q) @ sp.xi
    H_k = hamiltonian(r_k, point)
    H_f = 0.5 * r_k.algebra.bilinear(L_f, L_f)
    return MatchResult(float(np.max(np.abs(L_f - L_k))), float(abs(H_f - H_k)))


class OrbitTangent(NamedTuple):
    """Tangent vector ``(dq, dp, [x, xi])`` to the Abelian constraint surface."""

    dq: np.ndarray
    dp: np.ndarray
    x: np.ndarray


def _xi_velocity(alg, t: OrbitTangent, xi):
    return alg.bracket(np.asarray(t.x, float), xi)


def check_tangent(point: PhasePoint, t: OrbitTangent, chain: SubalgebraChain) -> None:
    alg = chain.algebra
    _check_in(chain, t.dq, "K", "dq")
    _check_in(chain, t.dp, "K", "dp")
    dxi = _xi_velocity(alg, t, point.xi)
    if np.max(np.abs(dxi[chain.k_indices]), initial=0.0) > 1e-10 * _scale(t.x) * _scale(point.xi):
        raise ConstraintError("tangent vector leaves the constraint surface xi_K = 0")


def tangent_space_basis(point: PhasePoint, chain: SubalgebraChain) -> np.ndarray:
    """Basis of ``{x : [x, xi]_K = 0}``; the orbit directions allowed in a tangent."""
    alg = chain.algebra
    ad_xi = -alg.ad(point.xi)  # x -> [x, xi]
    return scipy.linalg.null_space(ad_xi[chain.k_indices])


def random_tangent(rng, point: PhasePoint, chain: SubalgebraChain, scale=1.0) -> OrbitTangent:
    alg = chain.algebra
    basis = tangent_space_basis(point, chain)
    x = basis @ rng.normal(size=basis.shape[1])
    dq = chain.project(rng.normal(size=alg.dim), "K")
    dp = chain.project(rng.normal(size=alg.dim), "K")
    return OrbitTangent(scale * dq, scale * dp, scale * x)


def canonical_form(alg, dq_u, dp_u, dq_v, dp_v) -> float:
    """``B(dp ^ dq)`` on a pair of tangents."""
    return alg.bilinear(dp_u, dq_v) - alg.bilinear(dp_v, dq_u)


def orbit_form(alg, xi, x, y) -> float:
    """``omega([x, xi], [y, xi]) = B(xi, [x, y])``."""
    return alg.bilinear(xi, alg.bracket(x, y))


def _orbit_preimage(alg, xi, dxi):
    # some x with [x, xi] = dxi; the form does not depend on the choice
    x, *_ = np.linalg.lstsq(-alg.ad(xi), dxi, rcond=None)
    return x


def _pushforward(point: PhasePoint, t: OrbitTangent, chain, h):
    alg = chain.algebra
    dxi = _xi_velocity(alg, t, point.xi)

    def m_at(eps):
        sp = map_m(PhasePoint(point.q + eps * t.dq, point.p + eps * t.dp, point.xi + eps * dxi), chain)
        return np.concatenate((sp.q, sp.P, sp.xi))

    d = alg.dim
    v = (m_at(h) - m_at(-h)) / (2.0 * h)
    return v[:d], v[d : 2 * d], v[2 * d :]


def two_form_match(point: PhasePoint, u: OrbitTangent, v: OrbitTangent, chain: SubalgebraChain, h=FD_STEP) -> float:
    """``|Omega_F(m_* u, m_* v) - Omega_K(u, v)|`` with ``m_*`` by central differences.

    The curve through ``point`` is the straight line with velocity
    ``(dq, dp, [x, xi])``, which stays on ``xi_K = 0``.
    """
    alg = chain.algebra
    require_constrained(point, chain)
    check_tangent(point, u, chain)
    check_tangent(point, v, chain)
    omega_k = canonical_form(alg, u.dq, u.dp, v.dq, v.dp) + orbit_form(alg, point.xi, u.x, v.x)

    sp = map_m(point, chain)
    dQ_u, dP_u, dxi_u = _pushforward(point, u, chain, h)
    dQ_v, dP_v, dxi_v = _pushforward(point, v, chain, h)
    x_u = _orbit_preimage(alg, sp.xi, dxi_u)
    x_v = _orbit_preimage(alg, sp.xi, dxi_v)
    omega_f = canonical_form(alg, dQ_u, dP_u, dQ_v, dP_v) + orbit_form(alg, sp.xi, x_u, x_v)
    return float(abs(omega_f - omega_k))


# ---------------------------------------------------------------- Weyl group

WORD_LENGTH = 4


def _copy_blocks(chain: SubalgebraChain, xi):
    m = chain.block_size
    M = chain.algebra.matrix(xi)
    return np.array([M[c * m : (c + 1) * m, c * m : (c + 1) * m] for c in range(chain.copies)])


def gauge_signature(chain: SubalgebraChain, xi, max_length=WORD_LENGTH) -> np.ndarray:
    """Traces of words ``pi_{r1} xi_{c1} pi_{r2} xi_{c2} ...`` up to ``max_length``.

    ``pi_r`` are the diagonal matrix units and ``xi_c`` the copy blocks.  Such
    a trace is the product of entries along a closed cycle ``r1 -> r2 -> ...``,
    so it is unchanged by conjugation with any diagonal matrix.
    """
    B = _copy_blocks(chain, xi)
    out = [np.einsum("cii->ci", B).ravel()]
    if max_length >= 2:
        out.append(np.einsum("aij,bji->abij", B, B).ravel())
    if max_length >= 3:
        out.append(np.einsum("aij,bjk,cki->abcijk", B, B, B).ravel())
    if max_length >= 4:
        out.append(np.einsum("aij,bjk,ckl,dli->abcdijkl", B, B, B, B, optimize=True).ravel())
    return np.concatenate(out)


def weyl_identify(x: PhasePoint, y: PhasePoint, chain: SubalgebraChain, tol=1e-8):
    """Weyl element ``w`` with ``w.x = y`` up to the diagonal gauge, else ``None``.

    ``q`` fixes the candidate permutation (regular points have distinct
    entries); ``p`` must then match exactly and ``xi`` must have the same
    gauge signature as ``w.xi_x``.
    """
    require_constrained(x, chain)
    require_constrained(y, chain)
    ex, ey = chain.cartan_entries(x.q), chain.cartan_entries(y.q)
    # image diagonal entry i is source entry perm[i]
    perm = np.empty(len(ex), dtype=int)
    perm[np.argsort(ey)] = np.argsort(ex)
    w = weyl_group(chain).element(tuple(perm))
    scale = _scale(np.concatenate((x.q, x.p, y.q, y.p)))
    if np.max(np.abs(w.act(x.q) - y.q)) > tol * scale or np.max(np.abs(w.act(x.p) - y.p)) > tol * scale:
        return None
    sx = gauge_signature(chain, w.act(x.xi))
    sy = gauge_signature(chain, y.xi)
    if np.max(np.abs(sx - sy), initial=0.0) > tol * max(1.0, float(np.max(np.abs(sy), initial=0.0))):
        return None
    return w


def weyl_transform(w, point: PhasePoint) -> PhasePoint:
    return PhasePoint(w.act(point.q), w.act(point.p), w.act(point.xi))


def weyl_covariance_residual(r, point: PhasePoint, w, config) -> float:
    """Integrate then map by ``w`` versus map then integrate; max state gap."""
    from .dynamics import integrate

    a = integrate(r, point, config)
    b = integrate(r, weyl_transform(w, point), config)
    if a.status != "ok" or b.status != "ok":
        raise DomainError("trajectory left the domain during the Weyl covariance check")
    end_a = weyl_transform(w, a.state(len(a) - 1))
    end_b = b.state(len(b) - 1)
    return float(np.max(np.abs(end_a.as_vector() - end_b.as_vector())))


def weyl_elements(chain: SubalgebraChain) -> list:
    return list(weyl_group(chain))
