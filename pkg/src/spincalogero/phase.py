"""Phase space T*K x g*: quasi-Lax operator, momentum map and Poisson brackets.

Points carry full-length coefficient vectors; ``q`` and ``p`` lie in the
subalgebra hosting the dynamical variable (K, or F for the non-Abelian
construction).  Functions are differentiated through B-gradients: the
gradient of ``f`` in the ``xi`` slot is the element ``Z`` with
``df = B(Z, dxi)``.  With that convention the bracket reads

    {f, g} = B(f_q, g_p) - B(g_q, f_p) + B(xi, [f_xi, g_xi]).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConstraintError
from .lie import LieAlgebra, SubalgebraChain

CONSTRAINT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PhasePoint:
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        for name in ("q", "p", "xi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.p, self.xi])

    @classmethod
    def from_vector(cls, y, dim):
        return cls(y[:dim], y[dim : 2 * dim], y[2 * dim :])

    def replace(self, **kw) -> "PhasePoint":
        vals = {"q": self.q, "p": self.p, "xi": self.xi}
        vals.update(kw)
        return PhasePoint(**vals)


class Gradient(NamedTuple):
    """B-gradients of a phase-space function in the q, p and xi slots."""

    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray


def poisson_bracket(algebra: LieAlgebra, f_grad: Gradient, g_grad: Gradient, point: PhasePoint) -> float:
    G = algebra.gram
    canonical = f_grad.q @ G @ g_grad.p - g_grad.q @ G @ f_grad.p
    lie_poisson = algebra.bilinear(point.xi, algebra.bracket(f_grad.xi, g_grad.xi))
    return float(canonical + lie_poisson)


def quasi_lax(r, point: PhasePoint) -> np.ndarray:
    """``L = p - R(q) xi``."""
    return point.p - r.evaluate(point.q) @ point.xi


def momentum_map(point: PhasePoint, chain: SubalgebraChain, kind: str = "abelian") -> np.ndarray:
    """``xi_K`` for the Abelian construction, ``[Q, P] + xi_F`` otherwise."""
    if kind == "abelian":
        return chain.project(point.xi, "K")
    return chain.algebra.bracket(point.q, point.p) + chain.project(point.xi, "F")


def _variable_gradient(r, coeffs) -> np.ndarray:
    # element of the variable subalgebra V whose B-pairing with basis vector
    # e_i (i in V) equals coeffs[i]
    alg = r.algebra
    vidx = r.variable_indices
    out = np.zeros(alg.dim)
    out[vidx] = np.linalg.solve(alg.gram[np.ix_(vidx, vidx)], coeffs)
    return out


def lax_pullback_gradient(r, point: PhasePoint, Z, derivs=None) -> Gradient:
    """Gradient of ``F o L`` where ``Z`` is the B-gradient of ``F`` at ``L``.

    ``L`` is affine in ``p`` and ``xi``; its ``q`` dependence enters through
    the derivative of ``R``.
    """
    alg = r.algebra
    Z = np.asarray(Z, dtype=float)
    rq = r.evaluate(point.q)
    if derivs is None:
        derivs = r.derivatives(point.q)
    c = -np.einsum("i,nij,j->n", alg.gram @ Z, derivs, point.xi)
    grad_q = _variable_gradient(r, c)
    grad_p = r.chain.project(Z, r.variable)
    grad_xi = -alg.b_adjoint(rq) @ Z
    return Gradient(grad_q, grad_p, grad_xi)


def nabla_chi(r, point: PhasePoint, derivs=None) -> np.ndarray:
    """Derivative of ``R`` along the momentum map value ``chi(point)``."""
    chi = momentum_map(point, r.chain, r.kind)
    if derivs is None:
        return r.derivative(point.q, chi) if np.any(chi) else np.zeros((r.algebra.dim,) * 2)
    return np.tensordot(chi[r.variable_indices], derivs, axes=1)


def lax_bracket_residual(r, point: PhasePoint, derivs=None) -> np.ndarray:
    """Componentwise defect of ``{L_1, L_2} = [r, L_1 + L_2] - nabla_chi r``.

    Entry ``[a, b]`` pairs the tensor identity with ``T_a (x) T_b`` through
    the invariant form, i.e. it compares ``{B(L, T_a), B(L, T_b)}`` with
    ``B([R T_b, L], T_a) + B(R* T_a, [L, T_b]) - B((nabla_chi R) T_b, T_a)``.
    """
    alg = r.algebra
    G = alg.gram
    q, xi = point.q, point.xi
    rq = r.evaluate(q)
    rq_star = alg.b_adjoint(rq)
    if derivs is None:
        derivs = r.derivatives(q)
    vidx = r.variable_indices
    L = point.p - rq @ xi
    ad_L = alg.ad(L)

    # column b of U is (d_b R) xi for b in V
    U = np.zeros((alg.dim, alg.dim))
    U[:, vidx] = (derivs @ xi).T
    GU = G @ U
    # basis vectors of V are B-orthogonal to the rest, so (T_b)_V = T_b or 0
    lhs = -GU + GU.T + rq_star.T @ alg.structure_tensor_on(xi) @ rq_star
    rhs = -G @ ad_L @ rq + G @ rq @ ad_L - G @ nabla_chi(r, point, derivs)
    return lhs - rhs


def momentum_gradient(point: PhasePoint, chain: SubalgebraChain, kind: str, X) -> Gradient:
    """Gradient of ``B(chi, X)`` for ``X`` in the variable subalgebra."""
    alg = chain.algebra
    X = np.asarray(X, dtype=float)
    if kind == "abelian":
        zero = np.zeros(alg.dim)
        return Gradient(zero, zero, X)
    return Gradient(alg.bracket(point.p, X), alg.bracket(X, point.q), X)


def first_class_residual(point: PhasePoint, chain: SubalgebraChain, kind: str = "abelian") -> np.ndarray:
    """``{chi_a, chi_b} - B(chi, [T_a, T_b])`` over basis pairs of K (or F)."""
    alg = chain.algebra
    vidx = chain.indices("K" if kind == "abelian" else "F")
    eye = np.eye(alg.dim)
    chi = momentum_map(point, chain, kind)
    grads = [momentum_gradient(point, chain, kind, eye[i]) for i in vidx]
    out = np.empty((len(vidx), len(vidx)))
    for i, a in enumerate(vidx):
        for j, b in enumerate(vidx):
            pb = poisson_bracket(alg, grads[i], grads[j], point)
            out[i, j] = pb - alg.bilinear(chi, alg.bracket(eye[a], eye[b]))
    return out


def hamiltonian(r, point: PhasePoint) -> float:
    """Quadratic Casimir ``1/2 B(L, L)`` of the quasi-Lax operator."""
    L = quasi_lax(r, point)
    return 0.5 * r.algebra.bilinear(L, L)


def require_constrained(point: PhasePoint, chain: SubalgebraChain, tol=CONSTRAINT_TOL):
    xi_k = point.xi[chain.k_indices]
    scale = max(1.0, float(np.max(np.abs(point.xi), initial=0.0)))
    if np.max(np.abs(xi_k), initial=0.0) > tol * scale:
        raise ConstraintError(f"point is off the constraint surface: |xi_K| = {np.max(np.abs(xi_k)):.3e}")


def constrained_hamiltonian(r, point: PhasePoint) -> float:
    """Kinetic plus spin-Calogero potential, valid on ``xi_K = 0``."""
    require_constrained(point, r.chain)
    alg = r.algebra
    xi_perp = r.chain.project(point.xi, "Kperp")
    rx = r.evaluate(point.q) @ xi_perp
    return 0.5 * alg.bilinear(point.p, point.p) + 0.5 * alg.bilinear(rx, rx)


def potential(r, point: PhasePoint) -> float:
    """Potential term ``1/2 B(R xi_perp, R xi_perp)`` of the constrained Hamiltonian."""
    xi_perp = r.chain.project(point.xi, "Kperp")
    rx = r.evaluate(point.q) @ xi_perp
    return 0.5 * r.algebra.bilinear(rx, rx)


def _power_matrices(algebra: LieAlgebra, x, kmax):
    m = algebra.trace_phase * algebra.matrix(x)
    powers = [np.eye(m.shape[0], dtype=m.dtype)]
    for _ in range(kmax):
        powers.append(powers[-1] @ m)
    return powers


def invariant_functions(algebra: LieAlgebra, L, kmax: int) -> list:
    """``h_k = tr(L^k)`` for ``k = 2..kmax`` (made real for compact forms)."""
    powers = _power_matrices(algebra, L, kmax)
    return [float(np.real(np.trace(powers[k]))) for k in range(2, kmax + 1)]


def invariant_gradient(algebra: LieAlgebra, L, k: int) -> np.ndarray:
    """B-gradient of ``h_k`` at ``L``."""
    powers = _power_matrices(algebra, L, k)
    return algebra.coeffs(k * algebra.trace_phase * powers[k - 1])


def invariant_bracket(r, point: PhasePoint, j: int, k: int, derivs=None) -> float:
    """``{h_j o L, h_k o L}`` via analytic gradients."""
    alg = r.algebra
    L = quasi_lax(r, point)
    if derivs is None:
        derivs = r.derivatives(point.q)
    gj = lax_pullback_gradient(r, point, invariant_gradient(alg, L, j), derivs)
    gk = lax_pullback_gradient(r, point, invariant_gradient(alg, L, k), derivs)
    return poisson_bracket(alg, gj, gk, point)


def gauge_transform(point: PhasePoint, kappa, chain: SubalgebraChain) -> PhasePoint:
    """Residual K-gauge action: conjugate ``xi`` by ``exp(kappa)``, keep ``q, p``."""
    require_constrained(point, chain)
    alg = chain.algebra
    kappa = np.asarray(kappa, dtype=float)
    if np.max(np.abs(kappa - chain.project(kappa, "K")), initial=0.0) > 0:
        raise ConstraintError("gauge parameter must lie in K")
    return point.replace(xi=alg.exp_ad(kappa) @ point.xi)


@dataclass(frozen=True, eq=False)
class OrbitSeed:
    """A coadjoint orbit through ``xi0`` with its Casimir values ``tr(xi^k)``."""

    xi0: np.ndarray
    invariants_of_orbit: tuple

    @classmethod
    def through(cls, algebra: LieAlgebra, xi0, kmax: int):
        return cls(np.asarray(xi0, dtype=float), tuple(invariant_functions(algebra, xi0, kmax)))

    def sample(self, algebra: LieAlgebra, rng, max_norm: float = 1.0) -> np.ndarray:
        """``Ad_g xi0`` with ``g = exp(y)``, ``|y| <= max_norm``."""
        y = rng.normal(size=algebra.dim)
        y *= max_norm * rng.uniform() / np.linalg.norm(y)
        return algebra.exp_ad(y) @ self.xi0
