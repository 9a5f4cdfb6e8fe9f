"""Dynamical r-matrices as operator-valued maps ``q -> R(q)`` on the algebra.

``R(q)`` is a dense matrix acting on coefficient vectors; the tensor
``X (x) Y`` corresponds to ``Z -> B(Y, Z) X``, so the symmetric part
``1/2 T_a (x) T^a`` is ``1/2 id`` and quasi-triangularity reads
``R + R* = id`` with ``*`` the B-adjoint.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .lie import Automorphism, SubalgebraChain, diagonalize_to_cartan

DOMAIN_COND_MAX = 1e8
FD_STEP = 1e-5


def _in_subspace(chain, x, name, rtol=1e-10):
    x = np.asarray(x, dtype=float)
    outside = x - chain.project(x, name)
    return np.max(np.abs(outside), initial=0.0) <= rtol * max(1.0, np.max(np.abs(x), initial=0.0))


def central_difference(fn, x, v, h=FD_STEP, richardson=True):
    """Directional derivative of ``fn`` at ``x`` along ``v``.

    Central differences with step ``h``; one Richardson step combines the
    ``h`` and ``h/2`` estimates to cancel the leading ``h^2`` error.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)

    def cd(step):
        return (fn(x + step * v) - fn(x - step * v)) / (2.0 * step)

    if not richardson:
        return cd(h)
    return (4.0 * cd(h / 2.0) - cd(h)) / 3.0


class DynamicalRMatrix:
    """Base class: subclasses implement ``evaluate`` and ``derivative``.

    ``variable`` names the subalgebra hosting the dynamical variable
    (``"K"`` for the Abelian kind, ``"F"`` for the non-Abelian kind).
    """

    kind = "abelian"
    variable = "K"

    def __init__(self, chain: SubalgebraChain, theta: Automorphism):
        self.chain = chain
        self.algebra = chain.algebra
        self.theta = theta

    @property
    def variable_indices(self):
        return self.chain.indices(self.variable)

    def evaluate(self, q) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, q, v) -> np.ndarray:
        raise NotImplementedError

    def derivative_fd(self, q, v, h=FD_STEP, richardson=True) -> np.ndarray:
        return central_difference(self.evaluate, q, v, h, richardson)

    def derivatives(self, q) -> np.ndarray:
        """Stack of derivatives along the basis of the variable subalgebra."""
        eye = np.eye(self.algebra.dim)
        return np.array([self.derivative(q, eye[i]) for i in self.variable_indices])

    def in_domain(self, q) -> bool:
        try:
            self.check_domain(q)
        except DomainError:
            return False
        return True

    def check_domain(self, q) -> None:
        self.evaluate(q)

    __call__ = evaluate


class CartanRMatrix(DynamicalRMatrix):
    """Quasi-triangular r-matrix on a Cartan subalgebra:

    ``R|_K = 1/2 id`` and ``R|_{K-perp} = (1 - theta^{-1} exp(-ad_q))^{-1}``.

    ``q`` is accepted when ``||(1 - theta^{-1} exp(-ad_q))^{-1}||`` (max row
    sum) stays below ``inverse_norm_max``.
    """

    def __init__(self, chain, theta, inverse_norm_max=DOMAIN_COND_MAX):
        super().__init__(chain, theta)
        self.inverse_norm_max = inverse_norm_max
        k = chain.rank
        self._perp = slice(k, self.algebra.dim)
        self._theta_inv_perp = theta.theta_inv[k:, k:]
        eye = np.eye(self.algebra.dim)
        self._ad_k_perp = np.array([self.algebra.ad(eye[i])[k:, k:] for i in chain.k_indices])
        self._memo = (None, None)

    def _block(self, q):
        q = np.asarray(q, dtype=float)
        key = q.tobytes()
        memo = self._memo
        if memo[0] == key:
            return memo[1]
        if not _in_subspace(self.chain, q, "K"):
            raise DomainError("base point does not lie in K")
        with np.errstate(over="ignore", invalid="ignore"):
            ex = self.chain.exp_ad_cartan(q, -1.0)
            a = np.eye(len(ex)) - self._theta_inv_perp @ ex
            try:
                a_inv = np.linalg.inv(a)
            except np.linalg.LinAlgError:
                raise DomainError("1 - theta^-1 exp(-ad_q) is singular on K-perp") from None
        size = np.max(np.sum(np.abs(a_inv), axis=1))
        if not np.isfinite(size) or size > self.inverse_norm_max:
            raise DomainError(
                f"1 - theta^-1 exp(-ad_q) is nearly singular on K-perp (inverse norm {size:.3e})"
            )
        out = (a, ex, a_inv)
        self._memo = (key, out)
        return out

    def condition_number(self, q) -> float:
        return float(np.linalg.cond(self._block(q)[0]))

    def inverse_norm(self, q) -> float:
        return float(np.max(np.sum(np.abs(self._block(q)[2]), axis=1)))

    def evaluate(self, q) -> np.ndarray:
        _, _, a_inv = self._block(q)
        k = self.chain.rank
        r = np.zeros((self.algebra.dim, self.algebra.dim))
        r[np.arange(k), np.arange(k)] = 0.5
        r[self._perp, self._perp] = a_inv
        return r

    def derivative(self, q, v) -> np.ndarray:
        # ad_q and ad_v commute on K, so d exp(-ad_q) = -ad_v exp(-ad_q)
        v = np.asarray(v, dtype=float)
        if not _in_subspace(self.chain, v, "K"):
            raise DomainError("derivative direction does not lie in K")
        d = np.tensordot(v[self.chain.k_indices], self.derivatives(q), axes=1)
        return d

    def derivatives(self, q) -> np.ndarray:
        _, ex, a_inv = self._block(q)
        dim = self.algebra.dim
        left = a_inv @ self._theta_inv_perp
        right = ex @ a_inv
        out = np.zeros((self.chain.rank, dim, dim))
        out[:, self._perp, self._perp] = -left @ self._ad_k_perp @ right
        return out


def cartan_evaluate(chain, q, theta) -> np.ndarray:
    return CartanRMatrix(chain, theta).evaluate(q)


def cartan_derivative(chain, q, v, theta) -> np.ndarray:
    return CartanRMatrix(chain, theta).derivative(q, v)


def inverse_ad_on_kperp_f(chain, q) -> np.ndarray:
    """``(ad_q restricted to K-perp in F)^{-1}`` as an operator, zero elsewhere."""
    idx = chain.kperp_f_indices
    dim = chain.algebra.dim
    out = np.zeros((dim, dim))
    if len(idx) == 0:
        return out
    block = chain.algebra.ad(q)[np.ix_(idx, idx)]
    if np.min(np.abs(chain.root_values(q, "KperpF"))) <= 1e-8:
        raise DomainError("ad_q is not invertible on K-perp inside F")
    out[np.ix_(idx, idx)] = np.linalg.inv(block)
    return out


class NonAbelianRMatrix(DynamicalRMatrix):
    """F-equivariant r-matrix whose Dirac reduction is a given Abelian one.

    At ``q`` in K it equals ``R_K(q) - (ad_q|_{K-perp in F})^{-1} P``; at a
    general regular ``Q`` it is transported by the adjoint action that
    conjugates ``Q`` into the Weyl chamber.
    """

    kind = "nonabelian"
    variable = "F"

    def __init__(self, r_k: DynamicalRMatrix, derivative_method="exact", fd_step=FD_STEP):
        super().__init__(r_k.chain, r_k.theta)
        if derivative_method not in ("exact", "fd"):
            raise ValueError(f"unknown derivative method {derivative_method!r}")
        self.r_k = r_k
        self.derivative_method = derivative_method
        self.fd_step = fd_step

    def at_cartan(self, q) -> np.ndarray:
        return self.r_k.evaluate(q) - inverse_ad_on_kperp_f(self.chain, q)

    def evaluate(self, Q) -> np.ndarray:
        Q = np.asarray(Q, dtype=float)
        if not _in_subspace(self.chain, Q, "F"):
            raise DomainError("base point does not lie in F")
        conj = diagonalize_to_cartan(self.chain, Q)
        return conj.Ad_inv @ self.at_cartan(conj.q) @ conj.Ad

    def derivative(self, Q, X) -> np.ndarray:
        if self.derivative_method == "fd":
            return self.derivative_fd(Q, X, self.fd_step)
        return self.derivative_exact(Q, X)

    def derivative_exact(self, Q, X) -> np.ndarray:
        """Derivative from F-equivariance.

        After conjugating ``Q`` to ``q`` in K, split the transported direction
        into a K part and ``[y, q]`` with ``y`` in K-perp inside F; the K part
        differentiates the Cartan formula, the rest rotates ``R`` by ``ad_y``.
        """
        alg = self.algebra
        chain = self.chain
        conj = diagonalize_to_cartan(chain, np.asarray(Q, dtype=float))
        q = conj.q
        Xq = conj.Ad @ np.asarray(X, dtype=float)
        x_k = chain.project(Xq, "K")
        s = inverse_ad_on_kperp_f(chain, q)
        y = -s @ Xq
        rq = self.at_cartan(q)
        ad_y = alg.ad(y)
        d = self.r_k.derivative(q, x_k) + s @ alg.ad(x_k) @ s + ad_y @ rq - rq @ ad_y
        return conj.Ad_inv @ d @ conj.Ad


class DiracReducedRMatrix(DynamicalRMatrix):
    """Abelian r-matrix obtained from an F-equivariant one by adding
    ``(ad_q|_{K-perp in F})^{-1}`` on K-perp inside F."""

    def __init__(self, r_f: DynamicalRMatrix):
        super().__init__(r_f.chain, r_f.theta)
        self.r_f = r_f

    def evaluate(self, q) -> np.ndarray:
        if not _in_subspace(self.chain, q, "K"):
            raise DomainError("base point does not lie in K")
        return self.r_f.evaluate(q) + inverse_ad_on_kperp_f(self.chain, q)

    def derivative(self, q, v) -> np.ndarray:
        s = inverse_ad_on_kperp_f(self.chain, q)
        return self.r_f.derivative(q, v) - s @ self.algebra.ad(v) @ s


def nonabelian_extend(r_k: DynamicalRMatrix) -> NonAbelianRMatrix:
    return NonAbelianRMatrix(r_k)


def dirac_reduce(r_f: DynamicalRMatrix) -> DynamicalRMatrix:
    # reducing an extension recovers the original exactly; keep its exact derivative
    if isinstance(r_f, NonAbelianRMatrix):
        return _RoundTrip(r_f)
    return DiracReducedRMatrix(r_f)


class _RoundTrip(DiracReducedRMatrix):
    # evaluates R_F on K through the Cartan formula (no diagonalization needed)
    def evaluate(self, q) -> np.ndarray:
        if not _in_subspace(self.chain, q, "K"):
            raise DomainError("base point does not lie in K")
        return self.r_f.at_cartan(q) + inverse_ad_on_kperp_f(self.chain, q)


class PerturbedRMatrix(DynamicalRMatrix):
    """``R + eps (u B(v, .) - v B(u, .))``, a constant negative control.

    By default ``u, v`` are the first two K-perp basis vectors, which span
    the root spaces of one root pair.  The perturbation is then B-skew and
    commutes with ``ad_K``: quasi-triangularity, compatibility, equivariance
    and the derivative are untouched, while the Yang-Baxter equation breaks.
    """

    def __init__(self, base: DynamicalRMatrix, eps: float, u=None, v=None):
        super().__init__(base.chain, base.theta)
        self.base = base
        self.kind = base.kind
        self.variable = base.variable
        self.eps = float(eps)
        dim = self.algebra.dim
        kp = self.chain.kperp_indices
        if u is None:
            u = np.zeros(dim)
            u[kp[0]] = 1.0
        if v is None:
            v = np.zeros(dim)
            v[kp[1]] = 1.0
        G = self.algebra.gram
        self.delta = self.eps * (np.outer(u, G @ v) - np.outer(v, G @ u))

    def evaluate(self, q) -> np.ndarray:
        return self.base.evaluate(q) + self.delta

    def derivative(self, q, v) -> np.ndarray:
        return self.base.derivative(q, v)

    def derivatives(self, q) -> np.ndarray:
        return self.base.derivatives(q)

    def check_domain(self, q) -> None:
        self.base.check_domain(q)


class DualRMatrix(DynamicalRMatrix):
    """``R* = id - R``; again a solution, used as a mismatched partner."""

    def __init__(self, base: DynamicalRMatrix):
        super().__init__(base.chain, base.theta)
        self.base = base
        self.kind = base.kind
        self.variable = base.variable

    def evaluate(self, q) -> np.ndarray:
        return np.eye(self.algebra.dim) - self.base.evaluate(q)

    def derivative(self, q, v) -> np.ndarray:
        return -self.base.derivative(q, v)

    def derivatives(self, q) -> np.ndarray:
        return -self.base.derivatives(q)


def quasi_triangularity_residual(r: DynamicalRMatrix, q) -> float:
    """``||R(q) + R(q)* - id||`` (max-abs entry)."""
    rq = r.evaluate(q)
    alg = r.algebra
    return float(np.max(np.abs(rq + alg.b_adjoint(rq) - np.eye(alg.dim))))


def compatibility_residual(r: DynamicalRMatrix, q) -> float:
    """Size of the off-diagonal blocks of ``R(q)`` in ``g = K + K-perp``."""
    rq = r.evaluate(q)
    k, kp = r.chain.k_indices, r.chain.kperp_indices
    return float(max(np.max(np.abs(rq[np.ix_(k, kp)])), np.max(np.abs(rq[np.ix_(kp, k)]))))


def kperp_condition_number(r: DynamicalRMatrix, q) -> float:
    """Condition number of ``R(q)`` restricted to K-perp (non-degeneracy)."""
    kp = r.chain.kperp_indices
    return float(np.linalg.cond(r.evaluate(q)[np.ix_(kp, kp)]))


def cdybe_residual(r: DynamicalRMatrix, q, X, Y, derivs=None) -> np.ndarray:
    """Residual of the dynamical Yang-Baxter equation contracted with ``X, Y``.

    ``E(R^a, X, Y) + [X/2, Y/2]`` where ``R^a = R - id/2`` and
    ``E = [R^a X, R^a Y] - R^a([R^a X, Y] - [R^a Y, X])
    + (D_{Y_V} R) X - (D_{X_V} R) Y + grad_V B(X, R^a(.) Y)``,
    ``V`` being the subalgebra that hosts the dynamical variable.
    Pass precomputed ``derivs`` (from ``r.derivatives(q)``) to reuse them.
    """
    alg = r.algebra
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    ra = r.evaluate(q) - 0.5 * np.eye(alg.dim)
    if derivs is None:
        derivs = r.derivatives(q)
    vidx = r.variable_indices
    raX, raY = ra @ X, ra @ Y
    res = alg.bracket(raX, raY)
    res -= ra @ (alg.bracket(raX, Y) - alg.bracket(raY, X))
    res += np.tensordot(Y[vidx], derivs, axes=1) @ X
    res -= np.tensordot(X[vidx], derivs, axes=1) @ Y
    # gradient over V of q -> B(X, R^a(q) Y)
    c = np.einsum("i,nij,j->n", alg.gram @ X, derivs, Y)
    z = np.zeros(alg.dim)
    z[vidx] = np.linalg.solve(alg.gram[np.ix_(vidx, vidx)], c)
    res += z
    res += 0.25 * alg.bracket(X, Y)
    return res


def equivariance_residual(r: DynamicalRMatrix, q, x, fd=None) -> np.ndarray:
    """``D_{[x, q]} R(q) - [ad_x, R(q)]`` for ``x`` in the variable subalgebra.

    For the non-Abelian kind the directional derivative is taken by finite
    differences; pass ``fd=False`` to use ``r.derivative`` instead.
    """
    alg = r.algebra
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    rq = r.evaluate(q)
    ad_x = alg.ad(x)
    direction = alg.bracket(x, q)
    if fd is None:
        fd = r.kind == "nonabelian"
    if np.max(np.abs(direction), initial=0.0) == 0.0:
        d = np.zeros_like(rq)
    elif fd:
        d = r.derivative_fd(q, direction)
    else:
        d = r.derivative(q, direction)
    return d - (ad_x @ rq - rq @ ad_x)
