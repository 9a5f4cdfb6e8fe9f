"""Constrained spin Calogero flow generated by ``H = 1/2 B(L, L)``.

Integration is classical fixed-step RK4 on the flat state ``(q, p, xi)``.
Each accepted step records the monitors used to judge conservation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DomainError
from .phase import PhasePoint, require_constrained


class Tangent(NamedTuple):
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray


@dataclass(frozen=True)
class IntegratorConfig:
    step: float
    t_end: float
    method: str = "rk4"

    def __post_init__(self):
        if not self.step > 0 or not self.t_end > 0:
            raise ValueError("step and t_end must be positive")
        if self.step > self.t_end:
            raise ValueError("step must not exceed t_end")
        if self.method != "rk4":
            raise ValueError(f"unsupported integrator {self.method!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.step))


def _flow_arrays(r, q, p, xi):
    alg = r.algebra
    k = r.chain.rank
    rq = r.evaluate(q)
    derivs = r.derivatives(q)
    L = p - rq @ xi
    gL = alg.gram @ L
    dq = np.zeros_like(L)
    dq[:k] = L[:k]
    dp = np.zeros_like(L)
    dp[:k] = _gram_k_inv(r) @ ((derivs @ xi) @ gL)
    grad_xi = -(alg.gram_inv @ (rq.T @ gL))
    dxi = alg.bracket(grad_xi, xi)
    return (dq, dp, dxi), rq, derivs, L


def _gram_k_inv(r):
    chain = r.chain
    cached = chain.__dict__.get("_gram_k_inv")
    if cached is None:
        k = chain.k_indices
        cached = np.linalg.inv(chain.algebra.gram[np.ix_(k, k)])
        chain.__dict__["_gram_k_inv"] = cached
    return cached


def _flow(r, point: PhasePoint):
    tan, rq, derivs, L = _flow_arrays(r, point.q, point.p, point.xi)
    return Tangent(*tan), rq, derivs, L


def vector_field(r, point: PhasePoint, check=True) -> Tangent:
    """Hamiltonian vector field of ``1/2 B(L, L)`` on the constraint surface."""
    if check:
        require_constrained(point, r.chain)
    return _flow(r, point)[0]


def lax_derivative(r, point: PhasePoint) -> np.ndarray:
    """``dL/dt`` along the flow by the chain rule (no time differencing)."""
    tan, rq, derivs, _ = _flow(r, point)
    d_r = np.tensordot(tan.q[r.chain.k_indices], derivs, axes=1)
    return tan.p - d_r @ point.xi - rq @ tan.xi


def lax_residual_at(r, point: PhasePoint) -> float:
    """``max |dL/dt - [R(q) L, L]|`` at one point."""
    alg = r.algebra
    tan, rq, derivs, L = _flow(r, point)
    d_r = np.tensordot(tan.q[r.chain.k_indices], derivs, axes=1)
    dL = tan.p - d_r @ point.xi - rq @ tan.xi
    return float(np.max(np.abs(dL - alg.bracket(rq @ L, L))))


def reconstruct_from_lax(r, point: PhasePoint) -> Tangent:
    """Recover ``dp`` and ``dxi`` from the K / K-perp split of ``[R L, L]``.

    Needs ``R(q)`` invertible on K-perp.  Uses ``dq = p`` and ``dxi_K = 0``.
    """
    require_constrained(point, r.chain)
    alg = r.algebra
    chain = r.chain
    rq = r.evaluate(point.q)
    L = point.p - rq @ point.xi
    rhs = alg.bracket(rq @ L, L)
    dq = point.p.copy()
    d_r = r.derivative(point.q, dq)
    dp = chain.project(rhs, "K")
    kp = chain.kperp_indices
    target = -(rhs + d_r @ point.xi)[kp]
    dxi = np.zeros(alg.dim)
    dxi[kp] = np.linalg.solve(rq[np.ix_(kp, kp)], target)
    return Tangent(dq, dp, dxi)


def _spectrum(algebra, L):
    return np.linalg.eigvals(algebra.trace_phase * algebra.matrix(L))


def spectral_distance(ev, ev0) -> float:
    """Max eigenvalue displacement under the best one-to-one matching."""
    cost = np.abs(ev[:, None] - ev0[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray
    monitors: dict
    kmax: int
    status: str = "ok"
    exit_time: float | None = None
    message: str = ""

    def __len__(self):
        return len(self.times)

    def state(self, i) -> PhasePoint:
        return PhasePoint(self.q[i], self.p[i], self.xi[i])

    @property
    def states(self):
        return [self.state(i) for i in range(len(self))]


class _GenericKernel:
    """Flat-state flow for any Abelian r-matrix; remembers the last evaluation."""

    def __init__(self, r):
        self.r = r
        self.dim = r.algebra.dim
        self._last = None

    def cell(self, y):
        return np.array(self.r.chain.wall_cell(y[: self.r.chain.rank]))

    def flow(self, y, check=True):
        d = self.dim
        q, p, xi = y[:d], y[d : 2 * d], y[2 * d :]
        (dq, dp, dxi), rq, derivs, L = _flow_arrays(self.r, q, p, xi)
        self._last = (xi, dq, dp, dxi, rq, derivs, L)
        self.energy = 0.5 * self.r.algebra.bilinear(L, L)
        return np.concatenate((dq, dp, dxi))

    def last_lax(self):
        """``L`` and the Lax residual at the most recent ``flow`` point."""
        xi, dq, dp, dxi, rq, derivs, L = self._last
        d_r = np.tensordot(dq[self.r.chain.k_indices], derivs, axes=1)
        dL = dp - d_r @ xi - rq @ dxi
        return L, float(np.max(np.abs(dL - self.r.algebra.bracket(rq @ L, L))))

    def lax_batch(self, ys):
        out = [None] * len(ys)
        res = np.empty(len(ys))
        for i, y in enumerate(ys):
            self.flow(y)
            out[i], res[i] = self.last_lax()
        return np.array(out).reshape(len(ys), self.dim), res


class _CartanKernel:
    """Same flow specialised to the Cartan family, working on K-perp blocks only.

    ``R`` is ``1/2`` on K and ``A^{-1}`` on K-perp with
    ``A = 1 - theta^{-1} exp(-ad_q)``.  ``theta^{-1}`` commutes with ``ad_K``,
    so in a joint eigenbasis ``A^{-1} = sum_j v_j (x) v^j / (1 - w_j e^{-a_j(q)})``
    with roots ``a_j`` and eigenvalues ``w_j`` of ``theta^{-1}``: no inversions.
    """

    def __init__(self, r):
        chain = r.chain
        alg = r.algebra
        self.r = r
        self.dim = alg.dim
        self.k = k = chain.rank
        m = self.dim - k
        self.m = m
        self.th = r._theta_inv_perp
        self.ad = r._ad_k_perp
        vecs, vecs_inv, roots, omega = _joint_eigen(chain, self.ad, self.th)
        self.vecs, self.vecs_inv, self.roots = vecs, vecs_inv, roots
        G = alg.gram
        self.g_kk = G[:k, :k]
        self.g_kk_inv = np.linalg.inv(self.g_kk)
        self.g_pp = G[k:, k:]
        self.g_pp_inv = np.linalg.inv(self.g_pp)
        # R* on K-perp is G^-1 (A^-1)^T G, again one contraction
        left_star = self.g_pp_inv @ vecs_inv.T
        right_star = vecs.T @ self.g_pp
        self.outer = np.einsum("ij,jk->jik", vecs, vecs_inv).reshape(m, m * m)
        self.outer_star = np.einsum("ij,jk->jik", left_star, right_star).reshape(m, m * m)
        self.neg_roots = -roots
        self.omega = omega
        self.trivial_theta = bool(np.allclose(omega, 1.0))
        self.real = self.trivial_theta and not np.any(np.abs(roots.imag) > 0)
        if self.real:
            self.neg_roots = self.neg_roots.real
            self.outer = self.outer.real
            self.outer_star = self.outer_star.real
        # dp_i = B(R* L, ad_i (A^-1 - 1) xi), since theta^-1 ad_i exp(-ad_q) A^-1 = ad_i (A^-1 - 1)
        self.dp_op = -np.tensordot(self.g_kk_inv, self.g_pp @ self.ad, axes=1)
        self.eye = np.eye(m)
        self.limit = r.inverse_norm_max
        self.f_flat = alg._f_flat
        self.walls = roots[: len(chain.kperp_f_indices)]
        self.walls = self.walls.imag / (2 * np.pi) if chain.compact else self.walls.real
        self.compact = chain.compact
        self._y = None

    def _exp(self, q_k):
        e = np.exp(q_k @ self.neg_roots.T)
        ex = ((self.vecs * e[..., None, :]) @ self.vecs_inv)
        return ex.real

    def cell(self, y):
        """Cell labels as in ``SubalgebraChain.wall_cell`` (roots possibly reordered)."""
        v = self.walls @ y[: self.k]
        return np.floor(v) if self.compact else np.sign(v)

    def flow(self, y, check=True):
        """Time derivative of the flat state; ``check`` applies the domain bound."""
        d, k, m = self.dim, self.k, self.m
        p = y[d : 2 * d]
        xi = y[2 * d :]
        xp = xi[k:]
        e = np.exp(self.neg_roots @ y[:k])
        c = 1.0 / (1.0 - (e if self.trivial_theta else self.omega * e))
        a_inv = (c @ self.outer).reshape(m, m)
        a_star = (c @ self.outer_star).reshape(m, m)
        if not self.real:
            a_inv = a_inv.real
            a_star = a_star.real
        if check:
            size = np.abs(a_inv).sum(axis=1).max()
            if not size <= self.limit:
                raise DomainError(f"1 - theta^-1 exp(-ad_q) is nearly singular on K-perp (inverse norm {size:.3e})")
        rx = a_inv @ xp
        lp = p[k:] - rx
        rl = a_star @ lp
        out = np.zeros(3 * d)
        lk = p[:k] - 0.5 * xi[:k]
        if check:
            self.energy = 0.5 * (lk @ self.g_kk @ lk + lp @ self.g_pp @ lp)
        out[:k] = lk
        out[d : d + k] = (self.dp_op @ (rx - xp)) @ rl
        grad = np.concatenate((-0.5 * lk, -rl))
        out[2 * d :] = xi @ (grad @ self.f_flat).reshape(d, d)
        self._y = y
        return out

    def last_lax(self):
        y = self._y
        L, res = self.lax_batch(y[None, :])
        return L[0], float(res[0])

    def lax_batch(self, ys):
        """``L`` and the Lax residual for a stack of flat states."""
        d, k = self.dim, self.k
        q_k, p, xi = ys[:, :k], ys[:, d : 2 * d], ys[:, 2 * d :]
        ex = self._exp(q_k)
        a_inv = np.linalg.inv(self.eye - self.th @ ex)
        rx = _mv(a_inv, xi[:, k:])
        L = np.concatenate((p[:, :k] - 0.5 * xi[:, :k], p[:, k:] - rx), axis=1)
        w = ((L[:, k:] @ self.g_pp)[:, None, :] @ a_inv)[:, 0]
        u = _mv(ex, rx)
        adu = np.einsum("imn,Nn->Nim", self.ad, u)
        dq_k = L[:, :k]
        dp_k = -np.einsum("Nim,Nm->Ni", adu, w @ self.th) @ self.g_kk_inv.T
        grad = np.concatenate((-0.5 * L[:, :k], -(w @ self.g_pp_inv.T)), axis=1)
        dxi = _bracket_batch(self.f_flat, grad, xi)
        # dL = dp - (D_dq R) xi - R dxi
        dL_k = dp_k - 0.5 * dxi[:, :k]
        dL_p = _mv(a_inv, _mv(self.th, np.einsum("Ni,Nim->Nm", dq_k, adu)) - dxi[:, k:])
        rl = np.concatenate((0.5 * L[:, :k], _mv(a_inv, L[:, k:])), axis=1)
        lhs = np.concatenate((dL_k, dL_p), axis=1)
        res = np.max(np.abs(lhs - _bracket_batch(self.f_flat, rl, L)), axis=1)
        return L, res


def _joint_eigen(chain, ad_k, theta_inv):
    """Joint eigenbasis of ``ad_K`` and ``theta^{-1}`` on K-perp.

    Returns ``(V, V^-1, roots, omega)``; rows of ``roots`` are root values on
    the K basis, ``omega`` the matching eigenvalues of ``theta^{-1}``.  The
    K-perp-in-F block comes first, as in ``SubalgebraChain.root_values``.
    """
    import scipy.linalg

    k = chain.rank
    rng = np.random.default_rng(2024)
    generic = np.tensordot(rng.normal(size=k), ad_k, axes=1) + rng.normal() * theta_inv
    blocks = []
    for idx in (chain.kperp_f_indices, chain.fperp_indices):
        if len(idx) == 0:
            continue
        local = idx - k
        _, v = np.linalg.eig(generic[np.ix_(local, local)])
        blocks.append(v)
    V = scipy.linalg.block_diag(*blocks).astype(complex)
    V_inv = np.linalg.inv(V)

    def diag_of(op):
        dm = V_inv @ op @ V
        if np.max(np.abs(dm - np.diag(np.diag(dm))), initial=0.0) > 1e-8 * max(1.0, np.max(np.abs(dm))):
            raise RuntimeError("ad_K and theta are not jointly diagonalizable in the chosen basis")
        return np.diag(dm)

    roots = np.stack([diag_of(a) for a in ad_k], axis=1)
    omega = diag_of(theta_inv)
    return V, V_inv, roots, omega


def _mv(m, v):
    return (m @ v[..., None])[..., 0]


def _bracket_batch(f_flat, x, y):
    d = x.shape[-1]
    return np.einsum("Nab,Na->Nb", (x @ f_flat).reshape(-1, d, d), y)


def _kernel(r):
    from .rmatrix import CartanRMatrix

    return _CartanKernel(r) if type(r) is CartanRMatrix else _GenericKernel(r)


MONITOR_CHUNK = 2_000_000
ENERGY_JUMP = 1e-2


def _monitor_table(kernel, ys, kmax):
    """Monitor columns for a stack of accepted states, evaluated in chunks."""
    alg = kernel.r.algebra
    d = kernel.dim
    m = max(d - kernel.r.chain.rank, 1)
    chunk = max(1, MONITOR_CHUNK // (m * m + d * d))
    Ls, lax = [], []
    for start in range(0, len(ys), chunk):
        L, res = kernel.lax_batch(ys[start : start + chunk])
        Ls.append(L)
        lax.append(res)
    L = np.concatenate(Ls)
    cols = {"H": 0.5 * np.einsum("Na,ab,Nb->N", L, alg.gram, L)}
    mats = alg.trace_phase * alg.matrix(L)
    power = mats
    for k in range(2, kmax + 1):
        power = power @ mats
        cols[f"h{k}"] = np.real(np.trace(power, axis1=-2, axis2=-1))
    cols["chi_norm"] = np.max(np.abs(ys[:, 2 * d : 2 * d + kernel.r.chain.rank]), axis=1, initial=0.0)
    cols["lax_residual"] = np.concatenate(lax)
    cols["spec_drift"] = _spectral_drift(np.linalg.eigvals(mats))
    return cols


def _spectral_drift(evs):
    # sorted comparison first; rows where ordering may have swapped nearby
    # eigenvalues are re-matched optimally
    srt = np.sort_complex(evs)
    drift = np.max(np.abs(srt - srt[0]), axis=1)
    for i in np.nonzero(drift > 1e-9)[0]:
        drift[i] = spectral_distance(evs[i], evs[0])
    return drift


def rk4_step(r, point: PhasePoint, h: float) -> PhasePoint:
    kernel = _kernel(r)
    y = point.as_vector()
    with np.errstate(over="ignore", invalid="ignore"):
        return PhasePoint.from_vector(_rk4(kernel, y, kernel.flow(y), h), kernel.dim)


def _rk4(kernel, y, k1, h):
    f = kernel.flow
    k2 = f(y + 0.5 * h * k1, False)
    k3 = f(y + 0.5 * h * k2, False)
    k4 = f(y + h * k3, False)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(r, point0: PhasePoint, config: IntegratorConfig, kmax=None, monitor_every=1) -> Trajectory:
    """Fixed-step RK4 from ``point0``.

    Leaving the domain of ``R`` (e.g. a collision) truncates the trajectory
    and sets ``status = "domain_exit"``; nothing is extrapolated.
    """
    require_constrained(point0, r.chain)
    kmax = kmax or r.chain.block_size
    alg = r.algebra
    kernel = _kernel(r)
    d = alg.dim
    y = point0.as_vector()
    cell = kernel.cell(y)
    k1 = kernel.flow(y)
    h0 = kernel.energy
    n = config.n_steps
    times, states = [0.0], [y]
    status, exit_time, message = "ok", None, ""
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n + 1):
            try:
                y = _rk4(kernel, y, k1, config.step)
                # the slope at the new point doubles as the next step's first stage
                k1 = kernel.flow(y)
                if not np.array_equal(kernel.cell(y), cell):
                    raise DomainError("q crossed a singular wall between steps (collision)")
                # a step that lands past a singularity inside the same cell
                # shows up as a jump in the energy (or as non-finite values)
                if not abs(kernel.energy - h0) <= ENERGY_JUMP * max(1.0, abs(h0)):
                    raise DomainError("energy jumped across one step (step passed a singularity)")
            except DomainError as exc:
                status, exit_time, message = "domain_exit", i * config.step, str(exc)
                break
            if i % monitor_every == 0 or i == n:
                times.append(i * config.step)
                states.append(y)
    states = np.array(states)
    monitors = _monitor_table(kernel, states, kmax)
    return Trajectory(
        np.array(times), states[:, :d], states[:, d : 2 * d], states[:, 2 * d :], monitors, kmax, status, exit_time, message
    )


def gauge_covariance_residual(r, point: PhasePoint, kappa, config: IntegratorConfig) -> float:
    """Integrate then gauge-transform versus the reverse order; max state gap."""
    from .phase import gauge_transform

    a = integrate(r, point, config)
    b = integrate(r, gauge_transform(point, kappa, r.chain), config)
    if a.status != "ok" or b.status != "ok":
        raise DomainError("trajectory left the domain during the gauge covariance check")
    end_a = gauge_transform(a.state(len(a) - 1), kappa, r.chain)
    end_b = b.state(len(b) - 1)
    return float(np.max(np.abs(end_a.as_vector() - end_b.as_vector())))


def lax_residual(r, trajectory: Trajectory) -> np.ndarray:
    """Per-step Lax residual along a stored trajectory."""
    return np.array([lax_residual_at(r, trajectory.state(i)) for i in range(len(trajectory))])


def conservation_report(trajectory: Trajectory, algebra=None) -> dict:
    """Maximum drifts of the conserved quantities over a trajectory."""
    mon = trajectory.monitors
    H = mon["H"]
    out = {
        "samples": int(len(trajectory)),
        "t_final": float(trajectory.times[-1]),
        "status": trajectory.status,
        "H0": float(H[0]),
        "max_abs_H_drift": float(np.max(np.abs(H - H[0]))),
        "max_rel_H_drift": float(np.max(np.abs(H - H[0])) / max(abs(H[0]), 1e-300)),
        "max_chi_norm": float(np.max(mon["chi_norm"])),
        "max_lax_residual": float(np.max(mon["lax_residual"])),
        "max_spec_drift": float(np.max(mon["spec_drift"])),
    }
    for k in range(2, trajectory.kmax + 1):
        h = mon[f"h{k}"]
        out[f"max_h{k}_drift"] = float(np.max(np.abs(h - h[0])))
    if algebra is not None:
        mats = algebra.trace_phase * algebra.matrix(trajectory.xi)
        power = mats
        for k in range(2, trajectory.kmax + 1):
            power = power @ mats
            tr = np.real(np.trace(power, axis1=-2, axis2=-1))
            out[f"max_tr_xi{k}_drift"] = float(np.max(np.abs(tr - tr[0])))
    if trajectory.exit_time is not None:
        out["exit_time"] = float(trajectory.exit_time)
    return out
