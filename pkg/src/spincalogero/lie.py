"""Self-dual Lie algebras realized as matrix algebras, with adapted bases.

Elements are real coefficient vectors with respect to a fixed basis ``T_a``
of a defining matrix representation.  Operators on the algebra are dense
``dim x dim`` real matrices acting on those coefficient vectors.  The
invariant form is the (real) trace form of the defining representation.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateElementError,
    DimensionMismatchError,
    DomainError,
    UnsupportedAlgebraError,
)

MAX_RANK_N = 8
MAX_COPIES = 4
REGULARITY_GAP = 1e-8


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """A finite-dimensional Lie algebra with a fixed matrix basis.

    ``structure_constants[a, b, c]`` holds ``f^{ab}_c`` with
    ``[T_a, T_b] = f^{ab}_c T_c`` and ``gram[a, b] = Re tr(T_a T_b)``.
    """

    label: str
    basis: np.ndarray
    structure_constants: np.ndarray
    gram: np.ndarray
    # multiplies matrices before taking traces of powers so that invariants
    # come out real (-1j for compact forms, whose matrices are antihermitian)
    trace_phase: complex = 1.0

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def matrix_size(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def gram_inv(self) -> np.ndarray:
        return np.linalg.inv(self.gram)

    @cached_property
    def _extractor(self) -> np.ndarray:
        # row a of T_flat holds T_a^T flattened, so T_flat @ vec(M) = tr(T_a M)
        t_flat = np.transpose(self.basis, (0, 2, 1)).reshape(self.dim, -1)
        return self.gram_inv @ t_flat

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatchError(
                f"{self.label}: expected coefficient vectors of length {self.dim}, got {x.shape}"
            )
        return x

    def matrix(self, x) -> np.ndarray:
        """Defining-representation matrix of the element with coefficients ``x``."""
        x = self._check(x)
        return np.tensordot(x, self.basis, axes=(-1, 0))

    def coeffs(self, m) -> np.ndarray:
        """Coefficients of the B-orthogonal projection of matrix ``m`` onto the algebra."""
        m = np.asarray(m)
        flat = m.reshape(m.shape[:-2] + (-1,))
        return np.real(flat @ self._extractor.T)

    @cached_property
    def _f_flat(self) -> np.ndarray:
        return self.structure_constants.reshape(self.dim, -1)

    def bracket(self, x, y) -> np.ndarray:
        x = self._check(x)
        y = self._check(y)
        return y @ (x @ self._f_flat).reshape(self.dim, self.dim)

    def bilinear(self, x, y) -> float:
        x = self._check(x)
        y = self._check(y)
        return float(x @ self.gram @ y)

    def ad(self, x) -> np.ndarray:
        """Matrix of ``ad_x`` acting on coefficient vectors."""
        x = self._check(x)
        return (x @ self._f_flat).reshape(self.dim, self.dim).T

    def exp_ad(self, x) -> np.ndarray:
        return scipy.linalg.expm(self.ad(x))

    def b_adjoint(self, op) -> np.ndarray:
        """Adjoint of an operator with respect to the invariant form."""
        return self.gram_inv @ np.asarray(op).T @ self.gram

    def Ad(self, g, g_inv=None) -> np.ndarray:
        """Matrix of ``X -> g X g^{-1}`` for an invertible matrix ``g``."""
        g = np.asarray(g)
        if g_inv is None:
            g_inv = np.linalg.inv(g)
        conj = g @ self.basis @ g_inv
        return self.coeffs(conj).T

    def structure_tensor_on(self, xi) -> np.ndarray:
        """``C[a, b] = B(xi, [T_a, T_b])``."""
        return self.structure_constants @ (self.gram @ self._check(xi))


class SubalgebraChain:
    """The chain K (Cartan) in F (reductive) in g in an adapted basis.

    The basis of the algebra is ordered as K, then K-perp inside F, then
    F-perp; the three blocks are mutually B-orthogonal so every projector is
    an index slice.
    """

    def __init__(self, algebra, n_k, n_kperp_f, block_size, copies, compact):
        self.algebra = algebra
        dim = algebra.dim
        self.k_indices = np.arange(n_k)
        self.kperp_f_indices = np.arange(n_k, n_k + n_kperp_f)
        self.fperp_indices = np.arange(n_k + n_kperp_f, dim)
        self.block_size = block_size
        self.copies = copies
        self.compact = compact

    @property
    def rank(self) -> int:
        return len(self.k_indices)

    @property
    def kperp_indices(self) -> np.ndarray:
        return np.arange(self.rank, self.algebra.dim)

    @property
    def f_indices(self) -> np.ndarray:
        return np.arange(self.rank + len(self.kperp_f_indices))

    def indices(self, name: str) -> np.ndarray:
        return {
            "K": self.k_indices,
            "Kperp": self.kperp_indices,
            "F": self.f_indices,
            "Fperp": self.fperp_indices,
            "KperpF": self.kperp_f_indices,
        }[name]

    def projector(self, name: str) -> np.ndarray:
        p = np.zeros((self.algebra.dim, self.algebra.dim))
        idx = self.indices(name)
        p[idx, idx] = 1.0
        return p

    def project(self, x, name: str) -> np.ndarray:
        out = np.zeros_like(np.asarray(x, dtype=float))
        idx = self.indices(name)
        out[..., idx] = np.asarray(x)[..., idx]
        return out

    def embed_k(self, q_k) -> np.ndarray:
        x = np.zeros(self.algebra.dim)
        x[self.k_indices] = q_k
        return x

    @cached_property
    def _cartan_eigen(self):
        # joint eigenbasis of ad_K on K-perp, computed separately on the two
        # ad_K-invariant blocks so that root spaces shared by K-perp-in-F and
        # F-perp never mix; rows of `roots` hold root values on the K basis
        alg = self.algebra
        rng = np.random.default_rng(12345)
        generic = self.embed_k(rng.normal(size=self.rank))
        blocks = []
        for idx in (self.kperp_f_indices, self.fperp_indices):
            if len(idx) == 0:
                continue
            _, v = np.linalg.eig(alg.ad(generic)[np.ix_(idx, idx)])
            blocks.append(v)
        vecs = scipy.linalg.block_diag(*blocks).astype(complex)
        vecs_inv = np.linalg.inv(vecs)
        kp = self.kperp_indices
        eye = np.eye(alg.dim)
        roots = np.empty((len(kp), self.rank), dtype=complex)
        for i in self.k_indices:
            d = vecs_inv @ alg.ad(eye[i])[np.ix_(kp, kp)] @ vecs
            if np.max(np.abs(d - np.diag(np.diag(d))), initial=0.0) > 1e-9:
                raise RuntimeError("ad_K is not jointly diagonalizable in the chosen basis")
            roots[:, i] = np.diag(d)
        return vecs, vecs_inv, roots

    def root_values(self, q, part: str = "Kperp") -> np.ndarray:
        """Eigenvalues of ``ad_q`` on K-perp (or on K-perp inside F) for ``q`` in K."""
        q = np.asarray(q, dtype=float)
        vals = self._cartan_eigen[2] @ q[self.k_indices]
        if part == "KperpF":
            vals = vals[: len(self.kperp_f_indices)]
        return vals

    def exp_ad_cartan(self, q, scale: float = 1.0) -> np.ndarray:
        """``exp(scale * ad_q)`` restricted to K-perp, for ``q`` in K."""
        vecs, vecs_inv, roots = self._cartan_eigen
        lam = roots @ np.asarray(q, dtype=float)[self.k_indices]
        return np.real((vecs * np.exp(scale * lam)) @ vecs_inv)

    def cartan_entries(self, q) -> np.ndarray:
        """Real diagonal data of ``q`` in K, read off the first block."""
        m = self.algebra.matrix(q)[: self.block_size, : self.block_size]
        d = np.diag(m)
        return np.imag(d) if self.compact else np.real(d)

    def wall_cell(self, q) -> tuple:
        """Label of the connected cell of regular points of K containing ``q``.

        Walls are the zeros of roots on K-perp inside F (multiples of 2 pi
        for the compact form); a path that changes the label crossed one.
        """
        vals = self.root_values(q, "KperpF")
        if self.compact:
            return tuple(np.floor(vals.imag / (2 * np.pi)).astype(int))
        return tuple(np.sign(vals.real).astype(int))

    def is_regular(self, q, gap: float = REGULARITY_GAP) -> bool:
        return bool(np.min(np.abs(self.root_values(q, "KperpF"))) > gap)


@dataclass(frozen=True, eq=False)
class Automorphism:
    theta: np.ndarray
    label: str

    @cached_property
    def theta_inv(self) -> np.ndarray:
        return np.linalg.inv(self.theta)


class AlgebraDescriptor(NamedTuple):
    family: str
    n: int
    copies: int = 1
    automorphism: str = "identity"

    @property
    def label(self) -> str:
        if self.family == "sl_product":
            return f"sl({self.n})^{self.copies}"
        return f"{self.family}({self.n})"


class BuiltAlgebra(NamedTuple):
    algebra: LieAlgebra
    chain: SubalgebraChain
    automorphisms: dict


_DESCRIPTOR_RE = re.compile(
    r"^\s*(sl|su)\s*\(\s*(\d+)\s*\)\s*(?:\^\s*(\d+))?\s*(?::\s*(\w+))?\s*$"
)


def parse_descriptor(spec) -> AlgebraDescriptor:
    """Normalize a catalog descriptor (string like ``"sl(2)^3"`` or a mapping)."""
    if isinstance(spec, AlgebraDescriptor):
        desc = spec
    elif isinstance(spec, str):
        m = _DESCRIPTOR_RE.match(spec)
        if not m:
            raise UnsupportedAlgebraError(f"cannot parse algebra descriptor {spec!r}")
        family, n, copies, auto = m.groups()
        copies = int(copies) if copies else 1
        if copies > 1:
            family += "_product"
        desc = AlgebraDescriptor(family, int(n), copies, auto or ("cyclic" if copies > 1 else "identity"))
    elif isinstance(spec, dict):
        family = str(spec.get("family", "")).lower()
        try:
            n = int(spec["n"])
        except (KeyError, TypeError, ValueError):
            raise UnsupportedAlgebraError("algebra descriptor needs an integer 'n'") from None
        copies = int(spec.get("copies", 1))
        if family == "sl" and copies > 1:
            family = "sl_product"
        default_auto = "cyclic" if copies > 1 else "identity"
        desc = AlgebraDescriptor(family, n, copies, str(spec.get("automorphism", default_auto)))
    else:
        raise UnsupportedAlgebraError(f"unsupported descriptor type {type(spec).__name__}")

    if desc.family not in ("sl", "su", "sl_product"):
        raise UnsupportedAlgebraError(f"unsupported family {desc.family!r}")
    if not 2 <= desc.n <= MAX_RANK_N:
        raise UnsupportedAlgebraError(f"n={desc.n} outside supported range 2..{MAX_RANK_N}")
    if desc.family == "sl_product":
        if not 2 <= desc.copies <= MAX_COPIES:
            raise UnsupportedAlgebraError(f"copies={desc.copies} outside supported range 2..{MAX_COPIES}")
        if desc.automorphism != "cyclic":
            raise UnsupportedAlgebraError("product algebras are only supported with the cyclic automorphism")
    else:
        if desc.copies != 1:
            raise UnsupportedAlgebraError("copies > 1 is only supported for sl")
        if desc.automorphism != "identity":
            raise UnsupportedAlgebraError(f"{desc.family}(n) supports only the identity automorphism")
    return desc


def _unit(n, i, j, dtype=float):
    m = np.zeros((n, n), dtype=dtype)
    m[i, j] = 1
    return m


def _sl_blocks(n):
    """Cartan basis and root-vector basis of sl(n, R)."""
    cartan = [_unit(n, i, i) - _unit(n, i + 1, i + 1) for i in range(n - 1)]
    roots = []
    for i, j in itertools.combinations(range(n), 2):
        roots.append(_unit(n, i, j))
        roots.append(_unit(n, j, i))
    return cartan, roots


def _su_blocks(n):
    cartan = [1j * (_unit(n, i, i) - _unit(n, i + 1, i + 1)) for i in range(n - 1)]
    roots = []
    for i, j in itertools.combinations(range(n), 2):
        roots.append((_unit(n, i, j) - _unit(n, j, i)).astype(complex))
        roots.append(1j * (_unit(n, i, j) + _unit(n, j, i)))
    return cartan, roots


def _block_diag_copies(blocks, weights):
    return scipy.linalg.block_diag(*[w * b for w, b in zip(weights, blocks)])


def catalog_basis(desc: AlgebraDescriptor):
    """Adapted basis matrices plus block sizes ``(basis, n_k, n_kperp_f)``."""
    if desc.family == "sl":
        cartan, roots = _sl_blocks(desc.n)
        return np.array(cartan + roots), len(cartan), len(roots)
    if desc.family == "su":
        cartan, roots = _su_blocks(desc.n)
        return np.array(cartan + roots), len(cartan), len(roots)
    cartan, roots = _sl_blocks(desc.n)
    copies = desc.copies
    diag = [_block_diag_copies([t] * copies, [1.0] * copies) for t in cartan + roots]
    perp = []
    for t in cartan + roots:
        for c in range(copies - 1):
            w = np.zeros(copies)
            w[c], w[c + 1] = 1.0, -1.0
            perp.append(_block_diag_copies([t] * copies, w))
    return np.array(diag + perp), len(cartan), len(roots)


def _structure_constants(basis, extractor):
    dim = basis.shape[0]
    f = np.empty((dim, dim, dim))
    for a in range(dim):
        comm = basis[a] @ basis - basis @ basis[a]
        f[a] = np.real(comm.reshape(dim, -1) @ extractor.T)
    return f


def make_algebra(label, basis, trace_phase=1.0) -> LieAlgebra:
    basis = np.asarray(basis)
    if not np.iscomplexobj(basis):
        basis = basis.astype(float)
    gram = np.real(np.einsum("aij,bji->ab", basis, basis))
    gram = 0.5 * (gram + gram.T)
    if np.linalg.cond(gram) > 1e12:
        raise UnsupportedAlgebraError(f"{label}: trace form is degenerate on the given basis")
    t_flat = np.transpose(basis, (0, 2, 1)).reshape(basis.shape[0], -1)
    extractor = np.linalg.inv(gram) @ t_flat
    f = _structure_constants(basis, extractor)
    return LieAlgebra(label, basis, f, gram, trace_phase)


def cyclic_shift_matrix(block_size, copies) -> np.ndarray:
    """Permutation matrix moving block c to block c+1 (mod copies)."""
    perm = np.zeros((copies, copies))
    for c in range(copies):
        perm[(c + 1) % copies, c] = 1.0
    return np.kron(perm, np.eye(block_size))


_CACHE: dict = {}


def build_algebra(spec, validate: bool = True) -> BuiltAlgebra:
    """Build a catalog algebra, its subalgebra chain and its automorphisms.

    Supported descriptors: ``sl(n)``, ``su(n)`` (2 <= n <= 8) and
    ``sl(m)^N`` (2 <= N <= 4) with the cyclic block-permutation automorphism.
    Results are cached per descriptor; all returned objects are immutable.
    """
    desc = parse_descriptor(spec)
    if desc in _CACHE:
        return _CACHE[desc]
    basis, n_k, n_kpf = catalog_basis(desc)
    compact = desc.family == "su"
    alg = make_algebra(desc.label, basis, trace_phase=-1j if compact else 1.0)
    copies = desc.copies if desc.family == "sl_product" else 1
    chain = SubalgebraChain(alg, n_k, n_kpf, desc.n, copies, compact)
    autos = {}
    if desc.automorphism == "identity":
        autos["identity"] = Automorphism(np.eye(alg.dim), "identity")
    else:
        shift = cyclic_shift_matrix(desc.n, copies)
        autos["cyclic"] = Automorphism(alg.Ad(shift, shift.T), "cyclic")
    if validate:
        validate_algebra(alg, chain, autos.values())
    built = BuiltAlgebra(alg, chain, autos)
    _CACHE[desc] = built
    return built


def catalog_descriptors() -> list:
    """Every supported descriptor, in listing order."""
    out = [AlgebraDescriptor("sl", n) for n in range(2, MAX_RANK_N + 1)]
    out += [AlgebraDescriptor("su", n) for n in range(2, MAX_RANK_N + 1)]
    out += [
        AlgebraDescriptor("sl_product", n, c, "cyclic")
        for n in range(2, MAX_RANK_N + 1)
        for c in range(2, MAX_COPIES + 1)
    ]
    return out


def catalog_entry(desc: AlgebraDescriptor) -> dict:
    """Sizes of a catalog algebra read off its adapted basis (no structure constants)."""
    basis, n_k, n_kpf = catalog_basis(desc)
    return {
        "name": desc.label,
        "family": "sl" if desc.family == "sl_product" else desc.family,
        "n": desc.n,
        "copies": desc.copies,
        "form": "compact" if desc.family == "su" else "split",
        "dim": int(basis.shape[0]),
        "rank": int(n_k),
        "dim_F": int(n_k + n_kpf),
        "weyl_order": math.factorial(desc.n),
        "automorphisms": [desc.automorphism],
        "rmatrix_kinds": ["abelian", "nonabelian"],
    }


def jacobi_residual(alg: LieAlgebra, sample=None) -> float:
    """Max |sum_cyc f^{ab}_d f^{dc}_e| over all (or a subset of) index triples."""
    f = alg.structure_constants
    idx = np.arange(alg.dim) if sample is None else np.asarray(sample)
    fa = f[idx]
    # [[T_a, T_b], T_c] = f^{ab}_d f^{dc}_e
    t = np.einsum("abd,dce->abce", fa[:, idx], f[:, idx], optimize=True)
    cyc = t + np.transpose(t, (1, 2, 0, 3)) + np.transpose(t, (2, 0, 1, 3))
    return float(np.max(np.abs(cyc)))


def invariance_residual(alg: LieAlgebra) -> float:
    """Max |B([T_a,T_b],T_c) + B(T_b,[T_a,T_c])| over basis triples."""
    # B([T_a,T_b],T_c) = f^{ab}_d G_dc
    fb = alg.structure_constants @ alg.gram
    return float(np.max(np.abs(fb + np.transpose(fb, (0, 2, 1)))))


def representation_residual(alg: LieAlgebra) -> float:
    """Max deviation between structure-constant brackets and matrix commutators."""
    worst = 0.0
    for a in range(alg.dim):
        comm = alg.basis[a] @ alg.basis - alg.basis @ alg.basis[a]
        recon = np.tensordot(alg.structure_constants[a], alg.basis, axes=(1, 0))
        worst = max(worst, float(np.max(np.abs(comm - recon))))
    return worst


def automorphism_residuals(alg: LieAlgebra, chain: SubalgebraChain, auto: Automorphism) -> dict:
    """Residuals certifying that ``theta`` is a B-orthogonal homomorphism fixing K."""
    th = auto.theta
    f = alg.structure_constants
    lhs = np.einsum("abc,dc->abd", f, th)  # theta [T_a, T_b]
    rhs = np.einsum("ea,fb,efd->abd", th, th, f, optimize=True)  # [theta T_a, theta T_b]
    k = chain.k_indices
    return {
        "homomorphism": float(np.max(np.abs(lhs - rhs))),
        "orthogonality": float(np.max(np.abs(th.T @ alg.gram @ th - alg.gram))),
        "fixes_K": float(np.max(np.abs(th[:, k] - np.eye(alg.dim)[:, k]))),
    }


def validate_algebra(alg, chain, autos, tol=1e-10):
    g = alg.gram
    problems = []
    if np.max(np.abs(g - g.T)) > tol:
        problems.append("gram not symmetric")
    f = alg.structure_constants
    if np.max(np.abs(f + np.transpose(f, (1, 0, 2)))) > tol:
        problems.append("structure constants not antisymmetric")
    sample = None if alg.dim <= 40 else np.random.default_rng(0).choice(alg.dim, 24, replace=False)
    if jacobi_residual(alg, sample) > tol:
        problems.append("Jacobi identity fails")
    if invariance_residual(alg) > tol:
        problems.append("trace form not ad-invariant")
    blocks = [chain.k_indices, chain.kperp_f_indices, chain.fperp_indices]
    for i, j in itertools.combinations(range(3), 2):
        if len(blocks[i]) and len(blocks[j]) and np.max(np.abs(g[np.ix_(blocks[i], blocks[j])])) > tol:
            problems.append("adapted basis blocks are not B-orthogonal")
    k = chain.k_indices
    if np.max(np.abs(f[np.ix_(k, k)]), initial=0.0) > tol:
        problems.append("K is not Abelian")
    fi, fp = chain.f_indices, chain.fperp_indices
    if len(fp) and np.max(np.abs(f[np.ix_(fi, fi, fp)])) > tol:
        problems.append("F is not closed under the bracket")
    for sub in (k, fi):
        if np.linalg.cond(g[np.ix_(sub, sub)]) > 1e12:
            problems.append("B degenerate on a subalgebra")
    for auto in autos:
        res = automorphism_residuals(alg, chain, auto)
        if max(res.values()) > tol:
            problems.append(f"automorphism {auto.label} invalid: {res}")
    if problems:
        raise RuntimeError(f"{alg.label}: " + "; ".join(problems))


def bracket(alg: LieAlgebra, x, y) -> np.ndarray:
    return alg.bracket(x, y)


def bilinear(alg: LieAlgebra, x, y) -> float:
    return alg.bilinear(x, y)


def ad_operator(alg: LieAlgebra, x) -> np.ndarray:
    return alg.ad(x)


def exp_ad(alg: LieAlgebra, x) -> np.ndarray:
    return alg.exp_ad(x)


class Conjugation(NamedTuple):
    """Result of :func:`diagonalize_to_cartan`: ``Ad_f Q = q``."""

    group_element: np.ndarray
    Ad: np.ndarray
    Ad_inv: np.ndarray
    q: np.ndarray


def _lift_block(chain, g):
    return np.kron(np.eye(chain.copies), g)


def diagonalize_to_cartan(chain: SubalgebraChain, Q, gap: float = REGULARITY_GAP) -> Conjugation:
    """Conjugate a regular element of F into the open Weyl chamber of K.

    The chamber is fixed by strictly decreasing diagonal data (imaginary
    parts for su(n)).  Raises :class:`DegenerateElementError` when two
    eigenvalues are closer than ``gap`` and :class:`DomainError` when a split
    element has non-real spectrum (not conjugate into the diagonal Cartan).
    """
    alg = chain.algebra
    Q = np.asarray(Q, dtype=float)
    if len(chain.fperp_indices) and np.max(np.abs(Q[chain.fperp_indices])) > 1e-12 * max(1.0, np.max(np.abs(Q))):
        raise DomainError("element does not lie in F")
    m = chain.block_size
    M = alg.matrix(Q)[:m, :m]
    if chain.compact:
        h = -1j * M
        w, U = np.linalg.eigh(0.5 * (h + h.conj().T))
        order = np.argsort(-w)
        w, U = w[order], U[:, order]
        g = U.conj().T
        g_inv = U
        diag = np.diag(1j * w)
    else:
        w, V = np.linalg.eig(np.real(M))
        if np.max(np.abs(np.imag(w)), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(w))):
            raise DomainError("element has non-real spectrum; not conjugate into the split Cartan")
        w = np.real(w)
        V = np.real(V)
        order = np.argsort(-w)
        w, V = w[order], V[:, order]
        det = np.linalg.det(V)
        if det < 0:
            V[:, 0] = -V[:, 0]
            det = -det
        V = V / det ** (1.0 / m)
        g = np.linalg.inv(V)
        g_inv = V
        diag = np.diag(w)
    if np.min(np.abs(np.diff(w)), initial=np.inf) <= gap:
        raise DegenerateElementError(
            f"element is not regular: eigenvalue gap {np.min(np.abs(np.diff(w))):.3e} <= {gap:g}"
        )
    G = _lift_block(chain, g)
    G_inv = _lift_block(chain, g_inv)
    q = alg.coeffs(_lift_block(chain, diag))
    q = chain.project(q, "K")
    return Conjugation(G, alg.Ad(G, G_inv), alg.Ad(G_inv, G), q)


@dataclass(frozen=True, eq=False)
class WeylElement:
    permutation: tuple
    on_K: np.ndarray
    on_g: np.ndarray

    def act(self, x) -> np.ndarray:
        return self.on_g @ np.asarray(x, dtype=float)


class WeylGroup:
    """Weyl group of K in F for type-A factors: permutations of diagonal entries.

    Elements are generated lazily; ``len`` is the group order.
    """

    def __init__(self, chain: SubalgebraChain):
        self.chain = chain

    def __len__(self) -> int:
        return math.factorial(self.chain.block_size)

    def __iter__(self) -> Iterator[WeylElement]:
        for perm in itertools.permutations(range(self.chain.block_size)):
            yield self.element(perm)

    def element(self, perm) -> WeylElement:
        chain = self.chain
        m = chain.block_size
        s = np.zeros((m, m))
        # entry i of the image diagonal is entry perm[i] of the source
        for i, j in enumerate(perm):
            s[i, j] = 1.0
        full = _lift_block(chain, s)
        on_g = chain.algebra.Ad(full, full.T)
        k = chain.k_indices
        return WeylElement(tuple(int(p) for p in perm), on_g[np.ix_(k, k)], on_g)

    def identity(self) -> WeylElement:
        return self.element(tuple(range(self.chain.block_size)))

    def compose(self, w1: WeylElement, w2: WeylElement) -> WeylElement:
        """The element acting as ``w1`` after ``w2``."""
        return self.element(tuple(w2.permutation[i] for i in w1.permutation))


def weyl_group(chain: SubalgebraChain) -> WeylGroup:
    return WeylGroup(chain)


def weyl_act(w: WeylElement, q) -> np.ndarray:
    return w.act(q)
