"""Seeded random sampling of base points and phase points.

Every sample gets its own generator spawned from the run seed, so results do
not depend on evaluation order or on the number of workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .phase import PhasePoint


class DomainExhaustedError(DomainError):
    """Rejection sampling could not find a point inside the domain."""


@dataclass(frozen=True)
class SamplerConfig:
    q_box: float = 1.5
    scale: float = 1.0
    # rejection margins keep samples away from root hyperplanes, where the
    # residuals lose digits in proportion to the conditioning
    root_margin: float = 0.2
    cond_max: float = 1e3
    conj_norm: float = 1.0
    max_tries: int = 10000


def sample_rngs(seed: int, count: int) -> list:
    """One independent generator per sample index."""
    children = np.random.SeedSequence(int(seed)).spawn(count)
    return [np.random.default_rng(c) for c in children]


def sample_cartan(rng, r_k, cfg: SamplerConfig = SamplerConfig()) -> np.ndarray:
    """Uniform point of the K-coordinate box, rejected until well inside the domain."""
    chain = r_k.chain
    for _ in range(cfg.max_tries):
        q = chain.embed_k(rng.uniform(-cfg.q_box, cfg.q_box, chain.rank))
        if np.min(np.abs(chain.root_values(q, "KperpF")), initial=np.inf) < cfg.root_margin:
            continue
        try:
            kp = chain.kperp_indices
            cond = np.linalg.cond(r_k.evaluate(q)[np.ix_(kp, kp)])
        except DomainError:
            continue
        if cond <= cfg.cond_max:
            return q
    raise DomainExhaustedError(f"no admissible point found in {cfg.max_tries} tries")


def random_f_element(rng, chain, max_norm: float) -> np.ndarray:
    y = chain.project(rng.normal(size=chain.algebra.dim), "F")
    return y * (max_norm * rng.uniform() / np.linalg.norm(y))


def sample_base_point(rng, r, cfg: SamplerConfig = SamplerConfig()) -> np.ndarray:
    """Base point for ``r``: in K, or an F-conjugate of a Cartan point."""
    if r.kind == "abelian":
        return sample_cartan(rng, r, cfg)
    q = sample_cartan(rng, r.r_k, cfg)
    y = random_f_element(rng, r.chain, cfg.conj_norm)
    return r.algebra.exp_ad(y) @ q


def sample_phase_point(rng, r, cfg: SamplerConfig = SamplerConfig(), constrained=False) -> PhasePoint:
    """Random ``(q, p, xi)``; with ``constrained`` the momentum map vanishes."""
    chain = r.chain
    alg = r.algebra
    q = sample_base_point(rng, r, cfg)
    p = chain.project(cfg.scale * rng.normal(size=alg.dim), r.variable)
    xi = cfg.scale * rng.normal(size=alg.dim)
    if not constrained:
        return PhasePoint(q, p, xi)
    if r.kind == "abelian":
        return PhasePoint(q, p, chain.project(xi, "Kperp"))
    # on the non-Abelian side choose xi_F = -[Q, P]
    return PhasePoint(q, p, chain.project(xi, "Fperp") - alg.bracket(q, p))
