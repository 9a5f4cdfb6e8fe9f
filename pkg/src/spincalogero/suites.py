"""Seeded verification suites behind ``verify`` and ``reduce-check``.

Every sample draws from its own generator (spawned from the run seed), all
properties of one sample share that generator, and results are merged by
sample index.  Reports are therefore identical for any number of workers.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .lie import build_algebra, diagonalize_to_cartan, weyl_group
from .phase import PhasePoint, first_class_residual, gauge_transform, lax_bracket_residual
from .reduction import (
    map_m,
    map_m_inverse,
    random_tangent,
    reach_slice,
    slice_gauge,
    two_form_match,
    verify_quasi_lax_match,
    weyl_identify,
    weyl_transform,
)
from .rmatrix import (
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
from .sampling import SamplerConfig, sample_base_point, sample_phase_point, sample_rngs

REPORT_VERSION = 1


@dataclass(frozen=True)
class Tolerances:
    residual: float = 1e-9
    structural: float = 1e-10
    finite_difference: float = 1e-8
    two_form: float = 1e-7
    slice: float = 1e-12
    negative_control: float = 1e-4
    drift: float = 1e-8

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"tolerance {name} must be positive")


@dataclass(frozen=True)
class PropertyRecord:
    property: str
    samples: int
    max: float
    mean: float
    min: float
    tolerance: float
    relation: str
    passed: bool
    seed: int


@dataclass
class VerificationReport:
    command: str
    algebra: str
    kind: str
    seed: int
    samples: int
    records: list = field(default_factory=list)
    perturbation: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def record(self, name) -> PropertyRecord:
        for r in self.records:
            if r.property == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "command": self.command,
            "algebra": self.algebra,
            "kind": self.kind,
            "seed": self.seed,
            "samples": self.samples,
            "perturbation": self.perturbation,
            "passed": self.passed,
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = [f"{self.command} {self.algebra} ({self.kind}) seed={self.seed} samples={self.samples}"]
        for r in self.records:
            verdict = "PASS" if r.passed else "FAIL"
            lines.append(
                f"  {verdict}  {r.property:<24} max={r.max:.3e} mean={r.mean:.3e} (need {r.relation} {r.tolerance:.0e})"
            )
        return "\n".join(lines) + "\n"


def _run_samples(fn, seed, samples, workers):
    rngs = sample_rngs(seed, samples)
    if workers <= 1:
        return [fn(rng) for rng in rngs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, rngs))


def _aggregate(rows, specs, seed) -> list:
    out = []
    for name, (tol, relation) in specs.items():
        vals = np.array([row[name] for row in rows], dtype=float)
        worst = vals.min() if relation == ">" else vals.max()
        passed = bool(worst > tol) if relation == ">" else bool(worst <= tol)
        out.append(
            PropertyRecord(
                name, len(vals), float(vals.max()), float(vals.mean()), float(vals.min()), tol, relation, passed, seed
            )
        )
    return out


def _maxabs(x) -> float:
    return float(np.max(np.abs(x), initial=0.0))


def build_rmatrices(algebra, kind="abelian", perturb=0.0):
    """``(r, r_k)``: the r-matrix under test and the Abelian one beneath it."""
    built = build_algebra(algebra)
    theta = next(iter(built.automorphisms.values()))
    r_k = CartanRMatrix(built.chain, theta)
    if perturb:
        r_k = PerturbedRMatrix(r_k, perturb)
    if kind == "abelian":
        return r_k, r_k
    if kind == "nonabelian":
        return nonabelian_extend(r_k), r_k
    raise ValueError(f"unknown r-matrix kind {kind!r}")


# ------------------------------------------------------------------ verify


def _verify_sample(r, r_k, sampler):
    chain = r.chain
    alg = r.algebra
    dim = alg.dim

    def run(rng):
        q = sample_base_point(rng, r, sampler)
        q_k = q if r.kind == "abelian" else diagonalize_to_cartan(chain, q).q
        X, Y = rng.normal(size=(2, dim))
        derivs = r.derivatives(q)
        x = chain.project(rng.normal(size=dim), r.variable)
        point = PhasePoint(q, chain.project(rng.normal(size=dim), r.variable), rng.normal(size=dim))
        extended = nonabelian_extend(r_k)
        return {
            "cdybe": _maxabs(cdybe_residual(r, q, X, Y, derivs)),
            "equivariance": _maxabs(equivariance_residual(r, q, x)),
            "quasi_triangularity": quasi_triangularity_residual(r, q),
            "compatibility": compatibility_residual(r_k, q_k),
            "lax_bracket": _maxabs(lax_bracket_residual(r, point, derivs)),
            "first_class": _maxabs(first_class_residual(point, chain, r.kind)),
            "dirac_round_trip": _maxabs(dirac_reduce(extended).evaluate(q_k) - r_k.evaluate(q_k)),
        }

    return run


def run_verify(algebra, kind="abelian", seed=0, samples=100, workers=1, perturb=0.0,
               tolerances=Tolerances(), sampler=SamplerConfig()) -> VerificationReport:
    r, r_k = build_rmatrices(algebra, kind, perturb)
    tol = tolerances
    specs = {
        "cdybe": (tol.residual, "<="),
        "equivariance": (tol.finite_difference if kind == "nonabelian" else tol.residual, "<="),
        "quasi_triangularity": (tol.structural, "<="),
        "compatibility": (tol.structural, "<="),
        "lax_bracket": (tol.residual, "<="),
        "first_class": (tol.residual, "<="),
        "dirac_round_trip": (tol.residual, "<="),
    }
    rows = _run_samples(_verify_sample(r, r_k, sampler), seed, samples, workers)
    report = VerificationReport("verify", r.algebra.label, kind, seed, samples, perturbation=float(perturb))
    report.records = _aggregate(rows, specs, seed)
    return report


# ------------------------------------------------------------ reduce-check


def _reduce_sample(r_f, r_k, reference, sampler):
    chain = r_k.chain
    alg = r_k.algebra
    group = weyl_group(chain)
    mismatched = nonabelian_extend(DualRMatrix(reference))

    def run(rng):
        point = sample_phase_point(rng, reference, sampler, constrained=True)
        sp = map_m(point, chain)
        back = map_m_inverse(sp, chain)
        kappa = chain.project(rng.normal(size=alg.dim), "K")
        lhs = map_m(gauge_transform(point, kappa, chain), chain)
        rhs = slice_gauge(sp, kappa, chain)
        match = verify_quasi_lax_match(r_f, reference, point)
        u = random_tangent(rng, point, chain)
        v = random_tangent(rng, point, chain)
        na = sample_phase_point(rng, r_f, sampler, constrained=True)
        reached, _ = reach_slice(na.q, na.p, na.xi, chain)
        w = group.element(tuple(rng.permutation(chain.block_size)))
        image = gauge_transform(weyl_transform(w, point), chain.project(rng.normal(size=alg.dim), "K"), chain)
        found = weyl_identify(point, image, chain)
        other = sample_phase_point(rng, reference, sampler, constrained=True)
        return {
            "solve_constraint": sp.constraint_residual(chain),
            "m_round_trip": _maxabs(back.as_vector() - point.as_vector()),
            "m_equivariance": _maxabs(np.concatenate((lhs.P - rhs.P, lhs.xi - rhs.xi))),
            "quasi_lax_match": match.lax,
            "hamiltonian_match": match.hamiltonian,
            "two_form_match": two_form_match(point, u, v, chain),
            "slice_reach": reached.constraint_residual(chain) + (0.0 if chain.is_regular(reached.q) else 1.0),
            "weyl_constructed": 0.0 if found is not None and found.permutation == w.permutation else 1.0,
            "weyl_unrelated": 0.0 if weyl_identify(point, other, chain) is None else 1.0,
            "negative_control": verify_quasi_lax_match(mismatched, reference, point).lax,
        }

    return run


def run_reduce_check(algebra, seed=0, samples=100, workers=1, perturb=0.0,
                     tolerances=Tolerances(), sampler=SamplerConfig()) -> VerificationReport:
    """Matching suites; with ``perturb`` the non-Abelian side is built from a
    perturbed Abelian r-matrix, so the match suites must fail."""
    r_f, r_k = build_rmatrices(algebra, "nonabelian", perturb)
    reference = build_rmatrices(algebra, "abelian")[0]
    tol = tolerances
    specs = {
        "solve_constraint": (tol.slice, "<="),
        "m_round_trip": (tol.slice, "<="),
        "m_equivariance": (tol.structural, "<="),
        "quasi_lax_match": (tol.residual, "<="),
        "hamiltonian_match": (tol.residual, "<="),
        "two_form_match": (tol.two_form, "<="),
        "slice_reach": (tol.residual, "<="),
        "weyl_constructed": (0.5, "<="),
        "weyl_unrelated": (0.5, "<="),
        "negative_control": (tol.negative_control, ">"),
    }
    rows = _run_samples(_reduce_sample(r_f, r_k, reference, sampler), seed, samples, workers)
    report = VerificationReport("reduce-check", r_k.algebra.label, "nonabelian", seed, samples,
                                perturbation=float(perturb))
    report.records = _aggregate(rows, specs, seed)
    return report
