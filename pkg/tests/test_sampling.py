import numpy as np
import pytest

from spincalogero.sampling import DomainExhaustedError, SamplerConfig, sample_cartan, sample_phase_point, sample_rngs
from spincalogero.suites import build_rmatrices


def test_per_sample_streams_are_stable():
    a = [g.normal() for g in sample_rngs(5, 4)]
    b = [g.normal() for g in sample_rngs(5, 6)][:4]
    assert a == b


def test_samples_respect_margin(r_cartan):
    cfg = SamplerConfig(root_margin=0.3)
    for rng in sample_rngs(1, 20):
        q = sample_cartan(rng, r_cartan, cfg)
        assert np.min(np.abs(r_cartan.chain.root_values(q, "KperpF"))) >= 0.3
        assert r_cartan.in_domain(q)


def test_exhaustion_raises():
    r = build_rmatrices("sl(3)")[0]
    cfg = SamplerConfig(q_box=0.05, root_margin=0.5, max_tries=50)
    with pytest.raises(DomainExhaustedError):
        sample_cartan(np.random.default_rng(0), r, cfg)


def test_constrained_points(r_cartan):
    rng = np.random.default_rng(2)
    point = sample_phase_point(rng, r_cartan, constrained=True)
    assert np.all(point.xi[r_cartan.chain.k_indices] == 0)
