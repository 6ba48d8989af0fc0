import math

import numpy as np
import pytest

from sparsejacobi.chebyshev import m_bound
from sparsejacobi.errors import CapExceeded, EnvelopeError
from sparsejacobi.jacobi import JacobiParams, Rule, SparseSpec
from sparsejacobi.sparsifier import (
    GapCertificate,
    MSequence,
    SparsifierConfig,
    build_m_sequence,
    certification_interval,
    chebyshev_grid,
    classify_measure,
    find_gap,
    generate_spec,
    lattice,
    replay_certificate,
)


def test_geometric_envelope_first_breakpoint():
    mseq = MSequence(lambda n: 2.0 ** -n)
    assert m_bound(1).M ** 4 == pytest.approx(256 / 9)
    assert mseq.threshold(1) == 5
    assert mseq(5) == 1 and mseq(6) >= 1


def test_constant_envelope_rejected():
    with pytest.raises(EnvelopeError):
        MSequence(lambda n: 1.0, scan_limit=10 ** 6)


def test_m_sequence_staircase():
    mseq = build_m_sequence(SparseSpec(Rule.power(0.5)))
    values = [mseq(int(n)) for n in np.unique(np.geomspace(1, 10 ** 6, 400).astype(int))]
    assert all(b >= a for a, b in zip(values, values[1:]))
    assert mseq(10 ** 18) > mseq(10 ** 6)


def test_m_sequence_decay_contract():
    mseq = build_m_sequence(SparseSpec(Rule.power(0.5)))
    decay = mseq.decay_values(12)
    assert len(decay) >= 5
    rs = sorted(decay)
    assert all(decay[r] < 1 / r ** 2 for r in rs)
    assert all(decay[b] < decay[a] for a, b in zip(rs, rs[1:]))


def test_config_validation():
    with pytest.raises(ValueError):
        SparsifierConfig(tolerance_slack=1.0)
    with pytest.raises(ValueError):
        SparsifierConfig(ratio_floor=1.5)
    cfg = SparsifierConfig(threads=3)
    assert SparsifierConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.floor_ratio(0) == cfg.floor_ratio(1) == 4 and cfg.floor_ratio(3) == 12


def test_interval_and_grids():
    assert certification_interval(0, 1) == (0.0, 0.0)
    lo, hi = certification_interval(4, 10)
    assert lo == pytest.approx(-2 + 0.1 + 0.25) and hi == pytest.approx(-lo)
    assert chebyshev_grid(0.0, 0.0, 9) == (0.0,)
    g = chebyshev_grid(-1.0, 1.0, 9)
    assert len(g) == 9 and -1 <= min(g) < -0.98 and max(g) == pytest.approx(-min(g))
    assert len(lattice(2.0, 7)) == 49


def test_free_level_zero_certificate():
    spec = SparseSpec(Rule.power(0.5))
    cert = find_gap(0, spec, build_m_sequence(spec))
    errs = [p.ratio_error for p in cert.probes]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert cert.max_kernel_error <= 0.5


def test_one_site_prefix_certificate():
    spec = SparseSpec(Rule.explicit([0.5]), (50,), envelope_rule=Rule.power(0.5, 0.5))
    cfg = SparsifierConfig()
    cert = find_gap(1, spec, build_m_sequence(spec), cfg)
    assert cert.N_hat >= cfg.ratio_floor * 50
    assert cert.max_kernel_error <= cfg.tolerance_slack
    assert cert.ratio_A_max <= 2
    assert cert.N_hat / cert.prev_site >= cfg.ratio_floor


def test_unreachable_tolerance_exceeds_cap():
    spec = SparseSpec(Rule.power(0.5))
    cfg = SparsifierConfig(tolerance_slack=1e-9, n_cap=2000)
    with pytest.raises(CapExceeded) as info:
        find_gap(0, spec, build_m_sequence(spec), cfg)
    assert info.value.best is not None


def test_zero_couplings_search_like_free():
    cfg = SparsifierConfig()
    zero_spec, zero_certs = generate_spec(Rule.zero(), 2, cfg)
    for cert in zero_certs:
        placed = SparseSpec(Rule.power(0.5), zero_spec.sites[:cert.level])
        free_like = find_gap(cert.level, SparseSpec(Rule.zero(), placed.sites), build_m_sequence(
            SparseSpec(Rule.power(0.5))), cfg)
        assert cert.N_hat >= cfg.floor_ratio(cert.level) * cert.prev_site
        assert cert.max_ratio_error <= cert.tolerance
        assert free_like.N_hat == cert.N_hat


def test_no_levels_gives_empty_spec():
    spec, certs = generate_spec(Rule.power(0.5), 0)
    assert spec.sites == () and certs == []


def test_generated_spec_invariants(sqrt_decay_spec):
    spec, certs = sqrt_decay_spec
    assert len(spec.sites) == 3 and len(certs) == 3
    prev = 1
    for cert, site in zip(certs, spec.sites):
        assert cert.N_hat == site
        assert site / prev >= SparsifierConfig().floor_ratio(cert.level)
        assert cert.max_kernel_error <= cert.tolerance
        assert cert.max_ratio_error <= cert.tolerance
        assert cert.ratio_A_max <= 2
        prev = site


def test_certificate_replay_is_exact(sqrt_decay_spec):
    spec, certs = sqrt_decay_spec
    for cert in certs:
        again = replay_certificate(cert, spec)
        assert again.kernel_error == cert.max_kernel_error
        assert again.ratio_error == cert.max_ratio_error
        # the full spec only differs from level l beyond N_hat
        full = replay_certificate(cert, spec, level="full")
        assert abs(full.ratio_error - cert.max_ratio_error) <= 1e-12


def test_certificate_serialization(sqrt_decay_spec):
    _, certs = sqrt_decay_spec
    for cert in certs:
        assert GapCertificate.from_dict(cert.to_dict()) == cert


def test_threads_do_not_change_certificates(sqrt_decay_spec):
    spec, certs = generate_spec(Rule.power(0.5), 3, SparsifierConfig(threads=4))
    assert (spec, certs) == sqrt_decay_spec


@pytest.mark.parametrize("rule,verdict", [
    (Rule.power(0.5), "singular"),
    (Rule.geometric(0.5), "absolutely_continuous"),
    (Rule.power(1.0), "absolutely_continuous"),
    (Rule.zero(), "absolutely_continuous"),
    (Rule.power(-0.5), "inconclusive"),
])
def test_classification(rule, verdict):
    assert classify_measure(rule) == verdict


def test_classification_of_spec():
    assert classify_measure(SparseSpec(Rule.power(0.4), (3, 30))) == "singular"
    assert math.isfinite(SparseSpec(Rule.power(0.4), (3, 30)).couplings[1])
    assert JacobiParams(SparseSpec(Rule.power(0.4), (3, 30)), 1).sites == (3,)


def test_level_operator_stays_settled_at_double_site(sqrt_decay_spec):
    spec, certs = sqrt_decay_spec
    for cert in certs:
        doubled = replay_certificate(cert, spec, n=2 * cert.N_hat)
        assert doubled.ratio_error <= 1.5 * cert.max_ratio_error
