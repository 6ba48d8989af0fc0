import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsejacobi.chebyshev import psi1
from sparsejacobi.errors import EscapedBulkError
from sparsejacobi.jacobi import (
    JacobiParams,
    Rule,
    SparseSpec,
    b_at,
    check_nonvanishing,
    dump_spec,
    eval_poly,
    eval_poly_stream,
    free_params,
    iterate_batch,
    load_spec,
    propagate,
    recurrence_state,
)


def one_bump(v, site):
    return JacobiParams(SparseSpec(Rule.explicit([v]), (site,)))


def test_rules():
    r = Rule.power(0.5)
    assert r(4) == pytest.approx(0.5)
    assert Rule.geometric(0.5)(3) == 0.125
    assert Rule.explicit([0.3, 0.1])(3) == 0.0
    assert Rule.explicit([0.1, -0.4, 0.2]).envelope().values == (0.4, 0.4, 0.2)
    with pytest.raises(ValueError):
        r(0)
    assert Rule.from_dict(r.to_dict()) == r


def test_spec_validation():
    with pytest.raises(ValueError):
        SparseSpec(Rule.power(0.5), (1, 5))
    with pytest.raises(ValueError):
        SparseSpec(Rule.power(0.5), (5, 5))
    with pytest.raises(ValueError):
        SparseSpec(Rule.power(0.5), (3,), envelope_rule=Rule.power(0.5, 0.1))
    with pytest.raises(ValueError):
        SparseSpec(Rule.power(0.5), (2, 8, 16), ratio_sparse=True)
    assert SparseSpec(Rule.power(0.5), (2, 8, 64), ratio_sparse=True).couplings[2] == pytest.approx(3 ** -0.5)


def test_spec_document_round_trip(tmp_path):
    spec = SparseSpec(Rule.power(0.5), (4, 16, 153))
    dump_spec(spec, tmp_path / "s.json", {"note": 1})
    back, doc = load_spec(tmp_path / "s.json")
    assert back == spec and doc["note"] == 1
    adaptive = SparseSpec.from_dict({"v_rule": {"kind": "power", "exponent": 0.5}, "N": "adaptive"})
    assert adaptive.adaptive and adaptive.sites == ()


def test_b_at_examples():
    params = one_bump(0.5, 7)
    assert b_at(7, params) == 0.5
    assert b_at(8, params) == 0.0
    assert b_at(7, params.at_level(0)) == 0.0


def test_active_level():
    params = JacobiParams(SparseSpec(Rule.power(0.5), (4, 16)))
    assert [params.active_level(n) for n in (1, 4, 5, 16, 17)] == [0, 0, 1, 1, 2]


def test_eval_poly_initial_state():
    for z in (0.0, 1.3, 0.2 + 0.1j):
        pp = eval_poly(0, z, one_bump(0.3, 2))
        assert (pp.p_n, pp.p_prev) == (1, 0)


def test_free_case_is_chebyshev():
    for x in (-1.5, 0.0, 0.37, 1.9):
        for n in (1, 2, 10, 1000):
            pp = eval_poly(n, x, free_params())
            assert pp.p_n == pytest.approx(psi1(n, x), abs=1e-9)
            assert pp.p_prev == pytest.approx(psi1(n - 1, x), abs=1e-9)


def test_free_case_large_n_cross_check():
    for x in np.linspace(-1.75, 1.75, 5):
        assert abs(eval_poly(10 ** 6, x, free_params()).p_n - psi1(10 ** 6, x)) <= 1e-9 * (1 + 1e6 * 1e-16 * 1e6)


def test_single_bump_closed_form():
    x, n = 0.6, 10
    pp = eval_poly(n, x, one_bump(0.5, 3))
    assert pp.p_n == pytest.approx(psi1(n, x) - 0.5 * psi1(2, x) * psi1(n - 3, x), abs=1e-12)


def test_stream_contract():
    calls, sq = [], []
    eval_poly_stream(4, 0.0, free_params(), lambda pp: (calls.append(pp.n), sq.append(pp.p_n ** 2)))
    assert calls == [0, 1, 2, 3, 4]
    assert sum(sq) == 3


def test_stream_matches_eval_poly_bit_exactly():
    params = one_bump(0.4, 9)
    got = []
    eval_poly_stream(60, 0.71, params, got.append)
    for pp in got:
        ref = eval_poly(pp.n, 0.71, params)
        assert (pp.p_n, pp.p_prev) == (ref.p_n, ref.p_prev)


def test_real_input_stays_real():
    pp = eval_poly(50, 0.3, one_bump(0.4, 9))
    assert isinstance(pp.p_n, float)


def test_recurrence_relation_holds():
    params = JacobiParams(SparseSpec(Rule.power(0.5), (3, 11, 40)))
    z = 0.45 + 0.01j
    vals = [pp for pp in _collect(80, z, params)]
    for k in range(1, 79):
        lhs = z * vals[k].p_n
        rhs = vals[k + 1].p_n + b_at(k + 1, params) * vals[k].p_n + vals[k - 1].p_n
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def _collect(n, z, params):
    out = []
    eval_poly_stream(n, z, params, out.append)
    return out


def test_level_agreement_before_next_site():
    params = JacobiParams(SparseSpec(Rule.power(0.5), (5, 23, 90)))
    for level in range(3):
        nxt = params.sites[level]
        for n in range(nxt):
            a = eval_poly(n, 0.8, params.at_level(level))
            b = eval_poly(n, 0.8, params.at_level(level + 1))
            assert (a.p_n, a.p_prev) == (b.p_n, b.p_prev)
        assert eval_poly(nxt, 0.8, params.at_level(level)).p_n != eval_poly(nxt, 0.8, params.at_level(level + 1)).p_n


def test_nonvanishing():
    params = JacobiParams(SparseSpec(Rule.power(0.5), (3, 30, 400)))
    for x in (-1.6, 0.0, 0.5, 1.9):
        assert check_nonvanishing(10 ** 5, x, params)


def test_routes_agree():
    params = JacobiParams(SparseSpec(Rule.power(0.5), (3, 30, 400)))
    for z in (0.31, -1.2 + 0.004j):
        pp = eval_poly(1234, z, params)
        p, q = propagate(1234, [z], params)
        st_ = recurrence_state(1234, z, params)
        dd = eval_poly(1234, z, params, compensated=True)
        for val in (p[0], st_[0], dd.p_n):
            assert val == pytest.approx(pp.p_n, rel=1e-9, abs=1e-9)
        assert q[0] == pytest.approx(pp.p_prev, rel=1e-9, abs=1e-9)


def test_propagate_derivative():
    params = JacobiParams(SparseSpec(Rule.power(0.5), (3, 30)))
    z, h = 0.52, 1e-6
    _, _, dp, dq = propagate(200, [z], params, derivative=True)
    p_plus = eval_poly(200, z + h, params).p_n
    p_minus = eval_poly(200, z - h, params).p_n
    assert dp[0].real == pytest.approx((p_plus - p_minus) / (2 * h), rel=1e-5)


def test_iterate_batch_matches_scalar():
    params = one_bump(0.7, 4)
    zs = [0.1, 0.9]
    for k, p in iterate_batch(20, zs, params):
        assert p[1] == pytest.approx(eval_poly(k, 0.9, params).p_n)


def test_escape_outside_bulk():
    with pytest.raises(EscapedBulkError):
        eval_poly(5000, 3.0, free_params())


@settings(max_examples=30, deadline=None)
@given(st.floats(-1.9, 1.9), st.integers(0, 3000), st.floats(-1, 1), st.integers(2, 50))
def test_jump_matches_recurrence(x, n, v, site):
    params = one_bump(v, site)
    pp = eval_poly(n, x, params)
    p, q = propagate(n, [x], params)
    scale = 1 + abs(pp.p_n) + abs(pp.p_prev)
    assert abs(p[0] - pp.p_n) <= 1e-9 * scale * (1 + n / 100)
    assert abs(q[0] - pp.p_prev) <= 1e-9 * scale * (1 + n / 100)
